"""Seller side: revenue curves over bids, reserve choice and ERM estimation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .dist import GRID_POINTS, Distribution
from .errors import AssumptionViolated, EmptySample
from .numerics import find_root, maximize_bounded
from .strategy import BidDistribution, EpsThreshold

PLATEAU_RTOL = 1e-12
ERM_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ReserveDecision:
    reserve_price: float
    reserve_value: float
    attained_revenue: float


@dataclass(frozen=True)
class ErmReport:
    n: int
    trial: int
    eps: float
    delta: float
    delta1: float
    x_hat: float
    x_max: float
    c_n: float
    bound: float
    hit: bool


def _bid_revenue(bd: Distribution, b):
    b = np.asarray(b, dtype=float)
    return b * (1.0 - bd.cdf(b))


def optimal_reserve(bd: BidDistribution, n: int = GRID_POINTS) -> ReserveDecision:
    """Smallest maximizer of b(1 - F_B(b)); a flat plateau yields its left edge."""
    g = np.linspace(bd.lo, bd.hi, n)
    rev = _bid_revenue(bd, g)
    M = float(rev.max())
    tol = PLATEAU_RTOL * max(M, 1e-300)
    i = int(np.nonzero(rev >= M - tol)[0][0])
    if i == 0:
        price = float(g[0])
    elif i + 2 < n and rev[i + 1] >= M - tol and rev[i + 2] >= M - tol:
        # three flat grid points: a plateau, bisect for its left edge
        a, b = float(g[i - 1]), float(g[i])
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            if float(_bid_revenue(bd, m)) >= M - tol:
                b = m
            else:
                a = m
        price = b
    else:
        a, b = float(g[i - 1]), float(g[min(i + 1, n - 1)])
        pa, pb = float(bd.psi(a)), float(bd.psi(b))
        if np.isfinite(pa) and np.isfinite(pb) and pa < 0 < pb:
            price = find_root(lambda t: float(bd.psi(t)), a, b)
        else:
            price = maximize_bounded(lambda t: float(_bid_revenue(bd, t)), a, b)
        if float(_bid_revenue(bd, price)) < M:
            price = float(g[i])
    value = float(bd.strategy.inverse(price))
    return ReserveDecision(price, value, float(_bid_revenue(bd, price)))


def erm_reserve(bids: ArrayLike) -> float:
    """Empirical monopoly price: argmax over order statistics of b_(i+1)(n - i)/n."""
    b = np.sort(np.asarray(bids, dtype=float).ravel())
    n = b.size
    if n == 0:
        raise EmptySample("erm_reserve needs at least one bid")
    rev = b * (n - np.arange(n)) / n
    M = float(rev.max())
    i = int(np.nonzero(rev >= M - ERM_TIE_RTOL * abs(M))[0][0])
    return float(b[i])


def c_n(n: int, delta: float) -> float:
    return float(np.sqrt(np.log(2.0 / delta) / 2.0) / np.sqrt(n))


def gamma_f(d: Distribution, r: float, n: int = GRID_POINTS) -> float:
    """Lower bound on the density over [lo, r], with a 1e-12 safety margin."""
    return float(np.min(d.pdf(np.linspace(d.lo, r, n)))) - 1e-12


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def erm_theorem5_experiment(
    d: Distribution,
    r: float,
    eta: float,
    n_grid: list[int],
    delta: float,
    trials: int,
    seed: int,
    eps_override: float | None = None,
) -> list[ErmReport]:
    """ERM reserve against an eps-threshold bidder with eps_n = n^(-1/2 + eta).

    eps_override replaces the schedule by a constant (0 gives the control arm
    with an exactly flat plateau).
    """
    if not n_grid:
        raise AssumptionViolated("n_grid is empty")
    gam = gamma_f(d, r)
    if gam <= 0:
        raise AssumptionViolated(f"density lower bound on [lo, r] is {gam}, must be positive")
    t = np.linspace(r, d.hi, GRID_POINTS)
    if float(np.max(d.revenue(t))) > float(d.revenue(r)) + 1e-12:
        raise AssumptionViolated("revenue above r exceeds the revenue at r")
    Fr = float(d.cdf(r))
    reports: list[ErmReport] = []
    for n in n_grid:
        n = int(n)
        eps = float(n ** (-0.5 + eta)) if eps_override is None else float(eps_override)
        s = EpsThreshold(d, r, eps)
        cn = c_n(n, delta)
        bound = 2 * r * cn / (eps * gam) if eps > 0 else float("inf")
        rows = []
        fails = 0
        for trial in range(trials):
            rng = trial_rng(seed, n, trial)
            x = d.sample(rng, n)
            b_hat = erm_reserve(s.bid(x))
            x_hat = float(s.inverse(b_hat))
            x_max = float(x.max())
            fails += eps <= x_max * cn / Fr
            rows.append((trial, x_hat, x_max))
        d1 = fails / trials
        for trial, x_hat, x_max in rows:
            reports.append(ErmReport(n, trial, eps, delta, d1, x_hat, x_max, cn, bound, bool(x_hat < bound)))
    return reports


def summarize_erm(reports: list[ErmReport]) -> list[dict]:
    out = []
    for n in sorted({rep.n for rep in reports}):
        rows = [rep for rep in reports if rep.n == n]
        out.append({
            "n": n,
            "hit_rate": float(np.mean([rep.hit for rep in rows])),
            "delta": rows[0].delta,
            "delta1": rows[0].delta1,
            "median_x_hat": float(np.median([rep.x_hat for rep in rows])),
            "trials": len(rows),
        })
    return out
