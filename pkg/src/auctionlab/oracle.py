"""Seeded Monte Carlo simulator of the auctions, the ground truth for checks.

Auctions are split into batches; each (phase, batch, bidder) triple gets its
own Philox stream derived from the seed, so results do not depend on how
batches are scheduled. Standard errors are batch means over those batches.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import numpy as np
from numpy.typing import NDArray

from .dist import Distribution, monopoly_price
from .errors import ConfigInvalid
from .seller import erm_reserve, optimal_reserve
from .strategy import Strategy, pushforward

BATCHES = 100
MECHS = ("lazy", "eager", "myerson")


@dataclass(frozen=True)
class FixedPrice:
    price: float


@dataclass(frozen=True)
class MonopolyOfBids:
    """Each bidder's reserve is the population optimal reserve of their bid law."""


@dataclass(frozen=True)
class MonopolyOfValues:
    """Each bidder's reserve is the monopoly price of their value law."""


@dataclass(frozen=True)
class ErmOfBids:
    """Phase-2 reserve from erm_reserve on the bidder's phase-1 bids (two-stage only)."""


ReserveRule = FixedPrice | MonopolyOfBids | MonopolyOfValues | ErmOfBids


@dataclass(frozen=True)
class SimConfig:
    n_auctions: int
    seed: int
    mechanism: str
    strategies: tuple[Strategy, ...]
    phase1_reserve: Distribution | None = None
    phase2_reserve_rule: ReserveRule = field(default_factory=lambda: FixedPrice(0.0))

    def __post_init__(self):
        if self.n_auctions < 1:
            raise ConfigInvalid("n_auctions must be at least 1")
        if not self.strategies:
            raise ConfigInvalid("strategies must be nonempty")
        if self.mechanism not in MECHS:
            raise ConfigInvalid(f"mechanism must be one of {MECHS}")
        object.__setattr__(self, "strategies", tuple(self.strategies))


@dataclass(frozen=True)
class SimResult:
    utility: tuple[float, ...]
    payment: tuple[float, ...]
    win_rate: tuple[float, ...]
    gross: tuple[float, ...]
    utility_se: tuple[float, ...]
    payment_se: tuple[float, ...]
    reserves: tuple[float, ...]
    n_auctions: int

    def to_json(self) -> dict:
        return asdict(self)


def _rng(seed: int, phase: int, batch: int, bidder: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(phase, batch, bidder))
    return np.random.Generator(np.random.Philox(ss))


def _batches(n: int) -> list[int]:
    nb = min(BATCHES, n)
    sizes = [n // nb] * nb
    for j in range(n % nb):
        sizes[j] += 1
    return sizes


def _reserve_prices(c: SimConfig, rule: ReserveRule) -> NDArray[np.float64]:
    out = []
    for s in c.strategies:
        if isinstance(rule, FixedPrice):
            out.append(rule.price)
        elif isinstance(rule, MonopolyOfBids):
            out.append(optimal_reserve(pushforward(s)).reserve_price)
        elif isinstance(rule, MonopolyOfValues):
            out.append(monopoly_price(s.base))
        else:
            raise ConfigInvalid("ErmOfBids needs phase-1 bids; use simulate_two_stage")
    return np.asarray(out, dtype=float)


def _myerson_payment(s: Strategy, target: NDArray[np.float64]) -> NDArray[np.float64]:
    """Smallest bid whose virtual value reaches target, by bisection in value space."""
    F = s.base
    lo = np.full(target.shape, F.lo)
    hi = np.full(target.shape, F.hi)
    at_bottom = s.h(lo) >= target
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = s.h(mid) >= target
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return np.where(at_bottom, s.bid(np.full(target.shape, F.lo)), s.bid(hi))


def _run_batch(c: SimConfig, reserves, phase: int, batch: int, m: int, h_law: Distribution | None):
    K = len(c.strategies)
    x = np.empty((K, m))
    b = np.empty((K, m))
    for i, s in enumerate(c.strategies):
        x[i] = s.base.sample(_rng(c.seed, phase, batch, i), m)
        b[i] = s.bid(x[i])
    rr = np.zeros(m) if h_law is None else h_law.sample(_rng(c.seed, phase, batch, K), m)
    cols = np.arange(m)
    win = np.zeros((K, m), dtype=bool)
    price = np.zeros(m)

    if c.mechanism == "myerson":
        phi = np.stack([s.h(x[i]) for i, s in enumerate(c.strategies)])
        w = np.argmax(phi, axis=0)
        ok = phi[w, cols] >= 0
        for i, s in enumerate(c.strategies):
            sel = ok & (w == i)
            if not sel.any():
                continue
            others = np.delete(phi[:, sel], i, axis=0)
            target = np.maximum(0.0, others.max(axis=0)) if K > 1 else np.zeros(sel.sum())
            price[sel] = _myerson_payment(s, target)
            win[i, sel] = True
    else:
        r_own = np.maximum(reserves[:, None], rr[None, :])
        if c.mechanism == "lazy":
            eligible = np.ones((K, m), dtype=bool)
        else:
            eligible = b >= r_own
        masked = np.where(eligible, b, -np.inf)
        w = np.argmax(masked, axis=0)
        top = masked[w, cols]
        masked[w, cols] = -np.inf
        second = np.max(masked, axis=0) if K > 1 else np.full(m, -np.inf)
        ok = np.isfinite(top) & (top >= r_own[w, cols])
        price = np.maximum(np.maximum(second, 0.0), r_own[w, cols])
        win[w[ok], cols[ok]] = True

    gross = np.where(win, x, 0.0)
    pay = np.where(win, price[None, :], 0.0)
    return gross.sum(axis=1), pay.sum(axis=1), win.sum(axis=1), b


def _simulate(c: SimConfig, reserves, phase: int, h_law) -> tuple[SimResult, list]:
    sizes = _batches(c.n_auctions)
    K = len(c.strategies)
    g = np.zeros((len(sizes), K))
    p = np.zeros((len(sizes), K))
    wins = np.zeros(K)
    bids = []
    for j, m in enumerate(sizes):
        gs, ps, ws, b = _run_batch(c, reserves, phase, j, m, h_law)
        g[j], p[j] = gs / m, ps / m
        wins += ws
        bids.append(b)
    wts = np.asarray(sizes, float) / c.n_auctions
    u = g - p

    def mean(a):
        return wts @ a

    def se(a):
        if len(sizes) < 2:
            return np.full(K, np.nan)
        return a.std(axis=0, ddof=1) / np.sqrt(len(sizes))

    res = SimResult(
        utility=tuple(mean(u)), payment=tuple(mean(p)), win_rate=tuple(wins / c.n_auctions),
        gross=tuple(mean(g)), utility_se=tuple(se(u)), payment_se=tuple(se(p)),
        reserves=tuple(float(r) for r in reserves), n_auctions=c.n_auctions,
    )
    return res, bids


def simulate(c: SimConfig) -> SimResult:
    """One phase with reserves from phase2_reserve_rule and random reserve H if given."""
    return _simulate(c, _reserve_prices(c, c.phase2_reserve_rule), 2, c.phase1_reserve)[0]


@dataclass(frozen=True)
class TwoStageResult:
    phase1: SimResult
    phase2: SimResult
    combined: tuple[float, ...]
    combined_se: tuple[float, ...]


def simulate_two_stage(c: SimConfig, alpha: float) -> TwoStageResult:
    """Phase 1 with reserve law H only, phase 2 with reserves learned per the rule."""
    K = len(c.strategies)
    r1, bids = _simulate(c, np.zeros(K), 1, c.phase1_reserve)
    rule = c.phase2_reserve_rule
    if isinstance(rule, ErmOfBids):
        all_bids = np.concatenate(bids, axis=1)
        reserves = np.array([erm_reserve(all_bids[i]) for i in range(K)])
    else:
        reserves = _reserve_prices(c, rule)
    r2, _ = _simulate(c, reserves, 2, None)
    u1, u2 = np.array(r1.utility), np.array(r2.utility)
    s1, s2 = np.array(r1.utility_se), np.array(r2.utility_se)
    if alpha == 1:
        comb, cse = u1, s1
    elif alpha == 0:
        comb, cse = u2, s2
    else:
        comb = alpha * u1 + (1 - alpha) * u2
        cse = np.sqrt((alpha * s1) ** 2 + ((1 - alpha) * s2) ** 2)
    return TwoStageResult(r1, r2, tuple(comb), tuple(cse))


def agree(analytic: float, mc: float, se: float, k: float = 4.0) -> bool:
    return abs(analytic - mc) <= k * se
