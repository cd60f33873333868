"""Two-stage bidding game: utilities, gradients, best responses and equilibria.

Phase 1 is a lazy second-price auction with a random reserve drawn from H
(or none), phase 2 uses the monopoly price of the phase-1 bid law. The
strategic bidder commits to one bid map for both phases and weights them
alpha and 1 - alpha.

All expectations are deterministic quadratures over the value law with the
strategy thresholds and the images of competition kinks as breakpoints.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dist import Distribution, MaxOf, Mixture, Product, is_regular
from .errors import (AssumptionViolated, InvalidThresholds, NoCrossing, NoRoot,
                     OutOfSupport)
from .numerics import find_root, gl_integrate, integrate_pieces, maximize_bounded
from .strategy import DoubleThreshold, Strategy, cached_monopoly_price, x0_bar

EPSABS = 1e-14
EPSREL = 1e-12


@dataclass(frozen=True)
class TwoStageProcess:
    """competition is G (phase 1, and phase 2 unless competition2 is given);
    phase1_reserve is H, None meaning no reserve."""

    competition: Distribution
    phase1_reserve: Distribution | None
    value_law: Distribution
    alpha: float
    competition2: Distribution | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidThresholds(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def g1(self) -> Distribution:
        if self.phase1_reserve is None:
            return self.competition
        return Product(self.competition, self.phase1_reserve)

    @property
    def g2(self) -> Distribution:
        return self.competition if self.competition2 is None else self.competition2

    @property
    def g_alpha(self) -> Distribution:
        return Mixture(self.g1, self.g2, self.alpha)


@dataclass(frozen=True)
class UtilityBreakdown:
    u1: float
    u2: float
    u_total: float
    m1: float
    m2: float
    reserve_value: float
    # integral of G(1 - F_B) over the bid-support gaps above each phase's
    # reserve price; the expectation form of the Myerson lemma drops it
    gap1: float = 0.0
    gap2: float = 0.0
    u_exact: float = float("nan")


@dataclass(frozen=True)
class PhaseReport:
    alpha_c: float
    u_truthful_at_alpha_c: float
    u_threshold_at_alpha_c: float
    x1_star: float


@dataclass(frozen=True)
class NashReport:
    k: int
    r_star: float
    seller_revenue: float
    buyer_utility: float
    no_reserve_revenue: float
    no_reserve_utility: float

    @property
    def revenue_equivalent(self) -> bool:
        return abs(self.seller_revenue - self.no_reserve_revenue) <= 1e-8

    @property
    def utility_equivalent(self) -> bool:
        return abs(self.buyer_utility - self.no_reserve_utility) <= 1e-8


@dataclass(frozen=True)
class EquilibriumCompetition(Distribution):
    """Highest of k-1 opponents' bids when all threshold at r_star.

    (1 - R/y)^(k-1) on [R, r_star] with R = r_star(1 - F(r_star)), F^(k-1) above.
    """

    r_star: float
    k: int
    f_law: Distribution

    @property
    def R(self) -> float:
        return float(self.r_star * self.f_law.sf(self.r_star))

    @property
    def lo(self):
        return self.R

    @property
    def hi(self):
        return self.f_law.hi

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            plateau = np.clip(1.0 - self.R / y, 0.0, 1.0) ** (self.k - 1)
        return np.select([y < self.R, y < self.r_star], [np.zeros_like(y), plateau],
                         self.f_law.cdf(y) ** (self.k - 1))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        km = self.k - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            plateau = km * np.clip(1.0 - self.R / y, 0.0, 1.0) ** (km - 1) * self.R / (y * y)
        above = km * self.f_law.cdf(y) ** (km - 1) * self.f_law.pdf(y)
        return np.select([y < self.R, y < self.r_star], [np.zeros_like(y), plateau], above)

    @property
    def breakpoints(self):
        return tuple(sorted({self.R, float(self.r_star), *self.f_law.breakpoints}))


def equilibrium_competition(r_star: float, k: int, f_law: Distribution) -> EquilibriumCompetition:
    return EquilibriumCompetition(float(r_star), int(k), f_law)


# quadrature plumbing

def _value_points(s: Strategy, comps: tuple[Distribution, ...]) -> list[float]:
    pts = list(s.base.breakpoints) + list(s.thresholds)
    for g in comps:
        pts.extend(float(s.inverse(y)) for y in g.breakpoints)
    return pts


def _expect(fn, s: Strategy, a: float, b: float, comps: tuple[Distribution, ...] = ()) -> float:
    return integrate_pieces(fn, a, b, _value_points(s, comps), epsabs=EPSABS, epsrel=EPSREL)


def _phase_parts(s: Strategy, g: Distribution, v_res: float, payment: bool):
    F = s.base
    a = max(float(v_res), F.lo)

    def hf(x):
        return s.bid(x) * F.pdf(x) - s.slope(x) * F.sf(x)

    def util(x):
        return float((x * F.pdf(x) - hf(x)) * g.cdf(s.bid(x)))

    def pay(x):
        return float(hf(x) * g.cdf(s.bid(x)))

    u = _expect(util, s, a, F.hi, (g,))
    return u, (_expect(pay, s, a, F.hi, (g,)) if payment else float("nan"))


def phase_integrals(s: Strategy, g: Distribution, v_res: float) -> tuple[float, float]:
    """(utility, payment) in a lazy second-price phase with reserve value v_res.

    Utility E[(X - h)G(beta(X)) 1{X >= v}] and payment E[h G(beta(X)) 1{X >= v}],
    with (X - h)f written as x f - h f to stay finite where f vanishes.
    """
    return _phase_parts(s, g, v_res, True)


def support_gaps(s: Strategy) -> list[tuple[float, float, float]]:
    """Bid intervals carrying no bid mass, as (start, end, 1 - F_B on the gap)."""
    gaps = []
    b_lo = float(s.bid_lo)
    if b_lo > 0:
        gaps.append((0.0, b_lo, 1.0))
    if isinstance(s, DoubleThreshold) and s.has_window:
        x0e, bw0 = s._x0e, s.window_start_bid
        if x0e > s.base.lo and bw0 > x0e:
            gaps.append((x0e, bw0, float(s.base.sf(x0e))))
    return gaps


def support_gap_integral(s: Strategy, g: Distribution, r: float) -> float:
    """Integral of G(b)(1 - F_B(b)) over the support gaps of B above r.

    A second-price bidder wins against competition inside these gaps too, but
    E[psi_B(B) G(B) 1{B >= r}] only sees bids that occur, so it overstates the
    payment by exactly this amount.
    """
    total = 0.0
    for a, b, w in support_gaps(s):
        a = max(a, float(r))
        if b > a:
            total += w * integrate_pieces(lambda y: float(g.cdf(y)), a, b, g.breakpoints,
                                          epsabs=EPSABS, epsrel=EPSREL)
    return total


def myerson_payment(s: Strategy, g: Distribution, r: float) -> float:
    """Expected second-price payment with reserve price r against competition g.

    Integral over b >= r of (b f_B - (1 - F_B)) G db: the bid-support part is
    E[psi_B(B) G(B) 1{B >= r}] computed in value space, and the gaps where f_B
    vanishes contribute -(1 - F_B) G.
    """
    from .strategy import pushforward

    pushforward(s)  # raises NonMonotone
    if r > float(s.bid(s.base.hi)):
        return 0.0
    v = float(s.inverse(r))
    return phase_integrals(s, g, v)[1] - support_gap_integral(s, g, r)


def seller_reserve_value(s: DoubleThreshold) -> float:
    """Reserve value the welfare-benevolent seller picks against s.

    With a window and x1 at or above the monopoly price the bid revenue curve is
    flat from the window start on, so the reserve value is x0; otherwise the
    truthful tail carries the maximum and the reserve value is the monopoly price.
    """
    mp = cached_monopoly_price(s.base)
    if s.has_window and s.x1 >= mp:
        return max(float(s.x0), s.base.lo)
    return mp


def _reserve_price(s: DoubleThreshold, v: float) -> float:
    # reserve value at the window start is posted at the top of the gap
    if s.has_window and v == max(float(s.x0), s.base.lo):
        return max(float(s.bid(v)), s.window_start_bid)
    return float(s.bid(v))


def _two_phase(s: DoubleThreshold, p: TwoStageProcess, v2: float) -> UtilityBreakdown:
    u1, m1 = phase_integrals(s, p.g1, s.base.lo)
    u2, m2 = phase_integrals(s, p.g2, v2)
    gap1 = support_gap_integral(s, p.g1, 0.0)
    gap2 = support_gap_integral(s, p.g2, _reserve_price(s, v2))
    a = p.alpha
    u = a * u1 + (1 - a) * u2
    return UtilityBreakdown(u1, u2, u, m1, m2, float(v2), gap1, gap2,
                            u + a * gap1 + (1 - a) * gap2)


def _check_feasible(x0: float, x1: float, F: Distribution) -> DoubleThreshold:
    if not (0 <= x0 <= x1 <= F.hi):
        raise InvalidThresholds(f"need 0 <= x0 <= x1 <= hi, got ({x0}, {x1})")
    s = DoubleThreshold(F, float(x0), float(x1))
    if not s.has_window:
        return s
    mp = cached_monopoly_price(F)
    if x1 < mp - 1e-12:
        raise InvalidThresholds(f"x1={x1} below the monopoly price {mp}")
    if not s.is_monotone():
        raise InvalidThresholds(f"x0={x0} exceeds x0_bar={s.x0_bar}")
    return s


def utility_two_stage(x0: float, x1: float, p: TwoStageProcess) -> UtilityBreakdown:
    s = _check_feasible(x0, x1, p.value_law)
    return _two_phase(s, p, seller_reserve_value(s))


def utility_total(x0: float, x1: float, p: TwoStageProcess) -> float:
    """u_total of utility_two_stage without the payment and gap integrals."""
    s = _check_feasible(x0, x1, p.value_law)
    u1 = _phase_parts(s, p.g1, s.base.lo, False)[0] if p.alpha > 0 else 0.0
    u2 = _phase_parts(s, p.g2, seller_reserve_value(s), False)[0] if p.alpha < 1 else 0.0
    return p.alpha * u1 + (1 - p.alpha) * u2


def utility_grad(x0: float, x1: float, p: TwoStageProcess) -> tuple[float, float]:
    F = p.value_law
    for v in (x0, x1):
        if not F.lo <= v <= F.hi:
            raise OutOfSupport(f"{v} outside [{F.lo}, {F.hi}]")
    a = p.alpha
    G, Ga = p.competition, p.g_alpha
    H = p.phase1_reserve
    R = float(x1 * F.sf(x1))
    GH0 = float(G.cdf(x0) * (1.0 if H is None else H.cdf(x0)))
    d_x0 = a * float(F.sf(x0)) * GH0 - x0 * float(F.pdf(x0)) * float(Ga.cdf(R / F.sf(x0)))

    def inner(x):
        return float(x / F.sf(x) * Ga.pdf(R / F.sf(x)) * F.pdf(x))

    s = DoubleThreshold(F, min(x0, x1), x1)
    integral = _expect(inner, s, max(x0, F.lo), x1, (Ga,))
    f1 = float(F.pdf(x1))
    psi1 = float(x1 * f1 - F.sf(x1)) / f1 if f1 > 0 else -np.inf
    d_x1 = f1 * psi1 * (float(Ga.cdf(x1)) - integral)
    return float(d_x0), float(d_x1)


def truthful_utility(p: TwoStageProcess) -> UtilityBreakdown:
    mp = cached_monopoly_price(p.value_law)
    return _two_phase(DoubleThreshold(p.value_law, mp, mp), p, mp)


# best response

def _x0_bar_vec(F: Distribution, x1: np.ndarray) -> np.ndarray:
    R = F.revenue(x1)
    mp = cached_monopoly_price(F)
    a = np.full_like(x1, F.lo)
    b = np.minimum(x1, mp)
    done = F.revenue(a) >= R
    for _ in range(60):
        m = 0.5 * (a + b)
        ok = F.revenue(m) >= R
        b = np.where(ok, m, b)
        a = np.where(ok, a, m)
    return np.where(done, F.lo, b)


def utility_grid(p: TwoStageProcess, x0: np.ndarray, x1: np.ndarray, m: int = 48) -> np.ndarray:
    """Vectorized fixed-rule approximation of U_alpha for feasible (x0, x1) arrays."""
    F = p.value_law
    a = p.alpha
    GH, G = p.g1, p.g2
    x0 = np.maximum(np.asarray(x0, float), F.lo)
    x1 = np.asarray(x1, float)
    R = F.revenue(x1)

    def lower(x):
        return a * F.sf(x) * GH.cdf(x)

    def window(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            y = R[..., None] / F.sf(x)
        return x * F.pdf(x) * (a * GH.cdf(y) + (1 - a) * G.cdf(y))

    def upper(x):
        return F.sf(x) * (a * GH.cdf(x) + (1 - a) * G.cdf(x))

    lo = np.full_like(x0, F.lo)
    hi = np.full_like(x1, F.hi)
    return gl_integrate(lower, lo, x0, m) + gl_integrate(window, x0, x1, m) + gl_integrate(upper, x1, hi, m)


def _project(F: Distribution, x0: float, x1: float, mp: float) -> tuple[float, float]:
    x1 = float(np.clip(x1, mp, F.hi - 1e-9 * (F.hi - F.lo)))
    x0 = float(np.clip(x0, F.lo, x0_bar(F, x1)))
    return x0, x1


def best_response(p: TwoStageProcess, grid: int = 200, steps: int = 50) -> tuple[float, float, UtilityBreakdown]:
    """Maximize U_alpha over {lo <= x0 <= x0_bar(x1), x1 >= monopoly price}.

    Coarse grid, then projected gradient ascent with backtracking, then a
    comparison with the truthful corner (x0 = x1 = monopoly price).
    """
    F = p.value_law
    mp = cached_monopoly_price(F)
    x1s = np.linspace(mp, F.hi, grid + 1)[:-1]
    bars = _x0_bar_vec(F, x1s)
    t = np.linspace(0.0, 1.0, grid)
    X1 = np.repeat(x1s, grid)
    X0 = F.lo + np.tile(t, grid) * np.repeat(bars - F.lo, grid)
    U = utility_grid(p, X0, X1)
    k = int(np.argmax(U))
    x0, x1 = _project(F, X0[k], X1[k], mp)

    def total(a, b):
        return utility_total(a, b, p)

    cur = total(x0, x1)
    step = 0.1 * (F.hi - F.lo)
    for _ in range(steps):
        g0, g1 = utility_grad(x0, x1, p)
        norm = float(np.hypot(g0, g1))
        if norm == 0 or step < 1e-13:
            break
        while step >= 1e-13:
            c0, c1 = _project(F, x0 + step * g0 / norm, x1 + step * g1 / norm, mp)
            val = total(c0, c1)
            if val > cur:
                x0, x1, cur = c0, c1, val
                step *= 2.0
                break
            step *= 0.5

    truth = truthful_utility(p)
    if truth.u_total >= cur - 1e-12:
        return mp, mp, truth
    return x0, x1, utility_two_stage(x0, x1, p)


def x0_switch_alpha(p: TwoStageProcess, alphas, grid: int = 200, tol: float = 1e-9,
                    refine: int = 0) -> tuple[float | None, list]:
    """First alpha where best_response leaves x0 = lo, and the sweep rows.

    With refine > 0 the grid bracket around the switch is bisected that many
    times and the midpoint of the final bracket is returned.
    """
    lo = p.value_law.lo

    def moved(a):
        x0, x1, br = best_response(replace(p, alpha=float(a)), grid=grid)
        return x0 > lo + tol, (float(a), x0, x1, br)

    rows = []
    switch = None
    prev = None
    for a in alphas:
        hit, row = moved(a)
        rows.append(row)
        if hit:
            switch = float(a)
            break
        prev = float(a)
    if switch is not None and prev is not None and refine > 0:
        a, b = prev, switch
        for _ in range(refine):
            m = 0.5 * (a + b)
            if moved(m)[0]:
                b = m
            else:
                a = m
        switch = 0.5 * (a + b)
    return switch, rows


# commitment and phase transition

def commitment_utility(x1: float, p: TwoStageProcess, side: str | None = None) -> float:
    """U_alpha of thresholding at x1 (x0 = lo) with phase competitions g1, g2.

    Above the monopoly price the seller's reserve value is lo, below it the
    monopoly price. side="below" or "above" forces a branch, which gives the
    two one-sided values at the discontinuity.
    """
    F = p.value_law
    mp = cached_monopoly_price(F)
    x1 = float(np.clip(x1, F.lo, F.hi))
    s = DoubleThreshold(F, 0.0, x1)
    above = x1 >= mp if side is None else side == "above"
    v2 = F.lo if above and s.has_window else mp
    return _two_phase(s, p, v2).u_total


def commitment_limits(p: TwoStageProcess) -> tuple[float, float]:
    mp = cached_monopoly_price(p.value_law)
    return commitment_utility(mp, p, "below"), commitment_utility(mp, p, "above")


def _I(r: float, g: Distribution, F: Distribution) -> float:
    Rr = float(r * F.sf(r))
    # kinks of g pulled back through y = Rr / (1 - F(x))
    pts = list(F.breakpoints)
    pts += [float(F.quantile(1.0 - Rr / y)) for y in g.breakpoints if y > 0 and Rr / y <= 1.0]

    def fn(x):
        return float((x * F.pdf(x) - F.sf(x)) * g.cdf(Rr / F.sf(x)))

    return integrate_pieces(fn, F.lo, r, pts, epsabs=EPSABS, epsrel=EPSREL)


def one_strategic_threshold(g: Distribution, f_law: Distribution, scan: int = 200) -> float:
    """Root in (monopoly price, hi) of E[psi(X) G(r(1-F(r))/(1-F(X))) 1{X <= r}]."""
    F = f_law
    mp = cached_monopoly_price(F)
    u = np.linspace(float(F.cdf(mp)), 1.0, scan + 1)[1:-1]
    rs = np.concatenate([[mp], F.quantile(u)])
    vals = [_I(float(r), g, F) for r in rs]
    tiny = 1e-14
    for j in range(len(rs) - 1):
        if vals[j] >= -tiny:
            continue
        if vals[j + 1] > tiny:
            return find_root(lambda r: _I(r, g, F), float(rs[j]), float(rs[j + 1]))
        # the scan can land exactly on the root
        if abs(vals[j + 1]) <= tiny and j + 2 < len(rs) and vals[j + 2] > tiny:
            return float(rs[j + 1])
    raise NoRoot("the one-strategic first-order equation has no sign change; truthful is optimal")


def _R_nash(r: float, k: int, F: Distribution) -> float:
    return integrate_pieces(lambda x: float((x * F.pdf(x) - F.sf(x)) * F.cdf(x) ** (k - 1)),
                            F.lo, r, F.breakpoints, epsabs=EPSABS, epsrel=EPSREL)


def nash_threshold(k: int, f_law: Distribution) -> float:
    """Nonzero root of E[psi(X) F^(k-1)(X) 1{X <= r}] = 0."""
    if k < 2:
        raise AssumptionViolated("need at least two bidders")
    F = f_law
    if not is_regular(F):
        raise AssumptionViolated("value law is not regular")
    if float(F.pdf(F.hi)) <= 0:
        raise AssumptionViolated("density vanishes at the top of the support")
    mp = cached_monopoly_price(F)
    a, b = _R_nash(mp, k, F), _R_nash(F.hi, k, F)
    if not (a < 0 < b):
        raise AssumptionViolated("symmetric threshold equation has no sign change")
    return find_root(lambda r: _R_nash(r, k, F), mp, F.hi)


def nash_report(k: int, f_law: Distribution) -> NashReport:
    F = f_law
    r = nash_threshold(k, F)
    s = DoubleThreshold(F, 0.0, r)
    util, pay = phase_integrals(s, equilibrium_competition(r, k, F), F.lo)
    truth = DoubleThreshold(F, F.hi, F.hi)
    nr_util, nr_pay = phase_integrals(truth, MaxOf(F, k - 1), F.lo)
    return NashReport(int(k), r, pay, util, nr_pay, nr_util)


def threshold_utility(r: float, g: Distribution, F: Distribution) -> float:
    """Single-phase utility of thresholding at r >= monopoly price against g.

    Equals commitment_utility above the discontinuity when g1 = g2 and H = 1.
    """
    Rr = float(F.revenue(r))
    pts = list(F.breakpoints)
    pts += [float(F.quantile(1.0 - Rr / y)) for y in g.breakpoints if y > 0 and Rr / y <= 1.0]
    low = integrate_pieces(lambda x: float(x * F.pdf(x) * g.cdf(Rr / F.sf(x))), F.lo, r, pts,
                           epsabs=EPSABS, epsrel=EPSREL)
    high = integrate_pieces(lambda x: float(F.sf(x) * g.cdf(x)), r, F.hi,
                            list(F.breakpoints) + list(g.breakpoints), epsabs=EPSABS, epsrel=EPSREL)
    return low + high


def _max_commitment(p: TwoStageProcess, grid: int = 64) -> tuple[float, float]:
    """max over x1 >= monopoly price of commitment_utility; returns (x1*, U*)."""
    F, g = p.value_law, p.competition
    mp = cached_monopoly_price(F)
    xs = np.linspace(mp, F.hi, grid + 1)[:-1]
    vals = [threshold_utility(float(x), g, F) for x in xs]
    j = int(np.argmax(vals))
    a, b = float(xs[max(j - 1, 0)]), float(xs[min(j + 1, grid - 1)])
    best_x = float(xs[j])
    if b > a:
        x = maximize_bounded(lambda t: threshold_utility(t, g, F), a, b)
        if threshold_utility(x, g, F) > threshold_utility(best_x, g, F):
            best_x = x
    return best_x, commitment_utility(best_x, p, "above")


def critical_alpha(p: TwoStageProcess) -> PhaseReport:
    """alpha at which truthful U(0; alpha) meets the best thresholding utility."""
    if p.phase1_reserve is not None:
        raise AssumptionViolated("critical_alpha needs no phase-1 reserve")
    x1_star, u_star = _max_commitment(replace(p, alpha=0.0))
    F = p.value_law

    def u0(a):
        return commitment_utility(F.lo, replace(p, alpha=float(a)))

    lo_gap, hi_gap = u0(0.0) - u_star, u0(1.0) - u_star
    if not (lo_gap < 0 < hi_gap):
        raise NoCrossing(f"truthful minus thresholding utility is {lo_gap} at alpha=0 and {hi_gap} at alpha=1")
    a_c = find_root(lambda a: u0(a) - u_star, 0.0, 1.0, xtol=1e-12)
    u_thr = commitment_utility(x1_star, replace(p, alpha=a_c), "above")
    return PhaseReport(a_c, u0(a_c), u_thr, x1_star)


def _one_strategic_grid(F: Distribution, rs: np.ndarray, k: int, m: int = 64) -> np.ndarray:
    """alpha = 0 utility of thresholding at each r against k-1 truthful opponents."""
    km = k - 1
    R = F.revenue(rs)

    def window(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            y = R[..., None] / F.sf(x)
        return x * F.pdf(x) * np.clip(F.cdf(y), 0, 1) ** km

    def upper(x):
        return F.sf(x) * F.cdf(x) ** km

    lo = np.full_like(rs, F.lo)
    hi = np.full_like(rs, F.hi)
    return gl_integrate(window, lo, rs, m) + gl_integrate(upper, rs, hi, m)


def worst_case_threshold(k_max: int, f_law: Distribution, grid: int = 400) -> float:
    """argmax over r of min over K in 2..k_max of the one-strategic utility."""
    F = f_law
    mp = cached_monopoly_price(F)
    rs = np.linspace(mp, F.hi, grid + 1)[:-1]
    ks = range(2, int(k_max) + 1)
    worst = np.min([_one_strategic_grid(F, rs, k) for k in ks], axis=0)
    j = int(np.argmax(worst))
    a, b = float(rs[max(j - 1, 0)]), float(rs[min(j + 1, grid - 1)])

    comps = [MaxOf(F, k - 1) for k in ks]

    def obj(r):
        return min(threshold_utility(r, g, F) for g in comps)

    r = maximize_bounded(obj, a, b, xatol=1e-9)
    return r if obj(r) >= obj(float(rs[j])) else float(rs[j])
