"""Acceptance suite: one check per criterion, run by `auctionlab verify` and pytest.

Every check returns a CriterionResult; passed is None for informational rows.
Tolerances are multiplied by tol_scale so a zero scale demonstrably fails.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dist import Exponential, TruncatedLogNormal, Uniform
from .errors import AuctionLabError
from .game import (TwoStageProcess, best_response, critical_alpha, myerson_payment,
                   nash_report, nash_threshold, phase_integrals, truthful_utility,
                   utility_grad, utility_total, utility_two_stage,
                   x0_switch_alpha)
from .mech import eager_utilities, lazy_utilities, myerson_utilities, threshold_strategy
from .oracle import (FixedPrice, MonopolyOfBids, SimConfig, agree, simulate,
                     simulate_two_stage)
from .seller import erm_theorem5_experiment, summarize_erm
from .strategy import DoubleThreshold, EpsThreshold, Truthful, cached_monopoly_price, x0_bar

LOGNORMAL = TruncatedLogNormal(0.0, 0.5, 0.1, 4.0)


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    passed: bool | None
    detail: str
    seconds: float

    @property
    def status(self) -> str:
        return "INFO" if self.passed is None else ("PASS" if self.passed else "FAIL")

    def line(self) -> str:
        return f"[{self.status}] {self.cid:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass(frozen=True)
class Context:
    tol_scale: float = 1.0
    n_mc: int = 10**6
    seed: int = 0
    canonical: tuple[str, ...] = field(default_factory=lambda: tuple(CANONICAL))

    def tol(self, t: float) -> float:
        return t * self.tol_scale

    def close(self, a: float, b: float, t: float) -> bool:
        return abs(a - b) <= self.tol(t)


# Monte Carlo cross-checks: name -> (analytic value, simulated value and SE)

def _lazy_pair(reserve: float):
    U = Uniform()
    return SimConfig(1, 0, "lazy", (Truthful(U), Truthful(U)), phase2_reserve_rule=FixedPrice(reserve))


def _mc_one(cfg: SimConfig, n: int, seed: int, who: int = 0, what: str = "utility"):
    res = simulate(replace(cfg, n_auctions=n, seed=seed))
    if what == "utility":
        return res.utility[who], res.utility_se[who]
    return res.payment[who], res.payment_se[who]


def _cfg(mech, strategies, rule):
    return SimConfig(1, 0, mech, tuple(strategies), phase2_reserve_rule=rule)


def _canon_two_stage(s, H, n, seed, analytic):
    U = Uniform()
    cfg = SimConfig(n, seed, "lazy", (s, Truthful(U)), phase1_reserve=H,
                    phase2_reserve_rule=MonopolyOfBids())
    r = simulate_two_stage(cfg, 0.5)
    return analytic, r.combined[0], r.combined_se[0]


def _canonical(name: str, n: int, seed: int) -> tuple[float, float, float]:
    U = Uniform()
    thr = threshold_strategy(U)
    eps = EpsThreshold(U, 0.5, 0.0)
    if name == "lazy_truthful_r0":
        a = phase_integrals(Truthful(U), U, 0.0)[0]
        return (a, *_mc_one(_lazy_pair(0.0), n, seed))
    if name == "lazy_truthful_r05":
        a = phase_integrals(Truthful(U), U, 0.5)[0]
        return (a, *_mc_one(_lazy_pair(0.5), n, seed))
    if name == "myerson_threshold_k2":
        a = myerson_utilities(2, U)[1]
        return (a, *_mc_one(_cfg("myerson", [eps, Truthful(U)], FixedPrice(0.0)), n, seed))
    if name == "myerson_threshold_k3":
        a = myerson_utilities(3, U)[1]
        return (a, *_mc_one(_cfg("myerson", [eps, Truthful(U), Truthful(U)], FixedPrice(0.0)), n, seed))
    if name == "lazy_threshold_k2":
        a = lazy_utilities(2, U)[1]
        return (a, *_mc_one(_cfg("lazy", [thr, Truthful(U)], MonopolyOfBids()), n, seed))
    if name == "eager_threshold_k2":
        a = eager_utilities(2, U)[1]
        return (a, *_mc_one(_cfg("eager", [thr, Truthful(U)], MonopolyOfBids()), n, seed))
    if name == "eager_truthful_k3":
        a = eager_utilities(3, U)[0]
        return (a, *_mc_one(_cfg("eager", [Truthful(U)] * 3, MonopolyOfBids()), n, seed))
    if name == "lazy_threshold_lognormal":
        F = LOGNORMAL
        a = lazy_utilities(2, F)[1]
        return (a, *_mc_one(_cfg("lazy", [threshold_strategy(F), Truthful(F)], MonopolyOfBids()), n, seed))
    if name == "two_stage_threshold":
        p = TwoStageProcess(U, None, U, 0.5)
        return _canon_two_stage(DoubleThreshold(U, 0.0, 0.75), None, n, seed,
                                utility_two_stage(0.0, 0.75, p).u_exact)
    if name == "two_stage_truthful_random_reserve":
        p = TwoStageProcess(U, U, U, 0.5)
        return _canon_two_stage(Truthful(U), U, n, seed, truthful_utility(p).u_exact)
    if name == "payment_threshold_no_reserve":
        s = DoubleThreshold(U, 0.0, 0.75)
        a = myerson_payment(s, U, 0.0)
        return (a, *_mc_one(_cfg("lazy", [s, Truthful(U)], FixedPrice(0.0)), n, seed, what="payment"))
    if name == "nash_k2":
        a = nash_report(2, U).buyer_utility
        s = DoubleThreshold(U, 0.0, nash_threshold(2, U))
        return (a, *_mc_one(_cfg("lazy", [s, s], MonopolyOfBids()), n, seed))
    raise KeyError(name)


CANONICAL = (
    "lazy_truthful_r0", "lazy_truthful_r05", "myerson_threshold_k2", "myerson_threshold_k3",
    "lazy_threshold_k2", "eager_threshold_k2", "eager_truthful_k3", "lazy_threshold_lognormal",
    "two_stage_threshold", "two_stage_truthful_random_reserve", "payment_threshold_no_reserve",
    "nash_k2",
)


# criteria

def c1_nash(ctx: Context):
    t = time.perf_counter()
    want = {2: 0.75, 3: 2 / 3, 4: 0.625, 5: 0.6}
    got = {k: nash_threshold(k, Uniform()) for k in want}
    dt = time.perf_counter() - t
    ok = all(ctx.close(got[k], want[k], 1e-6) for k in want) and dt < 1.0
    return ok, ", ".join(f"K={k}: {got[k]:.9f}" for k in got) + f"; {dt:.3f}s < 1s"


def c2_myerson(ctx: Context):
    t = time.perf_counter()
    ut, uh = myerson_utilities(2, Uniform())
    dt = time.perf_counter() - t
    a, mc, se = _canonical("myerson_threshold_k2", ctx.n_mc, ctx.seed)
    ok = (ctx.close(ut, 1 / 12, 1e-9) and ctx.close(uh, 7 / 48, 1e-9)
          and agree(uh, mc, ctx.tol(se)) and dt < 10.0)
    return ok, f"truthful {ut:.12f}, thresholded {uh:.12f}, MC {mc:.5f} +- {se:.5f}; {dt:.3f}s < 10s"


def c3_lazy(ctx: Context):
    ut, uh = lazy_utilities(2, Uniform())
    closed = 1 / 12 + 0.25 * (math.log(2) - 0.5)
    ok = ctx.close(ut, 0.083, 1e-3) and ctx.close(uh, 0.132, 1e-3) and ctx.close(uh, closed, 1e-9)
    return ok, f"truthful {ut:.9f}, thresholded {uh:.12f}, closed form {closed:.12f}"


def c4_phase(ctx: Context):
    t = time.perf_counter()
    U = Uniform()
    rep = critical_alpha(TwoStageProcess(U, None, U, 0.0))
    dt = time.perf_counter() - t
    lo, hi = 0.762 - ctx.tol(0.005), 0.762 + ctx.tol(0.005)
    ok = lo <= rep.alpha_c <= hi and dt < 5.0
    return ok, f"alpha_c {rep.alpha_c:.6f} in [{lo:.3f}, {hi:.3f}]; {dt:.2f}s < 5s"


def c5_equivalence(ctx: Context):
    rows = []
    ok = True
    for name, F in (("uniform", Uniform()), ("exponential", Exponential(1.0))):
        for k in (2, 3):
            r = nash_report(k, F)
            dr = abs(r.seller_revenue - r.no_reserve_revenue)
            du = abs(r.buyer_utility - r.no_reserve_utility)
            ok &= dr <= ctx.tol(1e-8) and du <= ctx.tol(1e-8)
            rows.append(f"{name} K={k}: r*={r.r_star:.6f} |dRev|={dr:.1e} |dU|={du:.1e}")
    return ok, "; ".join(rows)


def gradient_errors(F, H, points: int, seed: int, step: float = 1e-5, floor: float = 1e-3) -> list[float]:
    """Relative errors of utility_grad against central differences at random feasible points."""
    rng = np.random.default_rng(seed)
    mp = cached_monopoly_price(F)
    errs = []
    while len(errs) < points:
        x1 = rng.uniform(mp + 1e-3 * (F.hi - mp), F.hi - 1e-3 * (F.hi - mp))
        xb = x0_bar(F, x1)
        if xb - F.lo < 1e-2 * (F.hi - F.lo):
            continue
        x0 = rng.uniform(F.lo + 1e-3 * (xb - F.lo), xb - 1e-3 * (xb - F.lo))
        p = TwoStageProcess(F, H, F, float(rng.uniform(0.05, 0.95)))

        def u(a, b):
            return utility_total(a, b, p)

        g = utility_grad(x0, x1, p)
        fd = ((u(x0 + step, x1) - u(x0 - step, x1)) / (2 * step),
              (u(x0, x1 + step) - u(x0, x1 - step)) / (2 * step))
        errs.append(max(abs(g[i] - fd[i]) / max(abs(fd[i]), floor) for i in (0, 1)))
    return errs


def c6_gradients(ctx: Context):
    ok = True
    rows = []
    for name, F in (("uniform", Uniform()), ("lognormal", LOGNORMAL)):
        for hname, H in (("H=1", None), ("H=uniform", Uniform(0.0, F.hi))):
            worst = max(gradient_errors(F, H, 100, ctx.seed))
            ok &= worst < ctx.tol(1e-5)
            rows.append(f"{name} {hname}: max rel err {worst:.1e}")
    return ok, "; ".join(rows)


def c7_regime(ctx: Context):
    U = Uniform()
    p = TwoStageProcess(U, U, U, 0.0)
    low = [best_response(replace(p, alpha=a))[0] for a in (0.0, 0.3, 0.6)]
    high = [best_response(replace(p, alpha=a))[0] for a in (0.9, 0.95)]
    switch, _ = x0_switch_alpha(p, np.linspace(0.6, 0.9, 13), refine=8)
    band = ctx.tol(0.05)
    ok_low = all(x <= 1e-9 for x in low)
    ok_high = any(x > 0 for x in high)
    ok_band = switch is not None and abs(switch - 0.8) <= band
    detail = (f"x0*(0, 0.3, 0.6) = {low}; x0*(0.9, 0.95) = {[round(x, 6) for x in high]}; "
              f"switch {switch if switch is None else round(switch, 5)} vs 0.8 +- {band:.2f}")
    return ok_low and ok_high and ok_band, detail


def c8_erm(ctx: Context):
    t = time.perf_counter()
    reps = erm_theorem5_experiment(Uniform(), 0.5, 0.1, [10**3, 10**4, 10**5], 0.05, 200, ctx.seed)
    dt = time.perf_counter() - t
    summ = summarize_erm(reps)
    ok = dt < 60.0
    meds = [row["median_x_hat"] for row in summ]
    ok &= all(b < a for a, b in zip(meds, meds[1:]))
    for row in summ:
        ok &= row["hit_rate"] >= 1 - row["delta"] - row["delta1"] - ctx.tol(0.0)
    rows = [f"n={r['n']}: hit {r['hit_rate']:.3f} delta1 {r['delta1']:.3f} median {r['median_x_hat']:.5f}"
            for r in summ]
    return ok, "; ".join(rows) + f"; {dt:.1f}s < 60s"


def c9_oracle(ctx: Context):
    ok = True
    rows = []
    for name in ctx.canonical:
        a, mc, se = _canonical(name, ctx.n_mc, ctx.seed)
        good = agree(a, mc, ctx.tol(se))
        again = _canonical(name, min(ctx.n_mc, 1000), ctx.seed)
        good &= again == _canonical(name, min(ctx.n_mc, 1000), ctx.seed)
        ok &= good
        rows.append(f"{name} {a:.5f} vs {mc:.5f} ({(mc - a) / se:+.1f} SE)")
    return ok, "; ".join(rows)


def exponential_candidates() -> list[tuple[str, float, float]]:
    """Lazy K=2 utilities (truthful, thresholded) for readings of the exponential numerics."""
    cands = [
        ("exponential rate 1", Exponential(1.0)),
        ("exponential rate 4 (mean 0.25)", Exponential(4.0)),
        ("exponential rate 0.25 (mean 4)", Exponential(0.25)),
        ("lognormal mu 0.25 sigma 1", TruncatedLogNormal(0.25, 1.0, 1e-6, float(np.exp(0.25 + 8.0)))),
    ]
    out = []
    for name, F in cands:
        try:
            ut, uh = lazy_utilities(2, F)
        except AuctionLabError:
            ut = uh = float("nan")
        out.append((name, ut, uh))
    return out


def c10_exponential(ctx: Context):
    rows = [f"{n}: {a:.4f} -> {b:.4f} ({(b - a) / a:+.1%})" for n, a, b in exponential_candidates()]
    return None, "informational, target 0.791 -> 1.025 (+29.5%); " + "; ".join(rows)


CRITERIA = {
    1: ("Nash thresholds", c1_nash),
    2: ("Myerson uplift", c2_myerson),
    3: ("Lazy uplift", c3_lazy),
    4: ("Phase transition", c4_phase),
    5: ("Revenue equivalence", c5_equivalence),
    6: ("Gradient suite", c6_gradients),
    7: ("x0 regime", c7_regime),
    8: ("ERM bound", c8_erm),
    9: ("Oracle cross-validation", c9_oracle),
    10: ("Exponential numerics", c10_exponential),
}


def run_criterion(cid: int, ctx: Context) -> CriterionResult:
    name, fn = CRITERIA[cid]
    t = time.perf_counter()
    try:
        passed, detail = fn(ctx)
    except AuctionLabError as exc:
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(cid, name, None if passed is None else bool(passed), detail,
                           time.perf_counter() - t)


def run(only=None, ctx: Context | None = None) -> list[CriterionResult]:
    ctx = ctx or Context()
    ids = sorted(CRITERIA) if not only else list(only)
    return [run_criterion(i, ctx) for i in ids]
