"""Thresholding at the monopoly price under three auction formats.

One strategic bidder faces K-1 truthful bidders with the same regular value
law. Each format reports the strategic bidder's utility when truthful and
when thresholding at the monopoly price (eps -> 0 limit).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Distribution, MaxOf, is_regular
from .errors import AssumptionViolated
from .game import EPSABS, EPSREL, phase_integrals
from .numerics import integrate_pieces
from .strategy import DoubleThreshold, Truthful, cached_monopoly_price

MECHANISMS = ("Lazy", "Myerson", "Eager")


@dataclass(frozen=True)
class MechanismComparison:
    mechanism: str
    u_truthful: float
    u_threshold: float
    uplift_abs: float
    uplift_rel: float


@dataclass(frozen=True)
class FloorCompetition(Distribution):
    """Cdf base(max(b, floor)): opponents below their reserve never compete."""

    base: Distribution
    floor: float

    @property
    def lo(self):
        return self.base.lo

    @property
    def hi(self):
        return self.base.hi

    def cdf(self, b):
        b = np.asarray(b, dtype=float)
        return np.where(b < 0, 0.0, self.base.cdf(np.maximum(b, self.floor)))

    def pdf(self, b):
        b = np.asarray(b, dtype=float)
        return np.where(b > self.floor, self.base.pdf(b), 0.0)

    @property
    def breakpoints(self):
        return tuple(sorted({self.floor, *self.base.breakpoints}))


def _require_regular(f_law: Distribution, k: int) -> float:
    if k < 2:
        raise AssumptionViolated("need at least two bidders")
    if not is_regular(f_law):
        raise AssumptionViolated("value law is not regular")
    return cached_monopoly_price(f_law)


def threshold_strategy(f_law: Distribution) -> DoubleThreshold:
    """Thresholding at the monopoly price: x0 = 0, x1 = monopoly price."""
    return DoubleThreshold(f_law, 0.0, cached_monopoly_price(f_law))


def _truthful_monopoly(k: int, F: Distribution, mp: float) -> float:
    return phase_integrals(Truthful(F), MaxOf(F, k - 1), mp)[0]


def myerson_utilities(k: int, f_law: Distribution) -> tuple[float, float]:
    F = f_law
    mp = _require_regular(F, k)
    # symmetric regular case: allocation 1{psi(x) >= max(0, psi(y_j))} = F^(k-1)(x) 1{x >= mp}
    u_truth = _truthful_monopoly(k, F, mp)
    mass_below = integrate_pieces(lambda x: float(x * F.pdf(x)), F.lo, mp, F.breakpoints,
                                  epsabs=EPSABS, epsrel=EPSREL)
    extra = float(F.cdf(mp)) ** (k - 1) * mass_below
    return u_truth, u_truth + extra


def lazy_utilities(k: int, f_law: Distribution) -> tuple[float, float]:
    F = f_law
    mp = _require_regular(F, k)
    u_truth = _truthful_monopoly(k, F, mp)
    u_thr = phase_integrals(threshold_strategy(F), MaxOf(F, k - 1), F.lo)[0]
    return u_truth, u_thr


def lazy_extra(k: int, f_law: Distribution) -> float:
    """E[X G(t0(X)) 1{X <= mp}] with t0(x) = mp(1 - F(mp)) / (1 - F(x))."""
    F = f_law
    mp = cached_monopoly_price(F)
    R = float(F.revenue(mp))
    return integrate_pieces(lambda x: float(x * F.pdf(x) * F.cdf(R / F.sf(x)) ** (k - 1)),
                            F.lo, mp, F.breakpoints, epsabs=EPSABS, epsrel=EPSREL)


def eager_utilities(k: int, f_law: Distribution) -> tuple[float, float]:
    F = f_law
    mp = _require_regular(F, k)
    u_truth = _truthful_monopoly(k, F, mp)
    comp = FloorCompetition(MaxOf(F, k - 1), mp)
    u_thr = phase_integrals(threshold_strategy(F), comp, F.lo)[0]
    return u_truth, u_thr


def _row(name: str, ut: float, uh: float) -> MechanismComparison:
    up = uh - ut
    return MechanismComparison(name, ut, uh, up, up / ut if ut != 0 else float("nan"))


def compare_all(k: int, f_law: Distribution, threshold: bool = True) -> list[MechanismComparison]:
    funcs = {"Lazy": lazy_utilities, "Myerson": myerson_utilities, "Eager": eager_utilities}
    rows = []
    for name in MECHANISMS:
        ut, uh = funcs[name](k, f_law)
        rows.append(_row(name, ut, uh if threshold else ut))
    lazy, mye, eag = rows
    if mye.uplift_abs < lazy.uplift_abs - 1e-9 or eag.uplift_abs < lazy.uplift_abs - 1e-9:
        raise AssumptionViolated("mechanism uplift ordering violated")
    return rows
