"""Bid maps, the bid law they induce, and the seller's view of them.

Three monotone bid maps are supported: truthful, the double-threshold map
that shades values in (x0, x1] onto the curve R / (1 - F(x)), and the
eps-threshold map that lifts the bid-side virtual value to eps below r.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .dist import Distribution, _arr, monopoly_price
from .errors import ConfigInvalid, DegenerateDensity, InvalidThresholds, NonMonotone, OutOfSupport
from .numerics import find_root

FEAS_TOL = 1e-12


@lru_cache(maxsize=256)
def cached_monopoly_price(d: Distribution) -> float:
    return monopoly_price(d)


def x0_bar(base: Distribution, x1: float) -> float:
    """inf{x : x(1 - F(x)) >= R} with R = x1(1 - F(x1))."""
    R = float(base.revenue(x1))
    lo = base.lo
    if float(base.revenue(lo)) >= R:
        return lo
    top = min(x1, cached_monopoly_price(base))
    if top <= lo:
        return lo
    if float(base.revenue(top)) < R:
        return float(x1)
    return find_root(lambda t: float(base.revenue(t)) - R, lo, top)


class Strategy:
    base: Distribution
    kind: str

    def bid(self, x: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def slope(self, x: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def h(self, x: ArrayLike) -> NDArray[np.float64]:
        """Bid-side virtual value beta - beta' (1-F)/f, left limit at thresholds."""
        raise NotImplementedError

    def inverse(self, b: ArrayLike) -> NDArray[np.float64]:
        """inf{x : beta(x) >= b}, clipped to the support."""
        raise NotImplementedError

    def bid_cdf(self, b: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def bid_pdf(self, b: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    @property
    def thresholds(self) -> tuple[float, ...]:
        return ()

    @property
    def bid_lo(self) -> float:
        return float(self.base.lo)

    @property
    def bid_hi(self) -> float:
        return float(self.base.hi)

    def is_monotone(self) -> bool:
        return True

    def spec(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Truthful(Strategy):
    base: Distribution
    kind = "truthful"

    def bid(self, x):
        return _arr(x).copy()

    def slope(self, x):
        return np.ones_like(_arr(x))

    def h(self, x):
        return self.base.psi(x)

    def inverse(self, b):
        return np.clip(_arr(b), self.base.lo, self.base.hi)

    def bid_cdf(self, b):
        return self.base.cdf(b)

    def bid_pdf(self, b):
        return self.base.pdf(b)

    def spec(self):
        return {"kind": "truthful"}


@dataclass(frozen=True)
class DoubleThreshold(Strategy):
    """Truthful outside (x0, x1], bids R / (1 - F(x)) inside, R = x1(1 - F(x1))."""

    base: Distribution
    x0: float
    x1: float
    kind = "double_threshold"

    def __post_init__(self):
        if not (0 <= self.x0 <= self.x1):
            raise InvalidThresholds(f"need 0 <= x0 <= x1, got ({self.x0}, {self.x1})")
        if self.x1 > self.base.lo and self.x0 < self.x1 and self.x1 >= self.base.hi:
            raise InvalidThresholds("x1 must lie below the top of the support")

    @property
    def R(self) -> float:
        return float(self.x1 * self.base.sf(self.x1))

    @property
    def _x0e(self) -> float:
        return max(float(self.x0), self.base.lo)

    @property
    def has_window(self) -> bool:
        return self.x1 > self._x0e

    @property
    def window_start_bid(self) -> float:
        """Right limit of beta at x0."""
        return self.R / float(self.base.sf(self._x0e))

    def _in_window(self, x):
        # open at x0: slopes at thresholds are left limits
        return (x > self.x0) & (x <= self.x1) & self.has_window

    def bid(self, x):
        x = _arr(x)
        # closed at x0: the shading branch is right-continuous there
        win = self._in_window(x) | ((x == self.x0) & self.has_window)
        with np.errstate(divide="ignore", invalid="ignore"):
            shaded = self.R / self.base.sf(np.where(win, x, self.base.lo))
        return np.where(win, shaded, x)

    def slope(self, x):
        x = _arr(x)
        win = self._in_window(x)
        xs = np.where(win, x, self.base.lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = self.base.sf(xs)
            d = self.R * self.base.pdf(xs) / (s * s)
        return np.where(win, d, 1.0)

    def h(self, x):
        x = _arr(x)
        return np.where(self._in_window(x), 0.0, self.base.psi(x))

    def inverse(self, b):
        b = _arr(b)
        F = self.base
        if not self.has_window:
            return np.clip(b, F.lo, F.hi)
        x0e, bw0 = self._x0e, self.window_start_bid
        with np.errstate(divide="ignore", invalid="ignore"):
            win = F.quantile(np.clip(1.0 - self.R / np.where(b > 0, b, 1.0), 0.0, 1.0))
        out = np.select([b <= x0e, b <= bw0, b <= self.x1], [b, np.full_like(b, x0e), win], b)
        return np.clip(out, F.lo, F.hi)

    def bid_cdf(self, b):
        b = _arr(b)
        F = self.base
        if not self.has_window:
            return F.cdf(b)
        x0e, bw0 = self._x0e, self.window_start_bid
        with np.errstate(divide="ignore", invalid="ignore"):
            win = 1.0 - self.R / b
        conds = [b < self.bid_lo, b <= x0e, b < bw0, b <= self.x1]
        vals = [np.zeros_like(b), F.cdf(b), np.full_like(b, float(F.cdf(x0e))), win]
        return np.select(conds, vals, F.cdf(b))

    def bid_pdf(self, b):
        b = _arr(b)
        F = self.base
        if not self.has_window:
            return F.pdf(b)
        x0e, bw0 = self._x0e, self.window_start_bid
        with np.errstate(divide="ignore", invalid="ignore"):
            win = self.R / (b * b)
        conds = [b < self.bid_lo, b <= x0e, b < bw0, b <= self.x1]
        vals = [np.zeros_like(b), F.pdf(b), np.zeros_like(b), win]
        return np.select(conds, vals, F.pdf(b))

    @property
    def thresholds(self):
        return (float(self.x0), float(self.x1))

    @property
    def bid_lo(self):
        if self.has_window and self.x0 <= self.base.lo:
            return self.window_start_bid
        return float(self.base.lo)

    @property
    def x0_bar(self) -> float:
        return x0_bar(self.base, self.x1)

    def is_monotone(self) -> bool:
        if not self.has_window:
            return True
        return self.x0 <= self.x0_bar + FEAS_TOL

    def spec(self):
        return {"kind": "double_threshold", "x0": self.x0, "x1": self.x1}


@dataclass(frozen=True)
class EpsThreshold(Strategy):
    """Bids (r - eps)(1 - F(r)) / (1 - F(x)) + eps up to r, truthful above."""

    base: Distribution
    r: float
    eps: float = 0.0
    kind = "eps_threshold"

    def __post_init__(self):
        if self.eps < 0:
            raise InvalidThresholds("eps must be nonnegative")
        if not (self.base.lo <= self.r < self.base.hi):
            raise InvalidThresholds(f"r={self.r} must lie in [lo, hi)")
        if self.r > self.base.lo and not self.eps < self.r:
            raise InvalidThresholds("eps must be below r")

    @property
    def C(self) -> float:
        return float((self.r - self.eps) * self.base.sf(self.r))

    def bid(self, x):
        x = _arr(x)
        low = x <= self.r
        with np.errstate(divide="ignore", invalid="ignore"):
            lifted = self.C / self.base.sf(np.where(low, x, self.base.lo)) + self.eps
        return np.where(low, lifted, x)

    def slope(self, x):
        x = _arr(x)
        low = x <= self.r
        xs = np.where(low, x, self.base.lo)
        s = self.base.sf(xs)
        return np.where(low, self.C * self.base.pdf(xs) / (s * s), 1.0)

    def h(self, x):
        x = _arr(x)
        return np.where(x <= self.r, self.eps, self.base.psi(x))

    def inverse(self, b):
        b = _arr(b)
        F = self.base
        with np.errstate(divide="ignore", invalid="ignore"):
            u = 1.0 - self.C / np.where(b > self.eps, b - self.eps, 1.0)
        low = F.quantile(np.clip(u, 0.0, 1.0))
        out = np.select([b <= self.bid_lo, b <= self.r], [np.full_like(b, F.lo), low], b)
        return np.clip(out, F.lo, F.hi)

    def bid_cdf(self, b):
        b = _arr(b)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = 1.0 - self.C / (b - self.eps)
        return np.select([b < self.bid_lo, b <= self.r], [np.zeros_like(b), low], self.base.cdf(b))

    def bid_pdf(self, b):
        b = _arr(b)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = self.C / (b - self.eps) ** 2
        return np.select([b < self.bid_lo, b <= self.r], [np.zeros_like(b), low], self.base.pdf(b))

    @property
    def thresholds(self):
        return (float(self.r),)

    @property
    def bid_lo(self):
        return float(self.bid(self.base.lo))

    def spec(self):
        return {"kind": "eps_threshold", "r": self.r, "eps": self.eps}


class BidDistribution(Distribution):
    """Law of B = beta(X), the pushforward of the value law."""

    def __init__(self, strategy: Strategy):
        self.strategy = strategy

    def __repr__(self):
        return f"BidDistribution({self.strategy!r})"

    def __eq__(self, other):
        return isinstance(other, BidDistribution) and other.strategy == self.strategy

    def __hash__(self):
        return hash(("bid", self.strategy))

    @property
    def lo(self):
        return self.strategy.bid_lo

    @property
    def hi(self):
        return self.strategy.bid_hi

    def cdf(self, b):
        return self.strategy.bid_cdf(b)

    def pdf(self, b):
        return self.strategy.bid_pdf(b)

    def quantile(self, u):
        return self.strategy.bid(self.strategy.base.quantile(u))

    @property
    def breakpoints(self):
        s = self.strategy
        pts = {self.lo, self.hi}
        pts.update(float(s.bid(min(max(t, s.base.lo), s.base.hi))) for t in s.thresholds)
        pts.update(t for t in s.thresholds if s.base.lo <= t <= s.base.hi)
        if isinstance(s, DoubleThreshold) and s.has_window:
            pts.add(s.window_start_bid)
        return tuple(sorted(pts))


def _check_value(s: Strategy, x) -> NDArray[np.float64]:
    x = _arr(x)
    if np.any(~np.isfinite(x)) or np.any(x < s.base.lo) or np.any(x > s.base.hi):
        raise OutOfSupport(f"value outside support [{s.base.lo}, {s.base.hi}]")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def bid(s: Strategy, x: ArrayLike):
    return _out(s.bid(_check_value(s, x)))


def bid_virtual_value(s: Strategy, x: ArrayLike):
    return _out(s.h(_check_value(s, x)))


def perceived_virtual_value(s: Strategy, alt: Distribution, x: float) -> float:
    """Virtual value of the bid when the seller believes values follow alt."""
    x = float(_check_value(s, x))
    if not (alt.lo <= x <= alt.hi):
        raise OutOfSupport(f"x={x} outside the alternative support")
    if float(alt.pdf(x)) <= 0:
        raise DegenerateDensity(f"alternative density vanishes at x={x}")
    return float(s.bid(x) - s.slope(x) * alt.mills(x))


def pushforward(s: Strategy) -> BidDistribution:
    if not s.is_monotone():
        raise NonMonotone(f"{s!r} violates x0 <= x0_bar; its bid map is not monotone")
    return BidDistribution(s)


def strategy_from_spec(spec: dict[str, Any], base: Distribution) -> Strategy:
    kind = spec.get("kind")
    allowed = {"truthful": {"kind"}, "double_threshold": {"kind", "x0", "x1"},
               "eps_threshold": {"kind", "r", "eps"}}
    if kind not in allowed:
        raise ConfigInvalid(f"unknown strategy kind {kind!r}")
    unknown = set(spec) - allowed[kind]
    if unknown:
        raise ConfigInvalid(f"unknown strategy fields {sorted(unknown)}")
    if kind == "truthful":
        return Truthful(base)
    if kind == "double_threshold":
        return DoubleThreshold(base, float(spec["x0"]), float(spec["x1"]))
    return EpsThreshold(base, float(spec["r"]), float(spec.get("eps", 0.0)))
