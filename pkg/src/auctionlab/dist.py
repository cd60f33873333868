"""Value distributions and the Myerson transforms built on them.

Every law lives on a closed interval [lo, hi]. Infinite tails are cut at a
finite upper bound and renormalized, so all expectations are proper
integrals. Methods are vectorized over numpy arrays; the module-level
functions (virtual_value, hazard, ...) are the checked scalar entry points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import ConfigInvalid, DegenerateDensity, NotUnimodal, OutOfSupport
from .numerics import find_root, maximize_bounded

GRID_POINTS = 10_000
QR_TOL = 1e-10
DEFAULT_TAIL_MASS = 1e-9


def _arr(x: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(x, dtype=float)


class Distribution:
    """Interface shared by value laws, bid laws and competition cdfs."""

    lo: float
    hi: float

    def cdf(self, x: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def pdf(self, x: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def sf(self, x: ArrayLike) -> NDArray[np.float64]:
        return 1.0 - self.cdf(x)

    def quantile(self, u: ArrayLike) -> NDArray[np.float64]:
        # generic vectorized bisection for laws without a closed form
        u = _arr(u)
        a = np.full(u.shape, self.lo)
        b = np.full(u.shape, self.hi)
        for _ in range(64):
            m = 0.5 * (a + b)
            below = self.cdf(m) < u
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        return b

    def mills(self, x: ArrayLike) -> NDArray[np.float64]:
        """(1 - F) / f, the inverse hazard rate; inf where f = 0."""
        x = _arr(x)
        s = self.sf(x)
        f = self.pdf(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(f > 0, s / np.where(f > 0, f, 1.0), np.inf)
        return np.where(s <= 0, 0.0, out)

    def psi(self, x: ArrayLike) -> NDArray[np.float64]:
        x = _arr(x)
        return x - self.mills(x)

    def revenue(self, r: ArrayLike) -> NDArray[np.float64]:
        r = _arr(r)
        return np.where(r >= self.hi, 0.0, r * self.sf(r))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.lo, self.hi)

    def sample(self, rng: np.random.Generator, size) -> NDArray[np.float64]:
        return self.quantile(rng.random(size))

    def to_spec(self) -> dict[str, Any]:
        raise NotImplementedError(f"{type(self).__name__} has no config form")


@dataclass(frozen=True)
class Uniform(Distribution):
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.high > self.low):
            raise ConfigInvalid(f"Uniform needs low < high, got ({self.low}, {self.high})")

    @property
    def lo(self) -> float:
        return float(self.low)

    @property
    def hi(self) -> float:
        return float(self.high)

    def cdf(self, x):
        return np.clip((_arr(x) - self.low) / (self.high - self.low), 0.0, 1.0)

    def sf(self, x):
        return np.clip((self.high - _arr(x)) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, x):
        x = _arr(x)
        inside = (x >= self.low) & (x <= self.high)
        return np.where(inside, 1.0 / (self.high - self.low), 0.0)

    def quantile(self, u):
        return self.low + _arr(u) * (self.high - self.low)

    def mills(self, x):
        x = _arr(x)
        return np.where(x < self.low, np.inf, np.clip(self.high - x, 0.0, None))

    def to_spec(self):
        return {"family": "uniform", "params": {"low": self.low, "high": self.high}}


@dataclass(frozen=True)
class Exponential(Distribution):
    """Exponential(rate) on [0, upper], renormalized.

    The default upper bound is the untruncated quantile at 1 - 1e-9.
    """

    rate: float = 1.0
    upper: float | None = None

    def __post_init__(self):
        if not (self.rate > 0 and np.isfinite(self.rate)):
            raise ConfigInvalid(f"Exponential rate must be positive, got {self.rate}")
        if self.upper is None:
            object.__setattr__(self, "upper", -math.log(DEFAULT_TAIL_MASS) / self.rate)
        if not self.upper > 0:
            raise ConfigInvalid("Exponential upper bound must be positive")

    @property
    def lo(self) -> float:
        return 0.0

    @property
    def hi(self) -> float:
        return float(self.upper)

    @property
    def _mass(self) -> float:
        return -math.expm1(-self.rate * self.upper)

    def cdf(self, x):
        x = np.clip(_arr(x), 0.0, self.upper)
        return np.clip(-np.expm1(-self.rate * x) / self._mass, 0.0, 1.0)

    def sf(self, x):
        x = np.clip(_arr(x), 0.0, self.upper)
        return np.exp(-self.rate * x) * -np.expm1(-self.rate * (self.upper - x)) / self._mass

    def pdf(self, x):
        x = _arr(x)
        inside = (x >= 0) & (x <= self.upper)
        return np.where(inside, self.rate * np.exp(-self.rate * np.clip(x, 0, None)) / self._mass, 0.0)

    def quantile(self, u):
        with np.errstate(divide="ignore"):
            return np.clip(-np.log1p(-_arr(u) * self._mass) / self.rate, 0.0, self.upper)

    def mills(self, x):
        x = _arr(x)
        inside = -np.expm1(-self.rate * np.clip(self.upper - x, 0.0, None)) / self.rate
        return np.where(x < 0, np.inf, inside)

    def to_spec(self):
        return {"family": "exponential", "params": {"rate": self.rate, "upper": self.upper}}


@dataclass(frozen=True)
class TruncatedLogNormal(Distribution):
    mu: float = 0.0
    sigma: float = 1.0
    lower: float = 0.0
    upper: float = 10.0

    def __post_init__(self):
        if not (self.sigma > 0 and 0 <= self.lower < self.upper and np.isfinite(self.upper)):
            raise ConfigInvalid("TruncatedLogNormal needs sigma > 0 and 0 <= lower < upper < inf")
        # normalizing constants, cached since every evaluation needs them
        zl = -np.inf if self.lower == 0 else (math.log(self.lower) - self.mu) / self.sigma
        zu = (math.log(self.upper) - self.mu) / self.sigma
        object.__setattr__(self, "_zl", zl)
        object.__setattr__(self, "_zu", zu)
        object.__setattr__(self, "_cl", float(special.ndtr(zl)))
        object.__setattr__(self, "_tail_u", float(special.ndtr(-zu)))
        object.__setattr__(self, "_cu", float(special.ndtr(zu)))
        object.__setattr__(self, "_mass", float(special.ndtr(zu) - special.ndtr(zl)))

    @property
    def lo(self) -> float:
        return float(self.lower)

    @property
    def hi(self) -> float:
        return float(self.upper)

    def _z(self, x):
        return (np.log(np.maximum(x, 1e-300)) - self.mu) / self.sigma

    def cdf(self, x):
        x = np.clip(_arr(x), self.lower, self.upper)
        z = self._z(x)
        return np.clip((special.ndtr(z) - self._cl) / self._mass, 0.0, 1.0)

    def sf(self, x):
        x = np.clip(_arr(x), self.lower, self.upper)
        z = self._z(x)
        # upper tail form keeps precision when z is large
        upper_tail = special.ndtr(-z) - self._tail_u
        lower_form = self._cu - special.ndtr(z)
        return np.clip(np.where(z > 0, upper_tail, lower_form) / self._mass, 0.0, 1.0)

    def pdf(self, x):
        x = _arr(x)
        inside = (x >= self.lower) & (x <= self.upper) & (x > 0)
        xs = np.where(inside, x, 1.0)
        z = self._z(xs)
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * xs * self.sigma * self._mass)
        return np.where(inside, dens, 0.0)

    def quantile(self, u):
        p = self._cl + _arr(u) * self._mass
        return np.clip(np.exp(self.mu + self.sigma * special.ndtri(p)), self.lower, self.upper)

    def to_spec(self):
        return {"family": "truncated_lognormal",
                "params": {"mu": self.mu, "sigma": self.sigma, "lower": self.lower, "upper": self.upper}}


@dataclass(frozen=True)
class PiecewiseEmpirical(Distribution):
    """Cdf linearly interpolated between (x, F) knots; pdf is the slope."""

    knots: tuple[tuple[float, float], ...] = ((0.0, 0.0), (1.0, 1.0))

    def __post_init__(self):
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        object.__setattr__(self, "knots", knots)
        xs, fs = self.xs, self.fs
        if len(knots) < 2 or np.any(np.diff(xs) <= 0):
            raise ConfigInvalid("knots need at least two strictly increasing x values")
        if np.any(np.diff(fs) < 0) or abs(fs[0]) > 1e-12 or abs(fs[-1] - 1) > 1e-12:
            raise ConfigInvalid("knot cdf values must rise monotonically from 0 to 1")

    @property
    def xs(self) -> NDArray[np.float64]:
        return np.array([k[0] for k in self.knots])

    @property
    def fs(self) -> NDArray[np.float64]:
        return np.array([k[1] for k in self.knots])

    @property
    def lo(self) -> float:
        return float(self.knots[0][0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1][0])

    def cdf(self, x):
        return np.interp(_arr(x), self.xs, self.fs, left=0.0, right=1.0)

    def pdf(self, x):
        x = _arr(x)
        xs, fs = self.xs, self.fs
        slopes = np.diff(fs) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        inside = (x >= xs[0]) & (x <= xs[-1])
        return np.where(inside, slopes[idx], 0.0)

    def quantile(self, u):
        u = _arr(u)
        xs, fs = self.xs, self.fs
        # first knot segment whose upper cdf reaches u gives inf{x: F(x) >= u}
        j = np.clip(np.searchsorted(fs, u, side="left"), 1, len(fs) - 1)
        f0, f1 = fs[j - 1], fs[j]
        x0, x1 = xs[j - 1], xs[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(f1 > f0, (u - f0) / (f1 - f0), 0.0)
        return np.where(u <= 0, xs[0], x0 + np.clip(t, 0, 1) * (x1 - x0))

    @property
    def breakpoints(self):
        return tuple(k[0] for k in self.knots)

    def to_spec(self):
        return {"family": "piecewise_empirical", "params": {"knots": [list(k) for k in self.knots]}}


# Composite laws used as competition cdfs.

@dataclass(frozen=True)
class MaxOf(Distribution):
    """Law of the maximum of k i.i.d. draws from base (cdf F^k)."""

    base: Distribution
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigInvalid("MaxOf needs k >= 1")

    @property
    def lo(self):
        return self.base.lo

    @property
    def hi(self):
        return self.base.hi

    def cdf(self, x):
        return self.base.cdf(x) ** self.k

    def pdf(self, x):
        return self.k * self.base.cdf(x) ** (self.k - 1) * self.base.pdf(x)

    def quantile(self, u):
        return self.base.quantile(_arr(u) ** (1.0 / self.k))

    @property
    def breakpoints(self):
        return self.base.breakpoints

    def to_spec(self):
        return {"family": "max_of", "params": {"base": self.base.to_spec(), "k": self.k}}


@dataclass(frozen=True)
class Product(Distribution):
    """Cdf G(x)H(x): the maximum of independent draws from both laws."""

    first: Distribution
    second: Distribution

    @property
    def lo(self):
        return max(self.first.lo, self.second.lo)

    @property
    def hi(self):
        return max(self.first.hi, self.second.hi)

    def cdf(self, x):
        return self.first.cdf(x) * self.second.cdf(x)

    def pdf(self, x):
        return self.first.pdf(x) * self.second.cdf(x) + self.first.cdf(x) * self.second.pdf(x)

    def sample(self, rng, size):
        return np.maximum(self.first.sample(rng, size), self.second.sample(rng, size))

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.first.breakpoints) | set(self.second.breakpoints)))


@dataclass(frozen=True)
class Mixture(Distribution):
    """Cdf w*first + (1-w)*second."""

    first: Distribution
    second: Distribution
    weight: float

    @property
    def lo(self):
        return min(self.first.lo, self.second.lo)

    @property
    def hi(self):
        return max(self.first.hi, self.second.hi)

    def cdf(self, x):
        return self.weight * self.first.cdf(x) + (1 - self.weight) * self.second.cdf(x)

    def pdf(self, x):
        return self.weight * self.first.pdf(x) + (1 - self.weight) * self.second.pdf(x)

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.first.breakpoints) | set(self.second.breakpoints)))


@dataclass(frozen=True)
class MyersonTransforms:
    psi: Callable[[ArrayLike], NDArray[np.float64]]
    hazard: Callable[[ArrayLike], NDArray[np.float64]]
    monopoly_price: float
    revenue_curve: Callable[[ArrayLike], NDArray[np.float64]]


@dataclass(frozen=True)
class QuasiRegularity:
    ok: bool
    argmax: float
    violations: tuple[tuple[float, float], ...] = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def _check_point(d: Distribution, x: float) -> float:
    x = float(x)
    if not (d.lo <= x <= d.hi) or not np.isfinite(x):
        raise OutOfSupport(f"x={x} outside support [{d.lo}, {d.hi}]")
    return x


def virtual_value(d: Distribution, x: float) -> float:
    x = _check_point(d, x)
    if float(d.pdf(x)) <= 0:
        raise DegenerateDensity(f"density vanishes at x={x}")
    return float(d.psi(x))


def hazard(d: Distribution, x: float) -> float:
    x = _check_point(d, x)
    s = float(d.sf(x))
    return np.inf if s <= 0 else float(d.pdf(x)) / s


def revenue_curve(d: Distribution, r: ArrayLike):
    out = d.revenue(r)
    return float(out) if np.ndim(out) == 0 else out


def value_grid(d: Distribution, n: int = GRID_POINTS) -> NDArray[np.float64]:
    return np.linspace(d.lo, d.hi, n)


def check_quasi_regular(d: Distribution, n: int = GRID_POINTS, tol: float = QR_TOL) -> QuasiRegularity:
    """Quasi-concavity of r(1 - F(r)) on an n-point grid.

    Before the grid argmax the curve may not drop by more than tol between
    neighbours, after it it may not rise by more than tol.
    """
    g = value_grid(d, n)
    rev = d.revenue(g)
    i = int(np.argmax(rev))
    step = np.diff(rev)
    bad_left = np.nonzero(step[:i] < -tol)[0]
    bad_right = np.nonzero(step[i:] > tol)[0] + i
    bad = np.concatenate([bad_left, bad_right])
    cells = tuple((float(g[j]), float(g[j + 1])) for j in bad)
    return QuasiRegularity(ok=not cells, argmax=float(g[i]), violations=cells)


def is_regular(d: Distribution, n: int = GRID_POINTS, tol: float = 1e-9) -> bool:
    """psi nondecreasing on the grid interior (where f > 0)."""
    g = value_grid(d, n)[1:-1]
    f = d.pdf(g)
    if np.any(f <= 0):
        return False
    p = d.psi(g)
    return bool(np.all(np.diff(p) >= -tol * np.maximum(1.0, np.abs(p[1:]))))


def monopoly_price(d: Distribution) -> float:
    """Smallest maximizer of r(1 - F(r))."""
    qr = check_quasi_regular(d)
    if not qr.ok:
        raise NotUnimodal(f"revenue curve has several local maxima; first violation {qr.violations[0]}")
    g = value_grid(d)
    rev = d.revenue(g)
    i = int(np.argmax(rev))
    if i == 0 and float(d.psi(g[0])) >= 0:
        return float(g[0])
    a = float(g[max(i - 1, 0)])
    b = float(g[min(i + 1, len(g) - 1)])
    pa, pb = float(d.psi(a)), float(d.psi(b))
    if np.isfinite(pa) and np.isfinite(pb) and pa < 0 < pb:
        return find_root(lambda t: float(d.psi(t)), a, b)
    if pa == 0:
        return a
    return maximize_bounded(lambda t: float(d.revenue(t)), a, b)


def transforms(d: Distribution) -> MyersonTransforms:
    return MyersonTransforms(psi=d.psi, hazard=lambda x: d.pdf(x) / d.sf(x),
                             monopoly_price=monopoly_price(d), revenue_curve=d.revenue)


_FAMILIES = {
    "uniform": (Uniform, {"low", "high"}),
    "exponential": (Exponential, {"rate", "upper"}),
    "truncated_lognormal": (TruncatedLogNormal, {"mu", "sigma", "lower", "upper"}),
    "piecewise_empirical": (PiecewiseEmpirical, {"knots"}),
}


def dist_from_spec(spec: dict[str, Any]) -> Distribution:
    """Build a law from {"family": ..., "params": {...}}."""
    if not isinstance(spec, dict) or set(spec) - {"family", "params"} or "family" not in spec:
        raise ConfigInvalid(f"distribution spec must be {{family, params}}, got {spec!r}")
    family = spec["family"]
    params = dict(spec.get("params", {}))
    if family == "max_of":
        if set(params) != {"base", "k"}:
            raise ConfigInvalid("max_of needs params base and k")
        return MaxOf(dist_from_spec(params["base"]), int(params["k"]))
    if family not in _FAMILIES:
        raise ConfigInvalid(f"unknown distribution family {family!r}")
    cls, allowed = _FAMILIES[family]
    unknown = set(params) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown parameters for {family}: {sorted(unknown)}")
    if family == "piecewise_empirical":
        params["knots"] = tuple(tuple(k) for k in params.get("knots", ()))
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
