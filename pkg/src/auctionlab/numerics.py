"""Shared quadrature, root-finding and grid helpers.

Adaptive quadrature and bracketed root finding are delegated to scipy
(QUADPACK and Brent's method). Fixed Gauss-Legendre rules are used where
thousands of integrals are evaluated at once on a grid.
"""
from __future__ import annotations

from typing import Callable, Iterable

import numpy as np
from scipy import integrate, optimize

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
ROOT_XTOL = 1e-12


def split_points(a: float, b: float, points: Iterable[float]) -> list[float]:
    """Sorted interval edges a < p_1 < ... < b keeping only interior points."""
    inner = sorted({float(p) for p in points if a < p < b and np.isfinite(p)})
    return [a, *inner, b]


def integrate_pieces(
    fn: Callable[[float], float],
    a: float,
    b: float,
    points: Iterable[float] = (),
    epsabs: float = QUAD_EPSABS,
    epsrel: float = QUAD_EPSREL,
) -> float:
    """Adaptive integral of fn over [a, b], split at the given breakpoints."""
    if not b > a:
        return 0.0
    edges = split_points(a, b, points)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(fn, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=200)
        total += val
    return total


def find_root(fn: Callable[[float], float], a: float, b: float, xtol: float = ROOT_XTOL) -> float:
    return float(optimize.brentq(fn, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def maximize_bounded(fn: Callable[[float], float], a: float, b: float, xatol: float = 1e-11) -> float:
    res = optimize.minimize_scalar(lambda t: -fn(t), bounds=(a, b), method="bounded",
                                   options={"xatol": xatol, "maxiter": 500})
    return float(res.x)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the m-point rule on [0, 1]."""
    if m not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(m)
        _GL_CACHE[m] = ((x + 1.0) / 2.0, w / 2.0)
    return _GL_CACHE[m]


def gl_integrate(fn: Callable[[np.ndarray], np.ndarray], a, b, m: int = 48) -> np.ndarray:
    """Vectorized fixed-rule integral; a and b may be arrays of equal shape."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, w = gauss_legendre(m)
    width = b - a
    nodes = a[..., None] + width[..., None] * t
    vals = fn(nodes)
    return width * np.sum(vals * w, axis=-1)
