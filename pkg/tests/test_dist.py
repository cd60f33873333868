import numpy as np
import pytest
from scipy import integrate, stats

from auctionlab.dist import (Exponential, MaxOf, PiecewiseEmpirical, TruncatedLogNormal, Uniform,
                             check_quasi_regular, dist_from_spec, hazard, is_regular,
                             monopoly_price, revenue_curve, transforms, virtual_value)
from auctionlab.errors import ConfigInvalid, DegenerateDensity, NotUnimodal, OutOfSupport

LAWS = [
    Uniform(),
    Uniform(0.0, 2.0),
    Exponential(1.0, 50.0),
    Exponential(4.0),
    TruncatedLogNormal(0.0, 0.5, 0.1, 4.0),
    PiecewiseEmpirical(((0.0, 0.0), (0.3, 0.5), (1.0, 1.0))),
]


def two_bumps():
    # revenue r(1 - F(r)) has local maxima near 0.2 and near 0.9
    return PiecewiseEmpirical(((0.0, 0.0), (0.2, 0.05), (0.3, 0.6), (0.85, 0.62), (1.0, 1.0)))


def test_uniform_virtual_value():
    assert virtual_value(Uniform(), 0.5) == pytest.approx(0.0, abs=1e-15)
    assert virtual_value(Uniform(), 1.0) == pytest.approx(1.0)


def test_truncated_exponential_virtual_value():
    # untruncated psi(x) = x - 1/rate; truncation at 50 shifts it by about e^-48
    assert virtual_value(Exponential(1.0, 50.0), 2.0) == pytest.approx(1.0, abs=1e-8)


def test_virtual_value_errors():
    with pytest.raises(OutOfSupport):
        virtual_value(Uniform(), 1.5)
    flat = PiecewiseEmpirical(((0.0, 0.0), (0.4, 0.5), (0.6, 0.5), (1.0, 1.0)))
    with pytest.raises(DegenerateDensity):
        virtual_value(flat, 0.5)


def test_monopoly_prices():
    assert monopoly_price(Uniform()) == pytest.approx(0.5, abs=1e-10)
    assert monopoly_price(Uniform(0.0, 2.0)) == pytest.approx(1.0, abs=1e-10)
    grid = np.arange(0.5, 1.5, 1e-6)
    oracle = grid[np.argmax(grid * np.exp(-grid))]
    assert monopoly_price(Exponential(1.0, 50.0)) == pytest.approx(oracle, abs=2e-6)


def test_lognormal_monopoly_price_against_scipy():
    d = TruncatedLogNormal(0.0, 0.5, 0.1, 4.0)
    ref = stats.lognorm(0.5)
    mass = ref.cdf(4.0) - ref.cdf(0.1)
    grid = np.linspace(0.1, 4.0, 400001)
    rev = grid * (ref.cdf(4.0) - ref.cdf(grid)) / mass
    assert monopoly_price(d) == pytest.approx(grid[np.argmax(rev)], abs=1e-5)


def test_revenue_curve():
    assert revenue_curve(Uniform(), 0.5) == pytest.approx(0.25)
    assert revenue_curve(Uniform(), 0.0) == 0.0
    assert revenue_curve(Uniform(), 0.75) == pytest.approx(0.1875)
    assert revenue_curve(Uniform(), 1.5) == 0.0


def test_quasi_regularity():
    assert check_quasi_regular(Uniform()).ok
    assert check_quasi_regular(Exponential(4.0, 50.0)).ok
    bad = check_quasi_regular(two_bumps())
    assert not bad.ok and bad.violations
    with pytest.raises(NotUnimodal):
        monopoly_price(two_bumps())


@pytest.mark.parametrize("d", LAWS, ids=lambda d: type(d).__name__)
def test_pdf_integrates_to_one(d):
    total = sum(integrate.quad(lambda x: float(d.pdf(x)), a, b, limit=200)[0]
                for a, b in zip([d.lo, *d.breakpoints], [*d.breakpoints, d.hi]) if b > a)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", LAWS, ids=lambda d: type(d).__name__)
def test_cdf_endpoints_and_quantile_inverse(d):
    assert float(d.cdf(d.lo)) == pytest.approx(0.0, abs=1e-12)
    assert float(d.cdf(d.hi)) == pytest.approx(1.0, abs=1e-12)
    x = np.linspace(d.lo, d.hi, 203)[1:-1]
    # u = F(x) carries ~1e-16 absolute error, so x is only resolvable to
    # 1e-16 / f(x); the far tail of a truncated law is excluded
    x = x[d.pdf(x) >= 1e-4]
    assert np.max(np.abs(d.quantile(d.cdf(x)) - x)) < 1e-9
    assert np.all(np.diff(d.cdf(np.linspace(d.lo, d.hi, 1000))) >= 0)


@pytest.mark.parametrize("d", LAWS[:5], ids=lambda d: type(d).__name__)
def test_psi_below_value_and_zero_at_monopoly(d):
    x = np.linspace(d.lo, d.hi, 1000)[1:-1]
    assert np.all(d.psi(x) < x)
    if is_regular(d):
        assert float(d.psi(monopoly_price(d))) == pytest.approx(0.0, abs=1e-8)
        g = np.linspace(d.lo, d.hi, 10**4)
        assert float(d.revenue(monopoly_price(d))) >= float(np.max(d.revenue(g))) - 1e-9


@pytest.mark.parametrize("d", LAWS[:5], ids=lambda d: type(d).__name__)
def test_revenue_derivative_matches_finite_difference(d):
    rng = np.random.default_rng(3)
    h = 1e-6 * (d.hi - d.lo)
    for r in rng.uniform(d.lo + 0.01 * (d.hi - d.lo), d.hi - 0.01 * (d.hi - d.lo), 100):
        fd = (float(d.revenue(r + h)) - float(d.revenue(r - h))) / (2 * h)
        exact = float(d.sf(r)) - r * float(d.pdf(r))
        assert abs(fd - exact) <= 1e-5 * max(abs(exact), 1e-3)


def test_hazard_identity():
    F, G = Uniform(), TruncatedLogNormal(0.0, 0.5, 0.1, 4.0)
    for x in np.linspace(0.15, 0.95, 17):
        lhs = 1 / hazard(G, x) - 1 / hazard(F, x)
        rhs = virtual_value(F, x) - virtual_value(G, x)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_transforms_bundle():
    t = transforms(Uniform())
    assert t.monopoly_price == pytest.approx(0.5)
    assert t.psi(0.8) == pytest.approx(0.6)
    assert t.revenue_curve(0.5) == pytest.approx(0.25)


def test_max_of_cdf_and_sampling():
    d = MaxOf(Uniform(), 3)
    assert float(d.cdf(0.5)) == pytest.approx(0.125)
    x = d.sample(np.random.default_rng(0), 20000)
    assert np.mean(x) == pytest.approx(0.75, abs=0.01)


def test_spec_round_trip_and_rejection():
    for d in LAWS + [MaxOf(Uniform(), 2)]:
        assert dist_from_spec(d.to_spec()) == d
    with pytest.raises(ConfigInvalid):
        dist_from_spec({"family": "uniform", "params": {"lo": 0}})
    with pytest.raises(ConfigInvalid):
        dist_from_spec({"family": "pareto", "params": {}})
    with pytest.raises(ConfigInvalid):
        dist_from_spec({"family": "uniform", "params": {}, "extra": 1})


def test_sampling_matches_cdf():
    d = TruncatedLogNormal(0.0, 0.5, 0.1, 4.0)
    x = d.sample(np.random.default_rng(7), 10**5)
    ks = stats.kstest(x, lambda t: d.cdf(t)).statistic
    assert ks < 2 / np.sqrt(10**5)
