import numpy as np
import pytest
from scipy import stats

from auctionlab.dist import TruncatedLogNormal, Uniform, check_quasi_regular
from auctionlab.errors import ConfigInvalid, NonMonotone
from auctionlab.strategy import (DoubleThreshold, EpsThreshold, Truthful, bid, bid_virtual_value,
                                 perceived_virtual_value, pushforward, strategy_from_spec, x0_bar)

U = Uniform()


def test_bid_examples():
    assert bid(DoubleThreshold(U, 0.0, 0.75), 0.0) == pytest.approx(0.1875)
    assert bid(Truthful(U), 0.42) == pytest.approx(0.42)
    assert bid(EpsThreshold(U, 0.5, 0.01), 0.25) == pytest.approx(0.49 * 0.5 / 0.75 + 0.01)
    assert bid(EpsThreshold(U, 0.5, 0.01), 0.25) == pytest.approx(0.33667, abs=1e-5)


def test_bid_virtual_value_examples():
    assert bid_virtual_value(DoubleThreshold(U, 0.0, 0.75), 0.3) == pytest.approx(0.0, abs=1e-12)
    assert bid_virtual_value(EpsThreshold(U, 0.5, 0.02), 0.1) == pytest.approx(0.02, abs=1e-12)
    assert bid_virtual_value(Truthful(U), 0.8) == pytest.approx(0.6)


def test_bid_virtual_value_matches_definition():
    # h = beta - beta' (1 - F) / f, checked by finite differences of the bid map
    s = EpsThreshold(TruncatedLogNormal(0.0, 0.5, 0.1, 4.0), 0.9, 0.05)
    F = s.base
    for x in np.linspace(0.2, 0.85, 9):
        d = (float(s.bid(x + 1e-6)) - float(s.bid(x - 1e-6))) / 2e-6
        assert float(s.h(x)) == pytest.approx(float(s.bid(x)) - d * float(F.sf(x) / F.pdf(x)), abs=1e-6)


def test_perceived_virtual_value():
    s = Truthful(U)
    assert perceived_virtual_value(s, U, 0.3) == pytest.approx(bid_virtual_value(s, 0.3))
    alt = Uniform(0.0, 1.1)
    direct = 0.5 - (1 - 0.5 / 1.1) / (1 / 1.1)
    assert perceived_virtual_value(s, alt, 0.5) == pytest.approx(direct)
    assert direct == pytest.approx(-0.1)


def test_perceived_virtual_value_robustness_bound():
    # the eps lift survives a misspecified prior: result >= eps - delta max(r - eps, 1)
    F, G = Uniform(), Uniform(0.0, 1.05)
    r, eps = 0.5, 0.05
    x = np.linspace(0.01, r - 1e-6, 200)
    delta = float(np.max(np.abs(F.psi(x) - G.psi(x))))
    s = EpsThreshold(F, r, eps)
    vals = [perceived_virtual_value(s, G, t) for t in x]
    assert min(vals) >= eps - delta * max(r - eps, 1.0) - 1e-12


def test_pushforward_truthful_is_base():
    bd = pushforward(Truthful(U))
    b = np.linspace(0, 1, 101)
    assert np.max(np.abs(bd.cdf(b) - U.cdf(b))) <= 1e-12


def test_pushforward_threshold_closed_form():
    bd = pushforward(DoubleThreshold(U, 0.0, 0.75))
    b = np.linspace(0.1875, 0.75, 50)
    assert np.allclose(bd.cdf(b), 1 - 0.1875 / b, atol=1e-12)
    grid = np.linspace(0, 1, 10001)
    rev = grid * (1 - bd.cdf(grid))
    assert float(0.1875 * (1 - bd.cdf(0.1875))) == pytest.approx(0.1875)
    assert rev.max() <= 0.1875 + 1e-12


def test_pushforward_identity_and_plateau():
    s = DoubleThreshold(U, 0.2, 0.75)
    bd = pushforward(s)
    x = np.random.default_rng(0).random(1000)
    assert np.allclose(bd.cdf(s.bid(x)), U.cdf(x), atol=1e-12)
    xs = np.linspace(0.2, 0.75, 1001)[1:]
    b = s.bid(xs)
    assert np.allclose(b * (1 - bd.cdf(b)), s.R, atol=1e-9)


def test_bid_departs_from_value_only_inside_window():
    # overbids on [x0, x0_bar], shades below value on [x0_bar, x1]
    s = DoubleThreshold(U, 0.1, 0.8)
    bar = x0_bar(U, 0.8)
    x = np.linspace(0, 1, 1001)
    over = (x >= 0.1) & (x <= bar)
    under = (x >= bar) & (x <= 0.8)
    assert np.all(s.bid(x[over]) >= x[over] - 1e-15)
    assert np.all(s.bid(x[under]) <= x[under] + 1e-15)
    outside = (x < 0.1) | (x > 0.8)
    assert np.array_equal(s.bid(x[outside]), x[outside])


def test_bid_law_stays_quasi_regular():
    for s in (DoubleThreshold(U, 0.0, 0.75), EpsThreshold(U, 0.5, 0.01), Truthful(U)):
        assert check_quasi_regular(pushforward(s)).ok


def test_pushforward_matches_sampling():
    s = DoubleThreshold(U, 0.1, 0.7)
    n = 10**5
    b = s.bid(U.sample(np.random.default_rng(11), n))
    assert stats.kstest(b, lambda t: pushforward(s).cdf(t)).statistic < 2 / np.sqrt(n)


def test_non_monotone_rejected():
    # x0 above x0_bar makes the shaded bid drop below earlier truthful bids
    bar = x0_bar(U, 0.75)
    assert bar == pytest.approx(0.25)
    with pytest.raises(NonMonotone):
        pushforward(DoubleThreshold(U, 0.4, 0.75))


def test_inverse_uses_quantile():
    s = DoubleThreshold(U, 0.0, 0.75)
    b = np.array([0.2, 0.3, 0.5, 0.75, 0.9])
    assert np.allclose(s.inverse(b)[:4], 1 - 0.1875 / b[:4])
    assert s.inverse(0.9) == pytest.approx(0.9)


def test_strategy_spec_round_trip():
    for s in (Truthful(U), DoubleThreshold(U, 0.1, 0.7), EpsThreshold(U, 0.5, 0.01)):
        assert strategy_from_spec(s.spec(), U) == s
    with pytest.raises(ConfigInvalid):
        strategy_from_spec({"kind": "double_threshold", "x0": 0, "x1": 1, "r": 2}, U)
    with pytest.raises(ConfigInvalid):
        strategy_from_spec({"kind": "shade"}, U)
