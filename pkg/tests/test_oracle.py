import json
import math

import numpy as np
import pytest

from auctionlab.dist import Uniform
from auctionlab.errors import ConfigInvalid
from auctionlab.game import TwoStageProcess, utility_two_stage
from auctionlab.oracle import (ErmOfBids, FixedPrice, MonopolyOfBids, MonopolyOfValues, SimConfig,
                               agree, simulate, simulate_two_stage)
from auctionlab.strategy import DoubleThreshold, EpsThreshold, Truthful

U = Uniform()
N = 10**6


def lazy(strategies, rule=FixedPrice(0.0), n=N, seed=0, h=None):
    return SimConfig(n, seed, "lazy", strategies, phase1_reserve=h, phase2_reserve_rule=rule)


def test_truthful_no_reserve():
    res = simulate(lazy([Truthful(U), Truthful(U)]))
    for i in range(2):
        assert agree(1 / 6, res.utility[i], res.utility_se[i])


def test_truthful_reserve_half():
    res = simulate(lazy([Truthful(U), Truthful(U)], FixedPrice(0.5)))
    assert agree(1 / 12, res.utility[0], res.utility_se[0])
    res = simulate(lazy([Truthful(U), Truthful(U)], MonopolyOfValues()))
    assert agree(1 / 12, res.utility[0], res.utility_se[0])
    assert res.reserves == pytest.approx((0.5, 0.5), abs=1e-9)


def test_myerson_threshold():
    c = SimConfig(N, 0, "myerson", [EpsThreshold(U, 0.5, 0.0), Truthful(U)])
    res = simulate(c)
    assert agree(7 / 48, res.utility[0], res.utility_se[0])


def test_two_stage_matches_game():
    s = DoubleThreshold(U, 0.0, 0.75)
    out = simulate_two_stage(lazy([s, Truthful(U)], MonopolyOfBids()), 0.5)
    b = utility_two_stage(0.0, 0.75, TwoStageProcess(U, None, U, 0.5))
    assert agree(b.u_exact, out.combined[0], out.combined_se[0])
    # the phase-2 reserve of a thresholding bidder is the lowest bid, R = 0.1875
    assert out.phase2.reserves[0] == pytest.approx(0.1875, abs=1e-9)


def test_two_stage_extremes():
    c = lazy([DoubleThreshold(U, 0.0, 0.75), Truthful(U)], MonopolyOfBids(), n=10**4)
    one = simulate_two_stage(c, 1.0)
    zero = simulate_two_stage(c, 0.0)
    assert one.combined == one.phase1.utility
    assert zero.combined == zero.phase2.utility


def test_two_stage_with_erm_reserve():
    c = lazy([Truthful(U), Truthful(U)], ErmOfBids(), n=10**5, seed=3)
    out = simulate_two_stage(c, 0.5)
    for r in out.phase2.reserves:
        assert r == pytest.approx(0.5, abs=0.02)
    assert agree(0.5 / 6 + 0.5 / 12, out.combined[0], out.combined_se[0], k=6)


def test_determinism():
    c = lazy([DoubleThreshold(U, 0.0, 0.75), Truthful(U)], MonopolyOfBids(), n=50_000, seed=42)
    assert simulate(c) == simulate(c)


def test_seed_independence():
    a = simulate(lazy([Truthful(U), Truthful(U)], seed=1))
    b = simulate(lazy([Truthful(U), Truthful(U)], seed=2))
    assert a.utility != b.utility
    se = math.hypot(a.utility_se[0], b.utility_se[0])
    assert abs(a.utility[0] - b.utility[0]) <= 6 * se


@pytest.mark.parametrize("mechanism", ["lazy", "eager", "myerson"])
def test_accounting_and_win_rates(mechanism):
    c = SimConfig(10**5, 5, mechanism, [DoubleThreshold(U, 0.0, 0.6), Truthful(U), Truthful(U)],
                  phase1_reserve=U, phase2_reserve_rule=MonopolyOfValues())
    res = simulate(c)
    for i in range(3):
        assert res.utility[i] + res.payment[i] == pytest.approx(res.gross[i], abs=1e-12)
    assert sum(res.win_rate) <= 1.0 + 1e-12
    assert all(p >= 0 for p in res.payment)


def test_random_phase1_reserve():
    # H uniform: m = max(Y, r) has cdf m^2, so utility = E[int_0^X (X - m) 2m dm] = E[X^3 / 3]
    res = simulate(lazy([Truthful(U), Truthful(U)], h=U))
    assert agree(1 / 12, res.utility[0], res.utility_se[0])


def test_invalid_configs():
    with pytest.raises(ConfigInvalid):
        SimConfig(0, 0, "lazy", [Truthful(U)])
    with pytest.raises(ConfigInvalid):
        SimConfig(10, 0, "lazy", [])
    with pytest.raises(ConfigInvalid):
        SimConfig(10, 0, "vickrey", [Truthful(U)])


def test_result_to_json():
    res = simulate(lazy([Truthful(U), Truthful(U)], n=1000))
    doc = json.loads(json.dumps(res.to_json()))
    assert doc["n_auctions"] == 1000
    assert np.allclose(doc["utility"], res.utility)
