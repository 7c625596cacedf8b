import math

import pytest

import tpi


def binary_market():
    grid = tpi.TimeGrid([0.0, 1.0])
    nodes = [
        tpi.TreeNode(None, 0, 1.0, 100.0, 10.0, 0.0),
        tpi.TreeNode(0, 1, 0.5, 110.0, 10.0, 0.0),
        tpi.TreeNode(0, 1, 0.5, 90.0, 10.0, 0.0),
    ]
    tree = tpi.ScenarioTree(grid, nodes)
    return tpi.Market(tree, tpi.ImpactParams(), tpi.AssumptionCheck.relaxed)


def test_binary_call_price_and_gap():
    m = binary_market()
    rep = tpi.gap_report(m, [10.0, 0.0])
    assert abs(rep.primal_value - 5.05) < 1e-4
    assert rep.dual_value >= 5.0
    assert -1e-9 <= rep.gap <= 0.05
    assert abs(rep.strategy.buys[0] - 0.5) < 1e-3


def test_oracle_agrees():
    m = binary_market()
    v = tpi.brute_force_oracle(m, [10.0, 0.0], tpi.TradeGrid(0.0, 1.0, 0.01))
    assert abs(v - 5.05) < 5e-3


def test_call_formula():
    grid = tpi.TimeGrid([0.0, 1.0])
    spec = tpi.MarketSpec(grid, tpi.LiquiditySpec.constant(grid, 10.0, 0.0))
    assert tpi.call_price_formula(spec, 100.0, tpi.AssumptionCheck.relaxed) == pytest.approx(100.2, abs=1e-12)
    spec = tpi.MarketSpec(grid, tpi.LiquiditySpec.constant(grid, 10.0, math.log(2.0)), tpi.ImpactParams(zeta0=0.1))
    assert tpi.call_price_formula(spec, 100.0) == pytest.approx(100.3, abs=1e-12)


def test_tilt_example():
    grid = tpi.TimeGrid([0.0, 1.0])
    nodes = [tpi.TreeNode(None, 0, 1.0, 100.0, 10.0, 0.0)]
    nodes += [tpi.TreeNode(0, 1, 1.0 / 3.0, p, 10.0, 0.0) for p in (90.0, 105.0, 120.0)]
    r = tpi.tilt_to_martingale(tpi.ScenarioTree(grid, nodes), [0.0, 0.0])
    assert r.q[1] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert r.q[2] == 0.0
    assert r.q[3] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert r.max_deviation <= 1e-10


def test_round_trip_wealth():
    grid = tpi.TimeGrid([0.0, 1.0])
    liq = tpi.LiquiditySpec.constant(grid, 10.0, math.log(2.0))
    tree = tpi.ScenarioTree.chain(grid, [100.0, 100.0], liq)
    m = tpi.Market(tree)
    s = tpi.TradeSchedule([1.0, 0.0], [0.0, 1.0])
    assert tpi.terminal_cash_direct(m, s)[0] == pytest.approx(-0.15, abs=1e-12)
    assert tpi.lambda_functional(m, s).lambda_T[0] == pytest.approx(0.15, abs=1e-12)


def test_errors_are_mapped():
    m = binary_market()
    with pytest.raises(tpi.Error):
        tpi.dual_objective(m, tpi.DualCertificate(tpi.NodeMeasure.reference(m.tree), [0.0] * 3, [0.0] * 3), [-1.0, 0.0])
