import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import da_lp, random_fleet, rt_lp
from vppcvar import lp_core
from vppcvar.errors import InfeasibleDeviation, InfeasibleTarget, InvalidFleet
from vppcvar.merit_dispatch import (
    DA,
    RT_DEFICIT,
    RT_SURPLUS,
    ResourceFleet,
    enumerate_partitions,
    load_fleet,
    overall_cost,
    overall_cost_batch,
    overall_cost_dual,
    rt_axis_order,
    save_fleet,
    solve_da,
    solve_rt,
)


# --- worked examples -------------------------------------------------------


def test_da_fill_at_150(fleet):
    res = solve_da(fleet, 150)
    np.testing.assert_allclose(res.quantities, [100, 50])
    assert res.primal_cost == 4000
    assert res.price == 30
    np.testing.assert_allclose(res.cap_duals, [5, 0])


def test_da_boundaries(fleet):
    zero = solve_da(fleet, 0)
    assert zero.primal_cost == 0 and not zero.quantities.any()
    full = solve_da(fleet, 200)
    np.testing.assert_allclose(full.quantities, fleet.da_caps)
    assert full.primal_cost == pytest.approx(25 * 100 + 30 * 100)


def test_rt_deficit_70(fleet):
    res = solve_rt(fleet, 70)
    np.testing.assert_allclose(res.quantities, [50, 20, 0, 0])
    assert res.primal_cost == 3950
    assert res.price == 60


def test_rt_surplus_minus_50(fleet):
    res = solve_rt(fleet, -50)
    np.testing.assert_allclose(res.quantities, [0, 0, 40, 10])
    assert res.primal_cost == -880
    assert res.price == 16


def test_rt_zero_deviation_uses_cheapest_deficit_price(fleet):
    res = solve_rt(fleet, 0)
    assert res.primal_cost == 0 and not res.quantities.any()
    assert res.price == 55
    assert max(fleet.down_utils) <= res.price <= min(fleet.up_costs)


@pytest.mark.parametrize("y_hat, y, expected", [(150, 220, 7950), (100, 100, 2500), (150, 100, 3120)])
def test_overall_cost_examples(fleet, y_hat, y, expected):
    assert overall_cost(fleet, y_hat, y) == pytest.approx(expected, abs=1e-9)
    assert overall_cost_dual(fleet, y_hat, y) == pytest.approx(expected, abs=1e-9)
    assert overall_cost_batch(fleet, [y_hat], [y])[0] == pytest.approx(expected, abs=1e-9)


def test_da_breakpoint_left_limit(fleet):
    # at y_hat = 100 the first generator is exactly full: it stays marginal
    assert solve_da(fleet, 100).price == 25


# --- errors and validation -------------------------------------------------


def test_infeasible_targets(fleet):
    with pytest.raises(InfeasibleTarget):
        solve_da(fleet, 200.5)
    with pytest.raises(InfeasibleTarget):
        solve_da(fleet, -1)
    with pytest.raises(InfeasibleDeviation):
        solve_rt(fleet, 101)
    with pytest.raises(InfeasibleDeviation):
        solve_rt(fleet, -81)
    with pytest.raises(InfeasibleDeviation):
        overall_cost(fleet, 0, 150)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(da_caps=[0.0, 100.0]),
        dict(up_costs=[55.0, float("nan")]),
        dict(down_utils=[70.0, 16.0]),  # surplus utility above a deficit cost
        dict(up_costs=[], up_caps=[]),
    ],
)
def test_invalid_fleets_rejected(kwargs):
    base = dict(da_costs=[25.0, 30.0], da_caps=[100.0, 100.0], up_costs=[55.0, 60.0], up_caps=[50.0, 50.0],
                down_utils=[18.0, 16.0], down_caps=[40.0, 40.0])
    base.update(kwargs)
    with pytest.raises(InvalidFleet):
        ResourceFleet.from_unsorted(**base)


def test_unsorted_input_is_canonicalized():
    f = ResourceFleet.from_unsorted([30, 25], [100, 60], [60, 55], [50, 20], [16, 18], [40, 30])
    np.testing.assert_array_equal(f.da_costs, [25, 30])
    np.testing.assert_array_equal(f.da_caps, [60, 100])
    np.testing.assert_array_equal(f.down_utils, [18, 16])
    np.testing.assert_array_equal(f.down_caps, [30, 40])
    # the first (user-order) generator is the expensive one
    res = solve_da(f, 70)
    np.testing.assert_allclose(f.in_user_order(DA, res.quantities), [10, 60])
    assert f.to_dict()["da.costs"] == [30, 25]


def test_fleet_file_round_trip(tmp_path, fleet):
    path = tmp_path / "fleet.toml"
    save_fleet(fleet, path)
    again = load_fleet(path)
    assert again.digest() == fleet.digest()
    np.testing.assert_array_equal(again.up_caps, fleet.up_caps)


# --- partitions ------------------------------------------------------------


def test_reference_fleet_partitions(fleet):
    da, rt = enumerate_partitions(fleet)
    assert [p.price for p in da] == [25, 30]
    assert [(p.lo, p.hi) for p in da] == [(0, 100), (100, 200)]
    assert [p.label for p in rt] == ["deficit-1", "deficit-2", "surplus-1", "surplus-2"]
    assert [(p.lo, p.hi) for p in rt_axis_order(rt)] == [(-80, -40), (-40, 0), (0, 50), (50, 100)]
    assert [p.price for p in rt_axis_order(rt)] == [16, 18, 55, 60]


def test_minimal_fleet_partitions():
    f = ResourceFleet.from_unsorted([20], [10], [50], [5], [5], [5])
    da, rt = enumerate_partitions(f)
    assert len(da) == 1 and len(rt) == 2
    assert {p.stage for p in rt} == {RT_DEFICIT, RT_SURPLUS}


def test_partitions_tile_and_match_stage_duals(rng):
    for _ in range(50):
        f = random_fleet(rng)
        da, rt = enumerate_partitions(f)
        assert len(da) == f.da_costs.size and len(rt) == f.up_costs.size + f.down_utils.size
        axis = rt_axis_order(rt)
        for parts, lo, hi in ((da, 0.0, f.da_total), (axis, -f.down_total, f.up_total)):
            assert parts[0].lo == pytest.approx(lo) and parts[-1].hi == pytest.approx(hi)
            for a, b in zip(parts, parts[1:]):
                assert a.hi == pytest.approx(b.lo, abs=1e-9)
                assert a.price <= b.price
        for p in da:
            x = rng.uniform(p.lo, p.hi)
            res = solve_da(f, x)
            assert res.price == p.price
            np.testing.assert_array_equal(res.cap_duals, p.cap_duals)
        for p in rt:
            x = rng.uniform(p.lo, p.hi)
            res = solve_rt(f, x)
            assert res.price == p.price
            np.testing.assert_array_equal(res.cap_duals, p.cap_duals)


# --- properties ------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0, 1))
def test_da_matches_lp_oracle(seed, frac):
    f = random_fleet(np.random.default_rng(seed))
    y_hat = frac * f.da_total
    res = solve_da(f, y_hat)
    sol = lp_core.enumerate_vertices(da_lp(f, y_hat))
    assert res.primal_cost == pytest.approx(sol.objective, abs=1e-8)
    np.testing.assert_allclose(res.quantities, sol.x, atol=1e-8)
    # strong duality of the analytic certificate
    assert abs(res.primal_cost - res.dual_objective) <= 1e-9 * max(1.0, abs(res.primal_cost))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(-1, 1))
def test_rt_matches_lp_oracle(seed, frac):
    f = random_fleet(np.random.default_rng(seed))
    dev = frac * (f.up_total if frac > 0 else f.down_total)
    res = solve_rt(f, dev)
    sol = lp_core.enumerate_vertices(rt_lp(f, dev))
    assert res.primal_cost == pytest.approx(sol.objective, abs=1e-8)
    assert abs(res.primal_cost - res.dual_objective) <= 1e-9 * max(1.0, abs(res.primal_cost))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0, 1))
def test_complementary_slackness(seed, frac):
    f = random_fleet(np.random.default_rng(seed))
    for res in (solve_da(f, frac * f.da_total), solve_rt(f, -f.down_total + frac * (f.down_total + f.up_total))):
        assert np.all(res.quantities >= -1e-9) and np.all(res.quantities <= res.caps + 1e-9)
        assert np.all(res.cap_duals >= 0) and np.all(res.floor_duals >= -1e-9)
        full = res.cap_duals > 1e-9
        np.testing.assert_allclose(res.quantities[full], res.caps[full], atol=1e-9)
        idle = res.floor_duals > 1e-9
        np.testing.assert_allclose(res.quantities[idle], 0, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_prices_monotone(seed):
    rng = np.random.default_rng(seed)
    f = random_fleet(rng)
    xs = np.sort(rng.uniform(0, f.da_total, 20))
    assert np.all(np.diff([solve_da(f, x).price for x in xs]) >= 0)
    ds = np.sort(rng.uniform(-f.down_total, f.up_total, 20))
    assert np.all(np.diff([solve_rt(f, d).price for d in ds]) >= 0)


def test_batch_matches_scalar(rng, fleet):
    y = rng.uniform(50, 180, 200)
    lo, hi = fleet.forecast_box(y)
    y_hat = rng.uniform(lo, hi)
    expected = [overall_cost(fleet, a, b) for a, b in zip(y_hat, y)]
    np.testing.assert_allclose(overall_cost_batch(fleet, y_hat, y), expected, atol=1e-9)
