import statistics
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_cvar
from vppcvar.benchmarks import train_qua_e
from vppcvar.cost_surface import build_surface, eval_cost
from vppcvar.cvar_trainer import (
    LinearModel,
    TrainConfig,
    assemble_training_lp,
    cvar_of_costs,
    load_model,
    ru_objective,
    save_model,
    train,
    trained_metadata,
)
from vppcvar.data_io import Dataset
from vppcvar.errors import ConfigError, EmptyInput, InfeasibleSample, NonConvergence, SolverError
from vppcvar.merit_dispatch import ResourceFleet


def make_dataset(X, y):
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    return Dataset(np.arange(1, len(y) + 1), np.ones(len(y)), X, y, tuple(f"s{i}" for i in range(X.shape[1])))


def costs_of(result, ds, surface):
    return eval_cost(surface, result.model.predict(ds.X), ds.y)


# --- cvar_of_costs -------------------------------------------------------------


def test_cvar_quartet():
    assert cvar_of_costs([1, 2, 3, 4], 0.5) == (3.5, 3)


def test_cvar_beta_zero_is_mean():
    rng = np.random.default_rng(0)
    for _ in range(100):
        c = rng.uniform(-1e3, 1e4, rng.integers(1, 300))
        assert cvar_of_costs(c, 0.0)[0] == statistics.fmean(c)


@given(c=st.floats(-1e6, 1e6), n=st.integers(1, 30), beta=st.floats(0, 0.99))
def test_cvar_constant(c, n, beta):
    cvar, var = cvar_of_costs([c] * n, beta)
    assert var == c
    assert cvar == pytest.approx(c, rel=1e-12, abs=1e-9)


@settings(max_examples=200)
@given(
    cents=st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=40),
    percent=st.integers(0, 99),
)
def test_cvar_matches_brute_force(cents, percent):
    # decimal-grid inputs keep ties between order statistics genuine
    costs, beta = [c / 100 for c in cents], percent / 100
    cvar, var = cvar_of_costs(costs, beta)
    ref, ref_var = brute_force_cvar(costs, beta)
    assert cvar == pytest.approx(ref, rel=1e-9, abs=1e-7)
    assert ru_objective(costs, var, beta) == pytest.approx(ref, rel=1e-9, abs=1e-7)
    assert var == ref_var


def test_cvar_errors():
    with pytest.raises(EmptyInput):
        cvar_of_costs([], 0.5)
    with pytest.raises(ConfigError):
        cvar_of_costs([1.0], 1.0)


# --- LP assembly ----------------------------------------------------------------


def test_lp_dimensions(surface, small_data):
    ds = small_data.select_days(small_data.days[:1])
    N, S = len(ds), len(surface.segments)
    lp = assemble_training_lp(ds, surface, 0.5)
    assert lp.n_ineq == N * (S + 2) + 2 * N
    assert lp.n_vars == 2 * N + (ds.n_features + 1) + 1
    assert lp.n_eq == 0


def test_infeasible_sample_reported(surface):
    ds = Dataset([1, 1], [1, 2], [[0.0], [1.0]], [100.0, 350.0], ("s",))
    with pytest.raises(InfeasibleSample, match=r"day=1, slot=2"):
        assemble_training_lp(ds, surface, 0.5)


# --- training -------------------------------------------------------------------


def test_single_sample_beta_zero(surface):
    ds = make_dataset(np.zeros((1, 0)), [130.0])
    res = train(ds, surface, TrainConfig(beta=0.0))
    lo, hi = surface.box(130.0)
    grid = np.linspace(lo, hi, 200_001)
    best = eval_cost(surface, grid, np.full_like(grid, 130.0)).min()
    assert res.objective <= best + 1e-9
    assert res.objective >= best - surface.max_slope * (grid[1] - grid[0])


def test_intercept_only_model(surface, small_data):
    ds = make_dataset(np.zeros((len(small_data), 0)), small_data.y)
    res = train(ds, surface, TrainConfig(beta=0.5))
    assert res.model.weights.size == 0
    assert np.ptp(res.model.predict(ds.X)) == 0


def test_two_sample_toy_matches_grid_search():
    # one resource per class: cost_i(b) = 20 y_i + 30 (y_i - b)^+ + 10 (b - y_i)^+.
    # At beta = 0.25 with two samples the objective is min/3 + 2 max/3, which is
    # minimized at b = 70 (costs 1100 and 1400) with the unique alpha = 1100.
    fleet = ResourceFleet.from_unsorted([20], [100], [50], [50], [10], [50])
    surface = build_surface(fleet)
    ds = make_dataset(np.zeros((2, 0)), [40.0, 70.0])
    beta = 0.25
    res = train(ds, surface, TrainConfig(beta=beta))
    assert res.model.intercept == pytest.approx(70, abs=1e-4)
    assert res.alpha_star == pytest.approx(1100, abs=1e-4)
    assert res.objective == pytest.approx(1300, abs=1e-4)
    # exhaustive grid over (theta, alpha)
    bs = np.arange(2000, 9001) / 100
    alphas = np.arange(2000, 3401) / 2
    c = 20 * ds.y[None, :] + 30 * np.maximum(ds.y[None, :] - bs[:, None], 0) + 10 * np.maximum(bs[:, None] - ds.y[None, :], 0)
    vals = alphas[None, :] + np.maximum(c[:, None, :] - alphas[None, :, None], 0).sum(axis=2) / ((1 - beta) * 2)
    i, j = np.unravel_index(vals.argmin(), vals.shape)
    assert bs[i] == pytest.approx(res.model.intercept, abs=1e-4)
    assert alphas[j] == pytest.approx(res.alpha_star, abs=1e-4)
    assert vals[i, j] == pytest.approx(res.objective, abs=1e-4)


def test_perfect_information_symmetric_fleet(symmetric_fleet):
    surface = build_surface(symmetric_fleet)
    y = np.linspace(40, 160, 30)
    ds = make_dataset(y[:, None], y)
    for beta in (0.0, 0.5):
        res = train(ds, surface, TrainConfig(beta=beta))
        np.testing.assert_allclose(res.model.predict(ds.X), y, atol=1e-6)
        assert res.objective == pytest.approx(cvar_of_costs(20 * y, beta)[0], rel=1e-9)


@pytest.mark.parametrize("beta", [0.0, 0.3, 0.7])
def test_objective_reevaluates(surface, small_data, beta):
    res = train(small_data, surface, TrainConfig(beta=beta))
    costs = costs_of(res, small_data, surface)
    assert cvar_of_costs(costs, beta)[0] == pytest.approx(res.objective, rel=1e-6)
    assert ru_objective(costs, res.alpha_star, beta) == pytest.approx(res.objective, rel=1e-6)
    if beta == 0.0:
        assert res.objective == pytest.approx(np.mean(costs), rel=1e-8)


def test_monotone_in_beta(surface, small_data):
    objs = [train(small_data, surface, TrainConfig(beta=b)).objective for b in (0.0, 0.2, 0.5, 0.8)]
    assert all(a <= b + 1e-9 * abs(b) for a, b in zip(objs, objs[1:]))


def test_dominates_least_squares(surface, small_data):
    q = train_qua_e(small_data)
    for beta in (0.3, 0.6):
        res = train(small_data, surface, TrainConfig(beta=beta))
        costs = eval_cost(surface, q.predict(small_data.X), small_data.y)
        assert cvar_of_costs(costs, beta)[0] >= res.objective - 1e-9


@pytest.mark.parametrize("beta", [0.0, 0.5, 0.7])
def test_subgradient_agrees_with_lp(surface, small_data, beta):
    ds = small_data.select_days(small_data.days[:8])
    exact = train(ds, surface, TrainConfig(beta=beta))
    sub = train(ds, surface, TrainConfig(beta=beta, backend="subgradient"))
    assert abs(sub.objective - exact.objective) <= 1e-3 * abs(exact.objective)
    assert sub.diagnostics["box_violations"] == 0
    costs = costs_of(sub, ds, surface)
    assert cvar_of_costs(costs, beta)[0] == pytest.approx(sub.objective, rel=1e-6)


def test_subgradient_warns_when_short(surface, small_data):
    with pytest.warns(NonConvergence):
        res = train(small_data, surface, TrainConfig(beta=0.5, backend="subgradient", iterations=2))
    assert res.diagnostics["gap_estimate"] > 1e-3


def test_jointly_infeasible_box(symmetric_fleet):
    surface = build_surface(symmetric_fleet)
    ds = make_dataset(np.zeros((2, 0)), [10.0, 290.0])
    with pytest.raises(SolverError):
        train(ds, surface, TrainConfig())


@pytest.mark.parametrize(
    "kwargs", [dict(beta=1.0), dict(beta=-0.1), dict(iterations=0), dict(backend="gpu"), dict(box_mode="penalty")]
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs)


def test_backend_aliases():
    assert TrainConfig(backend="subgrad").backend == "subgradient"
    assert TrainConfig(backend="ExactLp").backend == "exact"


def test_model_file_round_trip(tmp_path, surface, small_data):
    res = train(small_data, surface, TrainConfig(beta=0.5))
    path = tmp_path / "m.csv"
    save_model(res.model, path, trained_metadata(res, seed=9))
    model, meta = load_model(path)
    assert model.feature_names == res.model.feature_names
    np.testing.assert_array_equal(model.weights, res.model.weights)
    assert model.intercept == res.model.intercept
    assert meta == {"beta": 0.5, "alpha_star": res.alpha_star, "objective": res.objective, "backend": "exact", "seed": 9}


def test_linear_model_checks():
    with pytest.raises(ValueError):
        LinearModel(np.array([np.inf]), 0.0)
    m = LinearModel(np.array([1.0, 2.0]), 0.5)
    assert m.feature_names == ("f1", "f2")
    with pytest.raises(ValueError):
        m.predict(np.ones((3, 3)))
