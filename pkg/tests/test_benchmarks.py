import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_cvar, grid_cvar_forecast
from vppcvar.benchmarks import (
    NeighborIndex,
    assemble_sto_opt_lp,
    knn_scenarios,
    sto_opt_decide,
    train_qua_e,
    train_val_n,
)
from vppcvar.cost_surface import build_surface, eval_cost
from vppcvar.cvar_trainer import TrainConfig, train
from vppcvar.data_io import Dataset
from vppcvar.errors import KTooLarge, SingularDesign


def make_dataset(X, y):
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    return Dataset(np.arange(1, len(y) + 1), np.ones(len(y)), X, y, tuple(f"s{i}" for i in range(X.shape[1])))


# --- Qua-E ----------------------------------------------------------------------


def test_exact_linear_fit():
    s = np.linspace(1, 10, 20)
    m = train_qua_e(make_dataset(s[:, None], 2 * s))
    assert m.weights[0] == pytest.approx(2, abs=1e-10)
    assert m.intercept == pytest.approx(0, abs=1e-9)


def test_constant_target():
    rng = np.random.default_rng(1)
    y = np.full(30, 42.0)
    m = train_qua_e(make_dataset(rng.normal(size=(30, 2)), y))
    np.testing.assert_allclose(m.weights, 0, atol=1e-10)
    assert m.intercept == pytest.approx(42)


def test_matches_dense_normal_equations():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 3))
    y = X @ [1.0, -2.0, 0.5] + 3 + rng.normal(size=50)
    m = train_qua_e(make_dataset(X, y))
    Xd = np.column_stack([X, np.ones(50)])
    ref = np.linalg.solve(Xd.T @ Xd, Xd.T @ y)
    np.testing.assert_allclose(np.append(m.weights, m.intercept), ref, atol=1e-8)
    np.testing.assert_allclose(Xd.T @ (Xd @ ref - y), 0, atol=1e-8)


def test_singular_design():
    s = np.linspace(0, 1, 10)
    ds = make_dataset(np.column_stack([s, 2 * s]), s)
    with pytest.raises(SingularDesign):
        train_qua_e(ds, ridge=False)
    m = train_qua_e(ds)
    np.testing.assert_allclose(m.predict(ds.X), s, atol=1e-6)
    with pytest.raises(SingularDesign):
        train_qua_e(make_dataset(np.ones((2, 3)), [1.0, 2.0]))


# --- Val-N -------------------------------------------------------------------------


def test_val_n_is_beta_zero_training(surface, small_data):
    v = train_val_n(small_data, surface, TrainConfig(beta=0.8))
    ref = train(small_data, surface, TrainConfig(beta=0.0))
    assert v.beta == 0.0
    assert v.model.weights.tobytes() == ref.model.weights.tobytes()
    assert v.model.intercept == ref.model.intercept and v.objective == ref.objective
    costs = eval_cost(surface, v.model.predict(small_data.X), small_data.y)
    assert v.objective == pytest.approx(costs.mean(), rel=1e-8)


def test_val_n_perfect_information(symmetric_fleet):
    y = np.linspace(50, 150, 25)
    v = train_val_n(make_dataset(y[:, None], y), build_surface(symmetric_fleet))
    np.testing.assert_allclose(v.model.predict(y[:, None]), y, atol=1e-6)


# --- kNN ---------------------------------------------------------------------------


def test_knn_exact_match_and_full_set(small_data):
    s = knn_scenarios(small_data, small_data.X[17], 1)
    assert s.indices.tolist() == [17] and s.scenarios[0] == small_data.y[17]
    full = knn_scenarios(small_data, small_data.X[0], len(small_data))
    assert sorted(full.scenarios) == sorted(small_data.y)


def test_knn_toy_points():
    # standardized coordinates keep the geometry since both axes share one scale
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [5, 5], [-1, 0]], dtype=float)
    pts = np.column_stack([pts[:, 0], pts[:, 1] * pts[:, 0].std() / pts[:, 1].std()])
    ds = make_dataset(pts, np.arange(6.0))
    got = knn_scenarios(ds, [0.1, 0.1], 3)
    assert sorted(got.indices.tolist()) == [0, 1, 2]


def test_knn_ties_prefer_lower_index():
    ds = make_dataset(np.array([[1.0], [0.0], [1.0], [2.0]]), np.array([10.0, 20.0, 30.0, 40.0]))
    got = knn_scenarios(ds, [1.0], 1)
    assert got.indices.tolist() == [0]
    got = knn_scenarios(ds, [1.0], 2)
    assert got.indices.tolist() == [0, 2]


def test_knn_k_too_large(small_data):
    with pytest.raises(KTooLarge):
        knn_scenarios(small_data, small_data.X[0], len(small_data) + 1)
    with pytest.raises(KTooLarge):
        knn_scenarios(small_data, small_data.X[0], 0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_knn_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(40, 3)), rng.normal(size=40)
    perm = rng.permutation(40)
    a = knn_scenarios(make_dataset(X, y), X[0] + 0.1, 7)
    b = knn_scenarios(make_dataset(X[perm], y[perm]), X[0] + 0.1, 7)
    assert sorted(a.scenarios) == sorted(b.scenarios)


def test_query_many_matches_query(small_data):
    idx = NeighborIndex(small_data)
    many = idx.query_many(small_data.X[:5], 10)
    for q, s in zip(small_data.X[:5], many):
        assert s.indices.tolist() == idx.query(q, 10).indices.tolist()


# --- Sto-OPT ------------------------------------------------------------------------


def test_single_scenario_symmetric(symmetric_fleet):
    y_hat, _ = sto_opt_decide(build_surface(symmetric_fleet), [123.0], 0.0)
    assert y_hat == pytest.approx(123.0, abs=1e-7)


def test_asymmetric_prices_push_forecast_up(surface):
    y_hat, _ = sto_opt_decide(surface, [100.0, 140.0], 0.0)
    assert y_hat > 120.0
    val, g = grid_cvar_forecast(surface, [100.0, 140.0], 0.0)
    assert y_hat == pytest.approx(g, abs=0.1)


def test_high_beta_follows_worst_case(surface):
    scen = [100.0, 200.0]
    y_hat, alpha = sto_opt_decide(surface, scen, 0.99)
    val, g = grid_cvar_forecast(surface, scen, 0.99)
    costs = eval_cost(surface, np.full(2, y_hat), np.array(scen))
    assert brute_force_cvar(costs, 0.99)[0] == pytest.approx(costs.max())
    assert costs.max() <= val + 1e-9
    assert alpha == pytest.approx(costs.max(), rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), beta=st.sampled_from([0.0, 0.3, 0.5, 0.9]))
def test_lp_not_beaten_by_grid(surface, seed, beta):
    rng = np.random.default_rng(seed)
    scen = rng.uniform(70, 150, int(rng.integers(1, 12)))
    y_hat, _ = sto_opt_decide(surface, scen, beta)
    lp_val = brute_force_cvar(eval_cost(surface, np.full_like(scen, y_hat), scen), beta)[0]
    grid_val, _ = grid_cvar_forecast(surface, scen, beta, step=0.1)
    assert lp_val <= grid_val + 1e-9 * abs(grid_val)
    assert lp_val >= grid_val - surface.max_slope * 0.1


def test_sto_opt_lp_shape(surface):
    lp = assemble_sto_opt_lp(surface, np.array([90.0, 110.0, 130.0]), 0.5)
    assert lp.n_vars == 2 + 2 * 3
    assert lp.n_ineq == 3 * len(surface.segments) + 2 * 3
    assert lp.lower[0] == 30.0 and lp.upper[0] == 170.0  # intersection of the three boxes
