"""Comparison methods: least-squares (Qua-E), risk-neutral value-oriented
(Val-N) and the scenario-based CVaR dispatch (Sto-OPT)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import lp_core
from .cost_surface import CostSurface
from .cvar_trainer import LinearModel, TrainConfig, TrainedModel, train
from .data_io import Dataset
from .errors import ConfigError, EmptyInput, KTooLarge, SingularDesign, SolverError


def train_qua_e(dataset: Dataset, ridge: bool = True) -> LinearModel:
    """Ordinary least squares through the normal equations.

    A rank-deficient design falls back to a tiny ridge
    ``1e-8 * trace(X'X) / p`` unless ``ridge`` is False.
    """
    N, k = len(dataset), dataset.n_features
    if N < k + 1:
        raise SingularDesign(f"{N} samples cannot determine {k + 1} parameters")
    Xd = np.column_stack([dataset.X, np.ones(N)])
    gram = Xd.T @ Xd
    rhs = Xd.T @ dataset.y
    p = k + 1
    if np.linalg.matrix_rank(gram) < p:
        if not ridge:
            raise SingularDesign("design matrix is rank deficient")
        lam = 1e-8 * np.trace(gram) / p
        gram = gram + lam * np.eye(p)
    theta = np.linalg.solve(gram, rhs)
    return LinearModel(theta[:-1], float(theta[-1]), dataset.feature_names)


def train_val_n(dataset: Dataset, surface: CostSurface, config: TrainConfig | None = None) -> TrainedModel:
    """Expected-cost minimization: the CVaR trainer at ``beta = 0``."""
    config = replace(config or TrainConfig(), beta=0.0)
    return train(dataset, surface, config)


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    scenarios: np.ndarray
    indices: np.ndarray
    k: int

    def __post_init__(self):
        if self.k < 1 or len(self.scenarios) != self.k or len(self.indices) != self.k:
            raise ValueError("scenario set needs k >= 1 matching scenarios and indices")


class NeighborIndex:
    """z-scored Euclidean nearest neighbours over a training set."""

    def __init__(self, train_dataset: Dataset):
        if len(train_dataset) == 0:
            raise EmptyInput("training set is empty")
        X = train_dataset.X
        self.mean = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale = np.where(scale > 0, scale, 1.0)
        self.Z = (X - self.mean) / self.scale
        self.y = train_dataset.y

    def query(self, context, k: int) -> ScenarioSet:
        return self.query_many(np.atleast_2d(np.asarray(context, dtype=float)), k)[0]

    def query_many(self, contexts, k: int) -> list[ScenarioSet]:
        N = self.Z.shape[0]
        if not 1 <= k <= N:
            raise KTooLarge(f"k={k} but the training set has {N} samples")
        Q = (np.asarray(contexts, dtype=float) - self.mean) / self.scale
        out = []
        for q in Q:
            d2 = ((self.Z - q) ** 2).sum(axis=1)
            idx = np.argsort(d2, kind="stable")[:k]  # ties resolved by lower index
            out.append(ScenarioSet(self.y[idx].copy(), idx, k))
        return out


def knn_scenarios(train_dataset: Dataset, context, k: int) -> ScenarioSet:
    return NeighborIndex(train_dataset).query(context, k)


def assemble_sto_opt_lp(surface: CostSurface, scenarios, beta: float) -> lp_core.LpProblem:
    """LP over ``[y_hat, alpha, nu_1..M, chi_1..M]``; the forecast must be
    dispatchable for every scenario."""
    y = np.asarray(getattr(scenarios, "scenarios", scenarios), dtype=float).reshape(-1)
    M = y.size
    if M == 0:
        raise EmptyInput("no scenarios")
    if not 0 <= beta < 1:
        raise ConfigError(f"beta must lie in [0, 1), got {beta}")
    lo_m, hi_m = surface.box(y)
    lo, hi = float(lo_m.max()), float(hi_m.min())
    if lo > hi + surface.box_tol():
        raise SolverError("no forecast is dispatchable for every scenario")
    S = len(surface.segments)
    a, by, c0 = surface.coefs[:, 0], surface.coefs[:, 1], surface.coefs[:, 2]
    n = 2 + 2 * M
    m_idx = np.arange(M)
    seg_rows = np.arange(M * S)
    # a_s * y_hat - nu_m <= -(by_s y_m + c_s)
    rows = [seg_rows, seg_rows]
    cols = [np.zeros(M * S, dtype=int), np.repeat(2 + m_idx, S)]
    vals = [np.tile(a, M), -np.ones(M * S)]
    h = [-(by[None, :] * y[:, None] + c0[None, :]).reshape(-1)]
    base = M * S
    # nu_m - alpha - chi_m <= 0 ; -chi_m <= 0
    rows += [base + m_idx, base + m_idx, base + m_idx, base + M + m_idx]
    cols += [2 + m_idx, np.ones(M, dtype=int), 2 + M + m_idx, 2 + M + m_idx]
    vals += [np.ones(M), -np.ones(M), -np.ones(M), -np.ones(M)]
    h += [np.zeros(2 * M)]
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    keep = vals != 0
    G = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(base + 2 * M, n))
    c = np.zeros(n)
    c[1] = 1.0
    c[2 + M :] = 1.0 / (M * (1 - beta))
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[0], upper[0] = lo, max(lo, hi)
    return lp_core.LpProblem(c, G, np.concatenate(h), lower=lower, upper=upper)


def sto_opt_decide(surface: CostSurface, scenarios, beta: float, method: str = "auto") -> tuple[float, float]:
    """CVaR-optimal forecast against an equiprobable scenario set; returns ``(y_hat, alpha)``."""
    lp = assemble_sto_opt_lp(surface, scenarios, beta)
    sol = lp_core.solve(lp, method=method)
    if sol.status is not lp_core.Status.OPTIMAL:
        raise SolverError(f"Sto-OPT LP status {sol.status.value}")
    return float(sol.x[0]), float(sol.x[1])


def sto_opt_forecasts(surface: CostSurface, train_dataset: Dataset, test_dataset: Dataset, beta: float, k: int = 200) -> np.ndarray:
    """Sto-OPT decision for every test sample from its k nearest training contexts."""
    index = NeighborIndex(train_dataset)
    sets = index.query_many(test_dataset.X, k)
    return np.array([sto_opt_decide(surface, s, beta)[0] for s in sets])
