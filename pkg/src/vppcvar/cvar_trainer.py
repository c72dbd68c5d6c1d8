"""CVaR-optimal linear forecast models.

The training problem is

    min over (theta, alpha)   alpha + 1/(N (1 - beta)) * sum_i [cost(y_hat_i, y_i) - alpha]^+
    with                      y_hat_i = theta' [s_i, 1]

where ``cost`` is the max-of-affine surface.  Introducing ``nu_i`` for the
surface maximum and ``chi_i`` for the hinge turns it into an LP (``ExactLp``).
A projected-free subgradient method on the same objective, with a hinge penalty
for forecasts that leave the dispatchable box, is available for large N.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import lp_core
from .cost_surface import CostSurface
from .data_io import Dataset
from .errors import ConfigError, EmptyInput, InfeasibleSample, NonConvergence, SolverError

EXACT = "exact"
SUBGRADIENT = "subgradient"
_BACKEND_ALIASES = {"exact": EXACT, "exactlp": EXACT, "lp": EXACT, "subgradient": SUBGRADIENT, "subgrad": SUBGRADIENT}


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    intercept: float
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(w)) and math.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")
        names = tuple(self.feature_names) or tuple(f"f{i + 1}" for i in range(w.size))
        if len(names) != w.size:
            raise ValueError(f"{w.size} weights but {len(names)} feature names")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "feature_names", names)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.weights.size:
            raise ValueError(f"model expects {self.weights.size} features, got {X.shape[-1]}")
        return X @ self.weights + self.intercept


@dataclass(frozen=True)
class TrainConfig:
    beta: float = 0.5
    backend: str = EXACT
    iterations: int = 5000
    step_constant: float | None = None
    penalty_weight: float | None = None
    box_mode: str = "auto"
    lp_method: str = "auto"
    gap_tol: float = 1e-3

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        backend = _BACKEND_ALIASES.get(str(self.backend).lower())
        if backend is None:
            raise ConfigError(f"unknown backend {self.backend!r}")
        object.__setattr__(self, "backend", backend)
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        allowed = {EXACT: ("auto", "constraint"), SUBGRADIENT: ("auto", "penalty")}[backend]
        if self.box_mode not in allowed:
            raise ConfigError(f"box_mode {self.box_mode!r} not available for the {backend} backend")


@dataclass(frozen=True, eq=False)
class TrainedModel:
    model: LinearModel
    alpha_star: float
    objective: float
    beta: float
    backend: str
    diagnostics: dict = field(default_factory=dict)


def cvar_of_costs(costs, beta: float) -> tuple[float, float]:
    """Exact ``min_a a + mean([c - a]^+) / (1 - beta)``; returns ``(cvar, var)``.

    ``var`` is the largest minimizing order statistic, i.e. the
    ``floor(beta * M) + 1``-th smallest cost.
    """
    c = np.asarray(costs, dtype=float).reshape(-1)
    if c.size == 0:
        raise EmptyInput("cvar_of_costs needs at least one cost")
    if not 0 <= beta < 1:
        raise ConfigError(f"beta must lie in [0, 1), got {beta}")
    M = c.size
    if beta == 0:
        return math.fsum(c) / M, float(c.min())
    k = min(int(math.floor(beta * M + 1e-9)), M - 1)
    var = float(np.partition(c, k)[k])
    tail = c[c > var] - var
    return var + math.fsum(tail) / ((1 - beta) * M), var


def ru_objective(costs, alpha: float, beta: float) -> float:
    """The Rockafellar-Uryasev expression at a given ``alpha``."""
    c = np.asarray(costs, dtype=float)
    return alpha + math.fsum(np.maximum(c - alpha, 0.0)) / ((1 - beta) * c.size)


# ---------------------------------------------------------------------------
# ExactLp


def _check_samples(dataset: Dataset, surface: CostSurface):
    lo, hi = surface.box(dataset.y)
    bad = np.flatnonzero(lo > hi + surface.box_tol())
    if bad.size:
        i = int(bad[0])
        raise InfeasibleSample(int(dataset.day[i]), int(dataset.slot[i]), float(dataset.y[i]))
    return lo, hi


def training_lp_layout(n_samples: int, n_features: int) -> dict:
    """Column slices of the training LP."""
    p = n_features + 1
    return {
        "theta": slice(0, p),
        "alpha": p,
        "nu": slice(p + 1, p + 1 + n_samples),
        "chi": slice(p + 1 + n_samples, p + 1 + 2 * n_samples),
        "n_vars": p + 1 + 2 * n_samples,
    }


def assemble_training_lp(dataset: Dataset, surface: CostSurface, beta: float) -> lp_core.LpProblem:
    """Epigraph LP over ``[weights, intercept, alpha, nu_1..N, chi_1..N]`` (all free).

    Rows, in order: ``N*S`` segment cuts ``nu_i >= segment(y_hat_i, y_i)``,
    ``N`` hinge rows ``chi_i >= nu_i - alpha``, ``N`` rows ``chi_i >= 0`` and
    ``2N`` box rows keeping every forecast dispatchable.
    """
    if not 0 <= beta < 1:
        raise ConfigError(f"beta must lie in [0, 1), got {beta}")
    N, k = len(dataset), dataset.n_features
    if N == 0:
        raise EmptyInput("training set is empty")
    lo, hi = _check_samples(dataset, surface)
    lay = training_lp_layout(N, k)
    p = k + 1
    nu0, chi0, alpha = lay["nu"].start, lay["chi"].start, lay["alpha"]
    S = len(surface.segments)
    a, by, c0 = surface.coefs[:, 0], surface.coefs[:, 1], surface.coefs[:, 2]
    Xd = np.column_stack([dataset.X, np.ones(N)])  # (N, p)
    samples = np.arange(N)

    # segment cuts: a_s * x_i' theta - nu_i <= -(by_s y_i + c_s)
    seg_rows = np.arange(N * S).reshape(N, S)
    r1 = np.repeat(seg_rows[:, :, None], p, axis=2).reshape(-1)
    c1 = np.tile(np.arange(p), N * S)
    v1 = (a[None, :, None] * Xd[:, None, :]).reshape(-1)
    r1b = seg_rows.reshape(-1)
    c1b = np.repeat(nu0 + samples, S)
    v1b = -np.ones(N * S)
    h1 = -(by[None, :] * dataset.y[:, None] + c0[None, :]).reshape(-1)

    base = N * S
    # hinge: nu_i - alpha - chi_i <= 0
    r2 = np.concatenate([base + samples] * 3)
    c2 = np.concatenate([nu0 + samples, np.full(N, alpha), chi0 + samples])
    v2 = np.concatenate([np.ones(N), -np.ones(N), -np.ones(N)])
    base += N
    # -chi_i <= 0
    r3, c3, v3 = base + samples, chi0 + samples, -np.ones(N)
    base += N
    # box: x_i' theta <= hi_i ; -x_i' theta <= -lo_i
    r4 = np.concatenate([np.repeat(base + samples, p), np.repeat(base + N + samples, p)])
    c4 = np.tile(np.arange(p), 2 * N)
    v4 = np.concatenate([Xd.reshape(-1), -Xd.reshape(-1)])
    n_rows = base + 2 * N

    rows = np.concatenate([r1, r1b, r2, r3, r4])
    cols = np.concatenate([c1, c1b, c2, c3, c4])
    vals = np.concatenate([v1, v1b, v2, v3, v4])
    keep = vals != 0
    G = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n_rows, lay["n_vars"]))
    h = np.concatenate([h1, np.zeros(2 * N), hi, -lo])

    cost = np.zeros(lay["n_vars"])
    cost[alpha] = 1.0
    cost[lay["chi"]] = 1.0 / (N * (1 - beta))
    names = (
        tuple(f"w_{n}" for n in dataset.feature_names)
        + ("intercept", "alpha")
        + tuple(f"nu_{i}" for i in range(N))
        + tuple(f"chi_{i}" for i in range(N))
    )
    return lp_core.LpProblem(cost, G, h, lower=np.full(lay["n_vars"], -np.inf), upper=np.full(lay["n_vars"], np.inf), names=names)


# ---------------------------------------------------------------------------
# standardization


def _scaler(X):
    mean = X.mean(axis=0) if X.shape[0] else np.zeros(X.shape[1])
    scale = X.std(axis=0) if X.shape[0] else np.ones(X.shape[1])
    scale = np.where(scale > 1e-12 * np.maximum(1.0, np.abs(mean)), scale, 1.0)
    return mean, scale


def _unstandardize(theta_std, mean, scale, names) -> LinearModel:
    w_std, b_std = theta_std[:-1], theta_std[-1]
    w = w_std / scale
    return LinearModel(w, float(b_std - w @ mean), names)


# ---------------------------------------------------------------------------
# training


def train(dataset: Dataset, surface: CostSurface, config: TrainConfig = TrainConfig()) -> TrainedModel:
    if len(dataset) == 0:
        raise EmptyInput("training set is empty")
    _check_samples(dataset, surface)
    mean, scale = _scaler(dataset.X)
    Z = (dataset.X - mean) / scale
    std = Dataset(dataset.day, dataset.slot, Z, dataset.y, dataset.feature_names, dataset.part)
    t0 = time.perf_counter()
    if config.backend == EXACT:
        theta, alpha, objective, diag = _train_exact(std, surface, config)
    else:
        theta, alpha, objective, diag = _train_subgradient(std, surface, config)
    diag["seconds"] = time.perf_counter() - t0
    diag["n_samples"] = len(dataset)
    model = _unstandardize(theta, mean, scale, dataset.feature_names)
    return TrainedModel(model, alpha, objective, config.beta, config.backend, diag)


def _train_exact(std: Dataset, surface: CostSurface, config: TrainConfig):
    lp = assemble_training_lp(std, surface, config.beta)
    sol = lp_core.solve(lp, method=config.lp_method)
    if sol.status is lp_core.Status.INFEASIBLE:
        raise SolverError("training LP infeasible: no linear model keeps every forecast inside the box")
    if sol.status is not lp_core.Status.OPTIMAL:
        raise SolverError(f"training LP status {sol.status.value}")
    lay = training_lp_layout(len(std), std.n_features)
    diag = {
        "status": sol.status.value,
        "lp_method": sol.method,
        "iterations": sol.iterations,
        "n_rows": lp.n_ineq,
        "n_vars": lp.n_vars,
        "n_segments": len(surface.segments),
    }
    return sol.x[lay["theta"]].copy(), float(sol.x[lay["alpha"]]), float(sol.objective), diag


def _tail_weights(costs, beta):
    """CVaR subgradient weights over samples and the matching VaR."""
    N = costs.size
    w_tail = 1.0 / (N * (1 - beta))
    _, var = cvar_of_costs(costs, beta)
    above = costs > var
    w = np.where(above, w_tail, 0.0)
    at = costs == var
    w[at] = max(0.0, 1.0 - above.sum() * w_tail) / at.sum()
    return w, var


def _train_subgradient(std: Dataset, surface: CostSurface, config: TrainConfig):
    N = len(std)
    beta = config.beta
    # whiten the design so every parameter direction has unit second moment;
    # collinear lag features otherwise stall first-order progress
    Xd_orig = np.column_stack([std.X, np.ones(N)])
    U, sv, Vt = np.linalg.svd(Xd_orig, full_matrices=False)
    rank = int(np.sum(sv > sv[0] * 1e-10)) if sv.size and sv[0] > 0 else 0
    rank = max(rank, 1)
    back = Vt[:rank].T / sv[:rank] * math.sqrt(N)  # theta = back @ phi
    Xd = U[:, :rank] * math.sqrt(N)
    a = surface.coefs[:, 0]
    const = std.y[:, None] * surface.coefs[None, :, 1] + surface.coefs[None, :, 2]
    lo, hi = surface.box(std.y)
    slope = float(np.abs(a).max())
    penalty = config.penalty_weight if config.penalty_weight is not None else 10.0 * slope
    step_c = config.step_constant
    if step_c is None:
        # kW length scale: the parameters must travel distances of order std(y)
        spread = float(std.y.std()) or 1.0
        step_c = spread / (slope * float(np.linalg.norm(Xd, axis=1).mean()))
    w_tail = 1.0 / (N * (1 - beta))

    def evaluate(theta):
        yh = Xd @ theta
        vals = a[None, :] * yh[:, None] + const
        k = vals.argmax(axis=1)
        return yh, vals[np.arange(N), k], k

    # warm start: least squares, alpha at the beta-quantile of its costs
    theta, *_ = np.linalg.lstsq(Xd, std.y, rcond=None)
    T = config.iterations
    start_avg = T // 2
    quarter = (3 * T) // 4
    acc_half = np.zeros_like(theta)
    acc_quarter = np.zeros_like(theta)
    tol = surface.box_tol()

    def excess(yh):
        return np.maximum(np.maximum(yh - hi, lo - yh), 0.0)

    best_val, best_theta = math.inf, None
    best_at_half = math.inf
    for t in range(1, T + 1):
        yh, costs, k = evaluate(theta)
        w, _ = _tail_weights(costs, beta)
        viol_hi = yh > hi
        viol_lo = yh < lo
        if not (viol_hi.any() or viol_lo.any()) or excess(yh).max() <= tol:
            val = cvar_of_costs(costs, beta)[0]
            if val < best_val:
                best_val, best_theta = val, theta.copy()
        if t == start_avg + 1:
            best_at_half = best_val
        g = (w * a[k]) @ Xd
        if viol_hi.any() or viol_lo.any():
            g = g + penalty * w_tail * ((viol_hi.astype(float) - viol_lo) @ Xd)
        theta = theta - (step_c / math.sqrt(t)) * g
        if t > start_avg:
            acc_half += theta
        if t > quarter:
            acc_quarter += theta
    theta_bar = acc_half / (T - start_avg)
    yh, costs, _ = evaluate(theta_bar)
    avg_val = cvar_of_costs(costs, beta)[0] if excess(yh).max() <= tol else math.inf
    quarter_val = math.inf
    if T - quarter > 0:
        yq, costs_q, _ = evaluate(acc_quarter / (T - quarter))
        if excess(yq).max() <= tol:
            quarter_val = cvar_of_costs(costs_q, beta)[0]
    # keep the better of the averaged iterate and the best feasible iterate
    chosen = "average"
    if best_theta is not None and best_val < avg_val:
        theta_bar, chosen = best_theta, "best_iterate"
        yh, costs, _ = evaluate(theta_bar)
    objective, alpha = cvar_of_costs(costs, beta)
    # convergence signals: disagreement between the candidate points, and how
    # much the best value still moved during the second half of the run
    scale = max(1.0, abs(objective))
    candidates = [v for v in (avg_val, quarter_val, best_val) if math.isfinite(v)]
    gap = max(candidates) - objective if len(candidates) == 3 else math.inf
    gap = max(gap, best_at_half - best_val) / scale if math.isfinite(gap) else math.inf
    violation = excess(yh).max(initial=0.0)
    diag = {
        "status": "finished",
        "iterations": T,
        "gap_estimate": gap,
        "selected": chosen,
        "step_constant": step_c,
        "penalty_weight": penalty,
        "box_violations": int(np.sum(excess(yh) > tol)),
        "max_box_violation": float(max(violation, 0.0)),
        "n_segments": len(surface.segments),
    }
    if gap > config.gap_tol:
        warnings.warn(f"subgradient gap estimate {gap:.2e} exceeds {config.gap_tol:.0e}", NonConvergence, stacklevel=3)
    return back @ theta_bar, alpha, objective, diag


def with_beta(config: TrainConfig, beta: float) -> TrainConfig:
    return replace(config, beta=beta)


# ---------------------------------------------------------------------------
# model files


def save_model(model: LinearModel, path, metadata: dict | None = None) -> None:
    """CSV of ``(feature, weight)`` rows preceded by ``# key: value`` metadata lines."""
    with open(path, "w", newline="") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}: {value!r}\n" if isinstance(value, float) else f"# {key}: {value}\n")
        fh.write("feature,weight\n")
        for name, w in zip(model.feature_names, model.weights):
            fh.write(f"{name},{float(w)!r}\n")
        fh.write(f"intercept,{model.intercept!r}\n")


def trained_metadata(result: TrainedModel, **extra) -> dict:
    meta = {"beta": result.beta, "alpha_star": result.alpha_star, "objective": result.objective, "backend": result.backend}
    meta.update(extra)
    return meta


def load_model(path) -> tuple[LinearModel, dict]:
    from .errors import MissingArtifact, ParseError

    try:
        lines = open(path).read().splitlines()
    except FileNotFoundError as exc:
        raise MissingArtifact(f"{path}: no such model file") from exc
    meta, names, weights, intercept = {}, [], [], None
    header_seen = False
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = _meta_value(value.strip())
            continue
        if not header_seen:
            if line.strip() != "feature,weight":
                raise ParseError(f"{path}:{lineno}: expected header 'feature,weight'")
            header_seen = True
            continue
        name, _, value = line.partition(",")
        try:
            w = float(value)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: weight {value!r} is not a number") from exc
        if name == "intercept":
            intercept = w
        else:
            names.append(name)
            weights.append(w)
    if intercept is None:
        raise ParseError(f"{path}: no intercept row")
    return LinearModel(np.array(weights), intercept, tuple(names)), meta


def _meta_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text
