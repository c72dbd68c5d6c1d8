"""Test-set metrics: RMSE, average overall cost and average high cost."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .cvar_trainer import LinearModel
from .data_io import Dataset
from .errors import ConfigError, EmptyTestSet, InfeasibleSample
from .merit_dispatch import ResourceFleet, overall_cost_batch


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    avg_cost: float
    avg_high_cost: float
    beta: float
    n_samples: int
    m_abov: int
    degenerate: bool = False  # every cost tied at the quantile; avg_high_cost is the maximum
    n_clamped: int = 0
    method: str = ""

    def as_row(self) -> dict:
        return asdict(self)


def high_cost_quantile(costs, beta: float) -> float:
    """Empirical beta-quantile: the ``ceil(beta * N)``-th smallest cost (at least the 1st)."""
    c = np.sort(np.asarray(costs, dtype=float).reshape(-1))
    if c.size == 0:
        raise EmptyTestSet("no costs")
    k = max(1, math.ceil(beta * c.size - 1e-9))
    return float(c[k - 1])


def avg_high_cost(costs, beta: float) -> tuple[float, int, bool]:
    """Mean of costs strictly above the beta-quantile; ``(value, M_abov, degenerate)``.

    When nothing lies strictly above the quantile the maximum cost is
    reported and the degenerate flag is set.
    """
    if not 0 <= beta < 1:
        raise ConfigError(f"beta must lie in [0, 1), got {beta}")
    c = np.asarray(costs, dtype=float).reshape(-1)
    q = high_cost_quantile(c, beta)
    above = c[c > q]
    if above.size == 0:
        return float(c.max()), 0, True
    return math.fsum(above) / above.size, int(above.size), False


def clamp_to_box(fleet: ResourceFleet, y_hat, y) -> tuple[np.ndarray, int]:
    """Project forecasts onto their dispatchable interval; returns ``(clamped, count)``."""
    y_hat = np.asarray(y_hat, dtype=float)
    lo, hi = fleet.forecast_box(y)
    if np.any(lo > hi):
        i = int(np.flatnonzero(lo > hi)[0])
        raise InfeasibleSample(-1, i, float(np.asarray(y)[i]))
    clamped = np.clip(y_hat, lo, hi)
    return clamped, int(np.sum(clamped != y_hat))


def sample_costs(fleet: ResourceFleet, y_hat, y) -> tuple[np.ndarray, int]:
    """Per-sample overall cost after clamping; returns ``(costs, n_clamped)``."""
    clamped, n = clamp_to_box(fleet, y_hat, y)
    return overall_cost_batch(fleet, clamped, y), n


def evaluate_forecasts(y_hat, y, fleet: ResourceFleet, beta: float = 0.5, method: str = "") -> MetricsReport:
    """Metrics for given forecasts.  RMSE uses the forecasts as issued;
    costs use the clamped forecasts that are actually dispatched."""
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise EmptyTestSet("test set is empty")
    if y_hat.shape != y.shape:
        raise ValueError(f"{y_hat.size} forecasts for {y.size} realizations")
    costs, n_clamped = sample_costs(fleet, y_hat, y)
    high, m_abov, degenerate = avg_high_cost(costs, beta)
    return MetricsReport(
        rmse=math.sqrt(math.fsum((y_hat - y) ** 2) / y.size),
        avg_cost=math.fsum(costs) / costs.size,
        avg_high_cost=high,
        beta=beta,
        n_samples=int(y.size),
        m_abov=m_abov,
        degenerate=degenerate,
        n_clamped=n_clamped,
        method=method,
    )


def evaluate(model: LinearModel, test_dataset: Dataset, fleet: ResourceFleet, beta: float = 0.5, method: str = "") -> MetricsReport:
    if len(test_dataset) == 0:
        raise EmptyTestSet("test set is empty")
    return evaluate_forecasts(model.predict(test_dataset.X), test_dataset.y, fleet, beta, method)


def reduction_percent(value: float, reference: float) -> float:
    """Relative improvement of ``value`` over ``reference`` in percent."""
    return 100.0 * (reference - value) / reference


REPORT_COLUMNS = ("method", "beta", "rmse", "avg_cost", "avg_high_cost", "n_samples", "m_abov", "degenerate", "n_clamped")


def write_report_csv(reports, path, extra: dict | None = None) -> None:
    """One row per report; ``extra`` maps column name -> list of per-row values."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(REPORT_COLUMNS) + list(extra))
        for i, r in enumerate(reports):
            row = r.as_row()
            w.writerow([_cell(row[c]) for c in REPORT_COLUMNS] + [_cell(v[i]) for v in extra.values()])


def write_trace_csv(path, dataset: Dataset, forecasts: dict, fleet: ResourceFleet) -> None:
    """Per-sample forecasts and costs for each method, for profile plots."""
    cols = {}
    for name, y_hat in forecasts.items():
        costs, _ = sample_costs(fleet, y_hat, dataset.y)
        cols[f"yhat_{name}"] = np.asarray(y_hat, dtype=float)
        cols[f"cost_{name}"] = costs
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "slot", "y_kw"] + list(cols))
        for i in range(len(dataset)):
            w.writerow([int(dataset.day[i]), int(dataset.slot[i]), repr(float(dataset.y[i]))] + [repr(float(v[i])) for v in cols.values()])


def _cell(v):
    return repr(v) if isinstance(v, float) else v
