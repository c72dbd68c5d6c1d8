"""Piecewise-linear convex map from (forecast, realization) to overall cost.

Each DA partition ``o`` contributes the affine piece ``lambda_o * y_hat - nu_o' cap_da``
of the DA value function; each RT partition ``n`` contributes
``gamma_n * (y - y_hat) - eta_n' cap_up - mu_n' cap_down``.  Both value functions
are maxima of their pieces, so their sum is the maximum over all ``(o, n)``
pairs of the summed pieces.  That is the surface stored here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import OutOfBox
from .merit_dispatch import TOL, Partition, ResourceFleet, enumerate_partitions


@dataclass(frozen=True)
class AffineSegment:
    coef_yhat: float
    coef_y: float
    intercept: float
    da_index: int
    rt_index: int

    def __call__(self, y_hat, y):
        return self.coef_yhat * y_hat + self.coef_y * y + self.intercept


@dataclass(frozen=True, eq=False)
class CostSurface:
    segments: tuple[AffineSegment, ...]
    fleet_digest: str
    y_hat_range: tuple[float, float]
    deviation_range: tuple[float, float]
    da_partitions: tuple[Partition, ...]
    rt_partitions: tuple[Partition, ...]

    def __post_init__(self):
        coefs = np.array([[s.coef_yhat, s.coef_y, s.intercept] for s in self.segments], dtype=float)
        coefs.setflags(write=False)
        object.__setattr__(self, "_coefs", coefs)

    @property
    def coefs(self) -> np.ndarray:
        """``(S, 3)`` array of ``[coef_yhat, coef_y, intercept]`` rows in (o, n) order."""
        return self._coefs

    @property
    def max_slope(self) -> float:
        """Largest |d cost / d y_hat| over all segments."""
        return float(np.abs(self._coefs[:, 0]).max())

    def rt_label(self, rt_index: int) -> str:
        return self.rt_partitions[rt_index - 1].label

    def box(self, y):
        """Feasible forecast interval for realization(s) ``y``."""
        y = np.asarray(y, dtype=float)
        lo = np.maximum(self.y_hat_range[0], y - self.deviation_range[1])
        hi = np.minimum(self.y_hat_range[1], y - self.deviation_range[0])
        return lo, hi

    def box_tol(self) -> float:
        """kW slack accepted at the box edges (1e-9 relative to the DA range)."""
        return TOL * max(1.0, self.y_hat_range[1] - self.y_hat_range[0])

    def raw_values(self, y_hat, y) -> np.ndarray:
        """Segment values without any box check; shape ``(..., S)``."""
        y_hat = np.asarray(y_hat, dtype=float)[..., None]
        y = np.asarray(y, dtype=float)[..., None]
        c = self._coefs
        return c[:, 0] * y_hat + c[:, 1] * y + c[:, 2]


def build_surface(fleet: ResourceFleet) -> CostSurface:
    da_parts, rt_parts = enumerate_partitions(fleet)
    rt_caps = np.concatenate([fleet.up_caps, fleet.down_caps])
    segments = []
    for p_da in da_parts:
        da_const = -float(p_da.cap_duals @ fleet.da_caps)
        for n, p_rt in enumerate(rt_parts, start=1):
            rt_const = -float(p_rt.cap_duals @ rt_caps)
            segments.append(
                AffineSegment(
                    coef_yhat=p_da.price - p_rt.price,
                    coef_y=p_rt.price,
                    intercept=da_const + rt_const,
                    da_index=p_da.index,
                    rt_index=n,
                )
            )
    return CostSurface(
        segments=tuple(segments),
        fleet_digest=fleet.digest(),
        y_hat_range=(0.0, fleet.da_total),
        deviation_range=(-fleet.down_total, fleet.up_total),
        da_partitions=tuple(da_parts),
        rt_partitions=tuple(rt_parts),
    )


def _check_box(surface: CostSurface, y_hat, y):
    y_hat = np.asarray(y_hat, dtype=float)
    lo, hi = surface.box(y)
    tol = surface.box_tol()
    bad = (y_hat < lo - tol) | (y_hat > hi + tol) | (lo > hi + tol)
    if np.any(bad):
        i = int(np.flatnonzero(np.atleast_1d(bad))[0])
        yh = np.atleast_1d(y_hat)[i]
        yy = np.atleast_1d(np.broadcast_to(y, np.shape(y_hat)))[i]
        raise OutOfBox(f"(y_hat={yh}, y={yy}) lies outside the feasible box")


def eval_cost(surface: CostSurface, y_hat, y):
    """Overall cost as the maximum over segments; scalar in, scalar out."""
    _check_box(surface, y_hat, y)
    out = surface.raw_values(y_hat, y).max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def active_segment(surface: CostSurface, y_hat: float, y: float) -> tuple[int, int]:
    """``(da_index, rt_index)`` of a maximizing segment, lowest (o, n) among ties."""
    _check_box(surface, y_hat, y)
    vals = surface.raw_values(y_hat, y)
    top = vals.max()
    k = int(np.flatnonzero(vals >= top - TOL * max(1.0, abs(top)))[0])
    seg = surface.segments[k]
    return seg.da_index, seg.rt_index


def write_surface_csv(surface: CostSurface, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["da_index", "rt_index", "rt_partition", "coef_yhat", "coef_y", "intercept"])
        for s in surface.segments:
            w.writerow([s.da_index, s.rt_index, surface.rt_label(s.rt_index), repr(s.coef_yhat), repr(s.coef_y), repr(s.intercept)])


def surface_plot_data(surface: CostSurface, y: float, n_points: int = 201) -> np.ndarray:
    """``(n_points, 2)`` array of ``(y_hat, cost)`` over the feasible forecasts for fixed ``y``."""
    lo, hi = surface.box(y)
    if lo > hi:
        raise OutOfBox(f"no feasible forecast for y={y}")
    grid = np.linspace(float(lo), float(hi), n_points)
    return np.column_stack([grid, eval_cost(surface, grid, np.full_like(grid, y))])
