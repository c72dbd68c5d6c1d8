"""Day-ahead and real-time dispatch by cost-merit order.

Both stage problems are single-bus economic dispatches with box-bounded
resources, so the primal optimum is a merit-order fill and the dual optimum is
read off the marginal resource.  Everything here is a pure function of its
inputs.

Dual sign convention (shared with :mod:`vppcvar.lp_core`): for
``min c'x s.t. 1'x = target, 0 <= x <= cap`` the Lagrangian stationarity is
``c - price * 1 - floor_duals + cap_duals = 0`` with ``floor_duals, cap_duals >= 0``,
and the dual objective is ``price * target - cap_duals' cap``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleDeviation, InfeasibleTarget, InvalidFleet

TOL = 1e-9

DA = "DA"
RT_DEFICIT = "RT-deficit"
RT_SURPLUS = "RT-surplus"


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ResourceFleet:
    """Marginal costs ($/kW) and capacities (kW) of the three resource classes.

    Arrays are stored in merit order.  Use :meth:`from_unsorted` for configs that
    are not pre-sorted; the ``*_order`` arrays map merit position to the user's
    original index.
    """

    da_costs: np.ndarray
    da_caps: np.ndarray
    up_costs: np.ndarray
    up_caps: np.ndarray
    down_utils: np.ndarray
    down_caps: np.ndarray
    da_order: np.ndarray = field(default=None)
    up_order: np.ndarray = field(default=None)
    down_order: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("da_costs", "da_caps", "up_costs", "up_caps", "down_utils", "down_caps"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        pairs = (
            ("da", self.da_costs, self.da_caps),
            ("up", self.up_costs, self.up_caps),
            ("down", self.down_utils, self.down_caps),
        )
        for label, costs, caps in pairs:
            if costs.size == 0:
                raise InvalidFleet(f"{label}: at least one resource is required")
            if costs.shape != caps.shape:
                raise InvalidFleet(f"{label}: {costs.size} costs but {caps.size} capacities")
            if not (np.all(np.isfinite(costs)) and np.all(np.isfinite(caps))):
                raise InvalidFleet(f"{label}: non-finite entry")
            if np.any(caps <= 0):
                raise InvalidFleet(f"{label}: capacities must be strictly positive")
        if np.any(np.diff(self.da_costs) < 0):
            raise InvalidFleet("da costs must be sorted nondecreasing (use ResourceFleet.from_unsorted)")
        if np.any(np.diff(self.up_costs) < 0):
            raise InvalidFleet("up costs must be sorted nondecreasing (use ResourceFleet.from_unsorted)")
        if np.any(np.diff(self.down_utils) > 0):
            raise InvalidFleet("down utilities must be sorted nonincreasing (use ResourceFleet.from_unsorted)")
        if self.up_costs.min() < self.down_utils.max():
            raise InvalidFleet(
                f"every up cost must be >= every down utility "
                f"(min up {self.up_costs.min()} < max down {self.down_utils.max()})"
            )
        for name, ref in (("da_order", self.da_costs), ("up_order", self.up_costs), ("down_order", self.down_utils)):
            order = getattr(self, name)
            order = np.arange(ref.size) if order is None else np.asarray(order, dtype=int).reshape(-1)
            if sorted(order.tolist()) != list(range(ref.size)):
                raise InvalidFleet(f"{name} is not a permutation")
            order.setflags(write=False)
            object.__setattr__(self, name, order)

    @classmethod
    def from_unsorted(cls, da_costs, da_caps, up_costs, up_caps, down_utils, down_caps) -> "ResourceFleet":
        """Sort each class into merit order (stable) and remember the permutation."""
        da_costs, da_caps = np.asarray(da_costs, float), np.asarray(da_caps, float)
        up_costs, up_caps = np.asarray(up_costs, float), np.asarray(up_caps, float)
        down_utils, down_caps = np.asarray(down_utils, float), np.asarray(down_caps, float)
        if da_costs.shape != da_caps.shape or up_costs.shape != up_caps.shape or down_utils.shape != down_caps.shape:
            raise InvalidFleet("cost and capacity vectors differ in length")
        da_o = np.argsort(da_costs, kind="stable")
        up_o = np.argsort(up_costs, kind="stable")
        down_o = np.argsort(-down_utils, kind="stable")
        return cls(
            da_costs[da_o], da_caps[da_o],
            up_costs[up_o], up_caps[up_o],
            down_utils[down_o], down_caps[down_o],
            da_order=da_o, up_order=up_o, down_order=down_o,
        )

    @property
    def da_total(self) -> float:
        return float(self.da_caps.sum())

    @property
    def up_total(self) -> float:
        return float(self.up_caps.sum())

    @property
    def down_total(self) -> float:
        return float(self.down_caps.sum())

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.da_costs, self.da_caps, self.up_costs, self.up_caps, self.down_utils, self.down_caps):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            h.update(b"|")
        return h.hexdigest()[:16]

    def forecast_box(self, y):
        """Feasible forecast interval(s) for realization(s) ``y``.

        Returns ``(lo, hi)``; the interval is empty where ``lo > hi``.
        """
        y = np.asarray(y, dtype=float)
        lo = np.maximum(0.0, y - self.up_total)
        hi = np.minimum(self.da_total, y + self.down_total)
        return lo, hi

    def in_user_order(self, stage: str, values) -> np.ndarray:
        """Reorder a per-resource vector from merit order back to config order."""
        values = np.asarray(values)
        if stage == DA:
            out = np.empty_like(values)
            out[self.da_order] = values
            return out
        n_up = self.up_costs.size
        up = np.empty_like(values[:n_up])
        up[self.up_order] = values[:n_up]
        down = np.empty_like(values[n_up:])
        down[self.down_order] = values[n_up:]
        return np.concatenate([up, down])

    def to_dict(self) -> dict:
        return {
            "da.costs": _unsort(self.da_costs, self.da_order).tolist(),
            "da.caps": _unsort(self.da_caps, self.da_order).tolist(),
            "up.costs": _unsort(self.up_costs, self.up_order).tolist(),
            "up.caps": _unsort(self.up_caps, self.up_order).tolist(),
            "down.utils": _unsort(self.down_utils, self.down_order).tolist(),
            "down.caps": _unsort(self.down_caps, self.down_order).tolist(),
        }


def _unsort(values, order):
    out = np.empty_like(values)
    out[order] = values
    return out


def reference_fleet() -> ResourceFleet:
    """Two generators, two deficit and two surplus resources with the reference prices.

    Capacities are not given with the prices; 100/100, 50/50 and 40/40 kW are
    used throughout the package.
    """
    return ResourceFleet([25.0, 30.0], [100.0, 100.0], [55.0, 60.0], [50.0, 50.0], [18.0, 16.0], [40.0, 40.0])


_FLEET_KEYS = ("da.costs", "da.caps", "up.costs", "up.caps", "down.utils", "down.caps")


def load_fleet(path) -> ResourceFleet:
    """Read a fleet file (flat ``key = [values]`` TOML, see README)."""
    from .data_io import read_flat_config

    cfg = read_flat_config(path)
    missing = [k for k in _FLEET_KEYS if k not in cfg]
    if missing:
        raise InvalidFleet(f"{path}: missing keys {missing}")
    extra = sorted(set(cfg) - set(_FLEET_KEYS))
    if extra:
        raise InvalidFleet(f"{path}: unknown keys {extra}")
    try:
        vals = [np.atleast_1d(np.asarray(cfg[k], dtype=float)) for k in _FLEET_KEYS]
    except (TypeError, ValueError) as exc:
        raise InvalidFleet(f"{path}: {exc}") from exc
    return ResourceFleet.from_unsorted(*vals)


def save_fleet(fleet: ResourceFleet, path) -> None:
    lines = ["# resource fleet: marginal costs/utilities in $/kW, capacities in kW"]
    for key, values in fleet.to_dict().items():
        lines.append(f"{key} = [{', '.join(repr(float(v)) for v in values)}]")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class DispatchResult:
    """Primal and dual solution of one stage problem (arrays in merit order).

    For RT, ``quantities``, ``caps``, ``cap_duals`` and ``floor_duals`` are the
    up (deficit) resources followed by the down (surplus) resources.
    """

    stage: str
    target: float
    quantities: np.ndarray
    caps: np.ndarray
    primal_cost: float
    price: float
    cap_duals: np.ndarray
    floor_duals: np.ndarray

    @property
    def dual_objective(self) -> float:
        return float(self.price * self.target - self.cap_duals @ self.caps)


def _fill(target, caps):
    """Merit-order fill of ``target`` over ``caps``; returns quantities and marginal index."""
    cum = np.cumsum(caps)
    q = np.clip(target - (cum - caps), 0.0, caps)
    # left-limit convention: at an exact breakpoint the last fully used unit is marginal
    k = int(np.searchsorted(cum, target - TOL, side="left"))
    return q, min(k, caps.size - 1)


def solve_da(fleet: ResourceFleet, y_hat: float) -> DispatchResult:
    y_hat = float(y_hat)
    total = fleet.da_total
    if not (-TOL <= y_hat <= total + TOL):
        raise InfeasibleTarget(f"DA target {y_hat} kW outside [0, {total}]")
    y_hat = min(max(y_hat, 0.0), total)
    q, k = _fill(y_hat, fleet.da_caps)
    price = float(fleet.da_costs[k])
    idx = np.arange(q.size)
    cap_duals = np.where(idx < k, price - fleet.da_costs, 0.0)
    floor_duals = fleet.da_costs - price + cap_duals
    return DispatchResult(
        DA, y_hat, q, fleet.da_caps.copy(), float(fleet.da_costs @ q), price, cap_duals, floor_duals
    )


def solve_rt(fleet: ResourceFleet, deviation: float) -> DispatchResult:
    dev = float(deviation)
    if not (-fleet.down_total - TOL <= dev <= fleet.up_total + TOL):
        raise InfeasibleDeviation(f"RT deviation {dev} kW outside [{-fleet.down_total}, {fleet.up_total}]")
    up_c, up_cap = fleet.up_costs, fleet.up_caps
    dn_u, dn_cap = fleet.down_utils, fleet.down_caps
    q_up = np.zeros(up_c.size)
    q_dn = np.zeros(dn_u.size)
    eta_bar = np.zeros(up_c.size)
    mu_bar = np.zeros(dn_u.size)
    if dev > TOL:
        q_up, k = _fill(min(dev, fleet.up_total), up_cap)
        price = float(up_c[k])
        eta_bar = np.where(np.arange(up_c.size) < k, price - up_c, 0.0)
    elif dev < -TOL:
        q_dn, k = _fill(min(-dev, fleet.down_total), dn_cap)
        price = float(dn_u[k])
        mu_bar = np.where(np.arange(dn_u.size) < k, dn_u - price, 0.0)
    else:
        dev = 0.0
        price = float(up_c[0])
    # stationarity: rho+ - gamma + eta_bar - eta_low = 0 ; -rho- + gamma + mu_bar - mu_low = 0
    eta_low = up_c - price + eta_bar
    mu_low = price - dn_u + mu_bar
    cost = float(up_c @ q_up - dn_u @ q_dn)
    return DispatchResult(
        "RT",
        dev,
        np.concatenate([q_up, q_dn]),
        np.concatenate([up_cap, dn_cap]),
        cost,
        price,
        np.concatenate([eta_bar, mu_bar]),
        np.concatenate([eta_low, mu_low]),
    )


@dataclass(frozen=True, eq=False)
class Partition:
    """Interval of the forecast axis (DA) or deviation axis (RT) with constant duals."""

    stage: str
    index: int
    lo: float
    hi: float
    price: float
    cap_duals: np.ndarray

    @property
    def label(self) -> str:
        if self.stage == DA:
            return f"DA-{self.index}"
        kind = "deficit" if self.stage == RT_DEFICIT else "surplus"
        return f"{kind}-{self.index}"

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def enumerate_partitions(fleet: ResourceFleet) -> tuple[list[Partition], list[Partition]]:
    """DA partitions in merit order, then RT partitions: deficit 1..|up| followed by surplus 1..|down|.

    RT position ``n`` (1-based) in the returned list is the ``rt_index`` used by
    the cost surface.
    """
    da = []
    cum = np.cumsum(fleet.da_caps)
    for o, (lo, hi) in enumerate(zip(cum - fleet.da_caps, cum), start=1):
        res = solve_da(fleet, 0.5 * (lo + hi))
        da.append(Partition(DA, o, float(lo), float(hi), res.price, res.cap_duals))
    rt = []
    cum = np.cumsum(fleet.up_caps)
    for i, (lo, hi) in enumerate(zip(cum - fleet.up_caps, cum), start=1):
        res = solve_rt(fleet, 0.5 * (lo + hi))
        rt.append(Partition(RT_DEFICIT, i, float(lo), float(hi), res.price, res.cap_duals))
    cum = np.cumsum(fleet.down_caps)
    for j, (lo, hi) in enumerate(zip(cum - fleet.down_caps, cum), start=1):
        res = solve_rt(fleet, -0.5 * (lo + hi))
        rt.append(Partition(RT_SURPLUS, j, float(-hi), float(-lo), res.price, res.cap_duals))
    return da, rt


def rt_axis_order(rt_partitions: list[Partition]) -> list[Partition]:
    """RT partitions sorted from the most negative deviation to the most positive."""
    return sorted(rt_partitions, key=lambda p: p.lo)


def overall_cost(fleet: ResourceFleet, y_hat: float, y: float) -> float:
    """DA primal optimum plus RT primal optimum."""
    return solve_da(fleet, y_hat).primal_cost + solve_rt(fleet, y - y_hat).primal_cost


def overall_cost_dual(fleet: ResourceFleet, y_hat: float, y: float) -> float:
    """Same quantity assembled from the two dual objectives."""
    return solve_da(fleet, y_hat).dual_objective + solve_rt(fleet, y - y_hat).dual_objective


def _fill_cost(targets, costs, caps):
    cum = np.cumsum(caps)
    q = np.clip(targets[:, None] - (cum - caps)[None, :], 0.0, caps[None, :])
    return q @ costs


def overall_cost_batch(fleet: ResourceFleet, y_hat, y) -> np.ndarray:
    """Vectorized :func:`overall_cost` (merit-order primal) for arrays of pairs."""
    y_hat = np.atleast_1d(np.asarray(y_hat, dtype=float))
    y = np.broadcast_to(np.asarray(y, dtype=float), y_hat.shape)
    if np.any(y_hat < -TOL) or np.any(y_hat > fleet.da_total + TOL):
        raise InfeasibleTarget("DA target outside the generator range")
    dev = y - y_hat
    if np.any(dev < -fleet.down_total - TOL) or np.any(dev > fleet.up_total + TOL):
        raise InfeasibleDeviation("RT deviation outside the flexible-resource range")
    da = _fill_cost(np.clip(y_hat, 0.0, fleet.da_total), fleet.da_costs, fleet.da_caps)
    up = _fill_cost(np.clip(dev, 0.0, fleet.up_total), fleet.up_costs, fleet.up_caps)
    down = _fill_cost(np.clip(-dev, 0.0, fleet.down_total), fleet.down_utils, fleet.down_caps)
    return da + up - down
