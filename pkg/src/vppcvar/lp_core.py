"""Linear programs with primal and dual certificates.

Problem form::

    minimize    c'x
    subject to  G x <= h        (multipliers u >= 0)
                A x == b        (multipliers y, free)
                lower <= x <= upper   (multipliers z_lower, z_upper >= 0)

Dual convention: ``c + G'u - A'y - z_lower + z_upper = 0`` and the dual
objective is ``b'y - h'u + lower'z_lower - upper'z_upper`` (infinite bounds carry
zero multipliers).  With this convention the equality multiplier of an energy
balance row is the energy price.

Three routes:

* ``simplex``  -- dense bounded-variable revised primal simplex, two phases,
  Dantzig pricing with a switch to Bland's rule after a run of degenerate pivots.
* ``highs``    -- scipy's HiGHS dual simplex for large sparse problems.
* :func:`enumerate_vertices` -- exhaustive basis enumeration, a test oracle.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NumericalFailure, TooLarge

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8
REFACTOR_EVERY = 64
DEGENERATE_RUN = 50
DENSE_LIMIT = 400_000  # rows * cols above which "auto" hands off to HiGHS
IPM_ROWS = 5_000  # HiGHS switches from dual simplex to interior point above this


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(M, n):
    if M is None:
        return np.zeros((0, n))
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=float)
    M = np.asarray(M, dtype=float)
    return M.reshape(-1, n) if M.size else np.zeros((0, n))


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    G: object = None
    h: np.ndarray = None
    A: object = None
    b: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    names: tuple = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        G = _as_matrix(self.G, n)
        A = _as_matrix(self.A, n)
        h = np.zeros(0) if self.h is None else np.asarray(self.h, dtype=float).reshape(-1)
        b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).reshape(-1)
        lower = np.zeros(n) if self.lower is None else np.broadcast_to(np.asarray(self.lower, float), (n,)).copy()
        upper = np.full(n, np.inf) if self.upper is None else np.broadcast_to(np.asarray(self.upper, float), (n,)).copy()
        if G.shape[1] != n or A.shape[1] != n:
            raise ValueError("constraint matrices do not match the number of variables")
        if G.shape[0] != h.size or A.shape[0] != b.size:
            raise ValueError("right-hand sides do not match the constraint rows")
        for name, arr in (("c", c), ("h", h), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        for name, M in (("G", G), ("A", A)):
            data = M.data if sp.issparse(M) else M
            if not np.all(np.isfinite(data)):
                raise ValueError(f"{name} has non-finite entries")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower > upper):
            raise ValueError("invalid variable bounds")
        if np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("invalid variable bounds")
        if self.names is not None and len(self.names) != n:
            raise ValueError("names must have one entry per variable")
        for k, v in dict(c=c, G=G, h=h, A=A, b=b, lower=lower, upper=upper).items():
            object.__setattr__(self, k, v)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_ineq(self) -> int:
        return self.G.shape[0]

    @property
    def n_eq(self) -> int:
        return self.A.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.G) or sp.issparse(self.A)

    def dense(self) -> "LpProblem":
        if not self.is_sparse:
            return self
        todense = lambda M: M.toarray() if sp.issparse(M) else M
        return LpProblem(self.c, todense(self.G), self.h, todense(self.A), self.b, self.lower, self.upper, self.names)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    x: np.ndarray = None
    objective: float = math.nan
    eq_duals: np.ndarray = None
    ineq_duals: np.ndarray = None
    lower_duals: np.ndarray = None
    upper_duals: np.ndarray = None
    iterations: int = 0
    method: str = ""
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def dual_objective(problem: LpProblem, sol: LpSolution) -> float:
    lo_fin = np.isfinite(problem.lower)
    up_fin = np.isfinite(problem.upper)
    return float(
        problem.b @ sol.eq_duals
        - problem.h @ sol.ineq_duals
        + problem.lower[lo_fin] @ sol.lower_duals[lo_fin]
        - problem.upper[up_fin] @ sol.upper_duals[up_fin]
    )


def certificate_residuals(problem: LpProblem, sol: LpSolution) -> dict:
    """Max-norm residuals of an optimal certificate (all should be ~0)."""
    x = sol.x
    Gx = problem.G @ x
    Ax = problem.A @ x
    primal = max(
        float(np.max(Gx - problem.h, initial=0.0)),
        float(np.max(np.abs(Ax - problem.b), initial=0.0)),
        float(np.max(problem.lower - x, initial=0.0)),
        float(np.max(x - problem.upper, initial=0.0)),
    )
    stat = problem.c + problem.G.T @ sol.ineq_duals - problem.A.T @ sol.eq_duals - sol.lower_duals + sol.upper_duals
    dual = max(
        float(np.max(np.abs(stat), initial=0.0)),
        float(np.max(-sol.ineq_duals, initial=0.0)),
        float(np.max(-sol.lower_duals, initial=0.0)),
        float(np.max(-sol.upper_duals, initial=0.0)),
    )
    slack_g = problem.h - Gx
    lo_gap = np.where(np.isfinite(problem.lower), x - problem.lower, 0.0)
    up_gap = np.where(np.isfinite(problem.upper), problem.upper - x, 0.0)
    comp = max(
        float(np.max(np.abs(sol.ineq_duals * slack_g), initial=0.0)),
        float(np.max(np.abs(sol.lower_duals * lo_gap), initial=0.0)),
        float(np.max(np.abs(sol.upper_duals * up_gap), initial=0.0)),
    )
    dobj = dual_objective(problem, sol)
    gap = abs(sol.objective - dobj) / max(1.0, abs(sol.objective))
    return {"primal": primal, "dual": dual, "complementarity": comp, "gap": gap, "dual_objective": dobj}


def solve(problem: LpProblem, method: str = "auto", max_iter: int | None = None) -> LpSolution:
    """Solve ``problem``; ``method`` is ``"auto"``, ``"simplex"`` or ``"highs"``."""
    if method == "auto":
        size = (problem.n_ineq + problem.n_eq) * (problem.n_vars + problem.n_ineq)
        method = "simplex" if size <= DENSE_LIMIT and not problem.is_sparse else "highs"
    if method == "simplex":
        return _simplex(problem.dense(), max_iter)
    if method == "highs":
        return _highs(problem)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# dense bounded revised simplex


class _Tableau:
    """Standard-form data for the simplex: rows ``[G I; A 0] v = [h; b]``."""

    def __init__(self, p: LpProblem):
        n, mg, me = p.n_vars, p.n_ineq, p.n_eq
        self.n, self.mg, self.me = n, mg, me
        self.m = mg + me
        M = np.zeros((self.m, n + mg))
        M[:mg, :n] = p.G
        M[:mg, n:] = np.eye(mg)
        M[mg:, :n] = p.A
        self.rhs = np.concatenate([p.h, p.b])
        self.lb = np.concatenate([p.lower, np.zeros(mg)])
        self.ub = np.concatenate([p.upper, np.full(mg, np.inf)])
        self.cost = np.concatenate([p.c, np.zeros(mg)])

        x = np.where(np.isfinite(self.lb), self.lb, np.where(np.isfinite(self.ub), self.ub, 0.0))
        x[n:] = 0.0
        resid = self.rhs - M @ x
        basis = []
        art_cols = []
        for i in range(self.m):
            if i < mg and resid[i] >= 0:
                basis.append(n + i)
                x[n + i] = resid[i]
            else:
                sign = 1.0 if resid[i] >= 0 else -1.0
                col = np.zeros(self.m)
                col[i] = sign
                art_cols.append(col)
                basis.append(n + mg + len(art_cols) - 1)
        n_art = len(art_cols)
        self.n_struct = n + mg
        if n_art:
            M = np.hstack([M, np.column_stack(art_cols)])
            x = np.concatenate([x, np.zeros(n_art)])
            for i, j in enumerate(basis):
                if j >= self.n_struct:
                    x[j] = abs(resid[i])
        self.M = M
        self.x = x
        self.basis = np.array(basis, dtype=int)
        self.n_art = n_art
        self.lb = np.concatenate([self.lb, np.zeros(n_art)])
        self.ub = np.concatenate([self.ub, np.full(n_art, np.inf)])
        self.cost = np.concatenate([self.cost, np.zeros(n_art)])
        self.iterations = 0


def _refactor(t: _Tableau):
    B = t.M[:, t.basis]
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("singular basis during refactorization") from exc
    nonbasic = np.ones(t.M.shape[1], dtype=bool)
    nonbasic[t.basis] = False
    t.x[t.basis] = Binv @ (t.rhs - t.M[:, nonbasic] @ t.x[nonbasic])
    return Binv


def _run_simplex(t: _Tableau, cost: np.ndarray, max_iter: int) -> str:
    """Primal simplex from the current basic feasible point; returns 'optimal' or 'unbounded'."""
    M, lb, ub, x = t.M, t.lb, t.ub, t.x
    ncol = M.shape[1]
    opt_tol = 1e-9 * max(1.0, float(np.max(np.abs(cost), initial=0.0)))
    Binv = _refactor(t)
    since_refactor = 0
    degenerate = 0
    bland = False
    is_basic = np.zeros(ncol, dtype=bool)
    is_basic[t.basis] = True
    fixed = lb == ub
    while True:
        if t.iterations >= max_iter:
            raise NumericalFailure(f"simplex exceeded {max_iter} iterations")
        pi = cost[t.basis] @ Binv
        d = cost - pi @ M
        at_lb = x <= lb + FEAS_TOL
        at_ub = x >= ub - FEAS_TOL
        can_up = (d < -opt_tol) & ~at_ub
        can_down = (d > opt_tol) & ~at_lb
        eligible = (can_up | can_down) & ~is_basic & ~fixed
        if not eligible.any():
            return "optimal"
        cand = np.flatnonzero(eligible)
        j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
        direction = 1.0 if d[j] < 0 else -1.0
        alpha = Binv @ M[:, j]
        # basic variables move by -direction * step * alpha
        rate = -direction * alpha
        xb = x[t.basis]
        lbb, ubb = lb[t.basis], ub[t.basis]
        steps = np.full(t.m, np.inf)
        dec = rate < -PIVOT_TOL
        inc = rate > PIVOT_TOL
        steps[dec] = (xb[dec] - lbb[dec]) / -rate[dec]
        steps[inc] = (ubb[inc] - xb[inc]) / rate[inc]
        steps = np.maximum(steps, 0.0)
        flip = ub[j] - lb[j]
        step = float(steps.min()) if t.m else np.inf
        if flip <= step:
            # entering variable hits its own opposite bound: no basis change
            if not np.isfinite(flip):
                return "unbounded"
            x[t.basis] = xb + rate * flip
            x[j] = ub[j] if direction > 0 else lb[j]
            t.iterations += 1
            degenerate = 0
            continue
        if not np.isfinite(step):
            return "unbounded"
        ties = np.flatnonzero(steps <= step + PIVOT_TOL)
        if bland:
            r = int(ties[np.argmin(t.basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
        leaving = int(t.basis[r])
        x[t.basis] = xb + rate * step
        x[j] = x[j] + direction * step
        x[leaving] = lb[leaving] if rate[r] < 0 else ub[leaving]
        t.basis[r] = j
        is_basic[leaving] = False
        is_basic[j] = True
        t.iterations += 1
        if step <= FEAS_TOL:
            degenerate += 1
            if degenerate > DEGENERATE_RUN:
                bland = True
        else:
            degenerate = 0
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            Binv = _refactor(t)
            since_refactor = 0
        else:
            piv = alpha[r]
            if abs(piv) < PIVOT_TOL:
                Binv = _refactor(t)
                since_refactor = 0
                continue
            row = Binv[r] / piv
            Binv -= np.outer(alpha, row)
            Binv[r] = row


def _simplex(p: LpProblem, max_iter: int | None) -> LpSolution:
    t = _Tableau(p)
    if max_iter is None:
        max_iter = 50 * (t.m + t.M.shape[1]) + 1000
    scale = max(1.0, float(np.max(np.abs(t.rhs), initial=0.0)))
    if t.n_art:
        phase1 = np.zeros(t.M.shape[1])
        phase1[t.n_struct:] = 1.0
        _run_simplex(t, phase1, max_iter)
        infeas = float(t.x[t.n_struct:].sum())
        if infeas > FEAS_TOL * scale:
            return LpSolution(Status.INFEASIBLE, iterations=t.iterations, method="simplex", info={"infeasibility": infeas})
        t.ub[t.n_struct:] = 0.0
        t.x[t.n_struct:] = np.minimum(t.x[t.n_struct:], 0.0)
    outcome = _run_simplex(t, t.cost, max_iter)
    if outcome == "unbounded":
        return LpSolution(Status.UNBOUNDED, iterations=t.iterations, method="simplex")
    Binv = _refactor(t)
    pi = t.cost[t.basis] @ Binv
    d = t.cost - pi @ t.M
    n, mg = t.n, t.mg
    x = t.x[:n].copy()
    ineq = np.maximum(-pi[:mg], 0.0)
    eq = pi[mg:].copy()
    dn = d[:n]
    basic = np.zeros(t.M.shape[1], dtype=bool)
    basic[t.basis] = True
    dn = np.where(basic[:n], 0.0, dn)
    z_lo = np.where(np.isfinite(p.lower), np.maximum(dn, 0.0), 0.0)
    z_up = np.where(np.isfinite(p.upper), np.maximum(-dn, 0.0), 0.0)
    sol = LpSolution(
        Status.OPTIMAL,
        x=x,
        objective=float(p.c @ x),
        eq_duals=eq,
        ineq_duals=ineq,
        lower_duals=z_lo,
        upper_duals=z_up,
        iterations=t.iterations,
        method="simplex",
    )
    _verify(p, sol)
    return sol


def _verify(p: LpProblem, sol: LpSolution, tol: float = 1e-6):
    res = certificate_residuals(p, sol)
    scale = max(1.0, float(np.max(np.abs(p.c), initial=0.0)), float(np.max(np.abs(p.h), initial=0.0)), float(np.max(np.abs(p.b), initial=0.0)))
    bad = {k: v for k, v in res.items() if k != "dual_objective" and v > tol * scale}
    if bad:
        raise NumericalFailure(f"{sol.method}: certificate check failed {bad}")
    sol.info.update({k: v for k, v in res.items()})


# ---------------------------------------------------------------------------
# HiGHS


def _highs(p: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    bounds = np.column_stack([p.lower, p.upper])
    res = linprog(
        p.c,
        A_ub=p.G if p.n_ineq else None,
        b_ub=p.h if p.n_ineq else None,
        A_eq=p.A if p.n_eq else None,
        b_eq=p.b if p.n_eq else None,
        bounds=bounds,
        # interior point + crossover is several times faster on the large
        # training LPs; dual simplex is the steadier choice for small ones
        method="highs-ipm" if p.n_ineq + p.n_eq > IPM_ROWS else "highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10, "presolve": True},
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE, iterations=iters, method="highs")
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED, iterations=iters, method="highs")
    if res.status != 0:
        raise NumericalFailure(f"HiGHS: {res.message}")
    sol = LpSolution(
        Status.OPTIMAL,
        x=np.asarray(res.x, dtype=float),
        objective=float(res.fun),
        eq_duals=np.asarray(res.eqlin.marginals, dtype=float) if p.n_eq else np.zeros(0),
        ineq_duals=np.maximum(-np.asarray(res.ineqlin.marginals, dtype=float), 0.0) if p.n_ineq else np.zeros(0),
        lower_duals=np.where(np.isfinite(p.lower), np.maximum(np.asarray(res.lower.marginals, dtype=float), 0.0), 0.0),
        upper_duals=np.where(np.isfinite(p.upper), np.maximum(-np.asarray(res.upper.marginals, dtype=float), 0.0), 0.0),
        iterations=iters,
        method="highs",
    )
    _verify(p, sol)
    return sol


# ---------------------------------------------------------------------------
# vertex enumeration oracle

MAX_ENUM_VARS = 12
MAX_ENUM_ROWS = 30
MAX_ENUM_WORK = 4_000_000


def _independent_rows(A, b):
    """Drop linearly dependent equality rows; ``None`` if the system is inconsistent."""
    if A.shape[0] == 0:
        return A, b, np.arange(0)
    keep = []
    for i in range(A.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial], tol=1e-10) == len(trial):
            keep.append(i)
        else:
            aug = np.column_stack([A[trial], b[trial]])
            if np.linalg.matrix_rank(aug, tol=1e-10) > np.linalg.matrix_rank(A[trial], tol=1e-10):
                return None
    keep = np.array(keep, dtype=int)
    return A[keep], b[keep], keep


def enumerate_vertices(problem: LpProblem) -> LpSolution:
    """Optimal basic solution by trying every basis and every nonbasic bound pattern."""
    p = problem.dense()
    n, mg = p.n_vars, p.n_ineq
    if n > MAX_ENUM_VARS or mg + p.n_eq > MAX_ENUM_ROWS:
        raise TooLarge(f"vertex enumeration limited to {MAX_ENUM_VARS} variables / {MAX_ENUM_ROWS} constraints")
    reduced = _independent_rows(p.A, p.b)
    if reduced is None:
        return LpSolution(Status.INFEASIBLE, method="enumerate")
    A, b, eq_rows = reduced
    me = A.shape[0]
    m = mg + me
    ncol = n + mg
    M = np.zeros((m, ncol))
    M[:mg, :n] = p.G
    M[:mg, n:] = np.eye(mg)
    M[mg:, :n] = A
    rhs = np.concatenate([p.h, b])
    lb = np.concatenate([p.lower, np.zeros(mg)])
    ub = np.concatenate([p.upper, np.full(mg, np.inf)])
    cost = np.concatenate([p.c, np.zeros(mg)])

    def options(j):
        opts = [v for v in (lb[j], ub[j]) if np.isfinite(v)]
        opts = sorted(set(opts))
        return opts or [0.0]

    n_opts = [len(options(j)) for j in range(ncol)]
    work = 0
    for basis in itertools.combinations(range(ncol), m):
        nb = [j for j in range(ncol) if j not in basis]
        work += math.prod(n_opts[j] for j in nb)
        if work > MAX_ENUM_WORK:
            raise TooLarge("vertex enumeration work estimate exceeds the guard")

    scale = max(1.0, float(np.max(np.abs(cost), initial=0.0)))
    tol = 1e-9 * max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    dtol = 1e-9 * scale
    best_feasible = np.inf
    certified = []  # (objective, order, x_full, basis, pi, d) -- best dual-feasible point per basis
    for order, basis in enumerate(itertools.combinations(range(ncol), m)):
        basis = list(basis)
        nb = [j for j in range(ncol) if j not in basis]
        B = M[:, basis]
        if m and np.linalg.matrix_rank(B) < m:
            continue
        Binv = np.linalg.inv(B) if m else np.zeros((0, 0))
        patterns = list(itertools.product(*[options(j) for j in nb]))
        combos = np.array(patterns, dtype=float).reshape(len(patterns), len(nb))
        xb = (Binv @ (rhs[:, None] - M[:, nb] @ combos.T)).T if m else np.zeros((combos.shape[0], 0))
        feas = np.all((xb >= lb[basis] - tol) & (xb <= ub[basis] + tol), axis=1)
        if not feas.any():
            continue
        objs = xb @ cost[basis] + combos @ cost[nb]
        best_feasible = min(best_feasible, float(objs[feas].min()))
        pi = cost[basis] @ Binv if m else np.zeros(0)
        d = cost - pi @ M
        dn = d[nb]
        lbn, ubn = lb[nb], ub[nb]
        at_lo = np.isfinite(lbn) & (combos == lbn)
        at_up = np.isfinite(ubn) & (combos == ubn)
        ok = (
            (lbn == ubn)
            | (at_lo & (dn >= -dtol))
            | (at_up & (dn <= dtol))
            | (~at_lo & ~at_up & (np.abs(dn) <= dtol))
        )
        good = feas & np.all(ok, axis=1)
        if not good.any():
            continue
        k = int(np.flatnonzero(good)[np.argmin(objs[good])])
        x = np.zeros(ncol)
        x[basis] = xb[k]
        x[nb] = combos[k]
        certified.append((float(objs[k]), order, x, basis, pi, d))
    if not np.isfinite(best_feasible):
        return LpSolution(Status.INFEASIBLE, method="enumerate")
    # vertices within the primal tolerance can undercut the optimum by up to tol * |c|_1
    obj_tol = 1e-9 * max(1.0, abs(best_feasible)) + tol * float(np.abs(cost).sum())
    certified = [c for c in certified if c[0] <= best_feasible + obj_tol]
    if not certified:
        return LpSolution(Status.UNBOUNDED, method="enumerate")
    obj, order, xf, basis, pi, d = min(certified, key=lambda c: (c[0], c[1]))
    x = xf[:n]
    eq = np.zeros(p.n_eq)
    eq[eq_rows] = pi[mg:]
    ineq = np.maximum(-pi[:mg], 0.0)
    dn = d[:n].copy()
    dn[[j for j in basis if j < n]] = 0.0
    z_lo = np.where(np.isfinite(p.lower), np.maximum(dn, 0.0), 0.0)
    z_up = np.where(np.isfinite(p.upper), np.maximum(-dn, 0.0), 0.0)
    return LpSolution(
        Status.OPTIMAL,
        x=x,
        objective=float(p.c @ x),
        eq_duals=eq,
        ineq_duals=ineq,
        lower_duals=z_lo,
        upper_duals=z_up,
        iterations=order,
        method="enumerate",
    )


# ---------------------------------------------------------------------------
# plain-text dump

def write_lp(problem: LpProblem, path) -> None:
    """Write ``problem`` in the sectioned text format described in the README."""
    p = problem
    fmt = lambda v: "inf" if v == np.inf else "-inf" if v == -np.inf else repr(float(v))
    lines = ["# vppcvar LP v1", f"vars {p.n_vars}", f"ineq {p.n_ineq}", f"eq {p.n_eq}"]
    if p.names is not None:
        lines.append("names " + " ".join(p.names))
    lines.append("objective")
    lines += [f"{j} {fmt(v)}" for j, v in enumerate(p.c) if v != 0]
    for label, M, r in (("G", p.G, p.h), ("A", p.A, p.b)):
        lines.append(label)
        coo = sp.coo_matrix(M)
        for i, j, v in sorted(zip(coo.row, coo.col, coo.data)):
            lines.append(f"{i} {j} {fmt(v)}")
        lines.append("h" if label == "G" else "b")
        lines += [f"{i} {fmt(v)}" for i, v in enumerate(r)]
    lines.append("bounds")
    lines += [f"{j} {fmt(lo)} {fmt(hi)}" for j, (lo, hi) in enumerate(zip(p.lower, p.upper))]
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_lp(path) -> LpProblem:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = {}
    it = iter(lines)
    names = None
    for ln in it:
        key, _, rest = ln.partition(" ")
        if key in ("vars", "ineq", "eq"):
            header[key] = int(rest)
        elif key == "names":
            names = tuple(rest.split())
        elif key == "objective":
            break
    n, mg, me = header["vars"], header["ineq"], header["eq"]
    c = np.zeros(n)
    G, h = np.zeros((mg, n)), np.zeros(mg)
    A, b = np.zeros((me, n)), np.zeros(me)
    lower, upper = np.zeros(n), np.full(n, np.inf)
    section = "objective"
    for ln in it:
        if ln in ("G", "h", "A", "b", "bounds", "end"):
            section = ln
            continue
        parts = ln.split()
        if section == "objective":
            c[int(parts[0])] = float(parts[1])
        elif section in ("G", "A"):
            (G if section == "G" else A)[int(parts[0]), int(parts[1])] = float(parts[2])
        elif section in ("h", "b"):
            (h if section == "h" else b)[int(parts[0])] = float(parts[1])
        elif section == "bounds":
            j = int(parts[0])
            lower[j], upper[j] = float(parts[1]), float(parts[2])
    return LpProblem(c, G, h, A, b, lower, upper, names)
