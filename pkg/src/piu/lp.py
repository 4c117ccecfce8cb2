"""Linear programs ``min c.x  s.t.  A x <= b,  lb <= x <= ub``.

The default backend is a dense two-phase tableau simplex with Bland's
anti-cycling rule. Large, sparse problems can be routed to HiGHS through
scipy with ``method="highs"`` or ``method="highs-ipm"`` (interior point
followed by crossover to a vertex).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITERATION_LIMIT = "IterationLimit"


@dataclass
class LPProblem:
    c: np.ndarray
    A: np.ndarray  # dense array or scipy sparse matrix
    b: np.ndarray
    lb: np.ndarray | None = None  # defaults to 0
    ub: np.ndarray | None = None  # defaults to +inf

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.shape[0]
        if sp.issparse(self.A):
            self.A = sp.csr_matrix(self.A, dtype=float)
        else:
            self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).reshape(-1)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).reshape(-1)
        if self.A.shape != (self.b.shape[0], n):
            raise ValueError(f"A has shape {self.A.shape}, expected ({self.b.shape[0]}, {n})")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        data = self.A.data if sp.issparse(self.A) else self.A
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(data)) and np.all(np.isfinite(self.b))):
            raise ValueError("c, A and b must be finite")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise ValueError("bounds must admit at least one real value")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = math.nan
    duals: np.ndarray | None = None  # multipliers (<= 0) of the A x <= b rows
    iterations: int = 0


class _IterLimit(Exception):
    pass


def _bland(A, b, cost, basis, allowed, budget):
    """Revised simplex with Bland's rule on {A x = b, x >= 0}.

    The basis is re-factorised every iteration, so round-off does not
    accumulate across pivots. Returns ("optimal" | "unbounded", iterations);
    raises _IterLimit past ``budget``.
    """
    it = 0
    ctol = 1e-9 * max(1.0, float(np.abs(cost).max()) if cost.size else 1.0)
    while True:
        lu = lu_factor(A[:, basis])
        xB = lu_solve(lu, b)
        y = lu_solve(lu, cost[basis], trans=1)
        red = cost - A.T @ y
        red[basis] = 0.0
        cand = np.flatnonzero((red < -ctol) & allowed)
        j, rows = -1, None
        for c in cand:
            dcol = lu_solve(lu, A[:, c])
            rows = np.flatnonzero(dcol > 1e-7 * max(1.0, float(np.abs(dcol).max())))
            if rows.size or red[c] < -1e3 * ctol:
                j = int(c)
                break
            # a barely negative reduced cost with no pivot row is round-off
            # from an ill-conditioned basis, not a ray; skip the column
        if j < 0:
            return "optimal", it
        if rows.size == 0:
            return "unbounded", it
        ratios = np.maximum(xB[rows], 0.0) / dcol[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, best)]
        r = int(min(ties, key=lambda i: basis[i]))
        if it >= budget:
            raise _IterLimit
        basis[r] = j
        it += 1


def _simplex(prob: LPProblem, feas_tol: float, max_iter: int | None) -> LPSolution:
    n = prob.n_vars
    A = prob.A.toarray() if sp.issparse(prob.A) else prob.A
    lb, ub = prob.lb, prob.ub
    if np.any(ub - lb < 0):
        return LPSolution(INFEASIBLE)

    # map every original variable to non-negative internal ones: x = off + M y
    cols: list[tuple[int, float]] = []  # (original index, sign)
    off = np.zeros(n)
    extra_rows: list[tuple[int, float]] = []  # (internal column, bound) for y <= bound
    for i in range(n):
        if np.isfinite(lb[i]):
            off[i] = lb[i]
            cols.append((i, 1.0))
            if np.isfinite(ub[i]):
                extra_rows.append((len(cols) - 1, ub[i] - lb[i]))
        elif np.isfinite(ub[i]):
            off[i] = ub[i]
            cols.append((i, -1.0))
        else:
            cols.append((i, 1.0))
            cols.append((i, -1.0))
    ny = len(cols)
    M = np.zeros((n, ny))
    for k, (i, s) in enumerate(cols):
        M[i, k] = s

    Ay = A @ M
    by = prob.b - A @ off
    if extra_rows:
        E = np.zeros((len(extra_rows), ny))
        for r, (k, _) in enumerate(extra_rows):
            E[r, k] = 1.0
        Ay = np.vstack([Ay, E])
        by = np.concatenate([by, [bound for _, bound in extra_rows]])
    cy = M.T @ prob.c
    m = Ay.shape[0]
    if m == 0:
        if np.any(cy < 0):
            return LPSolution(UNBOUNDED)
        x = off.copy()
        return LPSolution(OPTIMAL, x, float(prob.c @ x), np.zeros(0), 0)

    # equality form: columns y (ny) | slacks (m) | artificials (negative-rhs rows)
    sign = np.where(by < 0, -1.0, 1.0)
    neg = np.flatnonzero(by < 0)
    na = neg.size
    Aeq = np.zeros((m, ny + m + na))
    Aeq[:, :ny] = Ay * sign[:, None]
    Aeq[:, ny : ny + m] = np.diag(sign)
    Aeq[neg, ny + m + np.arange(na)] = 1.0
    beq = by * sign
    basis = list(range(ny, ny + m))
    for a, r in enumerate(neg):
        basis[r] = ny + m + a

    budget = max_iter if max_iter is not None else 50 * (m + ny + m)
    used = 0
    rows_kept = np.arange(m)
    try:
        if na:
            cost1 = np.zeros(Aeq.shape[1])
            cost1[ny + m :] = 1.0
            _, it = _bland(Aeq, beq, cost1, basis, np.ones(Aeq.shape[1], dtype=bool), budget)
            used += it
            xB = lu_solve(lu_factor(Aeq[:, basis]), beq)
            infeas = float(sum(v for v, j in zip(xB, basis) if j >= ny + m))
            if infeas > feas_tol * max(1.0, float(np.abs(beq).max())):
                return LPSolution(INFEASIBLE, iterations=used)
            # drive zero-level artificials out of the basis; drop redundant rows
            keep = np.ones(m, dtype=bool)
            for r in range(m):
                if basis[r] < ny + m:
                    continue
                row = lu_solve(lu_factor(Aeq[:, basis]), np.eye(m)[r], trans=1) @ Aeq[:, : ny + m]
                row[[j for j in basis if j < ny + m]] = 0.0
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    basis[r] = int(nz[0])
                else:
                    keep[r] = False
            rows_kept = np.flatnonzero(keep)
            basis = [basis[r] for r in rows_kept]
            Aeq, beq = Aeq[rows_kept, : ny + m], beq[rows_kept]
        cost2 = np.zeros(Aeq.shape[1])
        cost2[:ny] = cy
        status, it = _bland(Aeq, beq, cost2, basis, np.ones(Aeq.shape[1], dtype=bool), budget - used)
        used += it
    except _IterLimit:
        return LPSolution(ITERATION_LIMIT, iterations=budget)
    if status == "unbounded":
        return LPSolution(UNBOUNDED, iterations=used)

    lu = lu_factor(Aeq[:, basis])
    z = np.zeros(Aeq.shape[1])
    z[basis] = np.maximum(lu_solve(lu, beq), 0.0)
    x = off + M @ z[:ny]
    # clean tiny bound violations left by round-off
    x = np.minimum(np.maximum(x, lb), ub)
    y_eq = lu_solve(lu, cost2[basis], trans=1)
    y_all = np.zeros(m)
    y_all[rows_kept] = y_eq
    duals = (sign * y_all)[: prob.n_rows]
    return LPSolution(OPTIMAL, x, float(prob.c @ x), duals, used)


def _highs(prob: LPProblem, feas_tol: float, max_iter: int | None, method: str = "highs") -> LPSolution:
    from scipy.optimize import linprog

    options = {"primal_feasibility_tolerance": max(feas_tol, 1e-10), "dual_feasibility_tolerance": max(feas_tol, 1e-10)}
    if max_iter is not None:
        options["maxiter"] = int(max_iter)
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(u) else u) for l, u in zip(prob.lb, prob.ub)]
    res = linprog(
        prob.c,
        A_ub=prob.A if prob.n_rows else None,
        b_ub=prob.b if prob.n_rows else None,
        bounds=bounds,
        method=method,
        options=options,
    )
    if res.status == 0:
        duals = np.asarray(res.ineqlin.marginals) if prob.n_rows else np.zeros(0)
        return LPSolution(OPTIMAL, np.asarray(res.x), float(res.fun), duals, int(res.nit))
    if res.status == 2:
        return LPSolution(INFEASIBLE, iterations=int(res.nit))
    if res.status == 3:
        return LPSolution(UNBOUNDED, iterations=int(res.nit))
    return LPSolution(ITERATION_LIMIT, iterations=int(getattr(res, "nit", 0)))


def solve_lp(
    prob: LPProblem,
    feas_tol: float = 1e-9,
    max_iter: int | None = None,
    method: str = "simplex",
) -> LPSolution:
    """Solve ``prob``; failures are reported through ``status``, not raised.

    ``max_iter`` defaults to 50 * (rows + columns) of the internal tableau.
    """
    if method == "simplex":
        return _simplex(prob, feas_tol, max_iter)
    if method in ("highs", "highs-ipm", "highs-ds"):
        return _highs(prob, feas_tol, max_iter, method)
    raise ValueError(f"unknown LP method {method!r}")


def max_violation(prob: LPProblem, x: np.ndarray) -> float:
    """Largest violation of any row or bound at x (0 when feasible)."""
    viol = 0.0
    if prob.n_rows:
        viol = max(viol, float(np.max(prob.A @ x - prob.b)))
    viol = max(viol, float(np.max(prob.lb - x)), float(np.max(x - prob.ub)))
    return max(viol, 0.0)


def dump_lp(prob: LPProblem) -> str:
    """Plain-text layout for failure triage: objective, then one line per row, then bounds."""
    buf = io.StringIO()
    A = prob.A.toarray() if sp.issparse(prob.A) else prob.A
    buf.write("min " + " ".join(repr(float(v)) for v in prob.c) + "\n")
    for row, rhs in zip(A, prob.b):
        buf.write(" ".join(repr(float(v)) for v in row) + " <= " + repr(float(rhs)) + "\n")
    buf.write("lb " + " ".join(repr(float(v)) for v in prob.lb) + "\n")
    buf.write("ub " + " ".join(repr(float(v)) for v in prob.ub) + "\n")
    return buf.getvalue()
