"""Deterministic dense LP solving.

``solve_lp`` minimizes ``c . x`` subject to rows ``A x <= b`` and box bounds.
The workloads here have far more rows than variables (a sampled problem can
stack 10^5 rows onto a handful of variables), so the inequality system is
handed to a two-phase tableau simplex in its standard-form dual:

    min b . lam   s.t.   A^T lam = -c,  lam >= 0

which keeps the tableau at ``d`` rows regardless of the row count.  The primal
optimizer is read off the simplex multipliers of the final basis and verified
against the rows before it is returned.  Pricing is Dantzig's rule with a
switch to Bland's rule after a pivot-count threshold; ties are always broken
by lowest index so identical inputs give bit-identical outputs.

Uniqueness of the returned point (the universal tie-breaking rule) is realized
by lexicographic refinement: when the optimal face may contain more than one
point, the coordinates are minimized one at a time subject to the objective
staying at its optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverNumericalError
from .model import FEASIBILITY_TOL, RowSet, VariableSpec, as_rowset

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
ZERO_SNAP = 1e-11


@dataclass(frozen=True)
class LpOutcome:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None


class _StandardFormResult:
    __slots__ = ("status", "z", "y_candidates", "objective", "pivots", "degenerate")

    def __init__(self, status, z=None, y_candidates=(), objective=None, pivots=0, degenerate=False):
        self.status = status
        self.z = z
        self.y_candidates = y_candidates
        self.objective = objective
        self.pivots = pivots
        self.degenerate = degenerate


def _simplex_standard(M, v, cost, max_pivots=None):
    """Two-phase simplex for ``min cost . z  s.t.  M z = v, z >= 0``.

    Returns a result whose ``y`` holds the simplex multipliers of the final
    basis with respect to the original row order and signs (zero for rows
    found redundant in phase 1), and whose ``degenerate`` flag reports a
    degenerate optimal basis (some basic variable at zero), the signature of
    possibly-multiple optima on the other side of the duality.
    """
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    cost = np.asarray(cost, dtype=float)
    k, n = M.shape

    if max_pivots is None:
        max_pivots = 2000 + 200 * k + n // 25
    dantzig_limit = min(5 * (k + n), 1000 + 20 * k)

    signs = np.where(v < 0, -1.0, 1.0)
    T = np.empty((k, n + k + 1), dtype=float)
    T[:, :n] = M * signs[:, None]
    T[:, n : n + k] = np.eye(k)
    T[:, -1] = v * signs
    basis = np.arange(n, n + k)
    pivots = 0

    upd = np.empty_like(T)

    def run_phase(costvec):
        # Entering candidates are always the first n columns: artificials
        # never re-enter in either phase.
        nonlocal pivots
        r = costvec - costvec[basis] @ T[:, :-1]
        while True:
            if pivots >= max_pivots:
                raise SolverNumericalError(
                    f"simplex exceeded {max_pivots} pivots (cycling guard)"
                )
            rn = r[:n]
            if pivots < dantzig_limit:
                j = int(np.argmin(rn)) if n else 0
                if n == 0 or rn[j] >= -PIVOT_TOL:
                    return "optimal", r
            else:  # Bland's rule
                neg = rn < -PIVOT_TOL
                if not neg.any():
                    return "optimal", r
                j = int(np.argmax(neg))
            col = T[:, j]
            # entries much smaller than the column scale are not acceptable
            # pivots (1/tiny amplifies tableau error); fall back to the bare
            # tolerance before declaring the column unbounded
            colmax = col.max(initial=0.0)
            pos = col > max(1e-7 * colmax, PIVOT_TOL)
            if not pos.any():
                pos = col > PIVOT_TOL
            if not pos.any():
                return "unbounded", r
            nrows = T.shape[0]
            ratios = np.full(nrows, np.inf)
            ratios[pos] = T[pos, -1] / col[pos]
            rmin = ratios.min()
            tie = ratios <= rmin + 1e-12 * (1.0 + abs(rmin))
            rows = np.where(tie)[0]
            i = int(rows[np.argmin(basis[rows])])
            # pivot on (i, j)
            T[i] /= T[i, j]
            colv = col.copy()
            colv[i] = 0.0
            ub = upd[:nrows]
            np.multiply(colv[:, None], T[i][None, :], out=ub)
            np.subtract(T, ub, out=T)
            T[:, j] = 0.0
            T[i, j] = 1.0
            rj = r[j]
            if rj != 0.0:
                r = r - rj * T[i, :-1]
            r[j] = 0.0
            basis[i] = j
            pivots += 1
            rhs = T[:, -1]
            rhs[np.abs(rhs) < ZERO_SNAP] = 0.0
            if pivots % 16 == 0:
                T[np.abs(T) < ZERO_SNAP] = 0.0

    # Phase 1: minimize the artificial sum.
    cost1 = np.zeros(n + k)
    cost1[n:] = 1.0
    status, _ = run_phase(cost1)
    if status != "optimal":  # pragma: no cover - phase 1 is always bounded
        raise SolverNumericalError("phase 1 reported unbounded")
    art_rows = np.where(basis >= n)[0]
    resid = float(T[art_rows, -1].sum()) if art_rows.size else 0.0
    scale1 = 1.0 + float(np.abs(v).max()) if k else 1.0
    if resid > 1e-8 * scale1:
        return _StandardFormResult("infeasible", pivots=pivots)

    # Drive leftover artificials out of the basis; rows that cannot be
    # pivoted are redundant and retire.  Their residual rhs is below the
    # phase-1 tolerance, so it is zeroed before the (possibly negative-
    # element) degenerate pivot.
    keep = np.ones(k, dtype=bool)
    for i in np.where(basis >= n)[0]:
        row = T[i, :n]
        cand = np.where(np.abs(row) > PIVOT_TOL)[0]
        if cand.size == 0:
            keep[i] = False
            continue
        T[i, -1] = 0.0
        j = int(cand[0])
        T[i] /= T[i, j]
        colv = T[:, j].copy()
        colv[i] = 0.0
        T -= np.outer(colv, T[i])
        T[:, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
    row_origin = np.arange(k)
    if not keep.all():
        T = T[keep]
        basis = basis[keep]
        row_origin = row_origin[keep]
    k_live = T.shape[0]

    # Phase 2: the real objective (artificials blocked from entering).
    cost2 = np.zeros(n + k)
    cost2[:n] = cost
    status, _ = run_phase(cost2)
    if status == "unbounded":
        return _StandardFormResult("unbounded", pivots=pivots)

    z = np.zeros(n)
    live_vals = T[:, -1]
    for i in range(k_live):
        if basis[i] < n:
            z[basis[i]] = live_vals[i]
    # Multipliers.  Preferred route: solve the basic system M_B^T y = cost_B
    # in the original data (exact definition of the simplex multipliers,
    # immune to tableau drift).  Fallback: read them off the artificial
    # columns of the exactly-recomputed reduced costs.
    candidates = []
    n_retired = k - k_live
    if n_retired == 0:
        bcols = basis[basis < n]
        if bcols.size == k:
            try:
                y_sys = np.linalg.solve(M[:, bcols].T, cost[bcols])
                candidates.append(y_sys)
            except np.linalg.LinAlgError:
                pass
    r2 = cost2 - cost2[basis] @ T[:, :-1]
    y_tab = signs * (-r2[n : n + k])
    if n_retired:
        y_tab = y_tab.copy()
        y_tab[np.setdiff1d(np.arange(k), row_origin, assume_unique=False)] = 0.0
    candidates.append(y_tab)
    objective = float(cost @ z)
    rhs_scale = 1.0 + float(np.abs(live_vals).max(initial=0.0))
    degenerate = n_retired > 0 or bool(np.any(np.abs(live_vals) <= 1e-9 * rhs_scale))
    return _StandardFormResult(
        "optimal", z=z, y_candidates=candidates, objective=objective, pivots=pivots, degenerate=degenerate
    )


def _bound_rows(lower: np.ndarray, upper: np.ndarray):
    """Finite box bounds as inequality rows: all uppers (e_i), then lowers (-e_i)."""
    d = lower.shape[0]
    iu = np.where(np.isfinite(upper))[0]
    il = np.where(np.isfinite(lower))[0]
    A = np.zeros((iu.size + il.size, d))
    A[np.arange(iu.size), iu] = 1.0
    A[iu.size + np.arange(il.size), il] = -1.0
    b = np.concatenate([upper[iu], -lower[il]])
    return A, b


def _dual_solve(A, b, c, max_pivots=None):
    """Solve ``min c.x, A x <= b`` through its standard-form dual.

    Returns (status, x, objective, degenerate).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    res = _simplex_standard(A.T, -c, b, max_pivots=max_pivots)
    if res.status == "unbounded":
        # dual unbounded <=> primal infeasible
        return INFEASIBLE, None, None, False
    if res.status == "infeasible":
        # primal is unbounded or infeasible; disambiguated by the caller
        return UNBOUNDED, None, None, False
    objective = -res.objective  # min c.x = -(min b.lam)
    feas_tol = 1e-7 * (1.0 + float(np.abs(b).max(initial=0.0)))
    worst = None
    for x in res.y_candidates:
        viol = -float((b - A @ x).min()) if len(b) else 0.0
        gap = abs(float(c @ x) - objective)
        if viol <= feas_tol and gap <= 1e-6 * (1.0 + abs(objective)):
            return OPTIMAL, x, float(c @ x), res.degenerate
        worst = (viol, gap)
    raise SolverNumericalError(
        f"recovered point fails checks (violation {worst[0]:.3e}, gap {worst[1]:.3e})"
    )


def _feasibility_probe(A, b, max_pivots=None) -> bool:
    """True iff ``A x <= b`` has a solution (min-violation LP at optimum 0)."""
    m, d = A.shape
    At = np.hstack([A, -np.ones((m, 1))])
    t_row = np.zeros((1, d + 1))
    t_row[0, -1] = -1.0  # -t <= 0
    A_ext = np.vstack([At, t_row])
    b_ext = np.concatenate([b, [0.0]])
    c_ext = np.zeros(d + 1)
    c_ext[-1] = 1.0
    status, _, obj, _ = _dual_solve(A_ext, b_ext, c_ext, max_pivots=max_pivots)
    if status != OPTIMAL:  # pragma: no cover - probe LP is feasible and bounded
        raise SolverNumericalError("feasibility probe failed to solve")
    return obj <= 1e-7 * (1.0 + float(np.abs(b).max(initial=0.0)))


def _lex_refine(A, b, c, objective, max_pivots=None):
    """Lexicographically smallest point of the optimal face, or None.

    Minimizes x_0, then x_1, ... subject to ``c . x`` pinned at the optimum.
    Returns None when a coordinate is unbounded below on the face (no
    lexicographic minimum exists) or the refined point fails verification.
    """
    d = A.shape[1]
    A_cur = np.vstack([A, c[None, :]])
    b_cur = np.concatenate([b, [objective]])
    vals = np.empty(d)
    for kk in range(d):
        ek = np.zeros(d)
        ek[kk] = 1.0
        try:
            status, _, vk, _ = _dual_solve(A_cur, b_cur, ek, max_pivots=max_pivots)
        except SolverNumericalError:
            return None  # refinement is best-effort; the base point stands
        if status != OPTIMAL:
            return None
        vals[kk] = vk
        A_cur = np.vstack([A_cur, ek[None, :]])
        b_cur = np.concatenate([b_cur, [vk]])
    slack = b - A @ vals if len(b) else np.zeros(0)
    feas_tol = 1e-6 * (1.0 + float(np.abs(b).max(initial=0.0)))
    if len(slack) and float(slack.min()) < -feas_tol:
        return None
    if abs(float(c @ vals) - objective) > 1e-6 * (1.0 + abs(objective)):
        return None
    return vals


def _resolve_bounds(bounds, d):
    if bounds is None:
        return np.full(d, -np.inf), np.full(d, np.inf)
    if isinstance(bounds, VariableSpec):
        return bounds.lower, bounds.upper
    lower, upper = bounds
    return np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)


# Lexicographic refinement runs d extra stage LPs; past this dimension the
# deterministic pivot order alone provides reproducibility and the refinement
# cost would dwarf the solve itself.
REFINE_DIM_CAP = 16


def solve_lp(c, cons, bounds=None, *, refine="auto", max_pivots=None) -> LpOutcome:
    """Minimize ``c . x`` over rows ``a . x <= b`` plus box bounds.

    ``cons`` is a RowSet or list of LinearConstraint (may be empty);
    ``bounds`` a VariableSpec, an (lower, upper) pair, or None.  ``refine``
    controls lexicographic tie-breaking: "auto" refines when the optimal
    basis shows signs of alternate optima (and the dimension is modest),
    "always"/"never" force it.  Infeasible and Unbounded are statuses, not
    errors.
    """
    c = np.asarray(c, dtype=float)
    d = c.shape[0]
    rows = as_rowset(cons, d=d)
    lower, upper = _resolve_bounds(bounds, d)
    Ab, bb = _bound_rows(lower, upper)
    A = np.vstack([rows.A, Ab]) if len(rows) else Ab
    b = np.concatenate([rows.b, bb]) if len(rows) else bb

    status, x, objective, degenerate = _dual_solve(A, b, c, max_pivots=max_pivots)
    if status == UNBOUNDED:
        feasible = _feasibility_probe(A, b, max_pivots=max_pivots) if len(b) else True
        return LpOutcome(UNBOUNDED if feasible else INFEASIBLE)
    if status == INFEASIBLE:
        return LpOutcome(INFEASIBLE)

    if refine == "always" or (refine == "auto" and degenerate and d <= REFINE_DIM_CAP):
        refined = _lex_refine(A, b, c, objective, max_pivots=max_pivots)
        if refined is not None:
            x = refined
            objective = float(c @ x)
    return LpOutcome(OPTIMAL, x=x, objective=objective)
