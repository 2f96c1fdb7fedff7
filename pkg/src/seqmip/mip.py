"""Mixed-integer solving: branch and bound plus basis identification.

``solve_mip`` is the optimisation primitive used everywhere: it solves
``min c . x`` over an explicit row set with the integrality pattern of a
VariableSpec, deterministically.  ``find_basis`` reduces a solved row set to
an irreducible defining subset by re-solving with one constraint dropped at a
time: a row stays exactly when dropping it makes the objective strictly
smaller.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ModelSpecError, NodeLimitError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from .model import (
    Basis,
    INTEGRALITY_TOL,
    RowSet,
    Solution,
    VariableSpec,
    as_rowset,
)

DEFAULT_NODE_LIMIT = 10**6


@dataclass(frozen=True)
class MipOutcome:
    status: str
    solution: Solution | None = None
    nodes_explored: int = 0

    @property
    def objective(self) -> float | None:
        return None if self.solution is None else self.solution.objective


@dataclass
class SolveStats:
    """Mutable counters threaded through nested solves for instrumentation."""

    solves: int = 0
    nodes: int = 0

    def add(self, outcome: MipOutcome):
        self.solves += 1
        self.nodes += outcome.nodes_explored


def _lex_less(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    for ai, bi in zip(a, b):
        if ai < bi - tol:
            return True
        if ai > bi + tol:
            return False
    return False


def _fix_and_polish(c, rows: RowSet, vars: VariableSpec, lower, upper, x, int_tol):
    """Re-solve with integer variables pinned to their rounded values."""
    xi = np.round(x[vars.d_r :])
    lo = lower.copy()
    hi = upper.copy()
    lo[vars.d_r :] = xi
    hi[vars.d_r :] = xi
    out = solve_lp(c, rows, (lo, hi), refine="auto")
    if out.status != OPTIMAL:
        # numerically marginal rounding; keep the relaxation point as-is
        return x
    return out.x


def solve_mip(
    c,
    cons,
    vars: VariableSpec,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    int_tol: float = INTEGRALITY_TOL,
) -> MipOutcome:
    """Solve ``min c . x`` over rows plus the bounds/integrality of ``vars``.

    Branch and bound, best-first on the LP bound, branching on the most
    fractional integer variable (ties to the lowest index), floor child
    first.  Repeated calls on identical inputs agree bit-exactly.  Exceeding
    ``node_limit`` raises :class:`NodeLimitError` carrying the incumbent.
    """
    c = np.asarray(c, dtype=float)
    rows = as_rowset(cons, d=vars.d)
    if vars.d_z == 0:
        out = solve_lp(c, rows, vars)
        if out.status != OPTIMAL:
            return MipOutcome(out.status, nodes_explored=1)
        return MipOutcome(OPTIMAL, Solution(out.x, out.objective), nodes_explored=1)

    int_slice = slice(vars.d_r, vars.d)
    if not (
        np.all(np.isfinite(vars.lower[int_slice]))
        and np.all(np.isfinite(vars.upper[int_slice]))
    ):
        raise ModelSpecError("integer variables must have finite bounds")

    incumbent_x = None
    incumbent_obj = np.inf
    nodes = 0
    counter = 0
    # heap entries: (parent LP bound, insertion counter, lower, upper)
    heap = [(-np.inf, counter, vars.lower.copy(), vars.upper.copy())]
    unbounded = False

    while heap:
        bound, _, lo, hi = heapq.heappop(heap)
        if incumbent_x is not None and bound >= incumbent_obj - 1e-9 * (
            1.0 + abs(incumbent_obj)
        ):
            continue
        nodes += 1
        if nodes > node_limit:
            inc = (
                Solution(incumbent_x, float(c @ incumbent_x))
                if incumbent_x is not None
                else None
            )
            raise NodeLimitError(
                f"branch and bound exceeded {node_limit} nodes", incumbent=inc, nodes_explored=nodes
            )
        relax = solve_lp(c, rows, (lo, hi), refine="never")
        if relax.status == INFEASIBLE:
            continue
        if relax.status == UNBOUNDED:
            unbounded = True
            break
        if incumbent_x is not None and relax.objective >= incumbent_obj - 1e-9 * (
            1.0 + abs(incumbent_obj)
        ):
            continue
        x = relax.x
        xi = x[int_slice]
        frac = np.abs(xi - np.round(xi))
        if np.all(frac <= int_tol):
            x_fixed = _fix_and_polish(c, rows, vars, lo, hi, x, int_tol)
            obj = float(c @ x_fixed)
            if obj < incumbent_obj - 1e-9 * (1.0 + abs(obj)) or (
                incumbent_x is not None
                and abs(obj - incumbent_obj) <= 1e-9 * (1.0 + abs(obj))
                and _lex_less(x_fixed, incumbent_x)
            ):
                incumbent_obj = obj
                incumbent_x = x_fixed
            continue
        # branch on the variable closest to half-integrality, lowest index first
        dist_half = np.abs(frac - 0.5)
        dist_half[frac <= int_tol] = np.inf
        j = int(np.argmin(dist_half))
        var = vars.d_r + j
        floor_hi = hi.copy()
        floor_hi[var] = np.floor(x[var])
        ceil_lo = lo.copy()
        ceil_lo[var] = np.ceil(x[var])
        counter += 1
        heapq.heappush(heap, (relax.objective, counter, lo, floor_hi))
        counter += 1
        heapq.heappush(heap, (relax.objective, counter, ceil_lo, hi))

    if unbounded:
        return MipOutcome(UNBOUNDED, nodes_explored=nodes)
    if incumbent_x is None:
        return MipOutcome(INFEASIBLE, nodes_explored=nodes)
    return MipOutcome(OPTIMAL, Solution(incumbent_x, incumbent_obj), nodes_explored=nodes)


def basis_tolerance(objective: float) -> float:
    """A dropped row "decreases the objective" iff J drops by more than this."""
    return max(1e-9, 1e-9 * abs(objective))


def objective_drops_below(
    c,
    cons,
    vars: VariableSpec,
    cutoff: float,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    stats: SolveStats | None = None,
) -> bool:
    """Decide whether ``min c . x`` over the rows is strictly below ``cutoff``.

    Same branch and bound as :func:`solve_mip` but pruned at the cutoff and
    stopped at the first integral point below it, so the decision costs a
    small fraction of a full solve.  Equivalent to solving and comparing.
    """
    c = np.asarray(c, dtype=float)
    rows = as_rowset(cons, d=vars.d)
    nodes = 0
    if vars.d_z == 0:
        out = solve_lp(c, rows, vars)
        if stats is not None:
            stats.solves += 1
            stats.nodes += 1
        if out.status == UNBOUNDED:
            return True
        return out.status == OPTIMAL and out.objective < cutoff

    counter = 0
    heap = [(-np.inf, counter, vars.lower.copy(), vars.upper.copy())]
    int_slice = slice(vars.d_r, vars.d)
    decided = False
    while heap:
        bound, _, lo, hi = heapq.heappop(heap)
        if bound >= cutoff:
            continue
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitError(
                f"drop test exceeded {node_limit} nodes", nodes_explored=nodes
            )
        relax = solve_lp(c, rows, (lo, hi), refine="never")
        if relax.status == INFEASIBLE:
            continue
        if relax.status == UNBOUNDED:
            decided = True
            break
        if relax.objective >= cutoff:
            continue
        x = relax.x
        xi = x[int_slice]
        frac = np.abs(xi - np.round(xi))
        if np.all(frac <= INTEGRALITY_TOL):
            x_fixed = _fix_and_polish(c, rows, vars, lo, hi, x, INTEGRALITY_TOL)
            if float(c @ x_fixed) < cutoff:
                decided = True
                break
            continue
        dist_half = np.abs(frac - 0.5)
        dist_half[frac <= INTEGRALITY_TOL] = np.inf
        j = int(np.argmin(dist_half))
        var = vars.d_r + j
        floor_hi = hi.copy()
        floor_hi[var] = np.floor(x[var])
        ceil_lo = lo.copy()
        ceil_lo[var] = np.ceil(x[var])
        counter += 1
        heapq.heappush(heap, (relax.objective, counter, lo, floor_hi))
        counter += 1
        heapq.heappush(heap, (relax.objective, counter, ceil_lo, hi))
    if stats is not None:
        stats.solves += 1
        stats.nodes += nodes
    return decided


def _dominance_filter(rows: RowSet) -> RowSet:
    """Drop rows implied by a tighter row with identical coefficients.

    Among rows sharing a coefficient vector only the smallest rhs matters;
    rhs ties keep the highest id, matching what the ascending greedy scan
    would have kept.
    """
    if len(rows) <= 1:
        return rows
    groups: dict[bytes, int] = {}
    order = sorted(range(len(rows)), key=lambda i: rows.ids[i])
    for i in order:
        key = rows.A[i].tobytes()
        j = groups.get(key)
        if j is None or rows.b[i] <= rows.b[j]:
            groups[key] = i
    keep = sorted(groups.values(), key=lambda i: rows.ids[i])
    if len(keep) == len(rows):
        return rows.sorted_by_id()
    return rows.take(keep)


def find_basis(
    c,
    cons,
    vars: VariableSpec,
    opt: MipOutcome,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    use_active_prefilter: bool = True,
    mode: str = "irreducible",
    stats: SolveStats | None = None,
) -> Basis:
    """Defining subset of a solved row set.

    In the default "irreducible" mode rows are tested one at a time in
    ascending id order against the current retained set; a row is kept iff
    solving without it yields a strictly smaller objective (or an unbounded
    problem).  Two exact pre-filters keep the number of re-solves small:
    coefficient-duplicate rows collapse to the tightest rhs, and, when it
    preserves the objective, the scan is restricted to the rows active at the
    optimum in a single batch test.

    Mode "light" stops after the pre-filters when the active-set batch test
    succeeds: the result still defines the same optimum but is not pruned to
    irreducibility (a defining set need not be of minimal cardinality).
    """
    if opt.status != OPTIMAL:
        raise ModelSpecError("find_basis requires an Optimal outcome")
    rows = as_rowset(cons, d=vars.d).sorted_by_id()
    j_star = opt.solution.objective
    tol = basis_tolerance(j_star)

    retained = _dominance_filter(rows)

    def drops(subset: RowSet) -> bool:
        return objective_drops_below(
            c, subset, vars, j_star - tol, node_limit=node_limit, stats=stats
        )

    if use_active_prefilter and len(retained) > 1:
        x = opt.solution.x
        slack = retained.b - retained.A @ x
        act_tol = 1e-7 * (1.0 + np.abs(retained.b))
        active_idx = np.where(slack <= act_tol)[0]
        if len(active_idx) < len(retained):
            candidate = retained.take(active_idx)
            if not drops(candidate):
                retained = candidate
                if mode == "light":
                    return Basis(tuple(retained.ids))
    if mode == "light" and len(retained) <= vars.d + 1:
        # already at defining-set scale; skip the irreducibility scan
        return Basis(tuple(retained.ids))

    # Greedy scan in ascending id order, accelerated by binary splitting:
    # a window of consecutive candidates is dropped in one test when removing
    # it jointly preserves the objective.  Because passing single drops
    # commute (the objective is monotone under row removal), the final set is
    # identical to testing rows one at a time.
    def reduce_window(window: tuple):
        nonlocal retained
        members = frozenset(window)
        keep_pos = [i for i in range(len(retained)) if retained.ids[i] not in members]
        test = retained.take(keep_pos)
        if not drops(test):
            retained = test
            return
        if len(window) == 1:
            return  # load-bearing row stays
        mid = len(window) // 2
        reduce_window(window[:mid])
        reduce_window(window[mid:])

    if len(retained) > 0:
        reduce_window(retained.ids)

    return Basis(tuple(retained.ids))


def find_basis_rows(
    c,
    cons,
    vars: VariableSpec,
    opt: MipOutcome,
    **kwargs,
) -> tuple[Basis, RowSet]:
    """As :func:`find_basis`, also returning the retained rows themselves."""
    rows = as_rowset(cons, d=vars.d)
    basis = find_basis(c, rows, vars, opt, **kwargs)
    index = {cid: i for i, cid in enumerate(rows.ids)}
    keep = [index[cid] for cid in basis.members]
    return basis, rows.take(keep)
