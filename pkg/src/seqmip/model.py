"""Core domain types: variables, constraints, problems, solutions, bases.

All types are immutable after construction (arrays are marked read-only), so
they can be shared freely across threads for read-only evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ModelSpecError, OverflowSaturationError

# Default tolerances.  Feasibility is absolute on constraint slack; the
# integrality tolerance bounds the distance of an integer variable from the
# nearest integer.
FEASIBILITY_TOL = 1e-8
INTEGRALITY_TOL = 1e-6


class ConstraintId(NamedTuple):
    """Identifies one constraint row as (sample index, row index within block)."""

    sample: int
    row: int


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class VariableSpec:
    """Counts and bounds of the decision vector.

    The vector is laid out continuous-first: indices ``0..d_r-1`` are
    continuous, ``d_r..d-1`` are integer.  Bounds may be infinite, but the
    mixed-integer solver requires finite bounds on integer variables.
    """

    d_r: int
    d_z: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.d_r < 0 or self.d_z < 0 or self.d_r + self.d_z < 1:
            raise ModelSpecError(
                f"need d_r >= 0, d_z >= 0, d_r + d_z >= 1; got ({self.d_r}, {self.d_z})"
            )
        lower = _freeze(np.asarray(self.lower, dtype=float))
        upper = _freeze(np.asarray(self.upper, dtype=float))
        d = self.d_r + self.d_z
        if lower.shape != (d,) or upper.shape != (d,):
            raise ModelSpecError(
                f"bounds must have length d={d}; got {lower.shape} / {upper.shape}"
            )
        if np.any(lower > upper):
            bad = int(np.argmax(lower > upper))
            raise ModelSpecError(f"lower[{bad}] > upper[{bad}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def d(self) -> int:
        return self.d_r + self.d_z

    @property
    def integer_mask(self) -> np.ndarray:
        mask = np.zeros(self.d, dtype=bool)
        mask[self.d_r :] = True
        return mask

    @classmethod
    def box(cls, d_r: int, d_z: int, lo: float, hi: float) -> "VariableSpec":
        d = d_r + d_z
        return cls(d_r, d_z, np.full(d, float(lo)), np.full(d, float(hi)))


@dataclass(frozen=True)
class LinearConstraint:
    """A single row ``a . x <= b``."""

    id: ConstraintId
    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _freeze(np.asarray(self.a, dtype=float))
        if a.ndim != 1:
            raise ModelSpecError("coefficient vector must be one-dimensional")
        if not np.any(a != 0.0):
            raise ModelSpecError(f"constraint {self.id} has an all-zero row")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))


class RowSet:
    """Dense bundle of constraint rows: matrix ``A``, rhs ``b``, row ids.

    The solver-facing representation; ``LinearConstraint`` lists are converted
    on the way in.  Instances are immutable.
    """

    __slots__ = ("A", "b", "ids")

    def __init__(self, A: np.ndarray, b: np.ndarray, ids: Sequence[ConstraintId]):
        self.A = _freeze(np.atleast_2d(np.asarray(A, dtype=float)))
        self.b = _freeze(np.asarray(b, dtype=float).ravel())
        self.ids = tuple(ids)
        if self.A.shape[0] != self.b.shape[0] or self.A.shape[0] != len(self.ids):
            raise ModelSpecError("RowSet arrays and id list disagree in length")

    def __len__(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @classmethod
    def empty(cls, d: int) -> "RowSet":
        return cls(np.zeros((0, d)), np.zeros(0), ())

    @classmethod
    def from_constraints(cls, cons: Iterable[LinearConstraint]) -> "RowSet":
        cons = list(cons)
        if not cons:
            raise ModelSpecError("cannot build a RowSet from zero constraints; use empty(d)")
        d = cons[0].a.shape[0]
        A = np.vstack([c.a for c in cons])
        if A.shape[1] != d or any(c.a.shape[0] != d for c in cons):
            raise ModelSpecError("constraints have inconsistent dimensions")
        return cls(A, np.array([c.b for c in cons]), [c.id for c in cons])

    def to_constraints(self) -> list[LinearConstraint]:
        return [
            LinearConstraint(self.ids[i], self.A[i], float(self.b[i]))
            for i in range(len(self))
        ]

    def take(self, indices) -> "RowSet":
        idx = np.asarray(indices, dtype=int)
        return RowSet(self.A[idx], self.b[idx], [self.ids[i] for i in idx])

    def concat(self, other: "RowSet") -> "RowSet":
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        return RowSet(
            np.vstack([self.A, other.A]),
            np.concatenate([self.b, other.b]),
            self.ids + other.ids,
        )

    def sorted_by_id(self) -> "RowSet":
        order = sorted(range(len(self)), key=lambda i: self.ids[i])
        if order == list(range(len(self))):
            return self
        return self.take(order)


def as_rowset(cons, d: int | None = None) -> RowSet:
    """Normalize a constraint collection to a RowSet."""
    if isinstance(cons, RowSet):
        return cons
    cons = list(cons)
    if not cons:
        if d is None:
            raise ModelSpecError("empty constraint list needs an explicit dimension")
        return RowSet.empty(d)
    return RowSet.from_constraints(cons)


@dataclass(frozen=True)
class ConstraintBlock:
    """All constraint rows instantiated at one uncertainty sample."""

    sample_index: int
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = _freeze(np.atleast_2d(np.asarray(self.A, dtype=float)))
        b = _freeze(np.asarray(self.b, dtype=float).ravel())
        if A.shape[0] != b.shape[0]:
            raise ModelSpecError("block matrix and rhs disagree in row count")
        if A.shape[0] < 1:
            raise ModelSpecError("a constraint block needs at least one row")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def rows(self) -> list[LinearConstraint]:
        return [
            LinearConstraint(ConstraintId(self.sample_index, j), self.A[j], float(self.b[j]))
            for j in range(self.n_rows)
        ]

    def rowset(self) -> RowSet:
        ids = [ConstraintId(self.sample_index, j) for j in range(self.n_rows)]
        return RowSet(self.A, self.b, ids)


@dataclass
class SampledProblem:
    """Objective plus N indexed constraint blocks; what both algorithms consume."""

    vars: VariableSpec
    c: np.ndarray
    blocks: list[ConstraintBlock]
    _stacked: RowSet | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        c = _freeze(np.asarray(self.c, dtype=float))
        if c.shape != (self.vars.d,):
            raise ModelSpecError(f"objective must have length d={self.vars.d}")
        object.__setattr__(self, "c", c)
        if not self.blocks:
            raise ModelSpecError("a sampled problem needs at least one block")
        for i, blk in enumerate(self.blocks, start=1):
            if blk.sample_index != i:
                raise ModelSpecError(
                    f"block sample indices must run 1..N with no gaps; "
                    f"position {i} holds sample {blk.sample_index}"
                )
            if blk.A.shape[1] != self.vars.d:
                raise ModelSpecError(f"block {i} rows have wrong dimension")

    @property
    def n_samples(self) -> int:
        return len(self.blocks)

    @property
    def total_rows(self) -> int:
        return sum(blk.n_rows for blk in self.blocks)

    def block(self, sample_index: int) -> ConstraintBlock:
        return self.blocks[sample_index - 1]

    def stacked(self) -> RowSet:
        """All rows of all blocks as one RowSet (cached)."""
        if self._stacked is None:
            parts = [blk.rowset() for blk in self.blocks]
            A = np.vstack([p.A for p in parts])
            b = np.concatenate([p.b for p in parts])
            ids: list[ConstraintId] = []
            for p in parts:
                ids.extend(p.ids)
            self._stacked = RowSet(A, b, ids)
        return self._stacked

    def rows_for(self, ids: Iterable[ConstraintId]) -> RowSet:
        ids = list(ids)
        A = np.vstack([self.block(s).A[r] for s, r in ids]) if ids else np.zeros((0, self.vars.d))
        b = np.array([self.block(s).b[r] for s, r in ids])
        return RowSet(A, b, ids)


@dataclass(frozen=True)
class Solution:
    """A candidate point and its objective value."""

    x: np.ndarray
    objective: float

    def __post_init__(self):
        object.__setattr__(self, "x", _freeze(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "objective", float(self.objective))


@dataclass(frozen=True)
class Basis:
    """Ordered set of constraint ids: the minimal defining set of a solution."""

    members: tuple[ConstraintId, ...]

    def __post_init__(self):
        members = tuple(ConstraintId(*m) for m in self.members)
        if len(set(members)) != len(members):
            raise ModelSpecError("basis contains duplicate constraint ids")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members

    def as_set(self) -> frozenset[ConstraintId]:
        return frozenset(self.members)


def combinatorial_dimension(vars: VariableSpec) -> int:
    """Largest possible basis cardinality: ``(d_r + 1) * 2**d_z - 1``."""
    if vars.d_z > 62:
        raise OverflowSaturationError(
            f"2**{vars.d_z} exceeds the 64-bit count range; "
            "callers must fall back to a capped initialization"
        )
    return (vars.d_r + 1) * (1 << vars.d_z) - 1


def combinatorial_dimension_capped(vars: VariableSpec, cap: int = 1 << 62) -> int:
    """Like :func:`combinatorial_dimension` but saturating at ``cap``."""
    try:
        return min(combinatorial_dimension(vars), cap)
    except OverflowSaturationError:
        return cap


def evaluate_slack(con: LinearConstraint, x: np.ndarray) -> float:
    """Slack ``b - a . x``; nonnegative means satisfied."""
    x = np.asarray(x, dtype=float)
    if x.shape != con.a.shape:
        raise ModelSpecError(
            f"dimension mismatch: constraint has {con.a.shape[0]} coefficients, "
            f"point has {x.shape[0]}"
        )
    return float(con.b - con.a @ x)


def is_feasible(
    x: np.ndarray,
    cons: Iterable[LinearConstraint] | RowSet,
    vars: VariableSpec,
    tol: float = FEASIBILITY_TOL,
    int_tol: float = INTEGRALITY_TOL,
) -> bool:
    """True iff all slacks >= -tol, bounds hold within tol, integers integral."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x = np.asarray(x, dtype=float)
    rows = as_rowset(cons, d=vars.d)
    if rows.d != x.shape[0] or vars.d != x.shape[0]:
        raise ModelSpecError("dimension mismatch between point, constraints, and vars")
    if len(rows) and np.min(rows.b - rows.A @ x) < -tol:
        return False
    if np.any(x < vars.lower - tol) or np.any(x > vars.upper + tol):
        return False
    xi = x[vars.d_r :]
    return bool(np.all(np.abs(xi - np.round(xi)) <= int_tol))
