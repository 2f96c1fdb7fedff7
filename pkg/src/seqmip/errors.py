"""Exception types shared across the package."""


class SeqmipError(Exception):
    """Base class for all package errors."""


class SchemaError(SeqmipError):
    """A serialized file or spec dict violates its schema."""


class ModelSpecError(SeqmipError):
    """A problem/model specification is internally inconsistent or infeasible."""


class SolverError(SeqmipError):
    """Base class for optimisation failures."""


class SolverNumericalError(SolverError):
    """The simplex cycling guard tripped or a recovered solution failed its checks."""


class NodeLimitError(SolverError):
    """Branch-and-bound hit its node limit; carries the best incumbent found."""

    def __init__(self, message, incumbent=None, nodes_explored=0):
        super().__init__(message)
        self.incumbent = incumbent
        self.nodes_explored = nodes_explored


class IterationLimitError(SolverError):
    """The sequential loop exceeded its iteration guard (pathological instance)."""


class TrainingDivergenceError(SeqmipError):
    """Training loss became non-finite; carries the offending optimisation step."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class OverflowSaturationError(SeqmipError):
    """The combinatorial dimension does not fit a 64-bit count."""


class InvariantViolationError(SeqmipError):
    """A cross-method invariant (e.g. benchmark objective equality) failed."""
