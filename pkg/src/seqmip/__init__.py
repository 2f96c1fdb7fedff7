"""Sequential and learning-accelerated solvers for sampled mixed-integer programs."""

from .errors import (
    InvariantViolationError,
    IterationLimitError,
    ModelSpecError,
    NodeLimitError,
    OverflowSaturationError,
    SchemaError,
    SeqmipError,
    SolverError,
    SolverNumericalError,
    TrainingDivergenceError,
)
from .model import (
    FEASIBILITY_TOL,
    INTEGRALITY_TOL,
    Basis,
    ConstraintBlock,
    ConstraintId,
    LinearConstraint,
    RowSet,
    SampledProblem,
    Solution,
    VariableSpec,
    combinatorial_dimension,
    evaluate_slack,
    is_feasible,
)
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpOutcome, solve_lp
from .mip import MipOutcome, find_basis, solve_mip
from .scenario import (
    RobustnessSpec,
    UncertaintyModel,
    build_sampled_problem,
    empirical_violation,
    sample_complexity,
)
from .sequential import SeqTrace, VerificationResult, solve_sequential, verify
from .learn import (
    MlpClassifier,
    StrategyDictionary,
    TrainConfig,
    TrainingSet,
    forward,
    generate_training_data,
    gradient,
    predict_basis,
    solve_sequential_learned,
    train,
)
from .problems import (
    RandomMilpSpec,
    UnitCommitmentSpec,
    check_commitment_runs,
    make_random_milp,
    make_unit_commitment,
)
from .bench import BenchRow, run_benchmark

__all__ = [
    "Basis",
    "BenchRow",
    "ConstraintBlock",
    "ConstraintId",
    "FEASIBILITY_TOL",
    "INFEASIBLE",
    "INTEGRALITY_TOL",
    "InvariantViolationError",
    "IterationLimitError",
    "LinearConstraint",
    "LpOutcome",
    "MipOutcome",
    "MlpClassifier",
    "ModelSpecError",
    "NodeLimitError",
    "OPTIMAL",
    "OverflowSaturationError",
    "RandomMilpSpec",
    "RobustnessSpec",
    "RowSet",
    "SampledProblem",
    "SchemaError",
    "SeqTrace",
    "SeqmipError",
    "Solution",
    "SolverError",
    "SolverNumericalError",
    "StrategyDictionary",
    "TrainConfig",
    "TrainingDivergenceError",
    "TrainingSet",
    "UNBOUNDED",
    "UncertaintyModel",
    "UnitCommitmentSpec",
    "VariableSpec",
    "VerificationResult",
    "check_commitment_runs",
    "combinatorial_dimension",
    "empirical_violation",
    "evaluate_slack",
    "find_basis",
    "forward",
    "generate_training_data",
    "gradient",
    "is_feasible",
    "make_random_milp",
    "make_unit_commitment",
    "predict_basis",
    "sample_complexity",
    "solve_lp",
    "solve_mip",
    "solve_sequential",
    "solve_sequential_learned",
    "train",
    "verify",
]
