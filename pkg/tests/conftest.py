import numpy as np
import pytest

from seqmip import (
    ConstraintId,
    RandomMilpSpec,
    RowSet,
    VariableSpec,
    make_random_milp,
)
from seqmip.rng import stream

# The desk-scale MILP family used across solver tests: dimensions fixed by
# the acceptance suite, uncertainty wide enough to produce a diverse
# strategy dictionary.
DESK_MILP = RandomMilpSpec(n_rows=40, d_r=4, d_z=2, rho=0.1, seed=3)


@pytest.fixture(scope="session")
def desk_model():
    return make_random_milp(DESK_MILP)


def random_rowset(rng, m, d, spread=2.0, margin=(0.05, 1.0)):
    """Feasible random inequality rows around a random anchor point."""
    A = rng.standard_normal((m, d))
    anchor = rng.uniform(-spread, spread, d)
    b = A @ anchor + rng.uniform(*margin, m)
    return RowSet(A, b, [ConstraintId(1, j) for j in range(m)])


def random_mip_rowset(rng, m, vs, spread=2.0, margin=(0.05, 1.0)):
    """Like random_rowset but anchored at a mixed-integer point, so the rows
    always admit an integer-feasible solution."""
    A = rng.standard_normal((m, vs.d))
    anchor = rng.uniform(-spread, spread, vs.d)
    anchor[vs.d_r :] = np.clip(
        np.round(anchor[vs.d_r :]), vs.lower[vs.d_r :], vs.upper[vs.d_r :]
    )
    b = A @ anchor + rng.uniform(*margin, m)
    return RowSet(A, b, [ConstraintId(1, j) for j in range(m)])


def toy_threshold_problem(thresholds):
    """One block per threshold, each the single row x <= threshold."""
    from seqmip import ConstraintBlock, SampledProblem

    vs = VariableSpec.box(1, 0, -100.0, 100.0)
    blocks = [
        ConstraintBlock(i + 1, np.array([[1.0]]), np.array([float(t)]))
        for i, t in enumerate(thresholds)
    ]
    return SampledProblem(vs, np.array([-1.0]), blocks)


def fixed_rng(tag: int) -> np.random.Generator:
    return stream(20_240_000 + tag, 6, tag)
