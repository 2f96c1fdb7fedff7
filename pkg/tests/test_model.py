import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqmip import (
    Basis,
    ConstraintBlock,
    ConstraintId,
    LinearConstraint,
    ModelSpecError,
    OverflowSaturationError,
    SampledProblem,
    VariableSpec,
    combinatorial_dimension,
    evaluate_slack,
    is_feasible,
)


def con(a, b, sample=1, row=0):
    return LinearConstraint(ConstraintId(sample, row), np.asarray(a, dtype=float), b)


class TestCombinatorialDimension:
    def test_worked_numbers(self):
        # the two numbers implied by "at most 57"/"at most 15" with r = 10
        assert combinatorial_dimension(VariableSpec.box(5, 3, 0, 1)) == 47
        assert combinatorial_dimension(VariableSpec.box(5, 0, 0, 1)) == 5

    def test_trivial_cases(self):
        assert combinatorial_dimension(VariableSpec.box(1, 0, 0, 1)) == 1
        assert combinatorial_dimension(VariableSpec.box(0, 1, 0, 1)) == 1

    def test_formula_grid(self):
        for d_r in range(0, 5):
            for d_z in range(0, 4):
                if d_r + d_z == 0:
                    continue
                got = combinatorial_dimension(VariableSpec.box(d_r, d_z, 0, 1))
                assert got == (d_r + 1) * 2**d_z - 1

    def test_monotone_in_both_dimensions(self):
        vals = {
            (d_r, d_z): combinatorial_dimension(VariableSpec.box(d_r, d_z, 0, 1))
            for d_r in range(1, 6)
            for d_z in range(0, 4)
        }
        for (d_r, d_z), v in vals.items():
            if (d_r + 1, d_z) in vals:
                assert vals[(d_r + 1, d_z)] >= v
            if (d_r, d_z + 1) in vals:
                assert vals[(d_r, d_z + 1)] >= v

    def test_overflow_saturates(self):
        with pytest.raises(OverflowSaturationError):
            combinatorial_dimension(VariableSpec.box(1, 80, 0, 1))


class TestEvaluateSlack:
    def test_examples(self):
        assert evaluate_slack(con([1, 0], 3), np.array([1.0, 5.0])) == 2
        assert evaluate_slack(con([0, 1], 0), np.array([0.0, 0.0])) == 0
        assert evaluate_slack(con([2, 1], 1), np.array([1.0, 1.0])) == -2

    def test_dimension_mismatch(self):
        with pytest.raises(ModelSpecError):
            evaluate_slack(con([1, 0], 3), np.array([1.0]))

    @given(
        st.lists(st.integers(-50, 50), min_size=2, max_size=2),
        st.lists(st.integers(-50, 50), min_size=2, max_size=2),
        st.integers(-50, 50),
        st.integers(-5, 5),
        st.integers(-5, 5),
    )
    def test_superposition_exact_on_integers(self, x1, x2, b, s1, s2):
        # slack(b, s1*x1 + s2*x2) = b - s1*a.x1 - s2*a.x2, exact in floats
        a = [3, -7]
        c0 = con(a, b)
        x1, x2 = np.array(x1, dtype=float), np.array(x2, dtype=float)
        combined = evaluate_slack(c0, s1 * x1 + s2 * x2)
        parts = b - s1 * (b - evaluate_slack(c0, x1)) - s2 * (b - evaluate_slack(c0, x2))
        assert combined == parts


class TestIsFeasible:
    vs = VariableSpec.box(2, 0, -10.0, 10.0)

    def test_boundary_point(self):
        cons = [con([1, 0], 1.0)]
        assert is_feasible(np.array([1.0, 0.0]), cons, self.vs, tol=1e-8)

    def test_within_tolerance(self):
        cons = [con([1, 0], 1.0)]
        assert is_feasible(np.array([1.0 + 1e-9, 0.0]), cons, self.vs, tol=1e-8)

    def test_beyond_tolerance(self):
        cons = [con([1, 0], 1.0)]
        assert not is_feasible(np.array([1.0 + 1e-6, 0.0]), cons, self.vs, tol=1e-8)

    def test_integrality_checked(self):
        vs = VariableSpec.box(1, 1, 0.0, 5.0)
        cons = [con([1, 0], 10.0)]
        assert is_feasible(np.array([0.5, 2.0]), cons, vs)
        assert is_feasible(np.array([0.5, 2.0 + 1e-7]), cons, vs)
        assert not is_feasible(np.array([0.5, 2.4]), cons, vs)

    def test_bounds_checked(self):
        assert not is_feasible(np.array([11.0, 0.0]), [con([1, 0], 100.0)], self.vs)

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            is_feasible(np.array([0.0, 0.0]), [con([1, 0], 1.0)], self.vs, tol=-1.0)


class TestTypeInvariants:
    def test_variable_spec_validation(self):
        with pytest.raises(ModelSpecError):
            VariableSpec(0, 0, np.zeros(0), np.zeros(0))
        with pytest.raises(ModelSpecError):
            VariableSpec(1, 0, np.array([2.0]), np.array([1.0]))
        with pytest.raises(ModelSpecError):
            VariableSpec(2, 0, np.zeros(1), np.zeros(1))

    def test_zero_row_rejected(self):
        with pytest.raises(ModelSpecError):
            con([0, 0], 1.0)

    def test_block_sample_indices_must_be_contiguous(self):
        vs = VariableSpec.box(1, 0, 0.0, 1.0)
        blk = ConstraintBlock(2, np.array([[1.0]]), np.array([1.0]))
        with pytest.raises(ModelSpecError):
            SampledProblem(vs, np.array([1.0]), [blk])

    def test_basis_rejects_duplicates(self):
        with pytest.raises(ModelSpecError):
            Basis((ConstraintId(1, 0), ConstraintId(1, 0)))

    def test_arrays_frozen(self):
        vs = VariableSpec.box(2, 0, 0.0, 1.0)
        with pytest.raises(ValueError):
            vs.lower[0] = 5.0
        c0 = con([1, 0], 1.0)
        with pytest.raises(ValueError):
            c0.a[0] = 2.0
