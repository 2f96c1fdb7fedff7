import itertools

import numpy as np
import pytest

from seqmip import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    ConstraintId,
    RowSet,
    VariableSpec,
    solve_lp,
)
from conftest import fixed_rng, random_rowset


def rows_of(A, b):
    return RowSet(np.asarray(A, dtype=float), np.asarray(b, dtype=float),
                  [ConstraintId(1, j) for j in range(len(b))])


def vertex_enumeration_minimum(c, A, b):
    """Brute force: best objective over all vertex-defining d-subsets of rows."""
    m, d = A.shape
    best = None
    for combo in itertools.combinations(range(m), d):
        sub = A[list(combo)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(combo)])
        if np.all(A @ x <= b + 1e-9):
            value = float(c @ x)
            if best is None or value < best:
                best = value
    return best


class TestExamples:
    def test_single_variable_interval(self):
        # min x subject to x >= 2 (as -x <= -2), x <= 10
        out = solve_lp(np.array([1.0]), rows_of([[-1.0], [1.0]], [-2.0, 10.0]))
        assert out.status == OPTIMAL
        np.testing.assert_allclose(out.x, [2.0])
        assert out.objective == pytest.approx(2.0, abs=1e-12)

    def test_box_corner(self):
        out = solve_lp(
            np.array([-1.0, -1.0]),
            rows_of([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0]),
            VariableSpec.box(2, 0, 0.0, 10.0),
        )
        assert out.status == OPTIMAL
        np.testing.assert_allclose(out.x, [1.0, 1.0])
        assert out.objective == pytest.approx(-2.0, abs=1e-12)


class TestStatuses:
    def test_infeasible(self):
        out = solve_lp(np.array([1.0]), rows_of([[1.0], [-1.0]], [0.0, -1.0]))
        assert out.status == INFEASIBLE
        assert out.x is None

    def test_unbounded_without_bounds(self):
        out = solve_lp(np.array([-1.0]), rows_of([[-1.0]], [0.0]))
        assert out.status == UNBOUNDED

    def test_empty_rows_bounded_by_box(self):
        out = solve_lp(np.array([-1.0]), [], VariableSpec.box(1, 0, 0.0, 3.0))
        assert out.status == OPTIMAL
        np.testing.assert_allclose(out.x, [3.0])

    def test_empty_rows_unbounded(self):
        out = solve_lp(np.array([1.0]), [])
        assert out.status == UNBOUNDED


class TestVertexOracle:
    def test_five_vars_twenty_rows(self):
        # the exact sizes from the derived example, three seeds
        for tag in range(3):
            rng = fixed_rng(100 + tag)
            d, m = 5, 20
            rows = random_rowset(rng, m, d)
            c = rng.standard_normal(d)
            box = 6.0
            out = solve_lp(c, rows, VariableSpec.box(d, 0, -box, box))
            A_full = np.vstack([rows.A, np.eye(d), -np.eye(d)])
            b_full = np.concatenate([rows.b, np.full(d, box), np.full(d, box)])
            oracle = vertex_enumeration_minimum(c, A_full, b_full)
            assert out.status == OPTIMAL
            assert out.objective == pytest.approx(oracle, rel=1e-9, abs=1e-9)

    def test_random_small_instances(self):
        for tag in range(25):
            rng = fixed_rng(200 + tag)
            d = int(rng.integers(2, 5))
            m = int(rng.integers(d + 1, 13))
            rows = random_rowset(rng, m, d)
            c = rng.standard_normal(d)
            out = solve_lp(c, rows, VariableSpec.box(d, 0, -6.0, 6.0))
            A_full = np.vstack([rows.A, np.eye(d), -np.eye(d)])
            b_full = np.concatenate([rows.b, np.full(d, 6.0), np.full(d, 6.0)])
            oracle = vertex_enumeration_minimum(c, A_full, b_full)
            assert out.status == OPTIMAL
            assert out.objective == pytest.approx(oracle, rel=1e-9, abs=1e-9)

    def test_against_scipy(self):
        linprog = pytest.importorskip("scipy.optimize").linprog
        for tag in range(20):
            rng = fixed_rng(300 + tag)
            d = int(rng.integers(2, 7))
            m = int(rng.integers(5, 40))
            rows = random_rowset(rng, m, d)
            c = rng.standard_normal(d)
            out = solve_lp(c, rows, VariableSpec.box(d, 0, -8.0, 8.0))
            ref = linprog(c, A_ub=rows.A, b_ub=rows.b, bounds=[(-8, 8)] * d, method="highs")
            assert out.status == OPTIMAL and ref.status == 0
            assert out.objective == pytest.approx(ref.fun, rel=1e-8, abs=1e-8)


class TestDeterminismAndTieBreaking:
    def test_bit_identical_repeat(self):
        rng = fixed_rng(400)
        rows = random_rowset(rng, 15, 4)
        c = rng.standard_normal(4)
        a = solve_lp(c, rows, VariableSpec.box(4, 0, -5.0, 5.0))
        b = solve_lp(c, rows, VariableSpec.box(4, 0, -5.0, 5.0))
        assert a.objective == b.objective
        assert np.array_equal(a.x, b.x)

    def test_positive_scaling_keeps_argmin(self):
        rng = fixed_rng(401)
        rows = random_rowset(rng, 12, 3)
        c = rng.standard_normal(3)
        base = solve_lp(c, rows, VariableSpec.box(3, 0, -5.0, 5.0))
        scaled = solve_lp(7.3 * c, rows, VariableSpec.box(3, 0, -5.0, 5.0))
        np.testing.assert_allclose(base.x, scaled.x, atol=1e-9)

    def test_lexicographic_smallest_on_tie_face(self):
        # min x1 + x2 over x1 + x2 >= 1: the optimal face is a segment and
        # the returned point must be its lexicographically smallest vertex
        out = solve_lp(
            np.array([1.0, 1.0]),
            rows_of([[-1.0, -1.0]], [-1.0]),
            VariableSpec.box(2, 0, 0.0, 5.0),
        )
        assert out.status == OPTIMAL
        np.testing.assert_allclose(out.x, [0.0, 1.0], atol=1e-10)

    def test_refine_always_matches_auto_on_tie(self):
        rows = rows_of([[-1.0, -1.0]], [-1.0])
        auto = solve_lp(np.array([1.0, 1.0]), rows, VariableSpec.box(2, 0, 0.0, 5.0))
        always = solve_lp(
            np.array([1.0, 1.0]), rows, VariableSpec.box(2, 0, 0.0, 5.0), refine="always"
        )
        np.testing.assert_allclose(auto.x, always.x, atol=1e-10)


class TestCertificates:
    def test_feasibility_of_returned_point(self):
        for tag in range(10):
            rng = fixed_rng(500 + tag)
            rows = random_rowset(rng, 25, 5)
            c = rng.standard_normal(5)
            out = solve_lp(c, rows, VariableSpec.box(5, 0, -7.0, 7.0))
            assert out.status == OPTIMAL
            slack = rows.b - rows.A @ out.x
            assert slack.min() >= -1e-8 * (1 + np.abs(rows.b).max())
            assert np.all(np.abs(out.x) <= 7.0 + 1e-8)
