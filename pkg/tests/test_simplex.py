"""
Tests for the dense simplex solver, checked against scipy's HiGHS backend.
"""

import numpy as np
import pytest
from scipy.optimize import linprog

from src.lab.simplex import LPStatus, solve_max


def scipy_max(c, A, b):
    res = linprog(-np.asarray(c), A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


class TestSolveMax:
    """Tests for solve_max."""

    def test_textbook_problem(self):
        # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        result = solve_max([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        assert result.ok
        assert result.objective == pytest.approx(36.0)
        assert result.x == pytest.approx([2.0, 6.0])

    def test_unbounded(self):
        result = solve_max([1, 1], [[1, -1]], [1])
        assert result.status is LPStatus.UNBOUNDED

    def test_zero_objective_stays_at_origin(self):
        result = solve_max([0, 0], [[1, 1]], [1])
        assert result.ok
        assert result.objective == 0.0
        assert result.iterations == 0

    def test_degenerate_problem_terminates(self):
        # zero right-hand sides make every pivot degenerate
        A = [[1, -1, 0], [-1, 1, 1], [0, 1, 1]]
        result = solve_max([1, 1, 1], A, [0, 0, 1])
        assert result.ok
        assert result.objective == pytest.approx(scipy_max([1, 1, 1], A, [0, 0, 1]))

    def test_iteration_limit(self):
        result = solve_max([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], max_iter=1)
        assert result.status is LPStatus.ITERATION_LIMIT
        assert not result.ok

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_scipy_on_random_problems(self, seed):
        gen = np.random.default_rng(seed)
        m, n = gen.integers(2, 8, size=2)
        A = gen.uniform(0.0, 2.0, size=(m, n))
        b = gen.uniform(0.5, 3.0, size=m)
        c = gen.uniform(-1.0, 2.0, size=n)
        result = solve_max(c, A, b)
        assert result.ok
        assert result.objective == pytest.approx(scipy_max(c, A, b), abs=1e-8)
        assert np.all(A @ result.x <= b + 1e-9)
        assert np.all(result.x >= -1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            solve_max([1, 2, 3], [[1, 0]], [1])

    def test_negative_rhs_rejected(self):
        with pytest.raises(ValueError):
            solve_max([1], [[1]], [-1])
