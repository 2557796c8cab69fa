"""
Dense Simplex Solver

A small tableau simplex for problems of the form

    maximize c.x  subject to  A x <= b,  x >= 0,  with b >= 0,

so the origin is a feasible starting basis and no phase one is needed.
Pivoting follows Bland's rule, which cannot cycle on degenerate problems.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional
import logging

import numpy as np

logger = logging.getLogger(__name__)


class LPStatus(Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    """Outcome of a simplex solve."""

    status: LPStatus
    x: np.ndarray
    objective: float
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def solve_max(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    tol: float = 1e-9,
    max_iter: Optional[int] = None,
) -> LPResult:
    """
    Maximize c.x subject to A x <= b and x >= 0.

    Args:
        c: Objective coefficients, shape (n,)
        A: Constraint matrix, shape (m, n)
        b: Right-hand side, shape (m,), all entries >= 0
        tol: Pivot and optimality tolerance
        max_iter: Pivot budget (default 50 * (m + n))

    Returns:
        LPResult with the primal solution

    Raises:
        ValueError: If shapes disagree or b has a negative entry
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError(f"Shape mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
    if np.any(b < -tol):
        raise ValueError("Right-hand side must be nonnegative for the slack basis")

    # rows 0..m-1: [A | I | b]; last row: reduced costs [-c | 0 | objective]
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = np.clip(b, 0.0, None)
    T[m, :n] = -c
    basis = np.arange(n, n + m)

    limit = max_iter if max_iter is not None else 50 * (m + n)
    iterations = 0
    status = LPStatus.OPTIMAL

    while True:
        candidates = np.nonzero(T[m, :-1] < -tol)[0]
        if candidates.size == 0:
            break
        if iterations >= limit:
            status = LPStatus.ITERATION_LIMIT
            logger.warning(f"Simplex hit the iteration limit of {limit}")
            break

        col = int(candidates[0])
        column = T[:m, col]
        rows = np.nonzero(column > tol)[0]
        if rows.size == 0:
            status = LPStatus.UNBOUNDED
            break

        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol]
        row = int(ties[np.argmin(basis[ties])])

        T[row, :] /= T[row, col]
        others = np.arange(m + 1) != row
        T[others, :] -= np.outer(T[others, col], T[row, :])
        basis[row] = col
        iterations += 1

    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    logger.debug(f"Simplex finished with status {status.value} after {iterations} pivots")
    return LPResult(status=status, x=x[:n], objective=float(T[m, -1]), iterations=iterations)
