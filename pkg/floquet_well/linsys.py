"""
Dense complex solves for the truncated side-band systems.

Rows and columns are equilibrated by powers of two before a partially pivoted
LU factorization; the reciprocal condition number comes from LAPACK gecon on
the equilibrated factors.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .errors import SingularSystem

logger = logging.getLogger(__name__)

RCOND_FLOOR = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class Equilibration:
    rows: np.ndarray
    cols: np.ndarray


def _power_of_two(scale: np.ndarray) -> np.ndarray:
    # Exact scaling: no rounding introduced by the equilibration itself.
    return np.exp2(np.round(np.log2(scale)))


def equilibrate(matrix: np.ndarray) -> Equilibration:
    mag = np.abs(matrix)
    row_max = mag.max(axis=1)
    row_max[row_max == 0.0] = 1.0
    rows = _power_of_two(1.0 / row_max)
    col_max = (mag * rows[:, None]).max(axis=0)
    col_max[col_max == 0.0] = 1.0
    cols = _power_of_two(1.0 / col_max)
    return Equilibration(rows=rows, cols=cols)


def solve_equilibrated(
    matrix: np.ndarray,
    rhs: np.ndarray,
    *,
    epsilon: complex,
) -> Tuple[np.ndarray, float]:
    """
    Solves matrix @ x = rhs (rhs may hold several columns).

    Returns (x, condition) where condition = 1/rcond of the equilibrated matrix.
    Raises SingularSystem with the trial energy attached when rcond < eps.
    """
    matrix = np.asarray(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if matrix.size == 0:
        return np.zeros_like(rhs), 1.0
    if not np.all(np.isfinite(matrix)):
        raise SingularSystem("side-band matrix has non-finite entries", epsilon=epsilon)

    eq = equilibrate(matrix)
    scaled = matrix * eq.rows[:, None] * eq.cols[None, :]
    lu, piv = lu_factor(scaled, check_finite=False)

    gecon, = get_lapack_funcs(("gecon",), (lu,))
    anorm = np.linalg.norm(scaled, 1)
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularSystem("truncated side-band system is singular", epsilon=epsilon, condition=np.inf if rcond == 0 else 1.0 / rcond)

    b = rhs * (eq.rows[:, None] if rhs.ndim == 2 else eq.rows)
    x = lu_solve((lu, piv), b, check_finite=False)
    x = x * (eq.cols[:, None] if rhs.ndim == 2 else eq.cols)
    condition = 1.0 / rcond
    if condition > 1.0e10:
        logger.debug("ill-conditioned side-band system at epsilon=%r (cond=%.3e)", epsilon, condition)
    return x, condition
