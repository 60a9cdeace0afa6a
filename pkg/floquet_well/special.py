"""
Integer-order Bessel functions of real argument and the square-root branch used
for every side-band wavenumber.

Branch convention: all k_n and q_l are principal square roots (Re >= 0, and
Im >= 0 on the imaginary axis). In the barrier region both e^{+q x} and e^{-q x}
appear, so flipping q_l -> -q_l while swapping the a_l/b_l coefficients is only a
relabeling; the outgoing-wave channels are the ones where the branch matters.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameters

MAX_ORDER = 1000
MAX_ARGUMENT = 1.0e4

# Downward recurrence overflow guard.
_BIG = 1.0e250


def _miller(n_max: int, x: float) -> np.ndarray:
    """J_0(x)..J_{n_max}(x) for x > 0, downward recurrence normalized by J_0 + 2*sum J_2k = 1."""
    top = max(n_max, int(x))
    start = top + 20 + int(math.sqrt(40.0 * max(top, 1)))
    start += start % 2

    vals = np.zeros(start + 2)
    vals[start] = 1.0
    hi, cur = 0.0, 1.0
    for k in range(start, 0, -1):
        lo = (2.0 * k / x) * cur - hi
        vals[k - 1] = lo
        hi, cur = cur, lo
        if abs(lo) > _BIG:
            vals[k - 1:] /= _BIG
            hi /= _BIG
            cur /= _BIG

    norm = vals[0] + 2.0 * vals[2::2].sum()
    return vals[: n_max + 1] / norm


def _check_domain(n_max: int, alpha: float) -> None:
    if not math.isfinite(alpha) or abs(alpha) >= MAX_ARGUMENT:
        raise InvalidParameters(f"bessel: |alpha| must be < {MAX_ARGUMENT:g}, got {alpha!r}")
    if abs(n_max) >= MAX_ORDER:
        raise InvalidParameters(f"bessel: |n| must be < {MAX_ORDER}, got {n_max}")


def _nonnegative_orders(n_max: int, alpha: float) -> np.ndarray:
    """J_0..J_{n_max} at alpha of either sign."""
    if alpha == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    vals = _miller(n_max, abs(alpha))
    if alpha < 0.0:
        vals = vals * np.where(np.arange(n_max + 1) % 2 == 0, 1.0, -1.0)
    return vals


def bessel_j(n: int, alpha: float) -> float:
    n = int(n)
    alpha = float(alpha)
    _check_domain(n, alpha)
    m = abs(n)
    val = float(_nonnegative_orders(m, alpha)[m])
    if n < 0 and m % 2 == 1:
        val = -val
    return val


@dataclass(frozen=True, eq=False)
class BesselTable:
    """J_n(alpha) for n in [-K, K]; values[n + K] = J_n(alpha)."""
    alpha: float
    k: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (2 * self.k + 1,):
            raise InvalidParameters("BesselTable: values must have length 2K+1")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.k, self.k + 1)

    def at(self, orders) -> np.ndarray:
        idx = np.asarray(orders) + self.k
        if np.any(idx < 0) or np.any(idx > 2 * self.k):
            raise InvalidParameters(f"BesselTable: order outside [-{self.k}, {self.k}]")
        return self.values[idx]

    def __getitem__(self, n: int) -> float:
        return float(self.at(int(n)))

    def coupling(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Matrix of J_{row - col}."""
        return self.at(np.subtract.outer(np.asarray(rows), np.asarray(cols)))


def bessel_table(alpha: float, k: int) -> BesselTable:
    alpha = float(alpha)
    k = int(k)
    if k < 0:
        raise InvalidParameters("BesselTable: K must be >= 0")
    _check_domain(k, alpha)
    pos = _nonnegative_orders(k, alpha)
    sign = np.where(np.arange(1, k + 1) % 2 == 0, 1.0, -1.0)
    neg = (pos[1:] * sign)[::-1]
    return BesselTable(alpha=alpha, k=k, values=np.concatenate([neg, pos]))


def default_table_order(alpha: float, n_sidebands: int) -> int:
    return int(math.ceil(abs(alpha))) + int(n_sidebands) + 20


def bessel_identity_defect(m: int, n: int, alpha: float, k: int) -> float:
    """|sum_{l=-K}^{K} J_{l-m}(alpha) J_{l-n}(alpha) - delta_mn|."""
    m, n, k = int(m), int(n), int(k)
    if k < abs(m) + abs(n) + 10:
        raise InvalidParameters("bessel_identity_defect: require K >= |m| + |n| + 10")
    table = bessel_table(alpha, k + max(abs(m), abs(n)))
    ls = np.arange(-k, k + 1)
    total = math.fsum(table.at(ls - m) * table.at(ls - n))
    return abs(total - (1.0 if m == n else 0.0))


def principal_complex_sqrt(z: complex) -> complex:
    w = cmath.sqrt(complex(z))
    if w.real == 0.0 and w.imag < 0.0:
        w = complex(0.0, -w.imag)
    return complex(w.real + 0.0, w.imag)


def principal_sqrt(z) -> np.ndarray:
    """Vectorized principal_complex_sqrt."""
    w = np.sqrt(np.asarray(z, dtype=complex))
    flip = (w.real == 0.0) & (w.imag < 0.0)
    return np.where(flip, -w, w) + 0.0
