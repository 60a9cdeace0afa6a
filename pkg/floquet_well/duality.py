"""
Discrete H-transform between the oscillating-bottom and oscillating-barrier
coefficient sequences, and the gauge-equivalence check on [0, b].

    g'_l = sum_n (-1)^n g_n J_{l-n}(alpha)

The transform is its own inverse (Bessel orthogonality), so it maps Model B
coefficients to Model A ones and back.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameters, MismatchedParameters
from .floquet import solve_floquet
from .observables import wavefunction_grid
from .rootfind import RootConfig
from .special import bessel_table
from .types import DriveSpec, FloquetRoot, Model, SidebandCoefficients, WellGeometry

logger = logging.getLogger(__name__)

PADDING = 20
EPSILON_MATCH = 1.0e-9  # units of v0


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """g_n for n in [-K, K]; entries outside are zero."""
    values: np.ndarray
    alpha: float = 0.0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or len(values) % 2 != 1:
            raise InvalidParameters("CoefficientSequence: values must be 1-D with odd length")
        if not np.all(np.isfinite(values)):
            raise InvalidParameters("CoefficientSequence: values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return (len(self.values) - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.k, self.k + 1)

    def at(self, n: int) -> complex:
        if abs(n) > self.k:
            return 0j
        return complex(self.values[n + self.k])

    def support(self) -> int:
        """Largest |n| whose entry is above round-off relative to the largest entry."""
        mag = np.abs(self.values)
        peak = mag.max() if len(mag) else 0.0
        if peak == 0.0:
            return 0
        live = np.flatnonzero(mag > np.finfo(float).eps * peak)
        return int(np.max(np.abs(self.orders[live])))

    def padded(self, k: int) -> np.ndarray:
        if k < self.support():
            raise InvalidParameters(f"CoefficientSequence: cannot pad support {self.support()} into [-{k}, {k}]")
        out = np.zeros(2 * k + 1, dtype=complex)
        lo = max(-k, -self.k)
        hi = min(k, self.k)
        out[lo + k: hi + k + 1] = self.values[lo + self.k: hi + self.k + 1]
        return out

    @classmethod
    def delta(cls, k: int, at: int = 0) -> "CoefficientSequence":
        values = np.zeros(2 * k + 1, dtype=complex)
        values[at + k] = 1.0
        return cls(values)


def required_padding(seq: CoefficientSequence, alpha: float) -> int:
    return seq.support() + int(math.ceil(abs(alpha))) + PADDING


def _transform_matrix(alpha: float, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """(-1)^n J_{l-n}(alpha), rows l, columns n."""
    span = int(max(np.max(np.abs(rows)), 1) + max(np.max(np.abs(cols)), 1))
    table = bessel_table(alpha, span)
    sign = np.where(cols % 2 == 0, 1.0, -1.0)
    return table.coupling(rows, cols) * sign[None, :]


def h_transform(seq: CoefficientSequence, alpha: float, k_out: int) -> CoefficientSequence:
    need = required_padding(seq, alpha)
    if k_out < need:
        raise InvalidParameters(f"h_transform: k_out={k_out} below the required padding {need}")
    rows = np.arange(-k_out, k_out + 1)
    matrix = _transform_matrix(alpha, rows, seq.orders)
    return CoefficientSequence(matrix @ seq.values, alpha=alpha)


# ----------------------------
# Coefficient map and gauge check
# ----------------------------

def map_coefficients_B_to_A(root_b: FloquetRoot) -> SidebandCoefficients:
    """
    A_n = (-1)^n A'_n, with the same sign rule for the barrier coefficients;
    outgoing amplitudes go through the truncated transform.
    """
    if root_b.model is not Model.B:
        raise InvalidParameters("map_coefficients_B_to_A: root must come from the oscillating-bottom model")
    co = root_b.coefficients
    orders = co.orders
    sign = np.where(orders % 2 == 0, 1.0, -1.0)
    alpha = root_b.drive.alpha(root_b.geometry.hbar)
    outgoing = _transform_matrix(alpha, orders, orders) @ co.outgoing
    return SidebandCoefficients(
        orders=orders,
        well=sign * co.well,
        growing=sign * co.growing,
        decaying=sign * co.decaying,
        outgoing=outgoing,
    )


def _check_gauge_pair(root_a: FloquetRoot, root_b: FloquetRoot, epsilon_tolerance: float) -> None:
    if root_a.model is not Model.A or root_b.model is not Model.B:
        raise MismatchedParameters("gauge check needs one oscillating-barrier and one oscillating-bottom root")
    if root_a.geometry != root_b.geometry:
        raise MismatchedParameters("roots were solved for different geometries")
    da, db = root_a.drive, root_b.drive
    if (da.v1, da.omega, da.n_sidebands) != (db.v1, db.omega, db.n_sidebands):
        raise MismatchedParameters(
            f"drives differ: (v1, omega, N) = {(da.v1, da.omega, da.n_sidebands)} vs {(db.v1, db.omega, db.n_sidebands)}"
        )
    gap = abs(root_a.epsilon - root_b.epsilon)
    if gap > epsilon_tolerance:
        raise MismatchedParameters(f"quasienergies differ by {gap:.3e}")


def gauge_equivalence_defect(
    root_a: FloquetRoot,
    root_b: FloquetRoot,
    x_samples,
    t_samples,
    *,
    epsilon_tolerance: Optional[float] = None,
) -> float:
    """
    max |Psi_A(x, t + pi/omega) exp(i alpha sin(omega t + pi)) - exp(-i pi eps/(hbar omega)) Psi_B(x, t)|
    over the sample grid, relative to the largest |right-hand side|.
    """
    geom = root_a.geometry
    _check_gauge_pair(root_a, root_b, EPSILON_MATCH * geom.v0 if epsilon_tolerance is None else epsilon_tolerance)
    xs = np.asarray(x_samples, dtype=float)
    ts = np.asarray(t_samples, dtype=float)
    if np.any(xs < 0.0) or np.any(xs > geom.b):
        raise InvalidParameters("gauge_equivalence_defect: x samples must lie in [0, b]")

    omega, hbar = root_a.drive.omega, geom.hbar
    alpha = root_a.drive.alpha(hbar)
    shift = math.pi / omega
    gauge = np.exp(1j * alpha * np.sin(omega * (ts + shift)))
    lhs = wavefunction_grid(root_a, xs, ts + shift) * gauge[:, None]
    rhs = np.exp(-1j * math.pi * root_b.epsilon / (hbar * omega)) * wavefunction_grid(root_b, xs, ts)
    scale = np.max(np.abs(rhs))
    if scale == 0.0:
        return float(np.max(np.abs(lhs)))
    defect = float(np.max(np.abs(lhs - rhs)) / scale)
    logger.debug("gauge defect %.3e on %dx%d samples", defect, len(xs), len(ts))
    return defect


@dataclass(frozen=True)
class DualityCheck:
    epsilon_a: complex
    epsilon_b: complex
    delta: float
    coefficient_defect: float
    gauge_defect: Optional[float] = None

    def passed(self, v0: float) -> bool:
        return self.delta < EPSILON_MATCH * v0


def compare_models(
    geom: WellGeometry,
    v1: float,
    omega: float,
    n_sidebands: int,
    guess: complex,
    cfg: Optional[RootConfig] = None,
    *,
    samples: Optional[tuple] = None,
) -> DualityCheck:
    """Solves both models from the same guess and compares roots, coefficients and, optionally, wavefunctions."""
    root_a = solve_floquet(geom, DriveSpec(v1, omega, Model.A, n_sidebands), guess, cfg)
    root_b = solve_floquet(geom, DriveSpec(v1, omega, Model.B, n_sidebands), root_a.epsilon, cfg)
    delta = abs(root_a.epsilon - root_b.epsilon)

    mapped = map_coefficients_B_to_A(root_b)
    direct = root_a.coefficients
    worst = 0.0
    for name in ("well", "growing", "decaying", "outgoing"):
        lhs, rhs = getattr(direct, name), getattr(mapped, name)
        scale = max(np.max(np.abs(lhs)), np.finfo(float).tiny)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))

    gauge = None
    if samples is not None and delta <= EPSILON_MATCH * geom.v0:
        gauge = gauge_equivalence_defect(root_a, root_b, *samples)
    logger.info(
        "duality v1=%g omega=%g N=%d: |eps_A - eps_B|=%.3e, coefficient defect %.3e",
        v1, omega, n_sidebands, delta, worst,
    )
    return DualityCheck(root_a.epsilon, root_b.epsilon, delta, worst, gauge)
