"""
Undriven Gamow problem: complex resonance energies of the well closed by a hard
wall at x=0 and a square barrier on [a, b].
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import FloquetError, InvalidParameters, NotFound, ResidualPole, UnphysicalRoot
from .rootfind import RootConfig, solve_root
from .special import principal_complex_sqrt
from .types import WellGeometry

logger = logging.getLogger(__name__)

DEFAULT_SCAN_FACTOR = 1.2
DEFAULT_OFFSETS = (1.0e-4, 1.0e-3, 1.0e-2)  # -Im(guess) in units of v0
DEDUP_TOL = 1.0e-8  # units of v0
_SCAN_POINTS = 4000


@dataclass(frozen=True)
class StaticResonance:
    """E = E0 - i*Gamma/2."""
    energy: complex
    width: float
    residual: float

    def __post_init__(self) -> None:
        if self.width < 0.0:
            raise InvalidParameters(f"StaticResonance: width must be >= 0, got {self.width}")
        if abs(self.width + 2.0 * self.energy.imag) > 1.0e-9 * max(1.0, abs(self.energy)):
            raise InvalidParameters("StaticResonance: width must equal -2*Im(energy)")

    @classmethod
    def from_energy(cls, energy: complex, residual: float) -> "StaticResonance":
        energy = complex(energy)
        return cls(energy=energy, width=max(0.0, -2.0 * energy.imag), residual=float(residual))

    def scaled(self, v0: float) -> complex:
        return self.energy / v0


def _wavenumbers(geom: WellGeometry, energy: complex):
    scale = geom.wavenumber_scale()
    return principal_complex_sqrt(scale * energy), principal_complex_sqrt(scale * (geom.v0 - energy))


def static_residual(geom: WellGeometry, energy: complex) -> complex:
    """(q/k)tan(ka) + 1 - [(q+ik)/(q-ik)] ((q/k)tan(ka) - 1) e^{-2q(b-a)}."""
    energy = complex(energy)
    if energy == 0.0:
        raise InvalidParameters("static_residual: E = 0 has k = 0")
    k, q = _wavenumbers(geom, energy)
    cos_ka = cmath.cos(k * geom.a)
    if cos_ka == 0.0 or q == 1j * k:
        raise ResidualPole("static residual has a pole here", epsilon=energy)
    tangent = (q / k) * cmath.sin(k * geom.a) / cos_ka
    ratio = (q + 1j * k) / (q - 1j * k)
    return tangent + 1.0 - ratio * (tangent - 1.0) * cmath.exp(-2.0 * q * geom.width)


def static_solve(geom: WellGeometry, guess: complex, cfg: Optional[RootConfig] = None) -> StaticResonance:
    cfg = cfg or RootConfig.for_geometry(geom)
    result = solve_root(lambda e: static_residual(geom, e), guess, cfg)
    energy = result.root
    if energy.imag > cfg.residual_tol * max(1.0, abs(energy)):
        raise UnphysicalRoot(f"static_solve: root {energy!r} grows in time (Im(E) > 0)")
    return StaticResonance.from_energy(energy, result.residual)


# ----------------------------
# Seeds
# ----------------------------

def _closed_well_condition(geom: WellGeometry, energy: float) -> float:
    """Real quantization function of the well closed by a hard wall at x=b."""
    k, q = _wavenumbers(geom, complex(energy))
    w = geom.width
    # sinh(qw)/q written through sinc so that q -> 0 at the barrier top stays finite
    sinh_over_q = w * complex(np.sinc(1j * q * w / math.pi))
    val = k * cmath.cos(k * geom.a) * sinh_over_q + cmath.sin(k * geom.a) * cmath.cosh(q * w)
    return val.real


def closed_well_levels(geom: WellGeometry, e_max: float) -> List[float]:
    """Real levels in (0, e_max] with the barrier closed off at x=b."""
    if e_max <= 0.0:
        raise InvalidParameters("closed_well_levels: e_max must be positive")
    grid = np.linspace(e_max * 1.0e-6, e_max, _SCAN_POINTS)
    vals = np.array([_closed_well_condition(geom, e) for e in grid])
    levels: List[float] = []
    for lo, hi, f_lo, f_hi in zip(grid, grid[1:], vals, vals[1:]):
        if f_lo == 0.0:
            levels.append(float(lo))
        elif f_lo * f_hi < 0.0:
            levels.append(float(brentq(lambda e: _closed_well_condition(geom, e), lo, hi, xtol=1.0e-14)))
    return levels


def scan_static(
    geom: WellGeometry,
    e_max: Optional[float] = None,
    cfg: Optional[RootConfig] = None,
    *,
    offsets: Sequence[float] = DEFAULT_OFFSETS,
) -> List[StaticResonance]:
    """
    Polishes every closed-well level shifted by -i*offset*v0, keeps decaying roots
    with 0 < Re(E) <= e_max, deduplicates and sorts by Re(E).
    """
    e_max = DEFAULT_SCAN_FACTOR * geom.v0 if e_max is None else float(e_max)
    cfg = cfg or RootConfig.for_geometry(geom)
    found: List[StaticResonance] = []
    for level in closed_well_levels(geom, e_max):
        for off in offsets:
            try:
                res = static_solve(geom, complex(level, -off * geom.v0), cfg)
            except FloquetError as exc:
                logger.debug("seed %.6f - %.1ei: %s", level, off * geom.v0, exc)
                continue
            if not (0.0 < res.energy.real <= e_max):
                continue
            if any(abs(res.energy - r.energy) < DEDUP_TOL * geom.v0 for r in found):
                continue
            found.append(res)
    found.sort(key=lambda r: (r.energy.real, r.energy.imag))
    below = sum(1 for r in found if r.energy.real < geom.v0)
    logger.info("static scan up to %.4g: %d resonances, %d below the barrier top", e_max, len(found), below)
    return found


def static_seeds(geom: WellGeometry, count: int = 2, e_max: Optional[float] = None) -> List[complex]:
    """The lowest `count` static resonance energies, used to seed continuation."""
    found = scan_static(geom, e_max)
    if len(found) < count:
        raise NotFound(f"static_seeds: found {len(found)} resonances, need {count}")
    return [r.energy for r in found[:count]]
