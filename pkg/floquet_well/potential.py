from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .errors import InvalidParameters
from .special import principal_sqrt
from .types import DriveSpec, WellGeometry

logger = logging.getLogger(__name__)

BRANCH_POINT_SHIFT = 1.0e-14  # in units of v0


def default_geometries() -> Dict[str, WellGeometry]:
    # Barrier 10 a.u. high on [1, 2]: one resonance below the top, one just above.
    base = WellGeometry(v0=10.0, a=1.0, b=2.0)
    return {"metastable_v0_10": base}


def minimum_sidebands(geom: WellGeometry, v1: float, omega: float) -> int:
    return int(math.ceil(v1 / (geom.hbar * omega)))


def default_sidebands(geom: WellGeometry, v1: float, omega: float) -> int:
    return minimum_sidebands(geom, v1, omega) + 1


def check_drive(
    geom: WellGeometry,
    drive: DriveSpec,
    *,
    allow_strong: bool = False,
    validate_truncation: bool = True,
) -> None:
    """Raises InvalidParameters when the drive is out of range for this geometry."""
    if drive.v1 >= geom.v0 and not allow_strong:
        raise InvalidParameters(
            f"DriveSpec: require v1 < v0 ({drive.v1} >= {geom.v0}); pass allow_strong to go beyond it"
        )
    need = minimum_sidebands(geom, drive.v1, drive.omega)
    if drive.n_sidebands < need:
        if validate_truncation:
            raise InvalidParameters(
                f"DriveSpec: n_sidebands={drive.n_sidebands} below ceil(v1/hbar*omega)={need}"
            )
        logger.warning("side-band truncation N=%d is below ceil(alpha)=%d", drive.n_sidebands, need)


@dataclass(frozen=True, eq=False)
class SidebandKinematics:
    epsilon: complex
    orders: np.ndarray
    k: np.ndarray
    q: np.ndarray
    energies: np.ndarray  # E_n = epsilon + n*hbar*omega

    def k_at(self, n: int) -> complex:
        return complex(self.k[int(n) + (len(self.orders) - 1) // 2])

    def q_at(self, n: int) -> complex:
        return complex(self.q[int(n) + (len(self.orders) - 1) // 2])


def sideband_kinematics(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> SidebandKinematics:
    epsilon = complex(epsilon)
    if not (math.isfinite(epsilon.real) and math.isfinite(epsilon.imag)):
        raise InvalidParameters(f"sideband_kinematics: epsilon must be finite, got {epsilon!r}")
    orders = drive.orders()
    energies = epsilon + orders * (geom.hbar * drive.omega)
    scale = geom.wavenumber_scale()
    k = principal_sqrt(scale * energies)
    q = principal_sqrt(scale * (geom.v0 - energies))
    return SidebandKinematics(epsilon=epsilon, orders=orders, k=k, q=q, energies=energies)


def off_branch_point(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> complex:
    """Nudges epsilon by 1e-14*v0 when some k_n or q_l would vanish exactly."""
    eps = complex(epsilon)
    tiny = BRANCH_POINT_SHIFT * geom.v0
    orders = drive.orders()
    for _ in range(3):
        energies = eps + orders * (geom.hbar * drive.omega)
        if np.min(np.abs(energies)) > tiny and np.min(np.abs(geom.v0 - energies)) > tiny:
            return eps
        logger.debug("epsilon=%r sits on a branch point; shifting by %g", eps, tiny)
        eps = eps + tiny
    return eps


def zone_reduce(epsilon: complex, omega: float, hbar: float = 1.0) -> Tuple[complex, int]:
    if omega <= 0.0:
        raise InvalidParameters("zone_reduce: require omega > 0")
    eps = complex(epsilon)
    quantum = hbar * omega
    z = int(math.floor(eps.real / quantum))
    re = eps.real - z * quantum
    if re >= quantum:
        re -= quantum
        z += 1
    if re < 0.0:
        re += quantum
        z -= 1
    return complex(re, eps.imag), z


def zone_images(epsilon: complex, omega: float, zones: range, hbar: float = 1.0) -> List[complex]:
    """epsilon + z*hbar*omega for each z; all share Im(epsilon)."""
    eps = complex(epsilon)
    return [complex(eps.real + z * hbar * omega, eps.imag) for z in zones]
