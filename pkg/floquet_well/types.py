from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParameters


class Model(str, Enum):
    A = "A"  # oscillating barrier
    B = "B"  # oscillating well bottom


class SweepParameter(str, Enum):
    OMEGA = "omega"
    V1 = "v1"


class BranchStatus(str, Enum):
    COMPLETE = "complete"
    LOST = "lost"
    POLE_TERMINATED = "pole-terminated"


class CrossingKind(str, Enum):
    DIRECT = "direct"
    AVOIDED = "avoided"


class Region(str, Enum):
    I = "I"      # 0 <= x < a
    II = "II"    # a <= x <= b
    III = "III"  # x > b


class FanoShape(str, Enum):
    DIP_PEAK = "dip-peak"
    PEAK_DIP = "peak-dip"
    NONE = "none"


def _finite(*vals: float) -> bool:
    return all(math.isfinite(v) for v in vals)


@dataclass(frozen=True)
class WellGeometry:
    """
    Hard wall at x=0, barrier of height v0 on [a, b], free beyond b.
    Atomic units by default; mass and hbar stay explicit.
    """
    v0: float
    a: float
    b: float
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if not _finite(self.v0, self.a, self.b, self.mass, self.hbar):
            raise InvalidParameters("WellGeometry: all fields must be finite")
        if self.v0 <= 0.0:
            raise InvalidParameters(f"WellGeometry: require v0 > 0, got {self.v0}")
        if not (0.0 < self.a < self.b):
            raise InvalidParameters(f"WellGeometry: require 0 < a < b, got a={self.a}, b={self.b}")
        if self.mass <= 0.0 or self.hbar <= 0.0:
            raise InvalidParameters("WellGeometry: require mass > 0 and hbar > 0")

    @property
    def width(self) -> float:
        """Barrier thickness b - a."""
        return self.b - self.a

    def wavenumber_scale(self) -> float:
        """2m/hbar^2, so that k^2 = scale * E."""
        return 2.0 * self.mass / (self.hbar * self.hbar)


@dataclass(frozen=True)
class DriveSpec:
    v1: float
    omega: float
    model: Model = Model.A
    n_sidebands: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", Model(self.model))
        if not _finite(self.v1, self.omega):
            raise InvalidParameters("DriveSpec: v1 and omega must be finite")
        if self.v1 < 0.0:
            raise InvalidParameters(f"DriveSpec: require v1 >= 0, got {self.v1}")
        if self.omega <= 0.0:
            raise InvalidParameters(f"DriveSpec: require omega > 0, got {self.omega}")
        if int(self.n_sidebands) != self.n_sidebands or self.n_sidebands < 0:
            raise InvalidParameters(f"DriveSpec: n_sidebands must be a non-negative integer, got {self.n_sidebands}")
        object.__setattr__(self, "n_sidebands", int(self.n_sidebands))

    def alpha(self, hbar: float = 1.0) -> float:
        return self.v1 / (hbar * self.omega)

    def orders(self) -> np.ndarray:
        return np.arange(-self.n_sidebands, self.n_sidebands + 1)


@dataclass(frozen=True, eq=False)
class SidebandCoefficients:
    """
    Per-channel wavefunction coefficients over orders [-N, N].

    Barrier coefficients are stored scaled so they stay bounded:
      growing[l]  = a_l * exp(+q_l b)
      decaying[l] = b_l * exp(-q_l a)
      outgoing[n] = t_n * exp(i k_n b)
    `well` holds A_n (oscillating barrier) or A'_n (oscillating bottom).
    """
    orders: np.ndarray
    well: np.ndarray
    growing: np.ndarray
    decaying: np.ndarray
    outgoing: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.orders)
        for name in ("well", "growing", "decaying", "outgoing"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise InvalidParameters(f"SidebandCoefficients: {name} must have length {n}")
            if not np.all(np.isfinite(arr)):
                raise InvalidParameters(f"SidebandCoefficients: {name} has non-finite entries")

    def at(self, name: str, order: int) -> complex:
        n_side = (len(self.orders) - 1) // 2
        return complex(getattr(self, name)[int(order) + n_side])


@dataclass(frozen=True, eq=False)
class FloquetRoot:
    epsilon: complex
    model: Model
    n_sidebands: int
    geometry: WellGeometry
    drive: DriveSpec
    coefficients: SidebandCoefficients
    residual_norm: float
    condition: float = 1.0


@dataclass(frozen=True, eq=False)
class BranchPoint:
    param: float
    epsilon: complex
    residual_norm: float
    root: Optional[FloquetRoot] = None
    zone_epsilon: Optional[complex] = None
    zone_index: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Branch:
    parameter_name: SweepParameter
    points: Tuple[BranchPoint, ...]
    seed: complex
    status: BranchStatus
    failures: Tuple[str, ...] = ()
    branch_id: int = 0
    refined: int = 0  # number of points inserted by step halving

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameter_name", SweepParameter(self.parameter_name))
        object.__setattr__(self, "status", BranchStatus(self.status))
        ps = [p.param for p in self.points]
        if any(b <= a for a, b in zip(ps, ps[1:])) and any(b >= a for a, b in zip(ps, ps[1:])):
            raise InvalidParameters("Branch: points must be strictly monotone in the parameter")

    def params(self) -> np.ndarray:
        return np.array([p.param for p in self.points], dtype=float)

    def epsilons(self) -> np.ndarray:
        return np.array([p.epsilon for p in self.points], dtype=complex)

    @classmethod
    def from_values(
        cls,
        parameter_name: SweepParameter,
        params: Sequence[float],
        epsilons: Sequence[complex],
        *,
        branch_id: int = 0,
    ) -> "Branch":
        pts = tuple(BranchPoint(float(p), complex(e), 0.0) for p, e in zip(params, epsilons))
        seed = pts[0].epsilon if pts else 0j
        return cls(parameter_name, pts, seed, BranchStatus.COMPLETE, branch_id=branch_id)
