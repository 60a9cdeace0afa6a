"""
Grid propagation of the time-dependent Schrodinger equation, independent of
the side-band machinery: Crank-Nicolson steps on a uniform grid with a hard
wall at x=0 and a quartic complex absorbing potential before the far wall.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidParameters, PoorFit
from .types import DriveSpec, Model, WellGeometry

logger = logging.getLogger(__name__)

MIN_R_SQUARED = 0.99
DROP_FRACTION = 0.1


@dataclass(frozen=True)
class GridSpec:
    dx: float = 0.005
    dt: float = 0.002
    x_max: float = 30.0
    cap_start: float = 20.0
    cap_strength: float = 2.0

    def __post_init__(self) -> None:
        if self.dx <= 0.0 or self.dt <= 0.0:
            raise InvalidParameters("GridSpec: dx and dt must be positive")
        if not (0.0 < self.cap_start < self.x_max):
            raise InvalidParameters("GridSpec: require 0 < cap_start < x_max")
        if self.cap_strength < 0.0:
            raise InvalidParameters("GridSpec: cap_strength must be >= 0")

    def validate(self, geom: WellGeometry) -> None:
        if not (geom.b < self.cap_start):
            raise InvalidParameters(f"GridSpec: absorber must start beyond b={geom.b}, got {self.cap_start}")

    def points(self) -> np.ndarray:
        n = int(round(self.x_max / self.dx))
        return np.arange(n + 1) * self.dx

    def absorber(self) -> np.ndarray:
        x = self.points()
        ramp = np.clip((x - self.cap_start) / (self.x_max - self.cap_start), 0.0, None)
        return self.cap_strength * ramp ** 4


PotentialFn = Callable[[float], np.ndarray]


class CrankNicolson:
    """
    (1 + i dt H/2hbar) psi(t+dt) = (1 - i dt H/2hbar) psi(t) on the interior points,
    with psi = 0 at both grid ends and V taken at the half step.
    """

    def __init__(
        self,
        x: np.ndarray,
        dt: float,
        potential: PotentialFn,
        *,
        absorber: Optional[np.ndarray] = None,
        mass: float = 1.0,
        hbar: float = 1.0,
        static: bool = False,
    ) -> None:
        self.x = np.asarray(x, dtype=float)
        if len(self.x) < 3:
            raise InvalidParameters("CrankNicolson: need at least 3 grid points")
        self.dx = float(self.x[1] - self.x[0])
        self.dt = float(dt)
        self.potential = potential
        self.absorber = np.zeros_like(self.x) if absorber is None else np.asarray(absorber, dtype=float)
        self.hbar = hbar
        self.kinetic = hbar * hbar / (2.0 * mass * self.dx * self.dx)
        self.tau = 1j * self.dt / (2.0 * hbar)
        self.static = static
        self._cached: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def _diagonal(self, t: float) -> np.ndarray:
        v = np.asarray(self.potential(t + 0.5 * self.dt), dtype=float)
        return 2.0 * self.kinetic + v[1:-1] - 1j * self.absorber[1:-1]

    def _operators(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if self.static and self._cached is not None:
            return self._cached
        diag = self._diagonal(t)
        m = len(diag)
        ab = np.empty((3, m), dtype=complex)
        ab[0, :] = -self.tau * self.kinetic
        ab[1, :] = 1.0 + self.tau * diag
        ab[2, :] = -self.tau * self.kinetic
        ops = (ab, diag)
        if self.static:
            self._cached = ops
        return ops

    def step(self, psi: np.ndarray, t: float) -> np.ndarray:
        ab, diag = self._operators(t)
        inner = psi[1:-1]
        h_psi = diag * inner
        h_psi[1:] -= self.kinetic * inner[:-1]
        h_psi[:-1] -= self.kinetic * inner[1:]
        rhs = inner - self.tau * h_psi
        out = np.zeros_like(psi)
        out[1:-1] = solve_banded((1, 1), ab, rhs, check_finite=False)
        return out

    def norm(self, psi: np.ndarray, upto: Optional[float] = None) -> float:
        dens = np.abs(psi) ** 2
        if upto is not None:
            dens = dens[self.x <= upto]
        return float(np.sum(dens) * self.dx)


def well_potential(geom: WellGeometry, drive: Optional[DriveSpec], x: np.ndarray) -> PotentialFn:
    barrier = (x >= geom.a) & (x <= geom.b)
    well = x < geom.a
    base = np.where(barrier, geom.v0, 0.0)
    if drive is None or drive.v1 == 0.0:
        return lambda t: base
    mask = barrier if drive.model is Model.A else well
    v1, omega = drive.v1, drive.omega
    return lambda t: base + np.where(mask, v1 * math.cos(omega * t), 0.0)


# ----------------------------
# Propagation
# ----------------------------

@dataclass(frozen=True, eq=False)
class SurvivalSeries:
    times: np.ndarray
    survival: np.ndarray  # sum over x <= b of |psi|^2 dx
    norm: np.ndarray      # same over the whole grid
    period: Optional[float] = None

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.survival) == len(self.norm)):
            raise InvalidParameters("SurvivalSeries: arrays must share the time axis")


def initial_state(geom: WellGeometry, grid: GridSpec, energy: float) -> np.ndarray:
    """sin(k x) in the well joined to its decaying tail in the barrier, zero beyond b, unit norm."""
    if not (0.0 < energy < geom.v0):
        raise InvalidParameters("initial_state: energy must lie between 0 and v0")
    x = grid.points()
    scale = geom.wavenumber_scale()
    k = math.sqrt(scale * energy)
    q = math.sqrt(scale * (geom.v0 - energy))
    psi = np.where(
        x < geom.a,
        np.sin(k * x),
        np.where(x <= geom.b, math.sin(k * geom.a) * np.exp(-q * (x - geom.a)), 0.0),
    ).astype(complex)
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def _check_initial(psi0: np.ndarray, grid: GridSpec, x: np.ndarray) -> None:
    if psi0.shape != x.shape:
        raise InvalidParameters(f"propagate: psi0 has {psi0.shape[0]} points, grid has {len(x)}")
    if abs(psi0[0]) > 1.0e-12:
        raise InvalidParameters("propagate: psi0 must vanish at x = 0")
    if np.max(np.abs(psi0[x >= grid.cap_start]), initial=0.0) > 1.0e-12:
        raise InvalidParameters("propagate: psi0 must vanish inside the absorber")
    total = float(np.sum(np.abs(psi0) ** 2) * grid.dx)
    if abs(total - 1.0) > 1.0e-6:
        raise InvalidParameters(f"propagate: psi0 must be normalized, got norm {total:.8f}")


def propagate(
    geom: WellGeometry,
    drive: Optional[DriveSpec],
    grid: GridSpec,
    psi0: np.ndarray,
    t_final: float,
    *,
    record_every: int = 10,
) -> SurvivalSeries:
    grid.validate(geom)
    if t_final <= 0.0 or record_every < 1:
        raise InvalidParameters("propagate: t_final > 0 and record_every >= 1 required")
    x = grid.points()
    psi = np.asarray(psi0, dtype=complex)
    _check_initial(psi, grid, x)
    if grid.dt > grid.dx * grid.dx:
        logger.warning("dt=%g exceeds dx^2=%g: phases are under-resolved (stability is unaffected)", grid.dt, grid.dx ** 2)

    static = drive is None or drive.v1 == 0.0
    stepper = CrankNicolson(
        x, grid.dt, well_potential(geom, drive, x),
        absorber=grid.absorber(), mass=geom.mass, hbar=geom.hbar, static=static,
    )
    n_steps = int(math.ceil(t_final / grid.dt))
    times, surv, norms = [0.0], [stepper.norm(psi, geom.b)], [stepper.norm(psi)]
    for i in range(1, n_steps + 1):
        psi = stepper.step(psi, (i - 1) * grid.dt)
        if i % record_every == 0 or i == n_steps:
            times.append(i * grid.dt)
            surv.append(stepper.norm(psi, geom.b))
            norms.append(stepper.norm(psi))
    logger.info(
        "propagated %d steps to t=%g: survival %.6f, total norm %.6f",
        n_steps, n_steps * grid.dt, surv[-1], norms[-1],
    )
    period = None if static else 2.0 * math.pi / drive.omega
    return SurvivalSeries(np.array(times), np.array(surv), np.array(norms), period)


# ----------------------------
# Decay fits
# ----------------------------

@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    n_points: int
    intercept: float


def _period_blocks(t: np.ndarray, s: np.ndarray, period: float) -> Tuple[np.ndarray, np.ndarray]:
    """Averages over whole drive periods; partial periods at the ends are dropped."""
    idx = np.floor((t - t[0]) / period).astype(int)
    counts = np.bincount(idx)
    full = counts >= max(1, int(0.9 * counts.max()))
    full[-1] = full[-1] and counts[-1] == counts.max()
    t_mean = np.bincount(idx, weights=t) / np.maximum(counts, 1)
    s_mean = np.bincount(idx, weights=s) / np.maximum(counts, 1)
    return t_mean[full], s_mean[full]


def fit_decay(
    times,
    survival,
    *,
    t_window: Optional[Tuple[float, float]] = None,
    period: Optional[float] = None,
    drop_fraction: float = DROP_FRACTION,
    min_r_squared: float = MIN_R_SQUARED,
) -> DecayFit:
    """Least-squares line through ln(survival); the rate is minus its slope."""
    t = np.asarray(times, dtype=float)
    s = np.asarray(survival, dtype=float)
    if t.shape != s.shape:
        raise InvalidParameters("fit_decay: times and survival differ in length")
    if t_window is not None:
        mask = (t >= t_window[0]) & (t <= t_window[1])
    else:
        mask = np.arange(len(t)) >= int(drop_fraction * len(t))
    t, s = t[mask], s[mask]
    if period is not None:
        t, s = _period_blocks(t, s, period)
    keep = s > 0.0
    t, s = t[keep], s[keep]
    if len(t) < 3:
        raise InvalidParameters(f"fit_decay: need at least 3 points, got {len(t)}")

    y = np.log(s)
    design = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ np.array([slope, intercept])
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    if r2 < min_r_squared:
        raise PoorFit(f"fit_decay: R^2={r2:.4f} below {min_r_squared}", r_squared=r2)
    return DecayFit(rate=float(-slope), r_squared=r2, n_points=len(t), intercept=float(intercept))


def fit_decay_rate(
    series: SurvivalSeries,
    t_window: Optional[Tuple[float, float]] = None,
    *,
    average_periods: bool = True,
) -> float:
    period = series.period if average_periods else None
    return fit_decay(series.times, series.survival, t_window=t_window, period=period).rate
