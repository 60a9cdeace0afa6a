"""
Region-wise Floquet wavefunctions and nondecay probabilities.

Psi(x, t) = exp(-i eps t / hbar) * sum_n profile_n(x) * exp(-i n omega t), with the
band profiles built from the stored side-band coefficients.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidParameters, MismatchedParameters
from .potential import sideband_kinematics
from .special import bessel_table
from .types import DriveSpec, FloquetRoot, Model, Region, WellGeometry

logger = logging.getLogger(__name__)

SAMPLES_PER_PERIOD = 256
GAUSS_ORDER = 16
MAX_PANELS = 512


@dataclass(frozen=True)
class WavefunctionSample:
    x: float
    t: float
    psi: complex
    region: Region

    def __post_init__(self) -> None:
        object.__setattr__(self, "region", Region(self.region))
        if not (math.isfinite(self.psi.real) and math.isfinite(self.psi.imag)):
            raise InvalidParameters("WavefunctionSample: psi must be finite")


@dataclass(frozen=True, eq=False)
class DecayCurve:
    times: np.ndarray
    p: np.ndarray
    pbar: np.ndarray
    h: np.ndarray
    im_eps: float
    h_mean: float

    def __post_init__(self) -> None:
        n = len(self.times)
        if any(len(arr) != n for arr in (self.p, self.pbar, self.h)):
            raise InvalidParameters("DecayCurve: arrays must share the time axis")
        if n and self.p[0] != 1.0:
            raise InvalidParameters("DecayCurve: p[0] must be 1")


def region_of(geom: WellGeometry, x: float) -> Region:
    if x < 0.0:
        raise InvalidParameters(f"region_of: x must be >= 0, got {x}")
    if x < geom.a:
        return Region.I
    if x <= geom.b:
        return Region.II
    return Region.III


def _tables(root: FloquetRoot):
    geom, drive = root.geometry, root.drive
    kin = sideband_kinematics(geom, drive, root.epsilon)
    n = drive.n_sidebands
    table = bessel_table(drive.alpha(geom.hbar), 2 * n)
    return kin, table.coupling(kin.orders, kin.orders)


def region_profiles(root: FloquetRoot, region: Region, x, *, derivative: bool = False) -> np.ndarray:
    """
    Band profiles (2N+1, len(x)) of one region's formula, evaluated at x even
    outside that region (used to compare both sides of an edge).
    """
    geom = root.geometry
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kin, j = _tables(root)
    k, q = kin.k[:, None], kin.q[:, None]
    co = root.coefficients
    region = Region(region)

    if region is Region.I:
        if derivative:
            shape = k * np.cos(k * x[None, :])
        else:
            shape = np.sin(k * x[None, :])
        basis = co.well[:, None] * shape
        # Model B mixes well bands into every time channel.
        return j @ basis if root.model is Model.B else basis

    if region is Region.II:
        grow = np.exp(-q * (geom.b - x[None, :]))
        decay = np.exp(-q * (x[None, :] - geom.a))
        if derivative:
            basis = q * (co.growing[:, None] * grow - co.decaying[:, None] * decay)
        else:
            basis = co.growing[:, None] * grow + co.decaying[:, None] * decay
        return j @ basis if root.model is Model.A else basis

    wave = co.outgoing[:, None] * np.exp(1j * k * (x[None, :] - geom.b))
    return 1j * k * wave if derivative else wave


def band_profiles(root: FloquetRoot, x, *, derivative: bool = False) -> np.ndarray:
    geom = root.geometry
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0):
        raise InvalidParameters("band_profiles: x must be >= 0")
    out = np.zeros((2 * root.n_sidebands + 1, len(x)), dtype=complex)
    masks = {
        Region.I: x < geom.a,
        Region.II: (x >= geom.a) & (x <= geom.b),
        Region.III: x > geom.b,
    }
    for region, mask in masks.items():
        if np.any(mask):
            out[:, mask] = region_profiles(root, region, x[mask], derivative=derivative)
    return out


def _phases(root: FloquetRoot, times: np.ndarray) -> np.ndarray:
    """exp(-i n omega t), shape (len(times), 2N+1)."""
    orders = root.drive.orders()
    return np.exp(-1j * root.drive.omega * np.outer(times, orders))


def _check_pair(root: FloquetRoot, geom: Optional[WellGeometry], drive: Optional[DriveSpec]) -> None:
    if geom is not None and geom != root.geometry:
        raise MismatchedParameters("geometry differs from the one the root was solved for")
    if drive is not None and drive != root.drive:
        raise MismatchedParameters("drive differs from the one the root was solved for")


def wavefunction_grid(root: FloquetRoot, xs, ts) -> np.ndarray:
    """Psi on the outer product grid, shape (len(ts), len(xs))."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    phi = _phases(root, ts) @ band_profiles(root, xs)
    envelope = np.exp(-1j * root.epsilon * ts / root.geometry.hbar)
    return envelope[:, None] * phi


def evaluate_wavefunction(
    root: FloquetRoot,
    geom: Optional[WellGeometry],
    drive: Optional[DriveSpec],
    x: float,
    t: float,
) -> complex:
    _check_pair(root, geom, drive)
    return complex(wavefunction_grid(root, [x], [t])[0, 0])


def sample_wavefunction(root: FloquetRoot, x: float, t: float) -> WavefunctionSample:
    return WavefunctionSample(x=float(x), t=float(t), psi=evaluate_wavefunction(root, None, None, x, t),
                              region=region_of(root.geometry, x))


# ----------------------------
# Nondecay probability
# ----------------------------

@dataclass(frozen=True, eq=False)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    panels: int


def _composite_rule(edges: Sequence[float], panels: int) -> Quadrature:
    base_x, base_w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    nodes, weights = [], []
    for lo, hi in zip(edges, edges[1:]):
        cuts = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[1:] + cuts[:-1])
        nodes.append((mid[:, None] + half[:, None] * base_x[None, :]).ravel())
        weights.append((half[:, None] * base_w[None, :]).ravel())
    return Quadrature(np.concatenate(nodes), np.concatenate(weights), panels)


def _norms(root: FloquetRoot, rule: Quadrature, times: np.ndarray) -> np.ndarray:
    """int_0^b |Phi(x, t)|^2 dx for each t (the exp(Im eps) envelope excluded)."""
    phi = _phases(root, times) @ band_profiles(root, rule.nodes)
    return (np.abs(phi) ** 2) @ rule.weights


def trapped_quadrature(root: FloquetRoot, *, rtol: float = 1.0e-10) -> Quadrature:
    """Doubles the Gauss-Legendre panel count on [0,a] and [a,b] until the norm settles."""
    geom = root.geometry
    edges = (0.0, geom.a, geom.b)
    period = 2.0 * math.pi / root.drive.omega
    checkpoints = np.linspace(0.0, period, 5)[:-1]
    panels = 2
    rule = _composite_rule(edges, panels)
    prev = _norms(root, rule, checkpoints)
    while panels < MAX_PANELS:
        panels *= 2
        finer = _composite_rule(edges, panels)
        cur = _norms(root, finer, checkpoints)
        rule = finer
        if np.max(np.abs(cur - prev) / np.abs(cur)) < rtol:
            return rule
        prev = cur
    logger.warning("quadrature did not settle to rtol=%g with %d panels", rtol, panels)
    return rule


def period_average_h(root: FloquetRoot, rule: Quadrature, samples: int = SAMPLES_PER_PERIOD) -> float:
    period = 2.0 * math.pi / root.drive.omega
    ts = np.linspace(0.0, period, samples + 1)
    norms = _norms(root, rule, np.concatenate([[0.0], ts]))
    h = norms[1:] / norms[0]
    return float(trapezoid(h, ts) / period)


def nondecay_probability(
    root: FloquetRoot,
    geom: Optional[WellGeometry],
    drive: Optional[DriveSpec],
    times,
    *,
    samples_per_period: int = SAMPLES_PER_PERIOD,
) -> DecayCurve:
    """P(t) = exp(2 Im(eps) t / hbar) h(t); pbar uses the one-period trapezoid mean of h."""
    _check_pair(root, geom, drive)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or times[0] != 0.0:
        raise InvalidParameters("nondecay_probability: times must start at 0")
    if np.any(np.diff(times) <= 0.0):
        raise InvalidParameters("nondecay_probability: times must be increasing")

    rule = trapped_quadrature(root)
    norms = _norms(root, rule, times)
    h = norms / norms[0]
    im_eps = root.epsilon.imag
    envelope = np.exp(2.0 * im_eps * times / root.geometry.hbar)
    h_mean = period_average_h(root, rule, samples_per_period)
    p = envelope * h
    p[0] = 1.0
    logger.debug("nondecay: %d times, <h>=%.6f, h in [%.6f, %.6f]", len(times), h_mean, h.min(), h.max())
    return DecayCurve(times=times, p=p, pbar=envelope * h_mean, h=h, im_eps=im_eps, h_mean=h_mean)
