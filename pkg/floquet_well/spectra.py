"""
Frequency and amplitude sweeps of Floquet branches, crossing classification
and the scan for the amplitude at which a direct crossing turns avoided.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config import thread_count
from .errors import GridTooCoarse, InvalidParameters, NotFound
from .floquet import floquet_root, residual
from .potential import check_drive, default_sidebands, zone_reduce
from .rootfind import ComplexFn, ContinuationConfig, RootConfig, continue_branch
from .types import (
    Branch,
    BranchPoint,
    CrossingKind,
    DriveSpec,
    FanoShape,
    Model,
    SweepParameter,
    WellGeometry,
)

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1.0e-4  # units of v0
STABILITY_OFFSET = 5  # grid steps either side of the gap minimum

BranchPair = Tuple[Branch, Branch]


@dataclass(frozen=True)
class CrossingReport:
    kind: CrossingKind
    omega_star: float  # parameter value at the gap minimum
    min_gap: float
    gap_tolerance: float
    stability_exchanged: bool
    branches: Tuple[int, int]
    parameter_name: SweepParameter = SweepParameter.OMEGA

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CrossingKind(self.kind))
        if (self.kind is CrossingKind.DIRECT) != (self.min_gap < self.gap_tolerance):
            raise InvalidParameters("CrossingReport: kind must be direct exactly when min_gap < gap_tolerance")
        if self.stability_exchanged and self.kind is not CrossingKind.AVOIDED:
            raise InvalidParameters("CrossingReport: stability exchange requires an avoided crossing")


# ----------------------------
# Sweeps
# ----------------------------

def omega_family(geom: WellGeometry, model: Model, v1: float, n_sidebands: int) -> Callable[[float], ComplexFn]:
    def at(omega: float) -> ComplexFn:
        drive = DriveSpec(v1, omega, model, n_sidebands)
        return lambda eps: residual(geom, drive, eps)
    return at


def amplitude_family(geom: WellGeometry, model: Model, omega: float, n_sidebands: int) -> Callable[[float], ComplexFn]:
    def at(v1: float) -> ComplexFn:
        drive = DriveSpec(v1, omega, model, n_sidebands)
        return lambda eps: residual(geom, drive, eps)
    return at


def _with_zones(
    geom: WellGeometry,
    branch: Branch,
    drive_at: Callable[[float], DriveSpec],
    attach_roots: bool,
) -> Branch:
    points = []
    for p in branch.points:
        drive = drive_at(p.param)
        zone_eps, zone_idx = zone_reduce(p.epsilon, drive.omega, geom.hbar)
        root = floquet_root(geom, drive, p.epsilon, residual_norm=p.residual_norm) if attach_roots else None
        points.append(replace(p, zone_epsilon=zone_eps, zone_index=zone_idx, root=root))
    return replace(branch, points=tuple(points))


def _run_branches(
    geom: WellGeometry,
    family: Callable[[float], ComplexFn],
    grid: Sequence[float],
    seeds: Sequence[complex],
    drive_at: Callable[[float], DriveSpec],
    parameter_name: SweepParameter,
    cfg: Optional[RootConfig],
    continuation: Optional[ContinuationConfig],
    attach_roots: bool,
    threads: Optional[int],
) -> List[Branch]:
    cfg = cfg or RootConfig.for_geometry(geom)
    cont = continuation or ContinuationConfig.for_geometry(geom)

    def one(job: Tuple[int, complex]) -> Branch:
        idx, seed = job
        branch = continue_branch(
            family, seed, grid, cfg,
            continuation=cont, parameter_name=parameter_name, branch_id=idx,
        )
        return _with_zones(geom, branch, drive_at, attach_roots)

    jobs = list(enumerate(complex(s) for s in seeds))
    workers = max(1, min(threads or thread_count(), len(jobs)))
    if workers == 1:
        return [one(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))


def sweep(
    geom: WellGeometry,
    model: Model,
    v1: float,
    omega_grid: Sequence[float],
    seeds: Sequence[complex],
    *,
    n_sidebands: Optional[int] = None,
    cfg: Optional[RootConfig] = None,
    continuation: Optional[ContinuationConfig] = None,
    attach_roots: bool = False,
    allow_strong: bool = False,
    threads: Optional[int] = None,
) -> List[Branch]:
    """
    One branch per seed across omega_grid. The truncation N is fixed over the
    sweep (default: enough side-bands for the smallest omega).
    """
    if len(omega_grid) == 0:
        raise InvalidParameters("sweep: empty omega grid")
    model = Model(model)
    n = default_sidebands(geom, v1, min(omega_grid)) if n_sidebands is None else int(n_sidebands)
    check_drive(geom, DriveSpec(v1, min(omega_grid), model, n), allow_strong=allow_strong)
    branches = _run_branches(
        geom, omega_family(geom, model, v1, n), omega_grid, seeds,
        lambda w: DriveSpec(v1, w, model, n), SweepParameter.OMEGA,
        cfg, continuation, attach_roots, threads,
    )
    done = sum(1 for b in branches if len(b.points) == len(omega_grid))
    logger.info("omega sweep v1=%g model=%s N=%d: %d/%d branches complete", v1, model.value, n, done, len(branches))
    return branches


def sweep_amplitude(
    geom: WellGeometry,
    model: Model,
    omega: float,
    v1_grid: Sequence[float],
    seeds: Sequence[complex],
    *,
    n_sidebands: Optional[int] = None,
    cfg: Optional[RootConfig] = None,
    continuation: Optional[ContinuationConfig] = None,
    attach_roots: bool = False,
    allow_strong: bool = False,
    validate_truncation: bool = True,
    threads: Optional[int] = None,
) -> List[Branch]:
    """Continues branches in v1 at fixed omega with a constant truncation."""
    if len(v1_grid) == 0:
        raise InvalidParameters("sweep_amplitude: empty v1 grid")
    model = Model(model)
    top = max(v1_grid)
    n = default_sidebands(geom, top, omega) if n_sidebands is None else int(n_sidebands)
    check_drive(geom, DriveSpec(top, omega, model, n), allow_strong=allow_strong, validate_truncation=validate_truncation)
    branches = _run_branches(
        geom, amplitude_family(geom, model, omega, n), v1_grid, seeds,
        lambda v: DriveSpec(v, omega, model, n), SweepParameter.V1,
        cfg, continuation, attach_roots, threads,
    )
    logger.info("amplitude sweep omega=%g model=%s N=%d: %d branches", omega, model.value, n, len(branches))
    return branches


# ----------------------------
# Crossings
# ----------------------------

def shared_points(b1: Branch, b2: Branch) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(params, eps1, eps2) in increasing parameter at the values both branches hold."""
    common, i1, i2 = np.intersect1d(b1.params(), b2.params(), assume_unique=True, return_indices=True)
    if len(common) == 0:
        raise InvalidParameters("branches share no parameter values")
    return common, b1.epsilons()[i1], b2.epsilons()[i2]


def _real_differences(
    b1: Branch, b2: Branch, hbar: float, omega: Optional[float],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(params, Re(eps1) - Re(eps2), hbar*omega) at the shared points."""
    params, e1, e2 = shared_points(b1, b2)
    if b1.parameter_name is SweepParameter.OMEGA:
        quantum = hbar * params
    elif omega is None:
        raise InvalidParameters("aligned_gaps: amplitude sweeps need the fixed omega")
    else:
        quantum = np.full(len(params), hbar * omega)
    return params, e1.real - e2.real, quantum


def aligned_gaps(b1: Branch, b2: Branch, *, hbar: float = 1.0, omega: Optional[float] = None) -> np.ndarray:
    """|Re(eps1) - Re(eps2) - z*hbar*omega| with z chosen per shared point to minimize it."""
    _, diff, quantum = _real_differences(b1, b2, hbar, omega)
    z = np.round(diff / quantum)
    return np.abs(diff - z * quantum)


def _sign_change(params: np.ndarray, diff: np.ndarray, quantum: np.ndarray, i: int) -> Optional[float]:
    """
    Parameter where the aligned difference passes through zero next to point i,
    with the photon count of point i held fixed, or None if it keeps its sign.
    """
    z = np.round(diff[i] / quantum[i])
    signed = diff - z * quantum
    for lo in (i - 1, i):
        left, right = signed[lo], signed[lo + 1]
        if left * right < 0.0:
            return float(params[lo] + (params[lo + 1] - params[lo]) * left / (left - right))
    return None


def _refine_minimum(params: np.ndarray, gaps: np.ndarray, i: int) -> Tuple[float, float]:
    """Vertex of the parabola through gap^2 at i-1, i, i+1."""
    x = params[i - 1: i + 2]
    y = gaps[i - 1: i + 2] ** 2
    c2, c1, c0 = np.polyfit(x - x[1], y, 2)
    if c2 <= 0.0:
        return float(params[i]), float(gaps[i])
    shift = float(np.clip(-c1 / (2.0 * c2), x[0] - x[1], x[2] - x[1]))
    value = c2 * shift * shift + c1 * shift + c0
    return float(x[1] + shift), float(np.sqrt(max(0.0, value)))


def classify_crossing(
    b1: Branch,
    b2: Branch,
    gap_tolerance: float,
    *,
    hbar: float = 1.0,
    omega: Optional[float] = None,
) -> CrossingReport:
    if gap_tolerance <= 0.0:
        raise InvalidParameters("classify_crossing: gap_tolerance must be positive")
    if b1.parameter_name is not b2.parameter_name:
        raise InvalidParameters("classify_crossing: branches were swept in different parameters")
    params, diff, quantum = _real_differences(b1, b2, hbar, omega)
    gaps = aligned_gaps(b1, b2, hbar=hbar, omega=omega)
    _, e1, e2 = shared_points(b1, b2)
    if len(gaps) < 3:
        raise GridTooCoarse(f"need at least 3 grid points, got {len(gaps)}")
    i = int(np.argmin(gaps))
    if i == 0 or i == len(gaps) - 1:
        raise GridTooCoarse(f"gap minimum at the grid edge ({b1.parameter_name.value}={params[i]:.6g})")

    # Real parts that pass through each other between two grid points cross directly,
    # however coarse the grid.
    zero = _sign_change(params, diff, quantum, i)
    if zero is not None:
        star, min_gap = zero, 0.0
    else:
        star, min_gap = _refine_minimum(params, gaps, i)
    kind = CrossingKind.DIRECT if min_gap < gap_tolerance else CrossingKind.AVOIDED

    lo = max(0, i - STABILITY_OFFSET)
    hi = min(len(gaps) - 1, i + STABILITY_OFFSET)
    im_diff = e1.imag - e2.imag
    before, after = np.sign(im_diff[lo]), np.sign(im_diff[hi])
    exchanged = bool(before != 0 and after != 0 and before != after)
    if exchanged and kind is CrossingKind.DIRECT:
        logger.warning(
            "Im ordering swaps across a direct crossing at %s=%.6g; not reported as an exchange",
            b1.parameter_name.value, star,
        )
        exchanged = False

    pair = tuple(sorted((b1.branch_id, b2.branch_id)))
    logger.info(
        "crossing %s of branches %s at %s=%.6g: min gap %.3e (tol %.1e), exchange=%s",
        kind.value, pair, b1.parameter_name.value, star, min_gap, gap_tolerance, exchanged,
    )
    return CrossingReport(
        kind=kind,
        omega_star=star,
        min_gap=min_gap,
        gap_tolerance=gap_tolerance,
        stability_exchanged=exchanged,
        branches=pair,
        parameter_name=b1.parameter_name,
    )


@dataclass(frozen=True)
class CriticalScan:
    v1_critical: float
    amplitudes: Tuple[float, ...]  # classified settings only, increasing
    reports: Tuple[CrossingReport, ...]
    gaps_monotone: bool  # min_gap non-decreasing from v1_critical on
    stays_avoided: bool  # no direct crossing from v1_critical on

    def beyond(self) -> List[Tuple[float, CrossingReport]]:
        return [(v, r) for v, r in zip(self.amplitudes, self.reports) if v >= self.v1_critical]

    def at_critical(self) -> CrossingReport:
        return self.beyond()[0][1]


def critical_amplitude_scan(
    geom: WellGeometry,
    v1_grid: Sequence[float],
    omega_window: Sequence[float],
    gap_tolerance: Optional[float] = None,
    *,
    model: Model = Model.A,
    seeds: Optional[Sequence[complex]] = None,
    branch_pair: Optional[Callable[[float], BranchPair]] = None,
    n_sidebands: Optional[int] = None,
    cfg: Optional[RootConfig] = None,
    continuation: Optional[ContinuationConfig] = None,
    allow_strong: bool = False,
    threads: Optional[int] = None,
) -> CriticalScan:
    """
    Classifies the crossing of two branches across omega_window for each v1 and
    returns the smallest v1 classified as avoided, with all per-v1 reports.

    `branch_pair(v1)` replaces the physical sweep (two seeded branches over
    omega_window) when given.
    """
    grid = [float(v) for v in v1_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameters("critical_amplitude_scan: v1_grid must be increasing")
    tol = GAP_TOLERANCE * geom.v0 if gap_tolerance is None else float(gap_tolerance)

    if branch_pair is None:
        if seeds is None or len(seeds) < 2:
            raise InvalidParameters("critical_amplitude_scan: need two seeds or a branch_pair factory")

        def branch_pair(v1: float) -> BranchPair:
            b1, b2 = sweep(
                geom, model, v1, omega_window, list(seeds[:2]),
                n_sidebands=n_sidebands, cfg=cfg, continuation=continuation,
                allow_strong=allow_strong, threads=1,
            )
            return b1, b2

    def classify(v1: float) -> Optional[CrossingReport]:
        b1, b2 = branch_pair(v1)
        try:
            return classify_crossing(b1, b2, tol, hbar=geom.hbar)
        except (GridTooCoarse, InvalidParameters) as exc:
            logger.warning("v1=%g: crossing not classified (%s)", v1, exc)
            return None

    workers = max(1, min(threads or thread_count(), len(grid)))
    if workers == 1:
        results = [classify(v) for v in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(classify, grid))

    scanned = [(v, r) for v, r in zip(grid, results) if r is not None]
    critical: Optional[float] = None
    seen_direct = False
    for v, r in scanned:
        if r.kind is CrossingKind.DIRECT:
            seen_direct = True
        elif seen_direct:
            critical = v
            break
    if critical is None:
        raise NotFound("crossing classification never changes from direct to avoided over the v1 grid")

    beyond = [r for v, r in scanned if v >= critical]
    gaps = [r.min_gap for r in beyond]
    monotone = all(b >= a for a, b in zip(gaps, gaps[1:]))
    avoided = all(r.kind is CrossingKind.AVOIDED for r in beyond)
    if not monotone:
        logger.warning("min gap is not monotone beyond the critical amplitude v1=%g", critical)
    if not avoided:
        logger.warning("a direct crossing reappears beyond the critical amplitude v1=%g", critical)
    logger.info("critical amplitude v1=%g (%d of %d amplitudes classified)", critical, len(scanned), len(grid))
    return CriticalScan(
        v1_critical=critical,
        amplitudes=tuple(v for v, _ in scanned),
        reports=tuple(r for _, r in scanned),
        gaps_monotone=monotone,
        stays_avoided=avoided,
    )


# ----------------------------
# Line shapes
# ----------------------------

def fano_pattern(
    branch: Branch,
    center: float,
    window: float,
    *,
    threshold: Optional[float] = None,
) -> FanoShape:
    """
    Shape of Re(eps) around `center` once the linear trend over the window is
    removed: a minimum before a maximum (in increasing parameter) is a dip-peak.
    """
    params, eps = branch.params(), branch.epsilons()
    mask = np.abs(params - center) <= window
    if np.count_nonzero(mask) < 5:
        raise InvalidParameters("fano_pattern: fewer than 5 points inside the window")
    x, y = params[mask], eps[mask].real
    order = np.argsort(x)
    x, y = x[order], y[order]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    floor = 1.0e-8 * max(1.0, float(np.max(np.abs(y)))) if threshold is None else threshold
    if np.ptp(resid) < floor:
        return FanoShape.NONE
    return FanoShape.DIP_PEAK if np.argmin(resid) < np.argmax(resid) else FanoShape.PEAK_DIP


def resonance_frequency(e_low: complex, e_high: complex, hbar: float = 1.0) -> float:
    """omega at which one quantum bridges the two static levels."""
    gap = (complex(e_high).real - complex(e_low).real) / hbar
    if gap <= 0.0:
        raise InvalidParameters("resonance_frequency: e_high must lie above e_low")
    return gap
