"""
Complex root finding (Muller's method, secant fallback) and parameter
continuation of roots of a residual family.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

from .errors import FloquetError, InvalidParameters, NoConvergence, PoleCaptured, ResidualPole
from .types import Branch, BranchPoint, BranchStatus, SweepParameter, WellGeometry

logger = logging.getLogger(__name__)

ComplexFn = Callable[[complex], complex]
ResidualFamily = Callable[[float], ComplexFn]

SLOW_ITERATIONS = 50
_MAX_DAMPING = 8
_MAX_STALLS = 4


@dataclass(frozen=True)
class RootConfig:
    max_iter: int = 200
    step_tol: float = 1.0e-13
    residual_tol: float = 1.0e-12
    bracket_scale: float = 1.0e-3  # absolute; for_geometry uses 1e-4*v0
    # Stagnation at |f| below stall_factor*residual_tol counts as converged (noise floor).
    stall_factor: float = 1.0e3

    def __post_init__(self) -> None:
        if self.max_iter <= 0:
            raise InvalidParameters("RootConfig: max_iter must be positive")
        if min(self.step_tol, self.residual_tol, self.bracket_scale, self.stall_factor) <= 0.0:
            raise InvalidParameters("RootConfig: tolerances must be positive")

    @classmethod
    def for_geometry(cls, geom: WellGeometry, **overrides) -> "RootConfig":
        params = {"bracket_scale": 1.0e-4 * geom.v0}
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class ContinuationConfig:
    jump_threshold: float = 0.5  # 0.05*v0 for the v0=10 reference well
    max_halvings: int = 6

    def __post_init__(self) -> None:
        if self.jump_threshold <= 0.0 or self.max_halvings < 0:
            raise InvalidParameters("ContinuationConfig: jump_threshold > 0 and max_halvings >= 0 required")

    @classmethod
    def for_geometry(cls, geom: WellGeometry, **overrides) -> "ContinuationConfig":
        params = {"jump_threshold": 0.05 * geom.v0}
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class RootResult:
    root: complex
    residual: float
    iterations: int
    method: str
    stalled: bool = False

    @property
    def slow(self) -> bool:
        return self.stalled or self.iterations > SLOW_ITERATIONS


# ----------------------------
# Iterations
# ----------------------------

def _evaluate(f: ComplexFn, z: complex) -> complex:
    try:
        val = complex(f(z))
    except (ResidualPole, ZeroDivisionError, OverflowError):
        return complex(math.inf, 0.0)
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        return complex(math.inf, 0.0)
    return val


def _muller_step(x0: complex, x1: complex, x2: complex, f0: complex, f1: complex, f2: complex) -> Optional[complex]:
    if x1 == x0 or x2 == x1:
        return None
    q = (x2 - x1) / (x1 - x0)
    a = q * f2 - q * (1.0 + q) * f1 + q * q * f0
    b = (2.0 * q + 1.0) * f2 - (1.0 + q) ** 2 * f1 + q * q * f0
    c = (1.0 + q) * f2
    disc = cmath.sqrt(b * b - 4.0 * a * c)
    den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
    if den == 0.0 or not cmath.isfinite(den):
        return None
    step = -(x2 - x1) * 2.0 * c / den
    return step if cmath.isfinite(step) else None


def _secant_step(x1: complex, x2: complex, f1: complex, f2: complex) -> Optional[complex]:
    if f2 == f1 or not (cmath.isfinite(f1) and cmath.isfinite(f2)):
        return None
    step = -f2 * (x2 - x1) / (f2 - f1)
    return step if cmath.isfinite(step) else None


def _iterate(f: ComplexFn, guess: complex, cfg: RootConfig, method: str) -> RootResult:
    h = cfg.bracket_scale
    x2 = complex(guess)
    f2 = _evaluate(f, x2)
    if abs(f2) < cfg.residual_tol:
        return RootResult(x2, abs(f2), 0, method)
    if not cmath.isfinite(f2):
        raise PoleCaptured(f"{method}: residual is singular at the initial guess", last=x2)

    if method == "muller":
        x0, x1 = x2 - h, x2 + h
    else:
        x0, x1 = x2, x2 + h
    f0, f1 = _evaluate(f, x0), _evaluate(f, x1)
    start = abs(f2)
    stalls = 0

    for it in range(1, cfg.max_iter + 1):
        step = _muller_step(x0, x1, x2, f0, f1, f2) if method == "muller" else None
        if step is None:
            step = _secant_step(x1, x2, f1, f2)
        if step is None:
            step = complex(h, h) * 2.0 ** (-it)

        x3 = x2 + step
        f3 = _evaluate(f, x3)
        damped = 0
        while (not cmath.isfinite(f3) or abs(f3) > 10.0 * abs(f2)) and damped < _MAX_DAMPING:
            step /= 2.0
            x3 = x2 + step
            f3 = _evaluate(f, x3)
            damped += 1

        x0, x1, x2 = x1, x2, x3
        f0, f1, f2 = f1, f2, f3
        if not cmath.isfinite(f2):
            raise PoleCaptured(f"{method}: iterate landed on a residual pole", last=x2)

        small_step = abs(step) < cfg.step_tol * max(1.0, abs(x2))
        if abs(f2) < cfg.residual_tol and (small_step or f2 == 0.0):
            return RootResult(x2, abs(f2), it, method)
        if small_step:
            if abs(f2) < cfg.stall_factor * cfg.residual_tol:
                return RootResult(x2, abs(f2), it, method, stalled=True)
            stalls += 1
            if stalls >= _MAX_STALLS:
                if abs(f2) > start:
                    raise PoleCaptured(f"{method}: |f| grew to {abs(f2):.3e} while the step shrank", last=x2)
                raise NoConvergence(f"{method}: stalled at |f|={abs(f2):.3e}", last=x2)
        else:
            stalls = 0

    if abs(f2) < cfg.residual_tol:
        return RootResult(x2, abs(f2), cfg.max_iter, method, stalled=True)
    raise NoConvergence(f"{method}: no convergence after {cfg.max_iter} iterations, |f|={abs(f2):.3e}", last=x2)


def solve_root(f: ComplexFn, guess: complex, cfg: Optional[RootConfig] = None) -> RootResult:
    """Muller first; the secant iteration is the fallback when Muller does not converge."""
    cfg = cfg or RootConfig()
    try:
        result = _iterate(f, guess, cfg, "muller")
    except NoConvergence as exc:
        logger.debug("muller failed from %r (%s); retrying with secant", guess, exc)
        try:
            result = _iterate(f, guess, cfg, "secant")
        except NoConvergence:
            raise exc
    if result.slow:
        logger.warning(
            "slow root convergence near %r: %d iterations via %s (stalled=%s)",
            result.root, result.iterations, result.method, result.stalled,
        )
    else:
        logger.debug("root %r after %d %s iterations", result.root, result.iterations, result.method)
    return result


def find_root(f: ComplexFn, guess: complex, cfg: Optional[RootConfig] = None) -> complex:
    return solve_root(f, guess, cfg).root


# ----------------------------
# Continuation
# ----------------------------

class _Lost(Exception):
    def __init__(self, reason: str, pole: bool) -> None:
        super().__init__(reason)
        self.pole = pole


def _strictly_monotone(values: Sequence[float]) -> bool:
    pairs = list(zip(values, values[1:]))
    return all(b > a for a, b in pairs) or all(b < a for a, b in pairs)


def continue_branch(
    residual: ResidualFamily,
    seed: complex,
    grid: Sequence[float],
    cfg: Optional[RootConfig] = None,
    *,
    continuation: Optional[ContinuationConfig] = None,
    parameter_name: SweepParameter = SweepParameter.OMEGA,
    branch_id: int = 0,
) -> Branch:
    """
    Tracks one root across `grid`. Each solve starts from a linear extrapolation of
    the last two accepted points; a failed solve or a jump above the threshold
    halves the local step (at most max_halvings deep) before the branch is lost.
    The first grid point is held to the same threshold against the seed, with
    no halving.
    """
    cfg = cfg or RootConfig()
    cont = continuation or ContinuationConfig()
    grid = [float(g) for g in grid]
    if not _strictly_monotone(grid):
        raise InvalidParameters("continue_branch: grid must be strictly monotone")

    points: List[BranchPoint] = []
    failures: List[str] = []
    refined = 0

    def predict(p: float) -> complex:
        if not points:
            return complex(seed)
        if len(points) == 1:
            return points[-1].epsilon
        p0, p1 = points[-2], points[-1]
        return p1.epsilon + (p1.epsilon - p0.epsilon) * (p - p1.param) / (p1.param - p0.param)

    def advance(target: float, depth: int) -> None:
        nonlocal refined
        error: Optional[FloquetError] = None
        try:
            result = solve_root(residual(target), predict(target), cfg)
            point = BranchPoint(target, result.root, result.residual)
            anchor = points[-1].epsilon if points else complex(seed)
            jump = abs(point.epsilon - anchor)
            if jump > cont.jump_threshold:
                origin = "last point" if points else "seed"
                reason = f"{parameter_name.value}={target:.10g}: jump {jump:.3e} from the {origin} above threshold"
            else:
                points.append(point)
                return
        except FloquetError as exc:
            error = exc
            reason = f"{parameter_name.value}={target:.10g}: {exc}"
        failures.append(reason)

        if depth >= cont.max_halvings or not points:
            raise _Lost(reason, pole=isinstance(error, PoleCaptured))
        mid = points[-1].param + 0.5 * (target - points[-1].param)
        logger.debug("halving step toward %g (depth %d)", target, depth + 1)
        advance(mid, depth + 1)
        refined += 1
        advance(target, depth + 1)

    status = BranchStatus.COMPLETE
    for target in grid:
        try:
            advance(target, 0)
        except _Lost as lost:
            status = BranchStatus.POLE_TERMINATED if lost.pole else BranchStatus.LOST
            break

    logger.info(
        "branch %d: %d points, status=%s, %d refinements",
        branch_id, len(points), status.value, refined,
    )
    return Branch(
        parameter_name=parameter_name,
        points=tuple(points),
        seed=complex(seed),
        status=status,
        failures=tuple(failures),
        branch_id=branch_id,
        refined=refined,
    )
