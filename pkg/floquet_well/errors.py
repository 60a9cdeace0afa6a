from __future__ import annotations

from typing import Optional


class FloquetError(Exception):
    """Base class. `code` mirrors the reject codes used in reports, `exit_code` the CLI."""
    code = "FLOQUET_ERROR"
    exit_code = 3


class InvalidParameters(FloquetError, ValueError):
    code = "INVALID_PARAMETERS"
    exit_code = 1


class ConfigError(InvalidParameters):
    code = "CONFIG_ERROR"
    exit_code = 1


class SingularSystem(FloquetError):
    """Truncated side-band system is singular at the trial energy (spurious resonance)."""
    code = "SINGULAR_SYSTEM"
    exit_code = 3

    def __init__(self, message: str, *, epsilon: complex, condition: float = float("inf")) -> None:
        super().__init__(f"{message} (epsilon={epsilon!r}, condition={condition:.3e})")
        self.epsilon = epsilon
        self.condition = condition


class ResidualPole(FloquetError):
    code = "RESIDUAL_POLE"
    exit_code = 3

    def __init__(self, message: str, *, epsilon: complex) -> None:
        super().__init__(f"{message} (epsilon={epsilon!r})")
        self.epsilon = epsilon


class NoConvergence(FloquetError):
    code = "NO_CONVERGENCE"
    exit_code = 2

    def __init__(self, message: str, *, last: Optional[complex] = None) -> None:
        super().__init__(message if last is None else f"{message} (last={last!r})")
        self.last = last


class PoleCaptured(NoConvergence):
    code = "POLE_CAPTURED"


class NotFound(FloquetError):
    code = "NOT_FOUND"
    exit_code = 2


class UnphysicalRoot(NotFound):
    code = "UNPHYSICAL_ROOT"


class GridTooCoarse(FloquetError):
    code = "GRID_TOO_COARSE"
    exit_code = 3


class PoorFit(FloquetError):
    code = "POOR_FIT"
    exit_code = 3

    def __init__(self, message: str, *, r_squared: float) -> None:
        super().__init__(f"{message} (r_squared={r_squared:.6f})")
        self.r_squared = r_squared


class MismatchedParameters(FloquetError):
    code = "MISMATCHED_PARAMETERS"
    exit_code = 3
