"""
Run configuration: a JSON tree of blocks, each a frozen dataclass.

Every block rejects unknown keys and wrongly typed values with a ConfigError
that names the dotted path of the offending entry.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, ClassVar, Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigError, InvalidParameters
from .potential import default_sidebands
from .rootfind import ContinuationConfig, RootConfig
from .tdse import GridSpec
from .types import DriveSpec, Model, SweepParameter, WellGeometry

THREADS_ENV = "FLOQUET_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {n}")
    return n


# ----------------------------
# Field coercion
# ----------------------------

def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def _flag(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false")
    return value


def _text(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string")
    return value


_COERCE = {"float": _number, "int": _integer, "bool": _flag, "str": _text}


def _optional(kind: str):
    def coerce(value: Any, path: str):
        return None if value is None else _COERCE[kind](value, path)
    return coerce


def _block(cls, raw: Any, path: str, schema: Optional[Dict[str, str]] = None):
    """Builds dataclass `cls` from a mapping using a schema of field kinds (default: cls.schema)."""
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{path}: expected an object")
    schema = cls.schema if schema is None else schema
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key")
    values = {}
    for name, kind in schema.items():
        if name not in raw:
            continue
        coerce = _optional(kind[:-1]) if kind.endswith("?") else _COERCE[kind]
        values[name] = coerce(raw[name], f"{path}.{name}")
    try:
        return cls(**values)
    except InvalidParameters as exc:
        raise ConfigError(f"{path}: {exc}") from None


# ----------------------------
# Blocks
# ----------------------------

@dataclass(frozen=True)
class DriveBlock:
    v1: float = 0.0
    omega: float = 1.0
    model: str = "A"
    sidebands: Optional[int] = None
    allow_strong: bool = False

    schema: ClassVar[Dict[str, str]] = {
        "v1": "float", "omega": "float", "model": "str", "sidebands": "int?", "allow_strong": "bool",
    }

    def __post_init__(self) -> None:
        if self.model not in ("A", "B"):
            raise InvalidParameters(f"model must be 'A' or 'B', got {self.model!r}")
        if self.sidebands is not None and self.sidebands < 0:
            raise InvalidParameters("sidebands must be >= 0")

    def spec(self, geom: WellGeometry, *, v1: Optional[float] = None, omega: Optional[float] = None) -> DriveSpec:
        v1 = self.v1 if v1 is None else v1
        omega = self.omega if omega is None else omega
        n = default_sidebands(geom, v1, omega) if self.sidebands is None else self.sidebands
        return DriveSpec(v1, omega, Model(self.model), n)


@dataclass(frozen=True)
class SweepBlock:
    parameter: str = "omega"
    start: float = 1.0
    stop: float = 1.0
    steps: int = 0

    schema: ClassVar[Dict[str, str]] = {"parameter": "str", "start": "float", "stop": "float", "steps": "int"}

    def __post_init__(self) -> None:
        if self.parameter not in ("omega", "v1"):
            raise InvalidParameters(f"parameter must be 'omega' or 'v1', got {self.parameter!r}")
        if self.steps < 0:
            raise InvalidParameters("steps must be >= 0")
        if self.steps > 0 and self.start == self.stop:
            raise InvalidParameters("start and stop must differ when steps > 0")

    @property
    def sweep_parameter(self) -> SweepParameter:
        return SweepParameter(self.parameter)

    def grid(self) -> np.ndarray:
        if self.steps == 0:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.steps + 1)


@dataclass(frozen=True)
class SolverBlock:
    max_iter: int = 200
    step_tol: float = 1.0e-13
    residual_tol: float = 1.0e-12
    bracket_scale: float = 1.0e-4   # units of v0
    jump_threshold: float = 0.05    # units of v0
    max_halvings: int = 6
    gap_tolerance: float = 1.0e-4   # units of v0

    schema: ClassVar[Dict[str, str]] = {
        "max_iter": "int", "step_tol": "float", "residual_tol": "float", "bracket_scale": "float",
        "jump_threshold": "float", "max_halvings": "int", "gap_tolerance": "float",
    }

    def __post_init__(self) -> None:
        if self.gap_tolerance <= 0.0:
            raise InvalidParameters("gap_tolerance must be positive")

    def root_config(self, geom: WellGeometry) -> RootConfig:
        return RootConfig(
            max_iter=self.max_iter,
            step_tol=self.step_tol,
            residual_tol=self.residual_tol,
            bracket_scale=self.bracket_scale * geom.v0,
        )

    def continuation_config(self, geom: WellGeometry) -> ContinuationConfig:
        return ContinuationConfig(jump_threshold=self.jump_threshold * geom.v0, max_halvings=self.max_halvings)


@dataclass(frozen=True)
class NondecayBlock:
    periods: int = 10
    samples_per_period: int = 32

    schema: ClassVar[Dict[str, str]] = {"periods": "int", "samples_per_period": "int"}

    def __post_init__(self) -> None:
        if self.periods < 1 or self.samples_per_period < 2:
            raise InvalidParameters("periods >= 1 and samples_per_period >= 2 required")

    def times(self, omega: float) -> np.ndarray:
        period = 2.0 * math.pi / omega
        return np.linspace(0.0, self.periods * period, self.periods * self.samples_per_period + 1)


@dataclass(frozen=True)
class CriticalBlock:
    v1_start: float = 1.0
    v1_stop: float = 5.0
    v1_step: float = 0.05
    omega_start: float = 7.0
    omega_stop: float = 9.0
    omega_steps: int = 80

    schema: ClassVar[Dict[str, str]] = {
        "v1_start": "float", "v1_stop": "float", "v1_step": "float",
        "omega_start": "float", "omega_stop": "float", "omega_steps": "int",
    }

    def __post_init__(self) -> None:
        if self.v1_step <= 0.0 or self.v1_stop < self.v1_start:
            raise InvalidParameters("need v1_step > 0 and v1_stop >= v1_start")
        if self.omega_steps < 2 or self.omega_stop <= self.omega_start:
            raise InvalidParameters("need omega_steps >= 2 and omega_stop > omega_start")

    def v1_grid(self) -> np.ndarray:
        count = int(math.floor((self.v1_stop - self.v1_start) / self.v1_step + 1.0e-9)) + 1
        return self.v1_start + self.v1_step * np.arange(count)

    def omega_grid(self) -> np.ndarray:
        return np.linspace(self.omega_start, self.omega_stop, self.omega_steps + 1)


@dataclass(frozen=True)
class TdseBlock:
    dx: float = 0.005
    dt: float = 0.002
    x_max: float = 30.0
    cap_start: float = 20.0
    cap_strength: float = 2.0
    t_final: Optional[float] = None  # default: three lifetimes of the Floquet root
    record_every: int = 10

    schema: ClassVar[Dict[str, str]] = {
        "dx": "float", "dt": "float", "x_max": "float", "cap_start": "float",
        "cap_strength": "float", "t_final": "float?", "record_every": "int",
    }

    def __post_init__(self) -> None:
        self.grid_spec()
        if self.record_every < 1:
            raise InvalidParameters("record_every must be >= 1")
        if self.t_final is not None and self.t_final <= 0.0:
            raise InvalidParameters("t_final must be positive")

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.dx, self.dt, self.x_max, self.cap_start, self.cap_strength)


@dataclass(frozen=True)
class OutputBlock:
    directory: Optional[str] = None
    format: str = "csv"

    schema: ClassVar[Dict[str, str]] = {"directory": "str?", "format": "str"}

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise InvalidParameters(f"format must be 'csv' or 'json', got {self.format!r}")


_GEOMETRY_SCHEMA = {"v0": "float", "a": "float", "b": "float", "mass": "float", "hbar": "float"}


@dataclass(frozen=True)
class RunConfig:
    geometry: WellGeometry = field(default_factory=lambda: WellGeometry(10.0, 1.0, 2.0))
    drive: DriveBlock = field(default_factory=DriveBlock)
    sweep: Optional[SweepBlock] = None
    solver: SolverBlock = field(default_factory=SolverBlock)
    seeds: Tuple[complex, ...] = ()
    nondecay: NondecayBlock = field(default_factory=NondecayBlock)
    critical: CriticalBlock = field(default_factory=CriticalBlock)
    tdse: TdseBlock = field(default_factory=TdseBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def root_config(self) -> RootConfig:
        return self.solver.root_config(self.geometry)

    def drive_spec(self, **overrides) -> DriveSpec:
        return self.drive.spec(self.geometry, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "seeds":
                out["seeds"] = [[s.real, s.imag] for s in val]
            elif val is None:
                out[f.name] = None
            else:
                out[f.name] = asdict(val)
        return out


def _seeds(raw: Any, path: str) -> Tuple[complex, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list of [re, im] pairs")
    out = []
    for i, item in enumerate(raw):
        where = f"{path}[{i}]"
        if not isinstance(item, list) or len(item) != 2:
            raise ConfigError(f"{where}: expected [re, im]")
        re, im = _number(item[0], f"{where}[0]"), _number(item[1], f"{where}[1]")
        if im > 0.0:
            raise ConfigError(f"{where}: seeds must have Im <= 0")
        out.append(complex(re, im))
    return tuple(out)


_BLOCKS = {
    "geometry": (WellGeometry, _GEOMETRY_SCHEMA),
    "drive": (DriveBlock, None),
    "sweep": (SweepBlock, None),
    "solver": (SolverBlock, None),
    "nondecay": (NondecayBlock, None),
    "critical": (CriticalBlock, None),
    "tdse": (TdseBlock, None),
    "output": (OutputBlock, None),
}


def parse_config(raw: Any) -> RunConfig:
    if not isinstance(raw, Mapping):
        raise ConfigError("config: expected a JSON object at the top level")
    unknown = sorted(set(raw) - set(_BLOCKS) - {"seeds"})
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    values: Dict[str, Any] = {}
    for name, (cls, schema) in _BLOCKS.items():
        if name in raw:
            values[name] = _block(cls, raw[name], name, schema)
    values["seeds"] = _seeds(raw.get("seeds"), "seeds")
    cfg = RunConfig(**values)

    # invariants that span blocks
    try:
        drive = cfg.drive_spec()
    except InvalidParameters as exc:
        raise ConfigError(f"drive: {exc}") from None
    if drive.v1 >= cfg.geometry.v0 and not cfg.drive.allow_strong:
        raise ConfigError(f"drive.v1: must be below geometry.v0 ({drive.v1} >= {cfg.geometry.v0})")
    try:
        cfg.tdse.grid_spec().validate(cfg.geometry)
    except InvalidParameters as exc:
        raise ConfigError(f"tdse.cap_start: {exc}") from None
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw)


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
