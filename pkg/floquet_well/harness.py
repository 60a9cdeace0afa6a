"""
Command bodies behind the CLI. Each returns a CommandResult holding the text
of every output file, so that runs can be compared byte for byte.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig, config_hash
from .duality import compare_models
from .errors import ConfigError, InvalidParameters, NotFound
from .floquet import solve_floquet
from .observables import nondecay_probability
from .potential import zone_reduce
from .spectra import classify_crossing, critical_amplitude_scan, fano_pattern, resonance_frequency, sweep, sweep_amplitude
from .static import scan_static, static_seeds
from .tdse import fit_decay, initial_state, propagate
from .trace import (
    NONDECAY_HEADER,
    SWEEP_HEADER,
    branch_records,
    branch_rows,
    complex_pair,
    dumps_csv,
    dumps_json,
    dumps_jsonl,
)
from .types import SweepParameter

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 0.15
GAUGE_GRID = (50, 16)


@dataclass
class CommandResult:
    name: str
    files: Dict[str, str] = field(default_factory=dict)
    stdout: str = ""
    exit_code: int = 0

    @property
    def primary(self) -> str:
        return next(iter(self.files.values()), self.stdout)


def _seeds(cfg: RunConfig, count: int) -> List[complex]:
    if cfg.seeds:
        return list(cfg.seeds[:count]) if count else list(cfg.seeds)
    return static_seeds(cfg.geometry, max(count, 1))


def _table(cfg: RunConfig, name: str, rows: Sequence[tuple], header: Sequence[str]) -> Dict[str, str]:
    if cfg.output.format == "json":
        return {f"{name}.json": dumps_json({"config": config_hash(cfg), "rows": [dict(zip(header, r)) for r in rows]})}
    return {f"{name}.csv": dumps_csv(header, rows, config_hash=config_hash(cfg))}


# ----------------------------
# Commands
# ----------------------------

def run_static(cfg: RunConfig) -> CommandResult:
    geom = cfg.geometry
    found = scan_static(geom, cfg=cfg.root_config())
    if not found:
        raise NotFound("static scan found no resonances")
    rows = [(r.energy.real / geom.v0, r.energy.imag / geom.v0, r.width) for r in found]
    lines = [f"{'re_E/v0':>14} {'im_E/v0':>16} {'gamma':>14}"]
    lines += [f"{re:14.9f} {im:16.9e} {g:14.6e}" for re, im, g in rows]
    res = CommandResult("static", stdout="\n".join(lines) + "\n")
    res.files = _table(cfg, "static", rows, ("re_over_v0", "im_over_v0", "gamma"))
    return res


def run_floquet(cfg: RunConfig) -> CommandResult:
    geom = cfg.geometry
    drive = cfg.drive_spec()
    rows = []
    for i, seed in enumerate(_seeds(cfg, 0)):
        root = solve_floquet(geom, drive, seed, cfg.root_config(), allow_strong=cfg.drive.allow_strong)
        zone, z = zone_reduce(root.epsilon, drive.omega, geom.hbar)
        rows.append((
            SweepParameter.OMEGA.value, float(drive.omega), i, drive.model.value, drive.n_sidebands,
            root.epsilon.real, root.epsilon.imag, zone.real, z, root.residual_norm,
        ))
    return CommandResult("floquet", files=_table(cfg, "floquet", rows, SWEEP_HEADER))


def run_sweep(cfg: RunConfig) -> CommandResult:
    if cfg.sweep is None:
        raise ConfigError("sweep: config has no sweep block")
    geom, drive_block = cfg.geometry, cfg.drive
    grid = cfg.sweep.grid()
    seeds = _seeds(cfg, 0)
    common = dict(
        n_sidebands=drive_block.sidebands,
        cfg=cfg.root_config(),
        continuation=cfg.solver.continuation_config(geom),
        allow_strong=drive_block.allow_strong,
    )
    if cfg.sweep.sweep_parameter is SweepParameter.OMEGA:
        branches = sweep(geom, drive_block.model, drive_block.v1, grid, seeds, **common)
        n = drive_block.sidebands if drive_block.sidebands is not None else cfg.drive_spec(omega=float(min(grid))).n_sidebands
    else:
        branches = sweep_amplitude(
            geom, drive_block.model, drive_block.omega, grid, seeds,
            validate_truncation=drive_block.sidebands is None, **common,
        )
        n = drive_block.sidebands if drive_block.sidebands is not None else cfg.drive_spec(v1=float(max(grid))).n_sidebands

    rows = branch_rows(branches, drive_block.model, n)
    res = CommandResult("sweep", files=_table(cfg, "sweep", rows, SWEEP_HEADER))
    res.files["sweep.report.json"] = dumps_json({
        "config": config_hash(cfg),
        "branches": [
            {
                "branch_id": b.branch_id,
                "seed": complex_pair(b.seed),
                "status": b.status.value,
                "points": len(b.points),
                "refined": b.refined,
                "failures": list(b.failures),
            }
            for b in branches
        ],
    })
    res.files["sweep.trace.jsonl"] = dumps_jsonl(branch_records(branches))
    if not any(b.points for b in branches):
        res.exit_code = NotFound.exit_code
    return res


def run_crossing(cfg: RunConfig) -> CommandResult:
    geom = cfg.geometry
    seeds = _seeds(cfg, 2)
    if len(seeds) < 2:
        raise ConfigError("crossing: needs two seeds")
    if cfg.sweep is None or cfg.sweep.sweep_parameter is not SweepParameter.OMEGA:
        raise ConfigError("crossing: needs an omega sweep block")
    b1, b2 = sweep(
        geom, cfg.drive.model, cfg.drive.v1, cfg.sweep.grid(), seeds[:2],
        n_sidebands=cfg.drive.sidebands, cfg=cfg.root_config(),
        continuation=cfg.solver.continuation_config(geom),
        allow_strong=cfg.drive.allow_strong,
    )
    report = classify_crossing(b1, b2, cfg.solver.gap_tolerance * geom.v0, hbar=geom.hbar)
    window = 0.1 * abs(cfg.sweep.stop - cfg.sweep.start)
    shapes = {}
    for b in (b1, b2):
        try:
            shapes[str(b.branch_id)] = fano_pattern(b, report.omega_star, window).value
        except InvalidParameters as exc:  # too few points near the crossing
            logger.debug("no line shape for branch %d: %s", b.branch_id, exc)
    payload = {
        "config": config_hash(cfg),
        "kind": report.kind.value,
        "omega_star": report.omega_star,
        "omega_star_over_v0": report.omega_star / geom.v0,
        "min_gap": report.min_gap,
        "gap_tolerance": report.gap_tolerance,
        "stability_exchanged": report.stability_exchanged,
        "branches": list(report.branches),
        "expected_resonance": resonance_frequency(seeds[0], seeds[1], geom.hbar),
        "line_shapes": shapes,
    }
    return CommandResult("crossing", files={"crossing.json": dumps_json(payload)})


def run_critical(cfg: RunConfig) -> CommandResult:
    geom = cfg.geometry
    block = cfg.critical
    seeds = _seeds(cfg, 2)
    if len(seeds) < 2:
        raise ConfigError("critical-amplitude: needs two seeds")
    scan = critical_amplitude_scan(
        geom, block.v1_grid(), block.omega_grid(), cfg.solver.gap_tolerance * geom.v0,
        model=cfg.drive.model, seeds=seeds[:2], n_sidebands=cfg.drive.sidebands,
        cfg=cfg.root_config(), continuation=cfg.solver.continuation_config(geom),
        allow_strong=cfg.drive.allow_strong,
    )
    payload = {
        "config": config_hash(cfg),
        "v1_critical": scan.v1_critical,
        "v1_critical_over_v0": scan.v1_critical / geom.v0,
        "gaps_monotone": scan.gaps_monotone,
        "stays_avoided": scan.stays_avoided,
        "reports": [
            {
                "v1": v,
                "kind": r.kind.value,
                "omega_star": r.omega_star,
                "min_gap": r.min_gap,
                "stability_exchanged": r.stability_exchanged,
            }
            for v, r in zip(scan.amplitudes, scan.reports)
        ],
    }
    return CommandResult("critical-amplitude", files={"critical.json": dumps_json(payload)})


def run_duality(cfg: RunConfig) -> CommandResult:
    geom = cfg.geometry
    drive = cfg.drive_spec()
    seed = _seeds(cfg, 1)[0]
    xs = np.linspace(0.0, geom.b, GAUGE_GRID[0])
    ts = np.linspace(0.0, 2.0 * math.pi / drive.omega, GAUGE_GRID[1], endpoint=False)
    check = compare_models(geom, drive.v1, drive.omega, drive.n_sidebands, seed, cfg.root_config(), samples=(xs, ts))
    payload = {
        "config": config_hash(cfg),
        "epsilon_a": complex_pair(check.epsilon_a),
        "epsilon_b": complex_pair(check.epsilon_b),
        "delta": check.delta,
        "delta_over_v0": check.delta / geom.v0,
        "coefficient_defect": check.coefficient_defect,
        "gauge_defect": check.gauge_defect,
        "spectra_agree": check.passed(geom.v0),
    }
    return CommandResult("duality-check", files={"duality.json": dumps_json(payload)})


def run_nondecay(cfg: RunConfig) -> CommandResult:
    geom = cfg.geometry
    drive = cfg.drive_spec()
    seed = _seeds(cfg, 1)[0]
    root = solve_floquet(geom, drive, seed, cfg.root_config(), allow_strong=cfg.drive.allow_strong)
    curve = nondecay_probability(root, geom, drive, cfg.nondecay.times(drive.omega))
    rows = list(zip(curve.times.tolist(), curve.p.tolist(), curve.pbar.tolist(), curve.h.tolist()))
    return CommandResult("nondecay", files=_table(cfg, "nondecay", rows, NONDECAY_HEADER))


def run_tdse(cfg: RunConfig, *, t_final: Optional[float] = None) -> CommandResult:
    geom = cfg.geometry
    drive = cfg.drive_spec()
    seed = _seeds(cfg, 1)[0]
    root = solve_floquet(geom, drive, seed, cfg.root_config(), allow_strong=cfg.drive.allow_strong)
    expected = -2.0 * root.epsilon.imag / geom.hbar
    grid = cfg.tdse.grid_spec()
    horizon = t_final or cfg.tdse.t_final or 3.0 / expected
    psi0 = initial_state(geom, grid, seed.real)
    series = propagate(geom, drive if drive.v1 > 0.0 else None, grid, psi0, horizon, record_every=cfg.tdse.record_every)
    fit = fit_decay(series.times, series.survival, period=series.period)
    rel = abs(fit.rate - expected) / expected
    payload = {
        "config": config_hash(cfg),
        "floquet_epsilon": complex_pair(root.epsilon),
        "floquet_rate": expected,
        "fitted_rate": fit.rate,
        "r_squared": fit.r_squared,
        "n_points": fit.n_points,
        "relative_error": rel,
        "tolerance": ORACLE_TOLERANCE,
        "agree": rel <= ORACLE_TOLERANCE,
        "t_final": float(series.times[-1]),
        "final_norm": float(series.norm[-1]),
    }
    res = CommandResult("tdse-validate", files={"tdse.json": dumps_json(payload)})
    if rel > ORACLE_TOLERANCE:
        logger.warning("grid decay rate %.6e differs from Floquet %.6e by %.1f%%", fit.rate, expected, 100 * rel)
        res.exit_code = 3
    return res


COMMANDS = {
    "static": run_static,
    "floquet": run_floquet,
    "sweep": run_sweep,
    "crossing": run_crossing,
    "critical-amplitude": run_critical,
    "duality-check": run_duality,
    "nondecay": run_nondecay,
    "tdse-validate": run_tdse,
}
