from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence

from . import __version__
from .types import Branch

SWEEP_HEADER = (
    "param_name", "param_value", "branch_id", "model", "n_sidebands",
    "re_eps", "im_eps", "re_eps_zone", "zone_index", "residual_norm",
)
NONDECAY_HEADER = ("t", "p", "pbar", "h")


@dataclass(frozen=True)
class TraceRecord:
    t: float  # sweep parameter value for branch events
    tag: str
    payload: Dict[str, Any]


def dumps_jsonl(records: Iterable[TraceRecord]) -> str:
    lines = []
    for r in records:
        lines.append(json.dumps({"t": r.t, "tag": r.tag, "payload": r.payload}, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def loads_jsonl(text: str) -> List[TraceRecord]:
    out: List[TraceRecord] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(TraceRecord(t=float(obj["t"]), tag=str(obj["tag"]), payload=dict(obj["payload"])))
    return out


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def header_comment(config_hash: str) -> str:
    return f"# floquet-well {__version__} config={config_hash}"


def _cell(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], *, config_hash: Optional[str] = None) -> str:
    buf = io.StringIO()
    if config_hash is not None:
        buf.write(header_comment(config_hash) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def branch_rows(branches: Sequence[Branch], model: str, n_sidebands: int) -> List[tuple]:
    """Branch-major, then parameter order."""
    rows = []
    for b in sorted(branches, key=lambda br: br.branch_id):
        for p in b.points:
            zone = p.zone_epsilon if p.zone_epsilon is not None else p.epsilon
            rows.append((
                b.parameter_name.value, float(p.param), b.branch_id, model, n_sidebands,
                float(p.epsilon.real), float(p.epsilon.imag), float(zone.real),
                0 if p.zone_index is None else int(p.zone_index), float(p.residual_norm),
            ))
    return rows


def branch_records(branches: Sequence[Branch]) -> List[TraceRecord]:
    """One record per recorded failure and one closing status record per branch."""
    out: List[TraceRecord] = []
    for b in sorted(branches, key=lambda br: br.branch_id):
        last = float(b.points[-1].param) if b.points else float("nan")
        for reason in b.failures:
            out.append(TraceRecord(last, "failure", {"branch_id": b.branch_id, "reason": reason}))
        out.append(TraceRecord(last, "status", {
            "branch_id": b.branch_id,
            "status": b.status.value,
            "points": len(b.points),
            "refined": b.refined,
        }))
    return out


def complex_pair(z: complex) -> List[float]:
    return [float(z.real), float(z.imag)]
