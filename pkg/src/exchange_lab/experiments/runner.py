"""Sweep expansion, expectation checks and result emission.

json-lines schema: one object per record with keys, in order,
``scenario_id``, ``kind``, ``sweep_index``, ``inputs``, ``outputs``,
``checks``, ``passed`` (plus ``wall_time`` only when timing is requested).
``inputs`` echoes the validated parameter block of the sweep point; the keys
of ``outputs`` follow the runner's order. Floats are written with Python's
shortest round-trip repr.

csv schema: columns ``scenario_id, kind, sweep_index, passed`` followed by the
flattened ``inputs.*``, ``outputs.*`` and ``checks.*`` fields in first-seen
order. Lists become ``name.0, name.1, ...``; floats use 12 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from ..linalg import phase_distance
from .config import Bound, ScenarioConfig
from .scenarios import FINALIZERS, RUNNERS

DEFAULT_TOLERANCE = 1e-8
RECORD_KEYS = ("scenario_id", "kind", "sweep_index", "inputs", "outputs", "checks", "passed")


class ScenarioError(RuntimeError):
    pass


class EmitError(OSError):
    pass


@dataclass
class ResultRecord:
    scenario_id: str
    kind: str
    sweep_index: int
    inputs: dict[str, Any]
    outputs: dict[str, Any]
    checks: dict[str, bool] = field(default_factory=dict)
    phase_keys: frozenset[str] = frozenset()
    wall_time: float | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, timing: bool = False) -> dict[str, Any]:
        d = {
            "scenario_id": self.scenario_id,
            "kind": self.kind,
            "sweep_index": self.sweep_index,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "checks": self.checks,
            "passed": self.passed,
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d


def _check(actual, expected, tol: float, is_phase: bool) -> bool:
    if isinstance(expected, bool):
        return actual is expected or actual == expected
    if isinstance(actual, list):
        return all(_check(a, expected, tol, is_phase) for a in actual)
    if isinstance(expected, Bound):
        ok = True
        if expected.value is not None:
            ok &= _check(actual, expected.value, tol, is_phase)
        if expected.min is not None:
            ok &= actual >= expected.min
        if expected.max is not None:
            ok &= actual <= expected.max
        return bool(ok)
    if not math.isfinite(actual):
        return False
    if is_phase:
        return phase_distance(actual, expected) <= tol
    return abs(actual - expected) <= tol


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def run_scenario(config: ScenarioConfig, base_dir: Path | str = ".") -> list[ResultRecord]:
    """Run every sweep point in order; one record per point."""
    base = Path(base_dir)
    runner = RUNNERS[config.kind]
    records = []
    for idx, params in enumerate(config.typed_points()):
        t0 = time.perf_counter()
        try:
            outputs, phase_keys = runner(params, base)
        except Exception as exc:
            raise ScenarioError(f"scenario {config.id!r}, sweep point {idx}: {type(exc).__name__}: {exc}") from exc
        rec = ResultRecord(config.id, config.kind, idx, _json_safe(params.model_dump(mode="json")),
                           _json_safe(outputs), {}, frozenset(phase_keys), time.perf_counter() - t0)
        records.append(rec)
    if config.kind in FINALIZERS:
        FINALIZERS[config.kind](records)
    default_tol = config.tolerances.get("default", DEFAULT_TOLERANCE)
    for rec in records:
        for name, exp in config.expect.items():
            if name not in rec.outputs:
                raise ScenarioError(f"scenario {config.id!r}: expectation on unknown output {name!r};"
                                    f" available: {', '.join(rec.outputs)}")
            target = exp[rec.sweep_index] if isinstance(exp, list) else exp
            tol = config.tolerances.get(name, default_tol)
            rec.checks[name] = bool(_check(rec.outputs[name], target, tol, name in rec.phase_keys))
    return records


# --- emission -----------------------------------------------------------------------------

def _flatten(prefix: str, value, out: dict[str, Any]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        out[prefix] = value


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def format_json_lines(records: Iterable[ResultRecord], timing: bool = False) -> str:
    return "".join(json.dumps(r.to_dict(timing), ensure_ascii=False, allow_nan=False) + "\n" for r in records)


def format_csv(records: Iterable[ResultRecord], timing: bool = False) -> str:
    rows = []
    header: dict[str, None] = {}
    for r in records:
        flat: dict[str, Any] = {}
        d = r.to_dict(timing)
        for key in ("scenario_id", "kind", "sweep_index", "passed"):
            flat[key] = d[key]
        for section in ("inputs", "outputs", "checks"):
            _flatten(section, d[section], flat)
        if timing:
            flat["wall_time"] = d["wall_time"]
        rows.append(flat)
        header.update(dict.fromkeys(flat))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for flat in rows:
        writer.writerow([_csv_cell(flat.get(k)) for k in header])
    return buf.getvalue()


FORMATS = {"json-lines": (".jsonl", format_json_lines), "csv": (".csv", format_csv)}


def output_path(out_dir: Path | str, stem: str, fmt: str) -> Path:
    return Path(out_dir) / (stem + FORMATS[fmt][0])


def check_writable(path: Path) -> None:
    """Fail before computing if the output location cannot be written."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        existed = path.exists()
        with open(path, "a", encoding="utf-8"):
            pass
        if not existed:
            path.unlink()
    except OSError as exc:
        raise EmitError(f"cannot write results to {path}: {exc}") from None


def emit_results(records: list[ResultRecord], path: Path | str, fmt: str = "json-lines",
                 timing: bool = False) -> Path:
    if not records:
        raise ValueError("no records to emit")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    text = FORMATS[fmt][1](records, timing)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise EmitError(f"cannot write results to {path}: {exc}") from None
    return path


def parse_json_lines(text: str) -> list[dict[str, Any]]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
