"""Schema-versioned long-format trace files (CSV or JSON).

Every row is ``(time, quantity, branch, value)``. ``quantity`` is one of
E, P, Eprime, Pprime, A_k_re, A_k_im (k = 1..11); ``branch`` is 0 for
stage-1 rows and 1..4 for the final-pair branches, whose ``time`` is the
stage-2 interaction time. Undefined values are written as ``null``.

CSV layout::

    # schema_version: 1
    # parameters: {...json...}
    time,quantity,branch,value
    0.0,E,0,0.0

JSON layout: ``{"schema_version": 1, "parameters": {...}, "rows": [...]}``
with one object per row.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .protocol import ProtocolResult, Stage1Result

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "TraceRow",
    "TraceFile",
    "stage1_rows",
    "protocol_rows",
    "dumps",
    "loads",
    "write_trace",
    "read_trace",
]

SCHEMA_VERSION = 1
COLUMNS = ("time", "quantity", "branch", "value")
NULL = "null"


class SchemaError(ValueError):
    """Trace text does not follow the expected schema or version."""


class TraceRow(NamedTuple):
    time: float
    quantity: str
    branch: int
    value: float | None


@dataclass
class TraceFile:
    parameters: dict
    rows: list[TraceRow] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def series(self, quantity: str, branch: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """(times, values) for one quantity/branch; nulls become NaN."""
        sel = [r for r in self.rows if r.quantity == quantity and r.branch == branch]
        times = np.array([r.time for r in sel], dtype=float)
        values = np.array([np.nan if r.value is None else r.value for r in sel], dtype=float)
        return times, values


def _clean(value) -> float | None:
    value = float(value)
    return value if math.isfinite(value) else None


def stage1_rows(result: Stage1Result, include_amplitudes: bool = True) -> list[TraceRow]:
    rows = []
    trace = result.trace
    for i, t in enumerate(trace.time):
        t = float(t)
        rows.append(TraceRow(t, "E", 0, _clean(trace.entropy[i])))
        rows.append(TraceRow(t, "P", 0, _clean(trace.probability[i])))
        if include_amplitudes:
            for k, amp in enumerate(result.amplitudes[i], start=1):
                rows.append(TraceRow(t, f"A_{k}_re", 0, _clean(amp.real)))
                rows.append(TraceRow(t, f"A_{k}_im", 0, _clean(amp.imag)))
    return rows


def protocol_rows(result: ProtocolResult, include_stage1: bool = True, tau_grid=None) -> list[TraceRow]:
    rows = stage1_rows(result.stage1, include_amplitudes=False) if include_stage1 else []
    for branch, s2 in sorted(result.stage2.items()):
        if s2 is None:
            # undefined branch: emit explicit nulls on the requested grid
            for tau in (tau_grid if tau_grid is not None else []):
                for q in ("E", "P", "Eprime", "Pprime"):
                    rows.append(TraceRow(float(tau), q, branch, None))
            continue
        o, op = s2.outcome, s2.outcome_prime
        for i, tau in enumerate(o.time):
            tau = float(tau)
            rows.append(TraceRow(tau, "E", branch, _clean(o.entropy[i])))
            rows.append(TraceRow(tau, "P", branch, _clean(o.probability[i])))
            rows.append(TraceRow(tau, "Eprime", branch, _clean(op.entropy[i])))
            rows.append(TraceRow(tau, "Pprime", branch, _clean(op.probability[i])))
    return rows


def _fmt(value: float | None) -> str:
    return NULL if value is None else repr(float(value))


def dumps(trace: TraceFile, fmt: str = "csv") -> str:
    if fmt == "json":
        doc = {
            "schema_version": trace.schema_version,
            "parameters": trace.parameters,
            "rows": [r._asdict() for r in trace.rows],
        }
        return json.dumps(doc, allow_nan=False, indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    buf.write(f"# schema_version: {trace.schema_version}\r\n")
    buf.write(f"# parameters: {json.dumps(trace.parameters, allow_nan=False, sort_keys=True)}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for r in trace.rows:
        writer.writerow((_fmt(r.time), r.quantity, r.branch, _fmt(r.value)))
    return buf.getvalue()


def _check_version(version) -> int:
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version!r}; expected {SCHEMA_VERSION}")
    return version


def loads(text: str) -> TraceFile:
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        version = _check_version(doc.get("schema_version"))
        rows = [
            TraceRow(float(r["time"]), r["quantity"], int(r["branch"]),
                     None if r["value"] is None else float(r["value"]))
            for r in doc["rows"]
        ]
        return TraceFile(doc.get("parameters", {}), rows, version)

    lines = text.splitlines()
    header = {}
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition(":")
        header[key.strip()] = value.strip()
    if "schema_version" not in header:
        raise SchemaError("missing schema_version header")
    try:
        version = int(header["schema_version"])
    except ValueError:
        raise SchemaError("malformed schema_version header") from None
    _check_version(version)
    params = json.loads(header.get("parameters", "{}"))
    reader = csv.reader(lines[body_start:])
    columns = next(reader, None)
    if tuple(columns or ()) != COLUMNS:
        raise SchemaError(f"unexpected columns {columns!r}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        t, q, b, v = rec
        rows.append(TraceRow(float(t), q, int(b), None if v == NULL else float(v)))
    return TraceFile(params, rows, version)


def write_trace(trace: TraceFile, path, fmt: str = "csv") -> None:
    Path(path).write_text(dumps(trace, fmt), newline="")


def read_trace(path) -> TraceFile:
    return loads(Path(path).read_text())
