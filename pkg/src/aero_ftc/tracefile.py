"""CSV serialisation of traces and metrics.

Floats are written with ``repr`` (shortest round-tripping form), so a trace
read back is bit-identical to the one written.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

TRACE_COLUMNS = (
    "t", "r_pitch_deg", "r_yaw_deg", "pitch_deg", "yaw_deg", "pitch_rate", "yaw_rate",
    "u0_lqr", "u1_lqr", "u0_cmd", "u1_cmd", "u0_eff", "u1_eff",
    "gamma0_true", "gamma1_true", "gamma0_est", "gamma1_est", "sat0", "sat1",
)
INT_COLUMNS = {"sat0", "sat1"}


class TraceFormatError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_trace_csv(path, columns: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    cols = [np.asarray(columns[c]) for c in TRACE_COLUMNS]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in zip(*(c.tolist() for c in cols)):
            w.writerow([_fmt(v) for v in row])
    return path


def read_trace_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise TraceFormatError(f"{path}: unexpected trace header {header!r}")
        rows = list(reader)
    if not rows:
        raise TraceFormatError(f"{path}: trace has no samples")
    data = np.array(rows, dtype=float)
    return {
        name: data[:, i].astype(int) if name in INT_COLUMNS else data[:, i]
        for i, name in enumerate(TRACE_COLUMNS)
    }


def write_rows_csv(path, rows: Iterable[Mapping], fieldnames=None) -> Path:
    rows = list(rows)
    path = Path(path)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (_fmt(v) if isinstance(v, (float, np.floating)) else v)
                        for k, v in row.items()})
    return path
