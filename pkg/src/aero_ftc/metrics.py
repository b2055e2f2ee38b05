"""Step-response and vibration metrics computed from simulation traces.

Conventions (none is fixed by the rig's documentation, all are parameters):
rise time is 10-90 % of the step, the steady-state window is the final
quarter of each reference segment, and standard deviations are population
(``ddof=0``) values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

log = logging.getLogger(__name__)

STEADY_FRACTION = 0.25


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    start: int  # first sample after the reference transition
    end: int  # exclusive
    r_before: float
    r_after: float

    @property
    def magnitude(self) -> float:
        return self.r_after - self.r_before


@dataclass(frozen=True)
class StepMetrics:
    axis: str
    t_start: float
    rise_time: float  # s, nan when the response never reaches 90 %
    overshoot: float  # %
    sse: float  # %


@dataclass(frozen=True)
class VibrationMetrics:
    axis: str
    t_start: float
    angle_sd: float  # deg
    voltage_sd: float  # V


def segment_steps(r, min_jump: float = 1e-12, min_samples: int = 4) -> list[Segment]:
    """Split a piecewise-constant reference into one segment per transition.

    The stretch before the first transition has no step and is skipped, as
    is a segment cut off after fewer than ``min_samples`` samples by the end
    of the trace.
    """
    r = np.asarray(r, dtype=float)
    jumps = np.flatnonzero(np.abs(np.diff(r)) > min_jump) + 1
    bounds = list(jumps) + [len(r)]
    return [
        Segment(int(s), int(e), float(r[s - 1]), float(r[s]))
        for s, e in zip(bounds[:-1], bounds[1:])
        if e - s >= min_samples
    ]


def steady_window(n: int, fraction: float = STEADY_FRACTION) -> slice:
    k = max(1, int(round(n * fraction)))
    return slice(n - k, n)


def _normalized(y, r_before, r_after):
    mag = r_after - r_before
    if mag == 0:
        raise MetricsError("step magnitude is zero")
    return (np.asarray(y, dtype=float) - r_before) / mag


def _crossing_time(t, z, level):
    idx = np.flatnonzero(z >= level)
    if idx.size == 0:
        return math.nan
    i = idx[0]
    if i == 0:
        return float(t[0])
    z0, z1 = z[i - 1], z[i]
    return float(t[i - 1] + (level - z0) / (z1 - z0) * (t[i] - t[i - 1]))


def rise_time(t, y, r_before: float, r_after: float, low: float = 0.1, high: float = 0.9) -> float:
    """Time between the response first crossing ``low`` and ``high`` of the step.

    Crossing instants are linearly interpolated between samples.  Returns NaN
    (and logs why) when the response never reaches ``high``.
    """
    z = _normalized(y, r_before, r_after)
    t_lo = _crossing_time(t, z, low)
    t_hi = _crossing_time(t, z, high)
    if math.isnan(t_hi):
        log.warning("response peaks at %.1f%% of the step; rise time unavailable",
                    100 * float(np.max(z)))
        return math.nan
    return t_hi - t_lo


def overshoot(y, r_before: float, r_after: float, fraction: float = STEADY_FRACTION) -> float:
    """Peak excursion past the settled value, in percent of the step magnitude.

    The peak is taken before the steady-state window and the settled value is
    the window mean, so a slowly creeping monotone response and steady-state
    noise both read as zero overshoot.
    """
    z = _normalized(y, r_before, r_after)
    ss = steady_window(len(z), fraction)
    settled = float(np.mean(z[ss]))
    transient = z[: ss.start] if ss.start > 0 else z
    return max(0.0, float(np.max(transient)) - settled) * 100.0


def steady_state_error(y, r_before: float, r_after: float,
                       fraction: float = STEADY_FRACTION) -> float:
    y = np.asarray(y, dtype=float)
    w = y[steady_window(len(y), fraction)]
    if w.size == 0:
        raise MetricsError("empty steady-state window")
    return abs(float(np.mean(w)) - r_after) / abs(r_after - r_before) * 100.0


def steady_state_sd(signal) -> float:
    s = np.asarray(signal, dtype=float)
    if s.size < 2:
        raise MetricsError("need at least two samples for a standard deviation")
    return float(np.std(s))


def natural_frequency(t, y, equilibrium: float = 0.0) -> float:
    """Damped oscillation frequency (rad/s) from interpolated zero crossings.

    ``pi / mean half-period`` over all successive crossings of ``equilibrium``.
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(y, dtype=float) - equilibrium
    sign = np.signbit(z)
    idx = np.flatnonzero(sign[1:] != sign[:-1])
    crossings = []
    for i in idx:
        z0, z1 = z[i], z[i + 1]
        if z0 == 0.0:
            crossings.append(t[i])
        else:
            crossings.append(t[i] + z0 / (z0 - z1) * (t[i + 1] - t[i]))
    if len(crossings) < 3:
        raise MetricsError(f"only {len(crossings)} zero crossings; response is not oscillatory")
    half_period = (crossings[-1] - crossings[0]) / (len(crossings) - 1)
    return math.pi / half_period


AXES = {
    # axis -> (reference column, angle column, voltage column)
    "pitch": ("r_pitch_deg", "pitch_deg", "u0_cmd"),
    "yaw": ("r_yaw_deg", "yaw_deg", "u1_cmd"),
}


def axis_metrics(columns: Mapping[str, np.ndarray], axis: str, t_from: float = -math.inf,
                 fraction: float = STEADY_FRACTION):
    """Per-segment step and vibration metrics for one axis of a trace.

    ``columns`` is the CSV column view (degrees).  Segments starting before
    ``t_from`` are skipped.
    """
    r_col, y_col, u_col = AXES[axis]
    t = np.asarray(columns["t"])
    r = np.asarray(columns[r_col])
    y = np.asarray(columns[y_col])
    u = np.asarray(columns[u_col])
    steps, vib = [], []
    for seg in segment_steps(r):
        if t[seg.start] < t_from:
            continue
        sl = slice(seg.start, seg.end)
        ts, ys = t[sl], y[sl]
        ss = steady_window(len(ys), fraction)
        steps.append(StepMetrics(
            axis, float(ts[0]),
            rise_time(ts, ys, seg.r_before, seg.r_after),
            overshoot(ys, seg.r_before, seg.r_after, fraction),
            steady_state_error(ys, seg.r_before, seg.r_after, fraction),
        ))
        vib.append(VibrationMetrics(axis, float(ts[0]), steady_state_sd(ys[ss]),
                                    steady_state_sd(u[sl][ss])))
    return steps, vib


def summarize(columns: Mapping[str, np.ndarray], t_from: float = -math.inf,
              fraction: float = STEADY_FRACTION) -> dict[str, dict[str, float]]:
    """Mean of each metric over segments, per axis (NaN rise times ignored)."""
    out = {}
    for axis in AXES:
        steps, vib = axis_metrics(columns, axis, t_from, fraction)
        if not steps:
            out[axis] = {k: math.nan for k in ("rise_time", "overshoot", "sse", "angle_sd", "voltage_sd")}
            continue
        rt = [s.rise_time for s in steps if not math.isnan(s.rise_time)]
        out[axis] = {
            "rise_time": float(np.mean(rt)) if rt else math.nan,
            "overshoot": float(np.mean([s.overshoot for s in steps])),
            "sse": float(np.mean([s.sse for s in steps])),
            "angle_sd": float(np.mean([v.angle_sd for v in vib])),
            "voltage_sd": float(np.mean([v.voltage_sd for v in vib])),
        }
    return out


def metrics_rows(columns: Mapping[str, np.ndarray], fraction: float = STEADY_FRACTION) -> list[dict]:
    """Flat rows (one per axis and segment) for the metrics CSV."""
    rows = []
    for axis in AXES:
        steps, vib = axis_metrics(columns, axis, fraction=fraction)
        for i, (s, v) in enumerate(zip(steps, vib)):
            row = {"axis": axis, "segment": i}
            row.update({k: val for k, val in asdict(s).items() if k != "axis"})
            row.update({"angle_sd": v.angle_sd, "voltage_sd": v.voltage_sd})
            rows.append(row)
    return rows


def format_table(summary: Mapping[str, Mapping[str, float]], title: str = "") -> str:
    """Plain-text table laid out like the rig's step-response and vibration tables."""
    head = f"{'Axis':<6} {'Rise time (s)':>14} {'Overshoot (%)':>14} {'SSE (%)':>10} {'SD angle (deg)':>15} {'SD voltage (V)':>15}"
    lines = [title] if title else []
    lines += [head, "-" * len(head)]
    for axis, m in summary.items():
        lines.append(
            f"{axis:<6} {m['rise_time']:>14.4f} {m['overshoot']:>14.4f} {m['sse']:>10.4f} "
            f"{m['angle_sd']:>15.5f} {m['voltage_sd']:>15.5f}"
        )
    return "\n".join(lines)
