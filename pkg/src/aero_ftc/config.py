"""Scenario configuration: JSON document -> :class:`ScenarioConfig`.

Every key is optional, so ``{}`` is a valid (healthy, default) scenario.
Sections: ``model``, ``lqr``, ``estimator``, ``accommodation``,
``reference``, ``faults``, ``sim``.  Unknown keys are rejected so typos do
not silently fall back to defaults.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import numpy as np

from . import model as mdl
from .accommodation import AccommodationConfig
from .estimator import NoiseConfig
from .lqr import LqrWeights
from .sim import AxisReference, ConfigError, FaultEvent, ScenarioConfig

SECTIONS = {
    "model": {"source", "params", "A", "B", "u_min", "u_max"},
    "lqr": {"Q_diag", "R_diag", "Q", "R"},
    "estimator": {"enabled", "feedback", "state_q", "fault_q", "meas_sd", "P0_state", "P0_fault"},
    "accommodation": {"enabled", "gamma_max", "activation_threshold"},
    "reference": {"pitch", "yaw", "pitch_limit_deg"},
    "sim": {"duration", "T_s", "seed", "meas_noise_sd", "process_noise_sd", "x0_deg"},
}
AXIS_KEYS = {"amplitude_deg", "period", "phase"}
FAULT_KEYS = {"time", "gamma", "preset"}

# Per-rotor breaks: the single-blade case is on motor0, the others are split
# evenly between the two 8-blade propellers.
PRESETS: dict[str, dict] = {
    "healthy": {},
    "fig7": {"faults": [{"time": 25.0, "gamma": [0.7, 0.7]}]},
    "fig7-unaccommodated": {
        "faults": [{"time": 25.0, "gamma": [0.7, 0.7]}],
        "accommodation": {"enabled": False},
    },
    "blade-1": {"faults": [{"time": 0.0, "preset": ["1-blade", "healthy"]}]},
    "blade-2": {"faults": [{"time": 0.0, "preset": ["1-blade", "1-blade"]}]},
    "blade-4": {"faults": [{"time": 0.0, "preset": ["2-blade", "2-blade"]}]},
    "blade-8": {"faults": [{"time": 0.0, "preset": ["4-blade", "4-blade"]}]},
}


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(where, "must be an object")
    for key in d:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}" if where else key, "unknown key")


def _num(d, key, where, default, positive=False):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key}", f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key}", "must be positive")
    return float(v)


def _bool(d, key, where, default):
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{where}.{key}", f"expected true/false, got {v!r}")
    return v


def _matrix(v, shape, key):
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(key, "expected a numeric matrix") from None
    if a.shape != shape:
        raise ConfigError(key, f"expected shape {shape}, got {a.shape}")
    return a


def _model(d) -> mdl.ContinuousModel:
    _check_keys(d, SECTIONS["model"], "model")
    u_min = _num(d, "u_min", "model", -mdl.DEFAULT_U_LIMIT)
    u_max = _num(d, "u_max", "model", mdl.DEFAULT_U_LIMIT)
    source = d.get("source", "nominal")
    try:
        if source == "nominal":
            A = _matrix(d["A"], (4, 4), "model.A") if "A" in d else mdl.NOMINAL_A
            B = _matrix(d["B"], (4, 2), "model.B") if "B" in d else mdl.NOMINAL_B
            return mdl.ContinuousModel(A, B, np.eye(4), u_min, u_max)
        if source == "params":
            params = d.get("params", {})
            _check_keys(params, set(mdl.PhysicalParams.__dataclass_fields__), "model.params")
            kw = {k: _num(params, k, "model.params", 0.0) for k in params}
            return mdl.build_continuous_model(mdl.PhysicalParams(**kw), u_min, u_max)
    except mdl.InvalidParameterError as exc:
        raise ConfigError("model", str(exc)) from None
    raise ConfigError("model.source", f"expected 'nominal' or 'params', got {source!r}")


def _weights(d) -> LqrWeights:
    _check_keys(d, SECTIONS["lqr"], "lqr")
    default = LqrWeights()
    Q, R = default.Q, default.R
    if "Q_diag" in d:
        Q = np.diag(_matrix(d["Q_diag"], (4,), "lqr.Q_diag"))
    if "Q" in d:
        Q = _matrix(d["Q"], (4, 4), "lqr.Q")
    if "R_diag" in d:
        R = np.diag(_matrix(d["R_diag"], (2,), "lqr.R_diag"))
    if "R" in d:
        R = _matrix(d["R"], (2, 2), "lqr.R")
    try:
        return LqrWeights(Q, R)
    except ValueError as exc:
        raise ConfigError("lqr", str(exc)) from None


def _axis(d, default: AxisReference, where) -> AxisReference:
    _check_keys(d, AXIS_KEYS, where)
    return AxisReference(
        _num(d, "amplitude_deg", where, default.amplitude_deg),
        _num(d, "period", where, default.period, positive=True),
        _num(d, "phase", where, default.phase),
    )


def _faults(items) -> tuple[FaultEvent, ...]:
    if not isinstance(items, list):
        raise ConfigError("faults", "must be a list of {time, gamma|preset} objects")
    events = []
    for i, ev in enumerate(items):
        where = f"faults[{i}]"
        _check_keys(ev, FAULT_KEYS, where)
        t = _num(ev, "time", where, 0.0)
        if ("gamma" in ev) == ("preset" in ev):
            raise ConfigError(where, "give exactly one of 'gamma' or 'preset'")
        try:
            if "preset" in ev:
                g = mdl.fault_from_presets(ev["preset"])
            else:
                g = mdl.check_fault(_matrix(ev["gamma"], (2,), f"{where}.gamma"))
        except (mdl.FaultDomainError, TypeError) as exc:
            key = f"{where}.preset" if "preset" in ev else f"{where}.gamma"
            raise ConfigError(key, str(exc)) from None
        events.append(FaultEvent(t, (float(g[0]), float(g[1]))))
    return tuple(events)


def scenario_from_dict(doc: dict, seed: int | None = None) -> ScenarioConfig:
    _check_keys(doc, set(SECTIONS) | {"faults"}, "")
    base = ScenarioConfig.__dataclass_fields__

    sim = doc.get("sim", {})
    _check_keys(sim, SECTIONS["sim"], "sim")
    est = doc.get("estimator", {})
    _check_keys(est, SECTIONS["estimator"], "estimator")
    acc = doc.get("accommodation", {})
    _check_keys(acc, SECTIONS["accommodation"], "accommodation")
    ref = doc.get("reference", {})
    _check_keys(ref, SECTIONS["reference"], "reference")

    x0 = (0.0, 0.0, 0.0, 0.0)
    if "x0_deg" in sim:
        x0 = tuple(float(v) for v in np.radians(_matrix(sim["x0_deg"], (4,), "sim.x0_deg")))
    feedback = est.get("feedback", "estimated")
    if feedback not in ("estimated", "measured"):
        raise ConfigError("estimator.feedback", f"expected 'estimated' or 'measured', got {feedback!r}")
    sim_seed = sim.get("seed", 0)
    if isinstance(sim_seed, bool) or not isinstance(sim_seed, int) or sim_seed < 0:
        raise ConfigError("sim.seed", "expected a non-negative integer")

    try:
        acc_cfg = AccommodationConfig(
            _bool(acc, "enabled", "accommodation", True),
            _num(acc, "gamma_max", "accommodation", 0.95),
            _num(acc, "activation_threshold", "accommodation", 0.05),
        )
    except ValueError as exc:
        raise ConfigError("accommodation", str(exc)) from None
    try:
        noise = NoiseConfig.from_diagonals(
            _num(est, "state_q", "estimator", 1e-6),
            _num(est, "fault_q", "estimator", 1e-6),
            _num(est, "meas_sd", "estimator", 1e-4, positive=True),
        )
    except ValueError as exc:
        raise ConfigError("estimator", str(exc)) from None

    return ScenarioConfig(
        duration=_num(sim, "duration", "sim", base["duration"].default, positive=True),
        T_s=_num(sim, "T_s", "sim", base["T_s"].default, positive=True),
        pitch=_axis(ref.get("pitch", {}), base["pitch"].default, "reference.pitch"),
        yaw=_axis(ref.get("yaw", {}), base["yaw"].default, "reference.yaw"),
        pitch_limit_deg=_num(ref, "pitch_limit_deg", "reference", 60.0, positive=True),
        faults=_faults(doc.get("faults", [])),
        plant=_model(doc.get("model", {})),
        weights=_weights(doc.get("lqr", {})),
        x0=x0,
        seed=sim_seed if seed is None else seed,
        meas_noise_sd=_num(sim, "meas_noise_sd", "sim", 1e-4),
        process_noise_sd=_num(sim, "process_noise_sd", "sim", 0.0),
        estimator_enabled=_bool(est, "enabled", "estimator", True),
        use_estimated_state=feedback == "estimated",
        filter_noise=noise,
        P0_state=_num(est, "P0_state", "estimator", 1e-3, positive=True),
        P0_fault=_num(est, "P0_fault", "estimator", 0.25, positive=True),
        accommodation=acc_cfg,
    )


def load_document(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    return doc


def load_scenario(path, seed: int | None = None) -> ScenarioConfig:
    return scenario_from_dict(load_document(path), seed)
