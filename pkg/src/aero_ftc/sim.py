"""Deterministic closed-loop simulation of the faulty, accommodated helicopter."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model as mdl
from .accommodation import AccommodationConfig, accommodate
from .estimator import FaultEstimator, NoiseConfig
from .lqr import LqrWeights, design_lqr

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class SimulationDiverged(RuntimeError):
    def __init__(self, message: str, trace: "SimTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class AxisReference:
    """Square wave: ``+amplitude`` for the first half of each period after ``phase``."""

    amplitude_deg: float = 10.0
    period: float = 40.0
    phase: float = 0.0


@dataclass(frozen=True)
class FaultEvent:
    time: float
    gamma: tuple[float, float]


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 100.0
    T_s: float = mdl.DEFAULT_TS
    pitch: AxisReference = AxisReference(10.0, 40.0, 0.0)
    yaw: AxisReference = AxisReference(45.0, 40.0, 10.0)
    pitch_limit_deg: float = 60.0
    faults: tuple[FaultEvent, ...] = ()
    plant: mdl.ContinuousModel = field(default_factory=mdl.nominal_model)
    weights: LqrWeights = field(default_factory=LqrWeights)
    x0: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)  # rad, rad/s
    seed: int = 0
    meas_noise_sd: float = 1e-4
    process_noise_sd: float = 0.0
    estimator_enabled: bool = True
    use_estimated_state: bool = True
    filter_noise: NoiseConfig = field(default_factory=NoiseConfig)
    P0_state: float = 1e-3
    P0_fault: float = 0.25
    accommodation: AccommodationConfig = field(default_factory=AccommodationConfig)

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("sim.duration", "must be positive")
        if not self.T_s > 0:
            raise ConfigError("sim.T_s", "must be positive")
        if abs(self.pitch.amplitude_deg) > self.pitch_limit_deg:
            raise ConfigError("reference.pitch.amplitude_deg",
                              f"exceeds the pitch limit of {self.pitch_limit_deg} deg")
        for name, ax in (("pitch", self.pitch), ("yaw", self.yaw)):
            if not ax.period > 0:
                raise ConfigError(f"reference.{name}.period", "must be positive")
        times = [ev.time for ev in self.faults]
        if times != sorted(times):
            raise ConfigError("faults", "event times must be sorted")
        for i, ev in enumerate(self.faults):
            if not 0.0 <= ev.time <= self.duration:
                raise ConfigError(f"faults[{i}].time", "must lie within [0, duration]")
            try:
                mdl.check_fault(ev.gamma)
            except mdl.FaultDomainError as exc:
                raise ConfigError(f"faults[{i}].gamma", str(exc)) from None
        if self.meas_noise_sd < 0 or self.process_noise_sd < 0:
            raise ConfigError("sim.meas_noise_sd", "noise levels must be non-negative")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.T_s + 1e-9)) + 1


@dataclass
class SimTrace:
    """Uniformly sampled record of one run; angles in radians."""

    T_s: float
    t: np.ndarray
    r: np.ndarray  # (N, 2) pitch/yaw references
    x: np.ndarray  # (N, 4) true state
    u_lqr: np.ndarray
    u_cmd: np.ndarray  # sent to the actuators, after saturation
    u_eff: np.ndarray
    gamma_true: np.ndarray
    gamma_raw: np.ndarray
    gamma_clamped: np.ndarray
    sat: np.ndarray  # (N, 2) bool

    @classmethod
    def empty(cls, n: int, T_s: float) -> "SimTrace":
        z2 = lambda: np.zeros((n, 2))
        return cls(T_s, np.arange(n) * T_s, z2(), np.zeros((n, 4)), z2(), z2(), z2(),
                   z2(), z2(), z2(), np.zeros((n, 2), dtype=bool))

    def __len__(self):
        return len(self.t)

    def truncated(self, n: int) -> "SimTrace":
        return SimTrace(self.T_s, *(getattr(self, f)[:n] for f in _ARRAY_FIELDS))

    @property
    def pitch(self):
        return self.x[:, 0]

    @property
    def yaw(self):
        return self.x[:, 1]

    @property
    def r_pitch(self):
        return self.r[:, 0]

    @property
    def r_yaw(self):
        return self.r[:, 1]

    def columns(self) -> dict[str, np.ndarray]:
        """CSV column view: angles in degrees, rates in rad/s, raw fault estimates."""
        deg = np.degrees
        return {
            "t": self.t,
            "r_pitch_deg": deg(self.r[:, 0]),
            "r_yaw_deg": deg(self.r[:, 1]),
            "pitch_deg": deg(self.x[:, 0]),
            "yaw_deg": deg(self.x[:, 1]),
            "pitch_rate": self.x[:, 2],
            "yaw_rate": self.x[:, 3],
            "u0_lqr": self.u_lqr[:, 0],
            "u1_lqr": self.u_lqr[:, 1],
            "u0_cmd": self.u_cmd[:, 0],
            "u1_cmd": self.u_cmd[:, 1],
            "u0_eff": self.u_eff[:, 0],
            "u1_eff": self.u_eff[:, 1],
            "gamma0_true": self.gamma_true[:, 0],
            "gamma1_true": self.gamma_true[:, 1],
            "gamma0_est": self.gamma_raw[:, 0],
            "gamma1_est": self.gamma_raw[:, 1],
            "sat0": self.sat[:, 0].astype(int),
            "sat1": self.sat[:, 1].astype(int),
        }


_ARRAY_FIELDS = ("t", "r", "x", "u_lqr", "u_cmd", "u_eff", "gamma_true", "gamma_raw",
                 "gamma_clamped", "sat")


def reference_square(t, axis: AxisReference):
    """Square-wave angle reference in radians (scalar or array ``t``)."""
    if not axis.period > 0:
        raise ValueError("period must be positive")
    amp = math.radians(axis.amplitude_deg)
    first_half = np.mod(np.asarray(t, dtype=float) - axis.phase, axis.period) < axis.period / 2
    return np.where(first_half, amp, -amp) if np.ndim(t) else (amp if first_half else -amp)


def integrate_step(m: mdl.ContinuousModel, x, u_eff, T_s: float) -> np.ndarray:
    """Classical RK4 step of ``x' = A x + B u`` with ``u`` held over the step."""
    A = m.A
    bu = m.B @ u_eff
    k1 = A @ x + bu
    k2 = A @ (x + 0.5 * T_s * k1) + bu
    k3 = A @ (x + 0.5 * T_s * k2) + bu
    k4 = A @ (x + T_s * k3) + bu
    return x + (T_s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_transition(m: mdl.ContinuousModel, T_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrices ``(Phi, Gam)`` with ``integrate_step(m, x, u, T_s) == Phi @ x + Gam @ u``.

    RK4 applied to a linear system with held input is a linear map, so its
    columns are read off by stepping the unit vectors once.
    """
    n, nu = m.n_states, m.n_inputs
    Phi = np.column_stack([integrate_step(m, e, np.zeros(nu), T_s) for e in np.eye(n)])
    Gam = np.column_stack([integrate_step(m, np.zeros(n), e, T_s) for e in np.eye(nu)])
    return Phi, Gam


def fault_profile(cfg: ScenarioConfig) -> np.ndarray:
    """True fault vector at every sample; onsets snap to the first sample at or after the event."""
    n = cfg.n_samples
    g = np.zeros((n, 2))
    for ev in cfg.faults:
        k0 = int(math.ceil(ev.time / cfg.T_s - 1e-9))
        g[k0:] = ev.gamma
    return g


def run_scenario(cfg: ScenarioConfig) -> SimTrace:
    m = cfg.plant
    n = cfg.n_samples
    T_s = cfg.T_s
    ctrl = design_lqr(m.A, m.B, cfg.weights)
    K = ctrl.K
    dm = mdl.discretize_zoh(m, T_s)
    rng = np.random.default_rng(cfg.seed)
    acc = cfg.accommodation

    tr = SimTrace.empty(n, T_s)
    tr.r[:, 0] = reference_square(tr.t, cfg.pitch)
    tr.r[:, 1] = reference_square(tr.t, cfg.yaw)
    gamma_true = fault_profile(cfg)
    tr.gamma_true[:] = gamma_true
    ref = np.zeros(4)
    Phi, Gam = rk4_transition(m, T_s)
    u_lo, u_hi = m.u_min, m.u_max
    g_max = acc.gamma_max

    x = np.array(cfg.x0, dtype=float)
    meas_noise = rng.normal(0.0, 1.0, size=(n, 4)) * cfg.meas_noise_sd
    proc_noise = rng.normal(0.0, 1.0, size=(n, 4)) * cfg.process_noise_sd
    kf = None
    u_sent = np.zeros(2)
    zero2 = np.zeros(2)

    for k in range(n):
        y = m.C @ x + meas_noise[k]
        if cfg.estimator_enabled:
            if kf is None:
                kf = FaultEstimator(dm, cfg.filter_noise, y, cfg.P0_state, cfg.P0_fault)
            else:
                kf.update(u_sent, y)
            g_raw = kf.gamma
            x_fb = kf.state if cfg.use_estimated_state else y
        else:
            g_raw = zero2
            x_fb = y
        g_hat = np.minimum(np.maximum(g_raw, 0.0), g_max)
        ref[:2] = tr.r[k]
        u_lqr = K @ (ref - x_fb)
        u_acc = accommodate(u_lqr, g_hat, acc)
        u_sent = np.minimum(np.maximum(u_acc, u_lo), u_hi)
        u_eff = (1.0 - gamma_true[k]) * u_sent

        tr.x[k] = x
        tr.u_lqr[k] = u_lqr
        tr.u_cmd[k] = u_sent
        tr.u_eff[k] = u_eff
        tr.gamma_raw[k] = g_raw
        tr.gamma_clamped[k] = g_hat
        tr.sat[k] = u_sent != u_acc

        x = Phi @ x + Gam @ u_eff + proc_noise[k]
        if not x @ x < DIVERGENCE_LIMIT**2:  # also catches NaN
            prefix = tr.truncated(k + 1)
            raise SimulationDiverged(
                f"state norm exceeded {DIVERGENCE_LIMIT:g} at t={tr.t[k]:.4f} s", prefix
            )
    return tr


def open_loop_release(m: mdl.ContinuousModel, x0, duration: float,
                      T_s: float = mdl.DEFAULT_TS) -> SimTrace:
    """Free response from ``x0`` with zero input, for natural-frequency analysis."""
    n = int(math.floor(duration / T_s + 1e-9)) + 1
    tr = SimTrace.empty(n, T_s)
    x = np.array(x0, dtype=float)
    u = np.zeros(m.n_inputs)
    for k in range(n):
        tr.x[k] = x
        x = integrate_step(m, x, u, T_s)
    return tr


def run_batch(configs, max_workers: int | None = None) -> list[SimTrace]:
    """Run independent scenarios concurrently; results follow the input order."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_scenario, configs))
