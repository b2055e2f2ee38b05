"""Joint state and actuator-fault estimation with an augmented Kalman filter.

The fault vector is appended to the plant state and modelled as a slow
random walk.  Its effect enters through ``N_k = -B_k diag(u_k)``, so the fault
block is only observable while the corresponding input is non-zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DiscreteModel

N_FAULTS = 2


class EstimatorError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class AugmentedModel:
    A_a: np.ndarray
    B_a: np.ndarray
    C_a: np.ndarray
    N_k: np.ndarray


@dataclass
class AugmentedEstimate:
    x: np.ndarray  # [x_hat (4), gamma_hat (2)]
    P: np.ndarray

    @property
    def state(self) -> np.ndarray:
        return self.x[:-N_FAULTS]

    @property
    def gamma(self) -> np.ndarray:
        return self.x[-N_FAULTS:]

    def gamma_clamped(self, upper: float = 1.0) -> np.ndarray:
        return np.clip(self.gamma, 0.0, upper)

    def copy(self) -> "AugmentedEstimate":
        return AugmentedEstimate(self.x.copy(), self.P.copy())


def _default_Q_a():
    return np.diag([1e-6] * 4 + [1e-6] * N_FAULTS)


def _default_R_a():
    return (1e-4) ** 2 * np.eye(4)


@dataclass(frozen=True)
class NoiseConfig:
    """Filter tuning: process noise on [state; fault] and measurement noise."""

    Q_a: np.ndarray = field(default_factory=_default_Q_a)
    R_a: np.ndarray = field(default_factory=_default_R_a)

    def __post_init__(self):
        Q = np.asarray(self.Q_a, dtype=float)
        R = np.asarray(self.R_a, dtype=float)
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() < 0:
            raise ValueError("Q_a must be symmetric positive semidefinite")
        if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R_a must be symmetric positive definite")
        object.__setattr__(self, "Q_a", Q)
        object.__setattr__(self, "R_a", R)

    @classmethod
    def from_diagonals(cls, state_q=1e-6, fault_q=1e-6, meas_sd=1e-4):
        Q = np.diag(np.concatenate([np.broadcast_to(state_q, 4), np.broadcast_to(fault_q, N_FAULTS)]))
        R = np.diag(np.broadcast_to(np.square(meas_sd), 4).astype(float))
        return cls(Q, R)


def initial_estimate(x0, state_var: float = 1e-3, fault_var: float = 0.25) -> AugmentedEstimate:
    """Start from the measured state with zero fault and a wide fault prior."""
    x = np.concatenate([np.asarray(x0, dtype=float), np.zeros(N_FAULTS)])
    P = np.diag([state_var] * len(x0) + [fault_var] * N_FAULTS)
    return AugmentedEstimate(x, P)


def build_augmented(dm: DiscreteModel, u_k) -> AugmentedModel:
    A_k, B_k, C_k = dm.A_k, dm.B_k, dm.C_k
    n, m = B_k.shape
    ny = C_k.shape[0]
    N_k = -B_k * np.asarray(u_k, dtype=float)  # == -B_k @ diag(u_k)
    A_a = np.zeros((n + m, n + m))
    A_a[:n, :n] = A_k
    A_a[:n, n:] = N_k
    A_a[n:, n:] = np.eye(m)
    B_a = np.vstack([B_k, np.zeros((m, m))])
    C_a = np.hstack([C_k, np.zeros((ny, m))])
    return AugmentedModel(A_a, B_a, C_a, N_k)


def predict(est: AugmentedEstimate, am: AugmentedModel, u_prev, Q_a) -> AugmentedEstimate:
    x = am.A_a @ est.x + am.B_a @ np.asarray(u_prev, dtype=float)
    P = am.A_a @ est.P @ am.A_a.T + Q_a
    return AugmentedEstimate(x, P)


def kalman_gain(P_pred, C_a, R_a) -> np.ndarray:
    CP = C_a @ P_pred
    S = CP @ C_a.T + R_a
    # K = P C' S^-1, computed as a solve against the symmetric S
    try:
        return np.linalg.solve(S, CP).T
    except np.linalg.LinAlgError:
        raise EstimatorError(
            f"innovation covariance is singular (condition number {np.linalg.cond(S):.3e})"
        ) from None


def correct(est_pred: AugmentedEstimate, K_a, C_a, y_k) -> AugmentedEstimate:
    innovation = np.asarray(y_k, dtype=float) - C_a @ est_pred.x
    x = est_pred.x + K_a @ innovation
    P = est_pred.P - K_a @ C_a @ est_pred.P
    return AugmentedEstimate(x, 0.5 * (P + P.T))


def step(est: AugmentedEstimate, dm: DiscreteModel, u_cmd, y_k, noise: NoiseConfig) -> AugmentedEstimate:
    """One predict/correct cycle.

    ``u_cmd`` is the input actually sent to the actuators over the interval
    that ends at the measurement ``y_k``.
    """
    am = build_augmented(dm, u_cmd)
    pred = predict(est, am, u_cmd, noise.Q_a)
    K_a = kalman_gain(pred.P, am.C_a, noise.R_a)
    return correct(pred, K_a, am.C_a, y_k)


class FaultEstimator:
    """Stateful wrapper holding the current augmented estimate."""

    def __init__(self, dm: DiscreteModel, noise: NoiseConfig | None = None, x0=None,
                 state_var: float = 1e-3, fault_var: float = 0.25):
        self.dm = dm
        self.noise = noise or NoiseConfig()
        n = dm.A_k.shape[0]
        self.est = initial_estimate(np.zeros(n) if x0 is None else x0, state_var, fault_var)

        # augmented matrices are rebuilt in place; only the N_k block changes
        self._am = build_augmented(self.dm, np.zeros(dm.B_k.shape[1]))
        self._n = n
        self._neg_B = -dm.B_k

    def update(self, u_cmd, y_k) -> AugmentedEstimate:
        am, n = self._am, self._n
        u = np.asarray(u_cmd, dtype=float)
        np.multiply(self._neg_B, u, out=am.N_k)
        am.A_a[:n, n:] = am.N_k
        pred = predict(self.est, am, u, self.noise.Q_a)
        K_a = kalman_gain(pred.P, am.C_a, self.noise.R_a)
        self.est = correct(pred, K_a, am.C_a, y_k)
        return self.est

    @property
    def state(self):
        return self.est.state

    @property
    def gamma(self):
        return self.est.gamma
