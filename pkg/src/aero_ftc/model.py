"""Plant model of the 2DOF bi-rotor helicopter.

State ordering is ``x = [pitch, yaw, pitch_rate, yaw_rate]`` (rad, rad/s) and
input ordering is ``u = [V_p, V_y]`` (volts, front/main and rear motor).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_STATES = 4
N_INPUTS = 2

# Identified numeric A, B blocks of the rig.  They do not match the listed
# physical parameters exactly (e.g. -0.3190 vs
# -K_sp/J_p = -0.3207), so both are kept and these are the defaults.
NOMINAL_A = np.array(
    [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-0.3190, 0.0, -0.1164, 0.0],
        [0.0, 0.0, 0.0, -0.1386],
    ]
)
NOMINAL_B = np.array(
    [
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0216, 0.01154],
        [-0.01336, 0.052],
    ]
)

DEFAULT_TS = 0.002
DEFAULT_U_LIMIT = 24.0

# Fraction of a rotor's 8 blades lost -> loss of effectiveness.  A modelling
# convenience, not a calibrated thrust map.
BLADE_BREAK_PRESETS = {
    "healthy": 0.0,
    "1-blade": 0.125,
    "2-blade": 0.25,
    "4-blade": 0.5,
    "8-blade": 1.0,
}

# Truncation order of the Taylor series inside the scaling-and-squaring expm.
EXPM_TAYLOR_ORDER = 18


class InvalidParameterError(ValueError):
    pass


class FaultDomainError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    """Aero2 physical parameters (SI units, defaults from the rig's data sheet)."""

    D_t: float = 0.1674
    K_pp: float = 0.00321
    K_py: float = 0.00137
    K_yy: float = 0.00610
    K_yp: float = -0.00319
    K_sp: float = 0.00744
    D_p: float = 0.00199
    D_y: float = 0.00192
    J_p: float = 0.0232
    J_y: float = 0.0238

    def __post_init__(self):
        for name in ("J_p", "J_y", "D_t"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive, got {getattr(self, name)}")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ContinuousModel:
    A: np.ndarray = field(default_factory=lambda: NOMINAL_A.copy())
    B: np.ndarray = field(default_factory=lambda: NOMINAL_B.copy())
    C: np.ndarray = field(default_factory=lambda: np.eye(N_STATES))
    u_min: float = -DEFAULT_U_LIMIT
    u_max: float = DEFAULT_U_LIMIT

    def __post_init__(self):
        A, B, C = _frozen(self.A), _frozen(self.B), _frozen(self.C)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
            raise InvalidParameterError(
                f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}"
            )
        if not self.u_min < self.u_max:
            raise InvalidParameterError("u_min must be below u_max")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    def saturate(self, u):
        return np.clip(u, self.u_min, self.u_max)


@dataclass(frozen=True)
class DiscreteModel:
    A_k: np.ndarray
    B_k: np.ndarray
    C_k: np.ndarray
    T_s: float

    def __post_init__(self):
        if not self.T_s > 0:
            raise InvalidParameterError("T_s must be positive")
        for name in ("A_k", "B_k", "C_k"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


def nominal_model(u_limit: float = DEFAULT_U_LIMIT) -> ContinuousModel:
    """Model with the identified numeric A, B blocks and C = I."""
    return ContinuousModel(NOMINAL_A, NOMINAL_B, np.eye(N_STATES), -u_limit, u_limit)


def build_continuous_model(
    params: PhysicalParams, u_min: float = -DEFAULT_U_LIMIT, u_max: float = DEFAULT_U_LIMIT
) -> ContinuousModel:
    """Assemble A, B from the Newtonian pitch/yaw equations.

    Pitch: J_p th'' + D_p th' + K_sp th = D_t (K_pp V_p + K_py V_y)
    Yaw:   J_y ps'' + D_y ps'            = D_t (K_yp V_p + K_yy V_y)

    The result is not identical to :func:`nominal_model`; the listed
    parameters and printed matrices disagree in the third significant digit.
    """
    p = params
    if not (p.J_p > 0 and p.J_y > 0 and p.D_t > 0):
        raise InvalidParameterError("inertias and moment arm must be positive")
    A = np.zeros((4, 4))
    A[0, 2] = 1.0
    A[1, 3] = 1.0
    A[2, 0] = -p.K_sp / p.J_p
    A[2, 2] = -p.D_p / p.J_p
    A[3, 3] = -p.D_y / p.J_y
    B = np.zeros((4, 2))
    B[2] = [p.K_pp * p.D_t / p.J_p, p.K_py * p.D_t / p.J_p]
    B[3] = [p.K_yp * p.D_t / p.J_y, p.K_yy * p.D_t / p.J_y]
    return ContinuousModel(A, B, np.eye(4), u_min, u_max)


def check_fault(gamma) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    if g.shape != (N_INPUTS,) or not np.all(np.isfinite(g)):
        raise FaultDomainError(f"fault vector must be {N_INPUTS} finite values, got {gamma!r}")
    if np.any(g < 0.0) or np.any(g > 1.0):
        raise FaultDomainError(f"fault parameters must lie in [0, 1], got {g.tolist()}")
    return g


def fault_from_presets(names) -> np.ndarray:
    """Map per-rotor blade-break preset names (e.g. ``["1-blade", "healthy"]``) to a fault vector."""
    try:
        return np.array([BLADE_BREAK_PRESETS[n] for n in names], dtype=float)
    except KeyError as exc:
        raise FaultDomainError(
            f"unknown blade-break preset {exc.args[0]!r}; known: {sorted(BLADE_BREAK_PRESETS)}"
        ) from None


def apply_fault(u, gamma) -> np.ndarray:
    """Loss of control effectiveness: the actuator realises ``(1 - gamma_i) * u_i``."""
    g = check_fault(gamma)
    return (1.0 - g) * np.asarray(u, dtype=float)


def derivative(m: ContinuousModel, x, u_eff) -> np.ndarray:
    return m.A @ x + m.B @ u_eff


def expm(M: np.ndarray, order: int = EXPM_TAYLOR_ORDER) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series.

    ``M`` is scaled by ``2**-s`` until its 1-norm is at most 0.5; with the
    default order 18 the truncation remainder is below 0.5**19/19!, far under
    double precision, and ``s`` squarings recover the result.
    """
    M = np.asarray(M, dtype=float)
    norm = np.linalg.norm(M, 1)
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    X = M / 2.0**s
    n = M.shape[0]
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, order + 1):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def discretize_zoh(m: ContinuousModel, T_s: float = DEFAULT_TS) -> DiscreteModel:
    """Zero-order-hold discretisation via the augmented exponential

    ``expm([[A, B], [0, 0]] * T_s) = [[A_k, B_k], [0, I]]``.
    """
    if not T_s > 0:
        raise InvalidParameterError("T_s must be positive")
    n, nu = m.n_states, m.n_inputs
    M = np.zeros((n + nu, n + nu))
    M[:n, :n] = m.A
    M[:n, n:] = m.B
    E = expm(M * T_s)
    return DiscreteModel(E[:n, :n], E[:n, n:], m.C, T_s)
