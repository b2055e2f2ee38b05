"""Continuous-time LQR synthesis via Kleinman-Newton iteration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_Q = np.diag([150.0, 75.0, 0.0, 0.0])
DEFAULT_R = np.diag([0.01, 0.01])


class RiccatiError(RuntimeError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class NotStabilizableError(RiccatiError):
    pass


@dataclass(frozen=True)
class LqrWeights:
    Q: np.ndarray = field(default_factory=lambda: DEFAULT_Q.copy())
    R: np.ndarray = field(default_factory=lambda: DEFAULT_R.copy())

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() < -1e-12:
            raise ValueError("Q must be symmetric positive semidefinite")
        if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be symmetric positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)


@dataclass(frozen=True)
class LqrController:
    weights: LqrWeights
    P: np.ndarray
    K: np.ndarray

    def __call__(self, r, x):
        return control_law(self.K, r, x)


def care_residual(A, B, Q, R, P) -> np.ndarray:
    """Left-hand side of ``A'P + PA - P B R^-1 B' P + Q = 0``."""
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def solve_lyapunov(F: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve ``F' X + X F + W = 0`` through its Kronecker-product linear system."""
    n = F.shape[0]
    I = np.eye(n)
    # vec(F'X + XF) = (I kron F' + F' kron I) vec(X) with column-major vec
    L = np.kron(I, F.T) + np.kron(F.T, I)
    x = np.linalg.solve(L, -W.reshape(-1, order="F"))
    X = x.reshape((n, n), order="F")
    return 0.5 * (X + X.T)


def stabilizing_gain(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Initial stabilising gain by Bass's shifted-Lyapunov construction.

    With ``beta > -min Re(eig(A))`` (``||A||_F + 1`` bounds every eigenvalue
    modulus) the solution ``Z`` of ``(A + beta I) Z + Z (A + beta I)' = 2 B B'``
    is positive definite for a controllable pair, and ``K0 = B' Z^-1`` puts
    the spectrum of ``A - B K0`` left of ``-beta``.
    """
    n = A.shape[0]
    beta = np.linalg.norm(A, "fro") + 1.0
    Ab = A + beta * np.eye(n)
    # (A+bI)Z + Z(A+bI)' = 2BB'  <=>  F'Z + ZF + W = 0 with F = -(A+bI)'
    Z = solve_lyapunov(-Ab.T, 2.0 * B @ B.T)
    eig = np.linalg.eigvalsh(Z)
    if eig.min() <= 1e-12 * max(eig.max(), 1.0):
        raise NotStabilizableError(
            "shifted controllability Gramian is singular; (A, B) is not controllable"
        )
    return B.T @ np.linalg.inv(Z)


def solve_care(A, B, Q, R, tol: float = 1e-10, max_iter: int = 100, K0=None, history=None):
    """Stabilising solution of the continuous algebraic Riccati equation.

    Kleinman-Newton: starting from a stabilising ``K0`` (Bass shift unless
    given), repeatedly solve ``(A-BK)'P + P(A-BK) + Q + K'RK = 0`` and update
    ``K = R^-1 B' P``.  Stops once the Frobenius residual drops below ``tol``.
    If ``history`` is a list, the residual of every iterate is appended.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if tol <= 0:
        raise ValueError("tol must be positive")

    K = stabilizing_gain(A, B) if K0 is None else np.asarray(K0, dtype=float)
    res = float("inf")
    stalled = 0
    for it in range(1, max_iter + 1):
        F = A - B @ K
        P = solve_lyapunov(F, Q + K.T @ R @ K)
        K = np.linalg.solve(R, B.T @ P)
        prev, res = res, float(np.linalg.norm(care_residual(A, B, Q, R, P), "fro"))
        if history is not None:
            history.append(res)
        log.debug("kleinman iteration %d residual %.3e", it, res)
        if not np.isfinite(res):
            raise NotStabilizableError("Lyapunov sub-solve diverged", res, it)
        if res < tol:
            return P
        # quadratic convergence stalls only at round-off or for a bad pair
        stalled = stalled + 1 if res > 0.5 * prev else 0
        if stalled >= 5:
            raise NotStabilizableError("residual plateau; pair may not be stabilisable", res, it)
    raise RiccatiError("Kleinman iteration did not converge", res, max_iter)


def lqr_gain(P, B, R) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if np.linalg.cond(R) > 1e14:
        raise np.linalg.LinAlgError("R is singular")
    return np.linalg.solve(R, np.asarray(B).T @ P)


def control_law(K, r, x) -> np.ndarray:
    """``u = K (r - x)``, unsaturated."""
    return K @ (np.asarray(r, dtype=float) - np.asarray(x, dtype=float))


def design_lqr(A, B, weights: LqrWeights | None = None, **kw) -> LqrController:
    weights = weights or LqrWeights()
    P = solve_care(A, B, weights.Q, weights.R, **kw)
    return LqrController(weights, P, lqr_gain(P, B, weights.R))
