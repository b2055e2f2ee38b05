import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from aero_ftc import lqr
from aero_ftc.model import NOMINAL_A, NOMINAL_B

Q0, R0 = np.diag([150.0, 75.0, 0.0, 0.0]), np.diag([0.01, 0.01])


def residual(A, B, Q, R, P):
    # written out independently of lqr.care_residual
    return A.T @ P + P @ A - P @ B @ np.linalg.inv(R) @ B.T @ P + Q


def test_default_weights():
    w = lqr.LqrWeights()
    np.testing.assert_array_equal(w.Q, Q0)
    np.testing.assert_array_equal(w.R, R0)


@pytest.mark.parametrize("Q, R", [(np.diag([1, -1, 0, 0]), R0), (Q0, np.diag([0.01, 0.0])),
                                  (Q0, np.array([[1.0, 0.5], [0.0, 1.0]]))])
def test_weights_validation(Q, R):
    with pytest.raises(ValueError):
        lqr.LqrWeights(Q, R)


def test_scalar_unit_case():
    P = lqr.solve_care([[0.0]], [[1.0]], [[1.0]], [[1.0]])
    assert P[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_scalar_quadratic_oracle():
    # 2p - p^2 + 2 = 0, positive root
    p_star = (2 + math.sqrt(4 + 8)) / 2
    assert p_star == pytest.approx(2.73205, abs=1e-5)
    P = lqr.solve_care([[1.0]], [[1.0]], [[2.0]], [[1.0]])
    assert abs(P[0, 0] - p_star) < 1e-9
    K = lqr.lqr_gain(P, np.array([[1.0]]), np.array([[1.0]]))
    assert K[0, 0] == pytest.approx(p_star, abs=1e-9)


def test_nominal_system():
    P = lqr.solve_care(NOMINAL_A, NOMINAL_B, Q0, R0)
    assert np.linalg.norm(residual(NOMINAL_A, NOMINAL_B, Q0, R0, P), "fro") < 1e-8
    assert np.max(np.abs(P - P.T)) < 1e-10
    assert np.linalg.eigvalsh(P).min() >= -1e-10
    np.testing.assert_allclose(P, scipy.linalg.solve_continuous_are(NOMINAL_A, NOMINAL_B, Q0, R0),
                               rtol=1e-9, atol=1e-9)
    K = lqr.lqr_gain(P, NOMINAL_B, R0)
    assert np.linalg.eigvals(NOMINAL_A - NOMINAL_B @ K).real.max() < 0


def test_residual_decreases_monotonically():
    hist = []
    lqr.solve_care(NOMINAL_A, NOMINAL_B, Q0, R0, history=hist)
    assert len(hist) > 2
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_bass_initial_gain_stabilizes():
    K0 = lqr.stabilizing_gain(NOMINAL_A, NOMINAL_B)
    assert np.linalg.eigvals(NOMINAL_A - NOMINAL_B @ K0).real.max() < 0


def test_lyapunov_kronecker_solver():
    rng = np.random.default_rng(4)
    F = rng.normal(size=(4, 4)) - 5 * np.eye(4)
    W = np.eye(4)
    X = lqr.solve_lyapunov(F, W)
    np.testing.assert_allclose(F.T @ X + X @ F + W, 0, atol=1e-12)
    np.testing.assert_allclose(X, scipy.linalg.solve_continuous_lyapunov(F.T, -W), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_gain_invariant_to_common_weight_scale(c):
    K = lqr.design_lqr(NOMINAL_A, NOMINAL_B).K
    Kc = lqr.design_lqr(NOMINAL_A, NOMINAL_B, lqr.LqrWeights(c * Q0, c * R0)).K
    np.testing.assert_allclose(Kc, K, rtol=1e-8, atol=1e-8)


def test_non_convergence_reports_residual():
    with pytest.raises(lqr.RiccatiError) as exc:
        lqr.solve_care(NOMINAL_A, NOMINAL_B, Q0, R0, max_iter=2)
    assert exc.value.residual > 1e-8
    assert exc.value.iterations == 2


def test_uncontrollable_pair_detected():
    with pytest.raises(lqr.NotStabilizableError):
        lqr.solve_care([[1.0, 0.0], [0.0, -1.0]], [[0.0], [1.0]], np.eye(2), [[1.0]])


def test_lqr_gain_zero_B():
    K = lqr.lqr_gain(np.eye(4), np.zeros((4, 2)), R0)
    np.testing.assert_array_equal(K, np.zeros((2, 4)))


def test_lqr_gain_singular_R():
    with pytest.raises(np.linalg.LinAlgError):
        lqr.lqr_gain(np.eye(4), NOMINAL_B, np.diag([1.0, 0.0]))


def test_control_law_examples():
    K = lqr.design_lqr(NOMINAL_A, NOMINAL_B).K
    r = np.array([0.3, -0.2, 0, 0])
    np.testing.assert_array_equal(lqr.control_law(K, r, r), [0, 0])
    K1 = np.zeros((2, 4))
    K1[0, 0] = 2
    np.testing.assert_array_equal(lqr.control_law(K1, [3, 0, 0, 0], np.zeros(4)), [6, 0])
    r10 = np.array([math.radians(10), 0, 0, 0])
    np.testing.assert_allclose(lqr.control_law(K, r10, np.zeros(4)), K[:, 0] * 0.174533, rtol=1e-5)


def test_runtime_under_a_second():
    import time

    t0 = time.perf_counter()
    lqr.design_lqr(NOMINAL_A, NOMINAL_B)
    assert time.perf_counter() - t0 < 1.0
