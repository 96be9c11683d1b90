import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from rocket2d.linmodel import StateSpace, attitude_extended_model
from rocket2d.plant import RocketParams
from rocket2d.riccati import (
    CareProblem,
    CareSolverError,
    care_residual,
    kalman_gain,
    lqr_gain,
    solve_care,
)

PARAMS = RocketParams()

cov = st.floats(1e-6, 1e3)


def random_stabilizable_problem(rng):
    n = int(rng.integers(2, 6))
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, 2))
    C = rng.normal(size=(2, n))
    Q = C.T @ C + 1e-4 * np.eye(n)
    R = np.diag(rng.uniform(0.1, 10.0, size=2))
    return CareProblem(A, B, Q, R)


class TestSolveCare:
    @given(cov, cov)
    def test_scalar_closed_form(self, q, r):
        # A=0, B=1: the equation collapses to q - p^2/r = 0, so p = sqrt(q r)
        prob = CareProblem(np.zeros((1, 1)), np.ones((1, 1)), [[q]], [[r]])
        P = solve_care(prob)
        assert P[0, 0] == pytest.approx(math.sqrt(q * r), rel=1e-9)

    def test_scalar_tiny_covariances(self):
        prob = CareProblem(np.zeros((1, 1)), np.ones((1, 1)), [[1e-6]], [[1e-6]])
        assert solve_care(prob)[0, 0] == pytest.approx(1e-6, rel=1e-9)

    def test_double_integrator_filter_dual(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        C = np.array([[1.0, 0.0]])
        P = solve_care(CareProblem(A.T, C.T, np.diag([0.0, 0.1]), [[1.0]]))
        L = P @ C.T / 1.0
        assert L[:, 0] == pytest.approx([0.7953, 0.3162], abs=1e-4)

    def test_already_stable_zero_cost(self):
        prob = CareProblem([[-1.0]], [[1.0]], [[0.0]], [[1.0]])
        assert solve_care(prob)[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_residual_bound_random_problems(self):
        rng = np.random.Generator(np.random.Philox(5))
        for _ in range(25):
            prob = random_stabilizable_problem(rng)
            P = solve_care(prob)
            assert care_residual(prob, P) <= 1e-8 * (1.0 + np.linalg.norm(P, "fro"))
            assert np.linalg.eigvalsh(P).min() >= -1e-8 * (1.0 + np.linalg.norm(P))

    def test_matches_scipy_reference(self):
        rng = np.random.Generator(np.random.Philox(17))
        for _ in range(10):
            prob = random_stabilizable_problem(rng)
            P = solve_care(prob)
            P_ref = scipy.linalg.solve_continuous_are(prob.A, prob.B, prob.Q, prob.R)
            assert np.max(np.abs(P - P_ref)) < 1e-6 * (1.0 + np.linalg.norm(P_ref))

    def test_closed_loop_hurwitz(self):
        rng = np.random.Generator(np.random.Philox(23))
        for _ in range(10):
            prob = random_stabilizable_problem(rng)
            P = solve_care(prob)
            Acl = prob.A - prob.B @ np.linalg.solve(prob.R, prob.B.T @ P)
            assert np.linalg.eigvals(Acl).real.max() < 0.0

    def test_non_stabilizable_raises(self):
        # unstable mode invisible from the input
        A = np.diag([1.0, -1.0])
        B = np.array([[0.0], [1.0]])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            prob = CareProblem(A, B, np.eye(2), [[1.0]])
            with pytest.raises(CareSolverError):
                solve_care(prob)

    def test_pbh_warning_emitted(self):
        A = np.diag([1.0, -1.0])
        B = np.array([[0.0], [1.0]])
        with pytest.warns(RuntimeWarning, match="stabilizability"):
            CareProblem(A, B, np.eye(2), [[1.0]])


class TestCareProblemValidation:
    def test_rejects_asymmetric_Q(self):
        with pytest.raises(ValueError, match="symmetric"):
            CareProblem(np.zeros((2, 2)), np.eye(2), [[1.0, 0.5], [0.0, 1.0]], np.eye(2))

    def test_rejects_indefinite_Q(self):
        with pytest.raises(ValueError, match="semidefinite"):
            CareProblem(np.zeros((2, 2)), np.eye(2), np.diag([1.0, -1.0]), np.eye(2))

    def test_rejects_singular_R(self):
        with pytest.raises(ValueError, match="positive definite"):
            CareProblem(np.zeros((2, 2)), np.eye(2), np.eye(2), np.diag([1.0, 0.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            CareProblem(np.zeros((2, 2)), np.eye(3), np.eye(2), np.eye(2))


class TestLqrGain:
    def test_attitude_design_values(self):
        K = lqr_gain(attitude_extended_model(PARAMS), np.diag([100.0, 5.0, 1000.0]), [[100.0]])
        assert K[0] == pytest.approx([1.9558, 0.4467, -3.1623], abs=1e-3)

    def test_integral_channel_magnitude(self):
        # for the integrator channel the optimal gain reduces to sqrt(q_zeta/R)
        K = lqr_gain(attitude_extended_model(PARAMS), np.diag([100.0, 5.0, 1000.0]), [[100.0]])
        assert abs(K[0, 2]) == pytest.approx(math.sqrt(1000.0 / 100.0), rel=1e-9)

    def test_gain_shrinks_with_effort_weight(self):
        model = attitude_extended_model(PARAMS)
        norms = [np.linalg.norm(lqr_gain(model, np.eye(3), [[10.0**k]])) for k in range(5)]
        assert all(a > b for a, b in zip(norms, norms[1:]))

    @given(st.floats(0.01, 100.0))
    @settings(max_examples=20)
    def test_scaling_invariance(self, alpha):
        model = attitude_extended_model(PARAMS)
        Q = np.diag([100.0, 5.0, 1000.0])
        R = np.array([[100.0]])
        K1 = lqr_gain(model, Q, R)
        K2 = lqr_gain(model, alpha * Q, alpha * R)
        assert np.max(np.abs(K1 - K2)) < 1e-9 * (1.0 + np.max(np.abs(K1)))

    def test_closed_loop_stable(self):
        model = attitude_extended_model(PARAMS)
        K = lqr_gain(model, np.diag([100.0, 5.0, 1000.0]), [[100.0]])
        eigs = np.linalg.eigvals(model.A - model.B @ K)
        assert eigs.real.max() < 0.0


class TestKalmanGain:
    def test_attitude_unit_gain(self):
        model = StateSpace(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
        L = kalman_gain(model, [[1e-6]], [[1e-6]])
        assert L[0, 0] == pytest.approx(1.0, abs=1e-8)

    def test_altitude_gains_and_eigenvalues(self):
        model = StateSpace([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
        L = kalman_gain(model, np.diag([0.0, 0.1]), [[1.0]])
        assert L[:, 0] == pytest.approx([0.7953, 0.3162], abs=1e-4)
        eigs = np.sort_complex(np.linalg.eigvals(np.asarray(model.A) - L @ model.C))
        assert eigs[1] == pytest.approx(-0.3976 + 0.3976j, abs=1e-4)

    @given(cov, cov)
    @settings(max_examples=20)
    def test_double_integrator_closed_form(self, q, r):
        model = StateSpace([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
        L = kalman_gain(model, np.diag([0.0, q]), [[r]])
        expected = np.array([math.sqrt(2.0) * (q / r) ** 0.25, math.sqrt(q / r)])
        assert np.max(np.abs(L[:, 0] - expected) / (1.0 + expected)) < 1e-8

    @given(cov, cov)
    @settings(max_examples=20)
    def test_duality_with_lqr(self, q, r):
        model = StateSpace([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
        L = kalman_gain(model, np.diag([0.0, q]), [[r]])
        dual = StateSpace(np.asarray(model.A).T, np.asarray(model.C).T, np.eye(2))
        K = lqr_gain(dual, np.diag([0.0, q]), [[r]])
        assert np.max(np.abs(L - K.T)) < 1e-10 * (1.0 + np.max(np.abs(L)))

    def test_observer_hurwitz(self):
        model = StateSpace([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
        L = kalman_gain(model, np.diag([0.0, 2.5]), [[0.3]])
        assert np.linalg.eigvals(np.asarray(model.A) - L @ model.C).real.max() < 0.0
