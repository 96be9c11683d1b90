import math

import numpy as np
import pytest

from rocket2d.analysis import (
    FrequencyResponse,
    error_stats,
    frequency_response,
    gain_margin,
    step_metrics,
    step_response,
    tf_response,
)
from rocket2d.linmodel import StateSpace, attitude_extended_model
from rocket2d.plant import RocketParams
from rocket2d.riccati import lqr_gain
from rocket2d.sim import ScenarioConfig, run_scenario

PARAMS = RocketParams()
B2 = PARAMS.L * PARAMS.m * PARAMS.g / PARAMS.J  # 26.16


@pytest.fixture(scope="module")
def design_gain():
    return lqr_gain(attitude_extended_model(PARAMS), np.diag([100.0, 5.0, 1000.0]), [[100.0]])


@pytest.fixture(scope="module")
def open_loop(design_gain):
    model = attitude_extended_model(PARAMS)
    return StateSpace(model.A, model.B, design_gain.reshape(1, 3))


@pytest.fixture(scope="module")
def closed_loop(design_gain):
    model = attitude_extended_model(PARAMS)
    return StateSpace(model.A - model.B @ design_gain.reshape(1, 3),
                      np.array([[0.0], [0.0], [1.0]]), model.C)


def loop_polynomials(design_gain):
    """Hand-derived rational form of the loop: B2 (kd s^2 + kp s + ki) / s^3."""
    k_p, k_d, k_i = design_gain[0, 0], design_gain[0, 1], -design_gain[0, 2]
    return B2 * np.array([k_d, k_p, k_i]), np.array([1.0, 0.0, 0.0, 0.0])


class TestFrequencyResponse:
    def test_integrator_at_unit_frequency(self):
        ss = StateSpace([[0.0]], [[1.0]], [[1.0]])
        fr = frequency_response(ss, np.array([1.0]))
        assert fr.magnitude_db[0] == pytest.approx(0.0, abs=1e-12)
        assert fr.phase_deg[0] == pytest.approx(-90.0, abs=1e-9)

    def test_matches_rational_evaluation(self, open_loop, closed_loop, design_gain):
        omega = np.logspace(-2, 3, 200)
        num, den = loop_polynomials(design_gain)
        ss_path = frequency_response(open_loop, omega)
        tf_path = tf_response(num, den, omega)
        assert np.max(np.abs(ss_path.H - tf_path.H) / np.abs(tf_path.H)) < 1e-9
        # closed loop: B2 ki / (s^3 + B2 kd s^2 + B2 kp s + B2 ki)
        k_p, k_d, k_i = design_gain[0, 0], design_gain[0, 1], -design_gain[0, 2]
        den_cl = np.array([1.0, B2 * k_d, B2 * k_p, B2 * k_i])
        tf_cl = tf_response([B2 * k_i], den_cl, omega)
        ss_cl = frequency_response(closed_loop, omega)
        assert np.max(np.abs(ss_cl.H - tf_cl.H) / np.abs(tf_cl.H)) < 1e-9

    def test_closed_loop_gain_profile(self, closed_loop):
        fr = frequency_response(closed_loop, np.array([1e-3, 100.0]))
        assert abs(fr.H[0]) == pytest.approx(1.0, abs=1e-3)   # unity at low frequency
        assert fr.magnitude_db[1] < -20.0                     # strong attenuation at 100 rad/s

    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            FrequencyResponse(np.array([1.0, 1.0]), np.array([1 + 0j, 1 + 0j]))

    def test_rejects_mimo(self):
        ss = StateSpace(np.zeros((2, 2)), np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            frequency_response(ss, np.array([1.0]))


class TestGainMargin:
    def test_design_loop_state_space(self, open_loop):
        gm = gain_margin(open_loop)
        assert gm.gm_db == pytest.approx(17.18, abs=0.05)
        assert gm.direction == "reduction"
        # analytic crossover: omega = sqrt(ki/kd)
        assert gm.omega_pc == pytest.approx(2.6607, abs=1e-3)

    def test_design_loop_rational_form(self, design_gain):
        num, den = loop_polynomials(design_gain)
        gm = gain_margin((num, den))
        assert gm.gm_db == pytest.approx(17.18, abs=0.05)

    def test_grid_refinement_invariance(self, open_loop):
        coarse = gain_margin(open_loop, np.logspace(-2, 3, 400))
        fine = gain_margin(open_loop, np.logspace(-2, 3, 4000))
        assert abs(coarse.gm_db - fine.gm_db) < 0.01

    def test_single_integrator_infinite_margin(self):
        gm = gain_margin((np.array([1.0]), np.array([1.0, 0.0])))
        assert gm.infinite
        assert gm.direction == "infinite"

    def test_doubling_gain_shifts_margin_6db(self):
        # classic small-gain loop: k/(s+1)^3 crosses -180 deg below unity
        den = np.array([1.0, 3.0, 3.0, 1.0])
        gm1 = gain_margin((np.array([1.0]), den))
        gm2 = gain_margin((np.array([2.0]), den))
        assert gm1.direction == "increase"
        assert gm1.gm_db - gm2.gm_db == pytest.approx(20.0 * math.log10(2.0), abs=1e-4)
        # and on the signed crossover gain the identity holds for any loop
        assert gm2.crossover_gain_db - gm1.crossover_gain_db == pytest.approx(
            20.0 * math.log10(2.0), abs=1e-4
        )


class TestStepMetrics:
    def test_closed_loop_pitch_step(self, closed_loop):
        t, y = step_response(closed_loop, duration=20.0)
        metrics = step_metrics(t, y)
        assert metrics.overshoot_pct < 2.0
        assert metrics.steady_state_error < 1e-3
        assert metrics.rise_time > 0.0
        assert metrics.settling_time < 10.0

    def test_constant_signal_conventions(self):
        t = np.linspace(0.0, 1.0, 101)
        metrics = step_metrics(t, np.ones_like(t))
        assert metrics.overshoot_pct == 0.0
        assert metrics.rise_time == 0.0

    def test_second_order_overshoot_formula(self):
        # zeta = 0.5: overshoot exp(-pi zeta / sqrt(1 - zeta^2)) = 16.3%
        zeta, wn = 0.5, 2.0
        ss = StateSpace([[0.0, 1.0], [-wn**2, -2 * zeta * wn]], [[0.0], [wn**2]], [[1.0, 0.0]])
        t, y = step_response(ss, duration=12.0, dt=1e-4)
        metrics = step_metrics(t, y)
        expected = 100.0 * math.exp(-math.pi * zeta / math.sqrt(1 - zeta**2))
        assert metrics.overshoot_pct == pytest.approx(expected, abs=0.5)

    def test_unsettled_trace_rejected(self):
        t = np.linspace(0.0, 10.0, 1001)
        with pytest.raises(ValueError, match="not settled"):
            step_metrics(t, np.sin(t))


class TestErrorStats:
    def test_zero_noise_run(self):
        # perfect sensing: estimates feed through the true states
        cfg = ScenarioConfig(variant="reduced-vertical", navigation=False, duration=30.0)
        _, std = error_stats(run_scenario(cfg), "y", "y_hat", discard=10.0)
        assert std < 1e-9

    def test_shift_invariance(self):
        cfg = ScenarioConfig(variant="reduced-vertical", duration=25.0, seed=2)
        trace = run_scenario(cfg)
        _, std1 = error_stats(trace, "y", "y_hat", discard=5.0)
        trace.y = trace.y + 100.0
        trace.y_hat = trace.y_hat + 100.0
        _, std2 = error_stats(trace, "y", "y_hat", discard=5.0)
        assert std1 == pytest.approx(std2, rel=1e-9)

    def test_discard_window_validated(self):
        trace = run_scenario(ScenarioConfig(duration=1.0))
        with pytest.raises(ValueError):
            error_stats(trace, "y", "y_hat", discard=10.0)


class TestCsvExport:
    def test_frequency_response_round_trip(self, tmp_path, closed_loop):
        fr = frequency_response(closed_loop, np.logspace(-1, 1, 20))
        path = tmp_path / "bode.csv"
        fr.to_csv(path)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert np.allclose(data["omega"], fr.omega, rtol=1e-8)
        assert np.allclose(data["magnitude_db"], fr.magnitude_db, rtol=1e-6, atol=1e-8)
