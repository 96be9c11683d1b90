import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rocket2d.control import (
    FLAG_DENOM_GUARD,
    FLAG_THRUST_SAT,
    AttitudeRegulator,
    GuidanceGains,
    TrajectoryRef,
    altitude_backstepping,
    horizontal_guidance,
    ideal_lateral_trajectory,
    lyapunov_certificates,
)
from rocket2d.plant import RocketParams
from rocket2d.sim import ScenarioConfig, run_scenario

PARAMS = RocketParams()
BASE_Q = np.diag([100.0, 5.0, 1000.0])
BASE_R = [[100.0]]


@pytest.fixture
def regulator():
    return AttitudeRegulator.from_weights(PARAMS, BASE_Q, BASE_R)


class TestAttitudeRegulator:
    def test_equilibrium_outputs_zero(self, regulator):
        assert regulator.step(0.0, 0.0, 0.0, 1e-3) == 0.0

    def test_proportional_action_value(self, regulator):
        # fresh integrator, pure pitch offset: command is -k_p * theta
        assert regulator.step(0.1, 0.0, 0.0, 1e-3) == pytest.approx(-0.19558, abs=1e-4)

    def test_integrator_advances_after_command(self, regulator):
        dt = 1e-3
        regulator.step(0.1, 0.0, 0.0, dt)
        assert regulator.zeta == pytest.approx(-0.1 * dt)

    def test_rejects_destabilizing_gain(self):
        with pytest.raises(ValueError, match="stabilize"):
            AttitudeRegulator(np.array([-1.0, -1.0, 1.0]), PARAMS)

    def test_antiwindup_freezes_integrator(self, regulator):
        dt = 1e-3
        gamma = regulator.step(2.0, 0.0, 0.0, dt)  # demand far beyond the stop
        assert gamma == -regulator.gamma_max
        assert regulator.saturated
        assert regulator.zeta == 0.0
        regulator.step(0.01, 0.0, 0.0, dt)
        assert not regulator.saturated
        assert regulator.zeta != 0.0

    def test_closed_loop_eigenvalues_stable(self, regulator):
        from rocket2d.linmodel import attitude_extended_model

        model = attitude_extended_model(PARAMS)
        eigs = np.linalg.eigvals(model.A - model.B @ regulator.K.reshape(1, 3))
        assert eigs.real.max() < 0.0

    def test_step_tracking_no_overshoot(self, regulator):
        # close the loop on the double-integrator pitch plant directly;
        # independent of the expm-based response used by the analysis module
        dt = 1e-3
        b = PARAMS.L * PARAMS.m * PARAMS.g / PARAMS.J
        theta, omega = 0.0, 0.0
        theta_d = 1.0
        history = []
        for _ in range(int(20.0 / dt)):
            gamma = regulator.step(theta, omega, theta_d, dt)
            theta, omega = theta + dt * omega, omega + dt * b * gamma
            history.append(theta)
        history = np.array(history)
        assert abs(history[-1] - theta_d) < 1e-3
        assert history.max() < theta_d * 1.02

    def test_reference_in_proportional_switch(self):
        reg = AttitudeRegulator.from_weights(
            PARAMS, BASE_Q, BASE_R, proportional_on_reference=True
        )
        # with theta == theta_d the proportional term vanishes entirely
        assert reg.step(0.3, 0.0, 0.3, 1e-3) == pytest.approx(0.0)

    def test_rejects_bad_dt(self, regulator):
        with pytest.raises(ValueError):
            regulator.step(0.0, 0.0, 0.0, 0.0)


class TestHorizontalGuidance:
    REF = TrajectoryRef(x_d=2.0, ydot_d=2.0)

    def test_zero_error(self):
        assert horizontal_guidance(2.0, self.REF, 0.5) == 0.0

    def test_direct_evaluation(self):
        # k_x * (x - x_d) / ydot_d = 0.5 * 2 / 2 = 0.5
        assert horizontal_guidance(4.0, self.REF, 0.5) == pytest.approx(math.asin(0.5))
        assert horizontal_guidance(4.0, self.REF, 0.5) == pytest.approx(0.5236, abs=1e-4)

    def test_clamps_to_quarter_turn(self):
        # argument 5 saturates the arcsin at pi/2
        assert horizontal_guidance(22.0, self.REF, 0.5) == pytest.approx(math.pi / 2)
        assert horizontal_guidance(-18.0, self.REF, 0.5) == pytest.approx(-math.pi / 2)

    @given(st.floats(-50.0, 50.0), st.floats(0.01, 2.0))
    def test_odd_in_error(self, err, k_x):
        ref = TrajectoryRef(x_d=0.0, ydot_d=2.0)
        assert horizontal_guidance(err, ref, k_x) == pytest.approx(
            -horizontal_guidance(-err, ref, k_x), abs=1e-15
        )

    @given(st.lists(st.floats(-50.0, 50.0), min_size=2, max_size=2), st.floats(0.01, 2.0))
    def test_monotone_in_error(self, errs, k_x):
        ref = TrajectoryRef(x_d=0.0, ydot_d=2.0)
        lo, hi = sorted(errs)
        assert horizontal_guidance(lo, ref, k_x) <= horizontal_guidance(hi, ref, k_x)

    def test_output_range(self):
        ref = TrajectoryRef(x_d=0.0, ydot_d=0.5)
        for x in np.linspace(-100, 100, 41):
            assert abs(horizontal_guidance(x, ref, 1.5)) <= math.pi / 2


class TestAltitudeBackstepping:
    REF = TrajectoryRef(x_d=0.0, ydot_d=2.0)

    def test_trim_thrust(self):
        gains = GuidanceGains(k_x=0.5, k_1=2.0, k_2=1.0)
        T, flags = altitude_backstepping(
            y=2.0, ydot=2.0, theta=0.1, gamma=0.1, t=1.0,
            ref=self.REF, gains=gains, params=PARAMS,
        )
        assert T == pytest.approx(19.62)
        assert flags == 0

    @given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(-0.5, 0.5), st.floats(0.0, 10.0))
    def test_trim_thrust_any_gains(self, k1, k2, angle, t):
        gains = GuidanceGains(k_x=0.5, k_1=k1, k_2=k2)
        T, _ = altitude_backstepping(
            y=self.REF.altitude(t), ydot=self.REF.ydot_d, theta=angle, gamma=angle,
            t=t, ref=self.REF, gains=gains, params=PARAMS,
        )
        assert T == PARAMS.m * PARAMS.g

    def test_hand_computed_command(self):
        # a1 = -1, a2 = 0 -> a2_err = -2, T = m (g + 2) = 23.62
        gains = GuidanceGains(k_x=0.5, k_1=2.0, k_2=1.0)
        T, flags = altitude_backstepping(
            y=-1.0, ydot=2.0, theta=0.0, gamma=0.0, t=0.0,
            ref=self.REF, gains=gains, params=PARAMS,
        )
        assert T == pytest.approx(23.62)
        assert flags == 0

    def test_denominator_guard_flag(self):
        gains = GuidanceGains(k_x=0.5, k_1=2.0, k_2=1.0)
        T, flags = altitude_backstepping(
            y=0.0, ydot=2.0, theta=0.0, gamma=math.pi / 2, t=0.0,
            ref=self.REF, gains=gains, params=PARAMS,
        )
        assert flags & FLAG_DENOM_GUARD
        assert 0.0 <= T <= PARAMS.T_max

    def test_thrust_clamped_and_flagged(self):
        gains = GuidanceGains(k_x=0.5, k_1=2.0, k_2=1.0)
        T_hi, flags_hi = altitude_backstepping(
            y=-100.0, ydot=0.0, theta=0.0, gamma=0.0, t=0.0,
            ref=self.REF, gains=gains, params=PARAMS,
        )
        assert T_hi == PARAMS.T_max and flags_hi & FLAG_THRUST_SAT
        T_lo, flags_lo = altitude_backstepping(
            y=100.0, ydot=0.0, theta=0.0, gamma=0.0, t=0.0,
            ref=self.REF, gains=gains, params=PARAMS,
        )
        assert T_lo == 0.0 and flags_lo & FLAG_THRUST_SAT

    def test_gain_validation(self):
        with pytest.raises(ValueError):
            GuidanceGains(k_x=0.0)
        with pytest.raises(ValueError):
            GuidanceGains(k_1=-1.0)


class TestLyapunovCertificates:
    def test_ideal_lateral_model_strictly_decreasing(self):
        ref = TrajectoryRef(x_d=2.0, ydot_d=2.0)
        for x0 in (-3.0, 0.0, 9.0):
            x_err = ideal_lateral_trajectory(x0, ref, k_x=0.5, dt=1e-3, duration=40.0)
            V = 0.5 * x_err**2
            active = np.abs(x_err[:-1]) > 1e-6
            assert np.all(np.diff(V)[active] < 0.0) or x0 == ref.x_d

    def test_origin_stays_zero(self):
        ref = TrajectoryRef(x_d=2.0, ydot_d=2.0)
        x_err = ideal_lateral_trajectory(2.0, ref, k_x=0.5, dt=1e-3, duration=5.0)
        assert np.all(x_err == 0.0)

    def test_reduced_lateral_report(self):
        cfg = ScenarioConfig(
            ref=TrajectoryRef(x_d=2.0, ydot_d=2.0),
            guidance=GuidanceGains(k_x=0.5),
            variant="reduced-lateral", navigation=False, duration=30.0,
        )
        reports = {r.name: r for r in lyapunov_certificates(run_scenario(cfg))}
        assert reports["V_lateral"].non_increasing

    def test_reduced_vertical_report(self):
        cfg = ScenarioConfig(
            ref=TrajectoryRef(x_d=0.0, ydot_d=2.0),
            variant="reduced-vertical", navigation=False, duration=12.0,
        )
        reports = {r.name: r for r in lyapunov_certificates(run_scenario(cfg))}
        v2 = reports["V2_altitude"]
        # non-increasing after the first step
        assert np.max(np.diff(v2.values)[1:]) <= v2.band

    def test_trace_without_config_rejected(self):
        cfg = ScenarioConfig(duration=0.01, variant="full-2d")
        trace = run_scenario(cfg)
        trace.config = None
        with pytest.raises(ValueError):
            lyapunov_certificates(trace)


class TestTrajectoryRef:
    def test_ramp(self):
        ref = TrajectoryRef(x_d=1.0, ydot_d=2.0)
        assert ref.altitude(3.5) == 7.0

    def test_rejects_zero_climb_rate(self):
        with pytest.raises(ValueError):
            TrajectoryRef(x_d=0.0, ydot_d=0.0)
