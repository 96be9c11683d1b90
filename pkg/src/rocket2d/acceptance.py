"""Acceptance checks: the quantitative exit criteria of this testbed.

Each check returns a CheckResult; run_all() executes the suite. The same
functions back both the pytest acceptance module and the CLI reproduce
table, so the two can never drift apart.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis, navigation, sim
from .control import GuidanceGains, TrajectoryRef
from .linmodel import StateSpace, attitude_extended_model, jacobian_linearize
from .plant import ControlInput, PlantState, RocketParams, dynamics_derivative
from .riccati import CareProblem, care_residual, kalman_gain, lqr_gain, solve_care
from .sim import ScenarioConfig, run_scenario

TARGET_K = np.array([1.9558, 0.4467, -3.1623])
TARGET_GM_DB = 17.18
TARGET_ALT_GAINS = np.array([0.7953, 0.3162])
TARGET_OBS_EIG = complex(-0.3976, 0.3976)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    details: list[str] = field(default_factory=list)
    runtime_s: float = 0.0
    runtime_limit_s: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({'; '.join(self.details)})"


class _Checks:
    """Collects sub-assertions into a CheckResult."""

    def __init__(self) -> None:
        self.details: list[str] = []
        self.ok = True

    def expect(self, condition: bool, description: str) -> None:
        self.ok &= bool(condition)
        self.details.append(("ok: " if condition else "FAILED: ") + description)


def _finish(number: int, name: str, checks: _Checks, started: float, limit: float) -> CheckResult:
    return CheckResult(
        number=number,
        name=name,
        passed=checks.ok,
        details=checks.details,
        runtime_s=time.perf_counter() - started,
        runtime_limit_s=limit,
    )


def _baseline_attitude_gain(params: RocketParams | None = None) -> np.ndarray:
    params = params or RocketParams()
    model = attitude_extended_model(params)
    return lqr_gain(model, np.diag([100.0, 5.0, 1000.0]), [[100.0]])


def _open_loop(params: RocketParams, K: np.ndarray) -> StateSpace:
    model = attitude_extended_model(params)
    return StateSpace(model.A, model.B, K.reshape(1, 3))


def _closed_loop(params: RocketParams, K: np.ndarray) -> StateSpace:
    model = attitude_extended_model(params)
    A_cl = model.A - model.B @ K.reshape(1, 3)
    B_ref = np.array([[0.0], [0.0], [1.0]])  # reference enters the integrator
    return StateSpace(A_cl, B_ref, model.C)


def criterion_1_lqr_gains() -> CheckResult:
    """LQR gains of the extended pitch model match the target row."""
    started = time.perf_counter()
    c = _Checks()
    params = RocketParams()
    b = params.L * params.m * params.g / params.J
    c.expect(abs(b - 26.16) < 1e-12, f"input gain L*m*g/J = {b:.4f}")
    K = _baseline_attitude_gain(params)[0]
    err = np.abs(K - TARGET_K)
    c.expect(np.all(err < 1e-3), f"K = {np.round(K, 4)} vs {TARGET_K} (max err {err.max():.2e})")
    return _finish(1, "LQR attitude gains", c, started, 1.0)


def criterion_2_gain_margin() -> CheckResult:
    """Open-loop pitch margin at the -180 degree crossover is 17.18 dB."""
    started = time.perf_counter()
    c = _Checks()
    params = RocketParams()
    K = _baseline_attitude_gain(params)
    gm = analysis.gain_margin(_open_loop(params, K))
    c.expect(abs(gm.gm_db - TARGET_GM_DB) < 0.05, f"GM = {gm.gm_db:.3f} dB at {gm.omega_pc:.3f} rad/s")
    c.expect(gm.direction == "reduction", f"margin direction: {gm.direction}")
    return _finish(2, "pitch-loop gain margin", c, started, 1.0)


def criterion_3_kalman_gains() -> CheckResult:
    """Closed-form filter gains, observer eigenvalues, CARE cross-check."""
    started = time.perf_counter()
    c = _Checks()
    l = navigation.attitude_gain(1e-6, 1e-6)
    c.expect(abs(l - 1.0) < 1e-8, f"attitude gain l = {l}")
    l_y, l_v = navigation.altitude_gains(0.1, 1.0)
    err = np.abs(np.array([l_y, l_v]) - TARGET_ALT_GAINS)
    c.expect(np.all(err < 1e-4), f"altitude gains = [{l_y:.4f}, {l_v:.4f}]")
    filt = navigation.AltitudeFilter(l_y, l_v)
    eigs = np.sort_complex(np.linalg.eigvals(filt.error_matrix()))
    c.expect(
        abs(eigs[0] - TARGET_OBS_EIG.conjugate()) < 1e-4 and abs(eigs[1] - TARGET_OBS_EIG) < 1e-4,
        f"observer eigenvalues = {np.round(eigs, 4)}",
    )
    # closed forms vs the general CARE solver on random covariances
    rng = np.random.Generator(np.random.Philox(2024))
    alt_model = StateSpace(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]),
                           np.array([[1.0, 0.0]]))
    att_model = StateSpace(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    worst = 0.0
    for _ in range(20):
        q = 10.0 ** rng.uniform(-6, 3)
        r = 10.0 ** rng.uniform(-6, 3)
        L_att = kalman_gain(att_model, np.array([[q]]), np.array([[r]]))
        worst = max(worst, abs(L_att[0, 0] - navigation.attitude_gain(q, r))
                    / (1.0 + navigation.attitude_gain(q, r)))
        L_alt = kalman_gain(alt_model, np.diag([0.0, q]), np.array([[r]]))
        closed = np.array(navigation.altitude_gains(q, r))
        worst = max(worst, float(np.max(np.abs(L_alt[:, 0] - closed) / (1.0 + np.abs(closed)))))
    c.expect(worst < 1e-8, f"closed form vs CARE solver, worst relative error {worst:.2e}")
    return _finish(3, "Kalman gain closed forms", c, started, 1.0)


def criterion_4_pitch_step_and_bode() -> CheckResult:
    """Step tracking without overshoot; unity low-frequency closed-loop gain."""
    started = time.perf_counter()
    c = _Checks()
    params = RocketParams()
    K = _baseline_attitude_gain(params)
    closed = _closed_loop(params, K)
    t, y = analysis.step_response(closed, duration=20.0)
    metrics = analysis.step_metrics(t, y)
    c.expect(metrics.overshoot_pct < 2.0, f"overshoot {metrics.overshoot_pct:.3f}%")
    c.expect(metrics.steady_state_error < 1e-3, f"steady-state error {metrics.steady_state_error:.2e} rad")
    fr = analysis.frequency_response(closed)
    c.expect(abs(fr.magnitude_db[0]) < 0.01,
             f"low-frequency gain {fr.magnitude_db[0]:.5f} dB at {fr.omega[0]:.3g} rad/s")
    return _finish(4, "pitch step response and Bode", c, started, 5.0)


def _reduced_lateral_config(**overrides) -> ScenarioConfig:
    base = dict(
        ref=TrajectoryRef(x_d=2.0, ydot_d=2.0),
        guidance=GuidanceGains(k_x=0.5),
        variant="reduced-lateral",
        navigation=False,
        duration=35.0,
        initial_state=PlantState(),  # x(0)=0 -> 2 m initial error
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def criterion_5_reduced_lateral() -> CheckResult:
    """Reduced-model horizontal tracking converges with a decreasing CLF."""
    started = time.perf_counter()
    c = _Checks()
    trace = run_scenario(_reduced_lateral_config())
    x_err = trace.x - trace.x_d
    at_30 = abs(x_err[np.searchsorted(trace.t, 30.0)])
    c.expect(at_30 < 0.05, f"|x err| at 30 s = {at_30:.2e} m")
    from .control import lyapunov_certificates

    report = [r for r in lyapunov_certificates(trace) if r.name == "V_lateral"][0]
    c.expect(report.non_increasing,
             f"V max step increase {report.max_increase:.2e} (band {report.band:.2e})")
    return _finish(5, "reduced lateral tracking", c, started, 5.0)


def criterion_6_reduced_vertical() -> CheckResult:
    """Backstepping ramp tracking with a transient velocity overshoot."""
    started = time.perf_counter()
    c = _Checks()
    cfg = ScenarioConfig(
        ref=TrajectoryRef(x_d=0.0, ydot_d=2.0),
        guidance=GuidanceGains(k_x=0.5, k_1=2.0, k_2=1.0),
        variant="reduced-vertical",
        navigation=False,
        duration=15.0,
    )
    trace = run_scenario(cfg)
    y_err = np.abs(trace.y - trace.y_d)[trace.t >= 10.0]
    c.expect(float(y_err.max()) < 0.05, f"max |y err| after 10 s = {y_err.max():.2e} m")
    overshoot = float(trace.v.max()) - cfg.ref.ydot_d
    c.expect(overshoot > 1e-3, f"velocity overshoot {overshoot:.3f} m/s")
    return _finish(6, "reduced vertical tracking", c, started, 5.0)


def criterion_7_estimation_stats() -> CheckResult:
    """Estimation error stds over >= 60 s post-transient at dt = 1 ms.

    Both runs use the stable reduced wirings with navigation on; the
    observer error dynamics are trajectory-independent, so they measure
    the same statistics as the coupled experiment without its lateral
    instability cutting the window short.
    """
    started = time.perf_counter()
    c = _Checks()
    lat = run_scenario(_reduced_lateral_config(navigation=True, duration=70.0, seed=11))
    _, theta_std = analysis.error_stats(lat, "theta", "theta_hat", discard=10.0)
    theta_std_deg = np.degrees(theta_std)
    c.expect(0.0012 <= theta_std_deg <= 0.0036, f"std(theta err) = {theta_std_deg:.5f} deg")
    vert = ScenarioConfig(
        ref=TrajectoryRef(x_d=0.0, ydot_d=2.0),
        variant="reduced-vertical",
        navigation=True,
        duration=70.0,
        seed=7,
    )
    _, y_std = analysis.error_stats(run_scenario(vert), "y", "y_hat", discard=10.0)
    c.expect(0.022 <= y_std <= 0.034, f"std(altitude err) = {y_std:.5f} m")
    return _finish(7, "estimation error statistics", c, started, 30.0)


def criterion_8_full_2d() -> CheckResult:
    """Coupled 2-D climb: altitude holds while the lateral loop diverges."""
    started = time.perf_counter()
    c = _Checks()
    cfg = ScenarioConfig(seed=1)  # baseline defaults: k_x=0.01, 60 s, nav on
    trace = run_scenario(cfg)
    y_err = np.abs(trace.y - trace.y_d)[trace.t >= 5.0]
    c.expect(float(y_err.max()) < 0.2, f"max |altitude err| after 5 s = {y_err.max():.3f} m")
    c.expect(float(trace.x.max()) > trace.x_d[0], f"x overshoots target (max {trace.x.max():.2f} m)")
    c.expect(trace.diverged, "growing lateral oscillation flagged")
    return _finish(8, "full 2-D experiment", c, started, 30.0)


def criterion_9_property_suites() -> CheckResult:
    """Solver residuals, Jacobian cross-check, filter identities, determinism."""
    started = time.perf_counter()
    c = _Checks()

    # CARE residual bound over a small family of problems
    rng = np.random.Generator(np.random.Philox(99))
    worst_res = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, 1))
        C_rand = rng.normal(size=(1, n))
        Q = C_rand.T @ C_rand + 1e-3 * np.eye(n)
        R = np.array([[float(10.0 ** rng.uniform(-2, 2))]])
        prob = CareProblem(A, B, Q, R)
        P = solve_care(prob)
        worst_res = max(worst_res, care_residual(prob, P) / (1.0 + np.linalg.norm(P, "fro")))
    c.expect(worst_res <= 1e-8, f"CARE residual worst {worst_res:.2e}")

    # analytic vs central finite-difference Jacobian at random points
    params = RocketParams()
    h = 1e-6
    worst_jac = 0.0
    for _ in range(100):
        vals = rng.uniform(-2.0, 2.0, size=8)
        s = PlantState(*vals[:6])
        u_in = ControlInput(T=float(20.0 + 5.0 * vals[6]), gamma=float(0.5 * vals[7]))
        ss = jacobian_linearize(s, u_in, params)
        for j in range(6):
            lo = list(s.as_tuple()); hi = list(s.as_tuple())
            lo[j] -= h; hi[j] += h
            fd = (np.array(dynamics_derivative(PlantState(*hi), u_in, params).as_tuple())
                  - np.array(dynamics_derivative(PlantState(*lo), u_in, params).as_tuple())) / (2 * h)
            worst_jac = max(worst_jac, float(np.max(np.abs(fd - ss.A[:, j]) / (1.0 + np.abs(fd)))))
        for j, bumped in enumerate((
            (ControlInput(u_in.T + h, u_in.gamma), ControlInput(u_in.T - h, u_in.gamma)),
            (ControlInput(u_in.T, u_in.gamma + h), ControlInput(u_in.T, u_in.gamma - h)),
        )):
            fd = (np.array(dynamics_derivative(s, bumped[0], params).as_tuple())
                  - np.array(dynamics_derivative(s, bumped[1], params).as_tuple())) / (2 * h)
            worst_jac = max(worst_jac, float(np.max(np.abs(fd - ss.B[:, j]) / (1.0 + np.abs(fd)))))
    c.expect(worst_jac <= 1e-6, f"Jacobian vs finite differences worst {worst_jac:.2e}")

    # complementary identities
    att = navigation.AttitudeFilter.from_covariances(1e-6, 1e-6)
    alt = navigation.AltitudeFilter.from_covariances(0.1, 1.0)
    dev = max(
        navigation.complementary_identity_check(att).max_deviation,
        navigation.complementary_identity_check(alt).max_deviation,
    )
    c.expect(dev < 1e-12, f"complementary identity deviation {dev:.2e}")

    # determinism: same seed, bit-identical traces
    cfg = ScenarioConfig(duration=2.0, seed=42)
    t1, t2 = run_scenario(cfg), run_scenario(cfg)
    identical = all(np.array_equal(t1.column(name), t2.column(name)) for name in sim.CSV_COLUMNS)
    c.expect(identical, "same seed gives bit-identical traces")
    return _finish(9, "property suites", c, started, 10.0)


ALL_CRITERIA = (
    criterion_1_lqr_gains,
    criterion_2_gain_margin,
    criterion_3_kalman_gains,
    criterion_4_pitch_step_and_bode,
    criterion_5_reduced_lateral,
    criterion_6_reduced_vertical,
    criterion_7_estimation_stats,
    criterion_8_full_2d,
    criterion_9_property_suites,
)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CRITERIA]
