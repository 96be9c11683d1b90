"""Fixed-step closed-loop simulation engine.

Everything runs at one rate on a uniform grid: sense, filter, guidance,
attitude law, thrust law, then a forward-Euler plant step. Sensor noise is
drawn per sample from N(0, covariance) - the covariance handed to the
filters equals the per-sample variance, matching a band-limited white
noise source whose power is covariance times the sampling time. Three
wirings are supported:

  reduced-lateral   driftless horizontal kinematics + pitch dynamics,
                    thrust pinned at hover; guidance and attitude loops.
  reduced-vertical  pure vertical translation, zero pitch; backstepping
                    thrust loop only.
  full-2d           the complete six-state plant with every loop closed.

Traces are recorded at every grid point and exportable as CSV with a fixed
column order.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import control
from .control import AttitudeRegulator, GuidanceGains, TrajectoryRef, altitude_backstepping, horizontal_guidance
from .linmodel import attitude_extended_model
from .navigation import AltitudeFilter, AttitudeFilter
from .plant import ControlInput, PlantState, RocketParams, dynamics_derivative, vertical_acceleration, wrap_angle
from .riccati import lqr_gain

VARIANTS = ("reduced-lateral", "reduced-vertical", "full-2d")

CSV_COLUMNS = (
    "t", "x", "u", "y", "v", "theta", "omega",
    "x_d", "y_d", "theta_d", "T", "gamma",
    "y_hat", "v_hat", "theta_hat",
    "y_m", "theta_m", "omega_m", "a_m", "sat_flags",
)

# |x - x_d| beyond this multiple of the initial error always raises the
# divergence flag, with or without clean oscillation cycles.
DIVERGENCE_BLOWUP_FACTOR = 10.0


class SimulationAbort(RuntimeError):
    """Integration produced a non-finite state; message carries the step."""


@dataclass(frozen=True)
class SensorSample:
    """Output of the "vehicle + on-board sensors" block at one instant.

    Rate gyro, inclinometer, accelerometer and GPS readings carry noise
    per their configured covariances; the horizontal states pass through
    uncorrupted (they are treated as perfectly known).
    """

    omega_m: float
    theta_m: float
    a_m: float
    y_m: float
    x: float
    u: float


class GaussianNoise:
    """Seeded Gaussian source: counter-based Philox bits, Box-Muller transform.

    Streams are reproducible from the seed alone and independent across
    instances, so concurrent scenarios can each own one.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.Generator(np.random.Philox(self.seed))

    def standard(self, n: int) -> np.ndarray:
        """n standard normal draws (cosine branch of Box-Muller)."""
        u = self._bits.random((n, 2))
        # guard the log against an exact 0.0 draw
        u1 = np.maximum(u[:, 0], np.finfo(float).tiny)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u[:, 1])

    def samples(self, covariance: float, n: int) -> np.ndarray:
        if covariance < 0.0:
            raise ValueError("covariance must be >= 0")
        if covariance == 0.0:
            return np.zeros(n)
        return math.sqrt(covariance) * self.standard(n)

    def sample(self, covariance: float) -> float:
        return float(self.samples(covariance, 1)[0])


def noise_sample(rng: GaussianNoise, covariance: float, dt: float) -> float:
    """One sensor-noise draw from N(0, covariance).

    dt documents the sampling convention rather than scaling anything: a
    band-limited white source of power covariance*dt sampled every dt has
    per-sample variance equal to the covariance itself, so the value fed
    to the filter design doubles as the draw variance.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    return rng.sample(covariance)


def euler_step(s: PlantState, c: ControlInput, p: RocketParams, dt: float) -> PlantState:
    """One forward-Euler step of the full plant; wraps theta afterwards."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    d = dynamics_derivative(s, c, p)
    nxt = PlantState(
        x=s.x + dt * d.x,
        u=s.u + dt * d.u,
        y=s.y + dt * d.y,
        v=s.v + dt * d.v,
        theta=wrap_angle(s.theta + dt * d.theta),
        omega=s.omega + dt * d.omega,
    )
    if not nxt.is_finite():
        raise ValueError(f"non-finite state after step: {nxt}")
    return nxt


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete definition of one closed-loop experiment."""

    params: RocketParams = field(default_factory=RocketParams)
    ref: TrajectoryRef = field(default_factory=TrajectoryRef)
    guidance: GuidanceGains = field(default_factory=lambda: GuidanceGains(k_x=0.01))
    lqr_Q: tuple[float, float, float] = (100.0, 5.0, 1000.0)
    lqr_R: float = 100.0
    attitude_q: float = 1e-6
    attitude_r: float = 1e-6
    altitude_q: float = 0.1
    altitude_r: float = 1.0
    dt: float = 1e-3
    duration: float = 60.0
    seed: int = 0
    variant: str = "full-2d"
    navigation: bool = True
    initial_state: PlantState = field(default_factory=PlantState)
    proportional_on_reference: bool = False

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.duration < self.dt:
            raise ValueError("duration must be >= dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


@dataclass
class SimTrace:
    """Uniform-grid record of one run; arrays all share length n_steps+1."""

    config: ScenarioConfig | None
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    x_d: np.ndarray
    y_d: np.ndarray
    theta_d: np.ndarray
    T: np.ndarray
    gamma: np.ndarray
    y_hat: np.ndarray
    v_hat: np.ndarray
    theta_hat: np.ndarray
    y_m: np.ndarray
    theta_m: np.ndarray
    omega_m: np.ndarray
    a_m: np.ndarray
    sat_flags: np.ndarray
    diverged: bool = False

    def __len__(self) -> int:
        return self.t.size

    def column(self, name: str) -> np.ndarray:
        if name not in CSV_COLUMNS:
            raise KeyError(f"unknown trace column {name!r}")
        return getattr(self, name)

    def to_csv(self, path_or_buf) -> None:
        """Write the fixed-order CSV (floats at 9 significant digits)."""
        cols = [self.column(name) for name in CSV_COLUMNS]

        def _write(fh) -> None:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            flags = self.sat_flags
            for i in range(self.t.size):
                row = ",".join(f"{c[i]:.9g}" for c in cols[:-1])
                fh.write(f"{row},{int(flags[i])}\n")

        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w", newline="") as fh:
                _write(fh)
        else:
            _write(path_or_buf)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def trace_from_csv(path) -> SimTrace:
    """Load a trace written by to_csv; the config slot is left empty."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    missing = [c for c in CSV_COLUMNS if c not in (data.dtype.names or ())]
    if missing:
        raise ValueError(f"trace CSV is missing columns: {missing}")
    cols = {name: np.atleast_1d(data[name]).astype(float) for name in CSV_COLUMNS}
    cols["sat_flags"] = cols["sat_flags"].astype(int)
    trace = SimTrace(config=None, **cols)
    x0_err = trace.x[0] - trace.x_d[0]
    trace.diverged = lateral_divergence(trace.t, trace.x, trace.x_d[0], x0_err)
    return trace


def lateral_divergence(t: np.ndarray, x: np.ndarray, x_d: float, x0_err: float) -> bool:
    """Detect an unstable lateral mode from the position history.

    Raised when either (a) after first reaching the target the error
    oscillates with successive extremum amplitudes strictly growing, or
    (b) |x - x_d| exceeds DIVERGENCE_BLOWUP_FACTOR times the initial
    error. Criterion (a) catches the slow oscillatory instability long
    before the blow-up threshold ever trips.
    """
    err = x - x_d
    abs0 = abs(x0_err)
    if abs0 > 0.0 and np.max(np.abs(err)) > DIVERGENCE_BLOWUP_FACTOR * abs0:
        return True
    crossings = np.nonzero(np.diff(np.signbit(err)))[0]
    if crossings.size == 0:
        return False
    start = crossings[0]
    seg = err[start:]
    slope_sign = np.sign(np.diff(seg))
    turning = np.nonzero(np.diff(slope_sign) != 0)[0] + 1
    peaks = np.abs(seg[turning])
    peaks = peaks[peaks > 1e-6]
    if peaks.size < 3:
        return False
    return bool(np.all(np.diff(peaks) > 0.0))


def _build_noise(cfg: ScenarioConfig, n: int) -> dict[str, np.ndarray]:
    """Pre-draw every sensor channel in a fixed order (determinism)."""
    rng = GaussianNoise(cfg.seed)
    zeros = np.zeros(n)
    if not cfg.navigation:
        return {"omega": zeros, "theta": zeros, "accel": zeros, "gps": zeros}
    use_att = cfg.variant in ("reduced-lateral", "full-2d")
    use_alt = cfg.variant in ("reduced-vertical", "full-2d")
    return {
        "omega": rng.samples(cfg.attitude_q, n) if use_att else zeros,
        "theta": rng.samples(cfg.attitude_r, n) if use_att else zeros,
        "accel": rng.samples(cfg.altitude_q, n) if use_alt else zeros,
        "gps": rng.samples(cfg.altitude_r, n) if use_alt else zeros,
    }


def run_scenario(cfg: ScenarioConfig) -> SimTrace:
    """Run one closed-loop experiment and return its trace.

    Per step: sense (noise injected per the config), advance the filters,
    evaluate guidance, attitude law and thrust law, record, then integrate
    the plant. The trace has exactly duration/dt + 1 rows at t_k = k*dt.
    """
    p, ref, gains = cfg.params, cfg.ref, cfg.guidance
    dt = cfg.dt
    n = cfg.n_steps
    variant = cfg.variant

    K = lqr_gain(attitude_extended_model(p), np.diag(cfg.lqr_Q), [[cfg.lqr_R]])
    attitude = AttitudeRegulator(
        K[0], p, proportional_on_reference=cfg.proportional_on_reference
    )
    att_filter = AttitudeFilter.from_covariances(cfg.attitude_q, cfg.attitude_r)
    alt_filter = AltitudeFilter.from_covariances(cfg.altitude_q, cfg.altitude_r)

    noise = _build_noise(cfg, n + 1)
    eta_w, xi_th = noise["omega"], noise["theta"]
    eta_a, xi_y = noise["accel"], noise["gps"]

    cols = {name: np.empty(n + 1) for name in CSV_COLUMNS}
    cols["sat_flags"] = np.zeros(n + 1, dtype=int)

    s = cfg.initial_state
    if variant == "reduced-lateral":
        # driftless approximation: u = 0, longitudinal velocity pinned at
        # the climb rate, thrust pinned at hover
        s = replace(s, u=0.0, v=ref.ydot_d)
    elif variant == "reduced-vertical":
        s = replace(s, u=0.0, theta=0.0, omega=0.0)
    if not s.is_finite():
        raise ValueError("initial state must be finite")

    nav = cfg.navigation
    use_att_loop = variant in ("reduced-lateral", "full-2d")
    use_alt_loop = variant in ("reduced-vertical", "full-2d")
    hover = p.m * p.g
    prev_input = ControlInput(T=hover, gamma=0.0)

    try:
        for k in range(n + 1):
            t = k * dt
            y_d = ref.altitude(t)

            # --- sense (accelerometer reports the acceleration produced by
            # the input active over the previous interval)
            sample = SensorSample(
                omega_m=s.omega + eta_w[k],
                theta_m=s.theta + xi_th[k],
                a_m=vertical_acceleration(s, prev_input, p) + eta_a[k],
                y_m=s.y + xi_y[k],
                x=s.x,
                u=s.u,
            )

            # --- filters
            if nav and use_att_loop:
                theta_hat = att_filter.step(sample.omega_m, sample.theta_m, dt)
                omega_fb = sample.omega_m
            else:
                theta_hat, omega_fb = s.theta, s.omega
            if nav and use_alt_loop:
                y_hat, v_hat = alt_filter.step(sample.a_m, sample.y_m, dt)
            elif variant == "reduced-lateral":
                # altitude is the nominal ramp in this wiring
                y_hat, v_hat = s.y, ref.ydot_d
            else:
                y_hat, v_hat = s.y, s.u * math.sin(s.theta) + s.v * math.cos(s.theta)

            # --- guidance + control laws
            flags = 0
            if use_att_loop:
                theta_d = horizontal_guidance(sample.x, ref, gains.k_x)
                gamma = attitude.step(theta_hat, omega_fb, theta_d, dt)
                if attitude.saturated:
                    flags |= control.FLAG_GAMMA_SAT
            else:
                theta_d, gamma = 0.0, 0.0
            if use_alt_loop:
                T, t_flags = altitude_backstepping(
                    y_hat, v_hat, theta_hat, gamma, t, ref, gains, p
                )
                flags |= t_flags
            else:
                T = hover

            for name, value in (
                ("t", t), ("x", s.x), ("u", s.u), ("y", s.y), ("v", s.v),
                ("theta", s.theta), ("omega", s.omega),
                ("x_d", ref.x_d), ("y_d", y_d), ("theta_d", theta_d),
                ("T", T), ("gamma", gamma),
                ("y_hat", y_hat), ("v_hat", v_hat), ("theta_hat", theta_hat),
                ("y_m", sample.y_m), ("theta_m", sample.theta_m),
                ("omega_m", sample.omega_m), ("a_m", sample.a_m),
            ):
                cols[name][k] = value
            cols["sat_flags"][k] = flags

            if k == n:
                break
            c = ControlInput(T=T, gamma=gamma)
            if variant == "full-2d":
                s = euler_step(s, c, p, dt)
            elif variant == "reduced-lateral":
                s = _reduced_lateral_step(s, c, p, ref, dt)
            else:
                s = _reduced_vertical_step(s, c, p, dt)
            prev_input = c
    except ValueError as exc:
        raise SimulationAbort(f"integration aborted at step {k} (t={k * dt:.6g}s): {exc}") from exc

    trace = SimTrace(config=cfg, **cols)
    x0_err = cfg.initial_state.x - ref.x_d
    if use_att_loop:
        trace.diverged = lateral_divergence(trace.t, trace.x, ref.x_d, x0_err)
    return trace


def _reduced_lateral_step(
    s: PlantState, c: ControlInput, p: RocketParams, ref: TrajectoryRef, dt: float
) -> PlantState:
    """Driftless lateral wiring: x' = -ydot_d sin(theta) plus pitch dynamics."""
    nxt = PlantState(
        x=s.x + dt * (-ref.ydot_d * math.sin(s.theta)),
        u=0.0,
        y=s.y + dt * ref.ydot_d,
        v=ref.ydot_d,
        theta=wrap_angle(s.theta + dt * s.omega),
        omega=s.omega + dt * (p.L * c.T / p.J) * math.sin(c.gamma),
    )
    if not nxt.is_finite():
        raise ValueError(f"non-finite state after step: {nxt}")
    return nxt


def _reduced_vertical_step(
    s: PlantState, c: ControlInput, p: RocketParams, dt: float
) -> PlantState:
    """Vertical-only wiring: y' = v, v' = T/m - g, pitch frozen at zero."""
    nxt = PlantState(
        x=s.x,
        u=0.0,
        y=s.y + dt * s.v,
        v=s.v + dt * (c.T / p.m - p.g),
        theta=0.0,
        omega=0.0,
    )
    if not nxt.is_finite():
        raise ValueError(f"non-finite state after step: {nxt}")
    return nxt


def summarize(trace: SimTrace, transient: float = 10.0) -> dict:
    """Per-run summary: final errors, post-transient stats, flags."""
    cfg = trace.config
    t = trace.t
    window = t >= min(transient, 0.5 * t[-1])
    x_err = trace.x - trace.x_d
    y_err = trace.y - trace.y_d
    summary = {
        "variant": cfg.variant if cfg else "unknown",
        "seed": cfg.seed if cfg else -1,
        "duration": float(t[-1]),
        "dt": float(t[1] - t[0]) if t.size > 1 else 0.0,
        "final_x_err": float(x_err[-1]),
        "final_y_err": float(y_err[-1]),
        "max_abs_y_err_post_transient": float(np.max(np.abs(y_err[window]))),
        "max_abs_x_err": float(np.max(np.abs(x_err))),
        "theta_est_std_deg": float(np.degrees(np.std(trace.theta_hat[window] - trace.theta[window]))),
        "altitude_est_std_m": float(np.std(trace.y_hat[window] - trace.y[window])),
        "gamma_sat_steps": int(np.count_nonzero(trace.sat_flags & control.FLAG_GAMMA_SAT)),
        "thrust_sat_steps": int(np.count_nonzero(trace.sat_flags & control.FLAG_THRUST_SAT)),
        "denom_guard_steps": int(np.count_nonzero(trace.sat_flags & control.FLAG_DENOM_GUARD)),
        "diverged": bool(trace.diverged),
    }
    return summary
