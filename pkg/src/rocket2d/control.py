"""Control laws: LQR pitch regulator, Lyapunov guidance, backstepping thrust.

The architecture is layered. An inner LQR-with-integral loop tracks pitch
references through the thrust deflection; it is fast enough that the outer
horizontal loop may treat theta ~ theta_d. The outer loop inverts the
driftless lateral kinematics x' = -ydot_d sin(theta): choosing
theta_d = arcsin(k_x (x - x_d) / ydot_d) renders V = x_err^2/2 a Lyapunov
function with V' = -k_x x_err^2. Altitude runs an independent backstepping
design on the error chain a1 = y - y_d, a2 = y' - y_d'; with the virtual
law (a2)_d = -k1 a1 and a2_err = a2 + k1 a1, the thrust

    T = m (g - k1 a2 - k2 a2_err) / cos(gamma - theta)

makes V2 = a1^2/2 + a2_err^2/2 decrease as -k1 a1^2 - k2 a2_err^2, so both
the altitude error and its rate converge, which is what keeps a ramp
reference tracked without lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linmodel import attitude_extended_model
from .plant import RocketParams
from .riccati import lqr_gain

# Saturation flag bits recorded per simulation step.
FLAG_GAMMA_SAT = 1
FLAG_THRUST_SAT = 2
FLAG_DENOM_GUARD = 4

# Thrust law denominator guard: below this |cos(gamma - theta)| the commanded
# thrust would blow up, so the denominator is clamped and flagged instead.
DENOM_GUARD = 0.1


@dataclass(frozen=True)
class GuidanceGains:
    """Outer-loop gains: k_x for horizontal guidance, (k_1, k_2) for the
    backstepping altitude tracker. All must be strictly positive."""

    k_x: float = 0.5
    k_1: float = 2.0
    k_2: float = 1.0

    def __post_init__(self) -> None:
        for name in ("k_x", "k_1", "k_2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class TrajectoryRef:
    """Target: hold x at x_d while climbing at constant ydot_d.

    The altitude reference is the ramp y_d(t) = ydot_d * t (zero jerk
    demand, y_d'' = 0). ydot_d must be nonzero: the guidance law divides
    by it.
    """

    x_d: float = 2.0
    ydot_d: float = 2.0

    def __post_init__(self) -> None:
        if self.ydot_d == 0.0:
            raise ValueError("ydot_d must be nonzero")

    def altitude(self, t: float) -> float:
        return self.ydot_d * t


class AttitudeRegulator:
    """Pitch regulator: full-state feedback plus integral tracking error.

    The deflection command is

        dgamma = -k_p theta - k_d omega + k_i zeta,
        zeta'  = theta_d - theta,

    i.e. the reference enters only through the integrator channel; the
    proportional and derivative terms regulate deviations about the trim
    pitch of zero. Set ``proportional_on_reference`` to feed theta_d into
    the proportional term too (useful for experiments; off by default).

    The command is evaluated with the current integrator state, then the
    integrator advances - and it is frozen while the output saturates so
    that it cannot wind up beyond the deflection the actuator can deliver.
    """

    def __init__(
        self,
        K: np.ndarray,
        params: RocketParams,
        gamma_max: float | None = None,
        proportional_on_reference: bool = False,
    ):
        K = np.asarray(K, dtype=float).reshape(-1)
        if K.shape != (3,):
            raise ValueError(f"K must have 3 entries, got {K.shape}")
        model = attitude_extended_model(params)
        closed = model.A - model.B @ K.reshape(1, 3)
        if np.linalg.eigvals(closed).real.max() >= 0.0:
            raise ValueError(f"gain {K} does not stabilize the extended pitch model")
        self.K = K
        self.k_p, self.k_d = float(K[0]), float(K[1])
        self.k_i = float(-K[2])
        self.gamma_max = params.gamma_max if gamma_max is None else gamma_max
        self.proportional_on_reference = proportional_on_reference
        self.zeta = 0.0
        self.saturated = False

    @classmethod
    def from_weights(
        cls,
        params: RocketParams,
        Q: np.ndarray,
        R: np.ndarray,
        **kwargs,
    ) -> "AttitudeRegulator":
        """Design K by LQR on the integral-extended pitch model."""
        K = lqr_gain(attitude_extended_model(params), Q, R)
        return cls(K[0], params, **kwargs)

    def reset(self, zeta: float = 0.0) -> None:
        self.zeta = zeta
        self.saturated = False

    def step(self, theta: float, omega: float, theta_d: float, dt: float) -> float:
        """Return the deflection command and advance the integrator."""
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        p_err = theta - theta_d if self.proportional_on_reference else theta
        dgamma = -self.k_p * p_err - self.k_d * omega + self.k_i * self.zeta
        if abs(dgamma) > self.gamma_max:
            self.saturated = True
            return math.copysign(self.gamma_max, dgamma)
        self.saturated = False
        self.zeta += (theta_d - theta) * dt
        return dgamma


def horizontal_guidance(x: float, ref: TrajectoryRef, k_x: float) -> float:
    """Pitch reference from the horizontal position error.

    theta_d = arcsin(k_x (x - x_d) / ydot_d), with the argument clamped to
    [-1, 1]: the exact law is only defined while k_x |x_err| <= |ydot_d|,
    and clamping saturates the demand at +/-pi/2 instead of failing.
    """
    arg = k_x * (x - ref.x_d) / ref.ydot_d
    return math.asin(min(1.0, max(-1.0, arg)))


def altitude_backstepping(
    y: float,
    ydot: float,
    theta: float,
    gamma: float,
    t: float,
    ref: TrajectoryRef,
    gains: GuidanceGains,
    params: RocketParams,
) -> tuple[float, int]:
    """Backstepping thrust command; returns (T, saturation flags).

    T = m (g - k1 a2 - k2 a2_err) / cos(gamma - theta) with a2 = ydot -
    ydot_d and a2_err = a2 + k1 (y - y_d). Near the singular geometry
    |cos(gamma - theta)| < 0.1 the denominator is clamped (flagged
    FLAG_DENOM_GUARD); the result is clamped to [0, T_max] (flagged
    FLAG_THRUST_SAT).
    """
    flags = 0
    a2 = ydot - ref.ydot_d
    a2_err = a2 + gains.k_1 * (y - ref.altitude(t))
    den = math.cos(gamma - theta)
    if abs(den) < DENOM_GUARD:
        den = DENOM_GUARD if den >= 0.0 else -DENOM_GUARD
        flags |= FLAG_DENOM_GUARD
    T = params.m * (params.g - gains.k_1 * a2 - gains.k_2 * a2_err) / den
    if T < 0.0:
        T = 0.0
        flags |= FLAG_THRUST_SAT
    elif T > params.T_max:
        T = params.T_max
        flags |= FLAG_THRUST_SAT
    return T, flags


# ---------------------------------------------------------------------------
# Lyapunov certificates
# ---------------------------------------------------------------------------


@dataclass
class ClfReport:
    """Evaluation of one candidate Lyapunov function along a trace."""

    name: str
    values: np.ndarray
    band: float
    max_increase: float = field(init=False)
    non_increasing: bool = field(init=False)

    def __post_init__(self) -> None:
        steps = np.diff(self.values)
        self.max_increase = float(steps.max()) if steps.size else 0.0
        self.non_increasing = bool(self.max_increase <= self.band)


def _report(name: str, values: np.ndarray, band: float | None = None) -> ClfReport:
    values = np.asarray(values, dtype=float)
    if band is None:
        band = 1e-9 * max(1.0, float(values.max(initial=0.0)))
    return ClfReport(name=name, values=values, band=band)


def lyapunov_certificates(trace) -> list[ClfReport]:
    """Evaluate the design CLFs along a simulation trace.

    Reports V = x_err^2/2 for variants with lateral motion and
    V1 = a1^2/2, V2 = V1 + a2_err^2/2 for variants with altitude motion,
    each with a verdict on whether it is non-increasing outside a small
    numerical band. V1 alone is not expected to be monotone (the
    backstepping argument only bounds V2); it is reported for inspection.
    """
    cfg = trace.config
    if cfg is None:
        raise ValueError("trace carries no config; cannot identify references/gains")
    ref, gains = cfg.ref, cfg.guidance
    reports: list[ClfReport] = []
    if cfg.variant in ("reduced-lateral", "full-2d"):
        x_err = trace.x - ref.x_d
        reports.append(_report("V_lateral", 0.5 * x_err**2))
    if cfg.variant in ("reduced-vertical", "full-2d"):
        y_d = ref.ydot_d * trace.t
        a1 = trace.y - y_d
        ydot = trace.u * np.sin(trace.theta) + trace.v * np.cos(trace.theta)
        a2_err = (ydot - ref.ydot_d) + gains.k_1 * a1
        reports.append(_report("V1_altitude", 0.5 * a1**2))
        reports.append(_report("V2_altitude", 0.5 * a1**2 + 0.5 * a2_err**2))
    return reports


def ideal_lateral_trajectory(
    x0: float, ref: TrajectoryRef, k_x: float, dt: float, duration: float
) -> np.ndarray:
    """Horizontal error under a perfect inner loop (theta == theta_d).

    Integrates x' = -ydot_d sin(theta_d(x)), the reduced model behind the
    guidance design, and returns the x - x_d series. Inside the clamp
    region this is exactly x_err' = -k_x x_err.
    """
    n = int(round(duration / dt))
    x = x0
    x_err = np.empty(n + 1)
    x_err[0] = x - ref.x_d
    for k in range(n):
        theta_d = horizontal_guidance(x, ref, k_x)
        x += dt * (-ref.ydot_d * math.sin(theta_d))
        x_err[k + 1] = x - ref.x_d
    return x_err
