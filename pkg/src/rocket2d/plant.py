"""Nonlinear planar dynamics of a small thrust-vectored rocket.

The vehicle moves in a vertical plane. Position (x, y) lives in the
inertial frame with origin at the ground; the velocity (u, v) is expressed
in the body frame, with v along the longitudinal axis. The single thruster
sits L meters below the centre of mass and can be deflected by an angle
gamma, so the thrust vector both accelerates and torques the body.

State (x, u, y, v, theta, omega) evolves as

    x'     = u cos(theta) - v sin(theta)
    u'     = v omega - g sin(theta) + (T/m) sin(gamma)
    y'     = u sin(theta) + v cos(theta)
    v'     = -u omega - g cos(theta) + (T/m) cos(gamma)
    theta' = omega
    omega' = (L T / J) sin(gamma)

with inputs T (thrust magnitude) and gamma (deflection). Aerodynamics and
actuator dynamics are neglected; the thrust response is idealized as
immediate. The system is underactuated: two inputs drive three degrees of
freedom, and the only way to accelerate sideways is to tilt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

GRAVITY = 9.81  # m/s^2


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class RocketParams:
    """Physical constants of the vehicle.

    The defaults describe a 2 kg solid-cylinder prototype, 1.5 m long,
    with the thruster arm 0.5 m below the centre of mass. The inertia of
    a thin cylinder about its transverse axis is m*L_b^2/12.

    T_max and gamma_max are implementation policy, not physics: the
    actuator itself has no documented limits, so generous bounds are used
    to keep transients physical. Both are configurable.
    """

    m: float = 2.0        # mass [kg]
    L: float = 0.5        # thrust arm below CoM [m]
    L_b: float = 1.5      # body length [m]
    J: float = 0.375      # moment of inertia [kg m^2]
    g: float = GRAVITY    # gravity [m/s^2]
    T_max: float = 4.0 * 2.0 * GRAVITY  # thrust saturation [N]
    gamma_max: float = math.pi / 2.0    # deflection saturation [rad]

    def __post_init__(self) -> None:
        for name in ("m", "L", "L_b", "J", "g", "T_max", "gamma_max"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"RocketParams.{name} must be finite and > 0, got {value!r}")
        if self.T_max < self.m * self.g:
            raise ValueError(
                f"T_max={self.T_max} cannot sustain hover (m*g={self.m * self.g})"
            )

    @classmethod
    def from_geometry(
        cls,
        m: float = 2.0,
        L: float = 0.5,
        L_b: float = 1.5,
        g: float = GRAVITY,
        T_max: float | None = None,
        gamma_max: float = math.pi / 2.0,
    ) -> "RocketParams":
        """Build params with J = m*L_b^2/12 and T_max defaulting to 4*m*g."""
        J = m * L_b**2 / 12.0
        if T_max is None:
            T_max = 4.0 * m * g
        return cls(m=m, L=L, L_b=L_b, J=J, g=g, T_max=T_max, gamma_max=gamma_max)

    @property
    def hover_thrust(self) -> float:
        return self.m * self.g


@dataclass
class PlantState:
    """Six-state vector in mixed frames.

    x, y are inertial position; u, v are body-frame velocity (lateral,
    longitudinal); theta is pitch, omega its rate. The same container is
    reused for state derivatives, where each slot is the per-second rate
    of the matching state.
    """

    x: float = 0.0
    u: float = 0.0
    y: float = 0.0
    v: float = 0.0
    theta: float = 0.0
    omega: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.x, self.u, self.y, self.v, self.theta, self.omega)

    def is_finite(self) -> bool:
        return all(math.isfinite(s) for s in self.as_tuple())

    def wrapped(self) -> "PlantState":
        """Copy with theta wrapped to (-pi, pi]."""
        return PlantState(self.x, self.u, self.y, self.v, wrap_angle(self.theta), self.omega)


@dataclass(frozen=True)
class ControlInput:
    """Thrust magnitude T [N] and deflection gamma [rad].

    The torque L*T*sin(gamma) is derived where needed, never stored.
    """

    T: float
    gamma: float

    def is_finite(self) -> bool:
        return math.isfinite(self.T) and math.isfinite(self.gamma)

    def check_bounds(self, params: RocketParams) -> None:
        if not (0.0 <= self.T <= params.T_max):
            raise ValueError(f"thrust {self.T} outside [0, {params.T_max}]")
        if abs(self.gamma) > params.gamma_max:
            raise ValueError(f"deflection {self.gamma} outside +/-{params.gamma_max}")


def rotation_matrix(theta: float):
    """2-D rotation matrix from the body frame to the inertial frame.

    Returns [[cos t, -sin t], [sin t, cos t]] as a 2x2 ndarray.
    """
    import numpy as np

    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def dynamics_derivative(s: PlantState, c: ControlInput, p: RocketParams) -> PlantState:
    """Evaluate the six state derivatives at (s, c).

    Pure and deterministic: identical inputs give bit-identical outputs.
    Raises ValueError on non-finite state or input.
    """
    if not s.is_finite():
        raise ValueError(f"non-finite plant state: {s}")
    if not c.is_finite():
        raise ValueError(f"non-finite control input: {c}")
    sin_t, cos_t = math.sin(s.theta), math.cos(s.theta)
    sin_g, cos_g = math.sin(c.gamma), math.cos(c.gamma)
    thrust_accel = c.T / p.m
    return PlantState(
        x=s.u * cos_t - s.v * sin_t,
        u=s.v * s.omega - p.g * sin_t + thrust_accel * sin_g,
        y=s.u * sin_t + s.v * cos_t,
        v=-s.u * s.omega - p.g * cos_t + thrust_accel * cos_g,
        theta=s.omega,
        omega=p.L * c.T / p.J * sin_g,
    )


def vertical_acceleration(s: PlantState, c: ControlInput, p: RocketParams) -> float:
    """Inertial vertical acceleration y'' = (T/m) cos(gamma - theta) - g.

    This is what an ideal on-board accelerometer resolves along the
    vertical axis; it follows from differentiating y' = u sin(theta) +
    v cos(theta) and substituting the dynamics.
    """
    return c.T / p.m * math.cos(c.gamma - s.theta) - p.g
