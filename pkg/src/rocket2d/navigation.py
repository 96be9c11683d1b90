"""Steady-state Kalman filters for attitude and altitude.

Both filters are complementary: an inertial channel (rate gyro,
accelerometer) is integrated for short-term accuracy and corrected by an
absolute channel (inclinometer, GPS) that is noisy but unbiased. With
constant gains the attitude observer is

    theta_hat' = omega_m + l (theta_m - theta_hat)

whose measurement paths satisfy F_theta(s) + s F_omega(s) = 1 identically:
whatever the low-pass on the inclinometer removes, the high-passed gyro
path restores. The altitude observer is the two-state analogue driven by
vertical acceleration and GPS altitude, with F_y(s) + s^2 F_a(s) = 1.

Gains come from the stationary filter Riccati equation and have closed
forms for these small models: l = sqrt(q/r) for attitude and
L = [sqrt(2) (q/r)^(1/4), sqrt(q/r)] for altitude, where q is the inertial
(process) covariance and r the absolute-measurement covariance. Horizontal
states bypass navigation entirely and are taken as perfectly known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_OMEGA_GRID = np.logspace(-3, 3, 241)


def attitude_gain(q: float, r: float) -> float:
    """Closed-form stationary gain l = sqrt(q/r)."""
    if q < 0.0 or r <= 0.0:
        raise ValueError("need q >= 0 and r > 0")
    return math.sqrt(q / r)


def altitude_gains(q: float, r: float) -> tuple[float, float]:
    """Closed-form stationary gains (l_y, l_v) = (sqrt(2)(q/r)^1/4, sqrt(q/r))."""
    if q < 0.0 or r <= 0.0:
        raise ValueError("need q >= 0 and r > 0")
    ratio = q / r
    return math.sqrt(2.0) * ratio**0.25, math.sqrt(ratio)


@dataclass
class AttitudeFilter:
    """Scalar pitch observer fusing rate gyro and inclinometer."""

    l: float
    theta_hat: float = 0.0

    def __post_init__(self) -> None:
        if self.l <= 0.0:
            raise ValueError("gain l must be > 0")

    @classmethod
    def from_covariances(cls, q: float, r: float, theta0: float = 0.0) -> "AttitudeFilter":
        return cls(l=attitude_gain(q, r), theta_hat=theta0)

    def reset(self, theta0: float = 0.0) -> None:
        self.theta_hat = theta0

    def step(self, omega_m: float, theta_m: float, dt: float) -> float:
        """Forward-Euler update; returns the new estimate."""
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        self.theta_hat += dt * (omega_m + self.l * (theta_m - self.theta_hat))
        return self.theta_hat

    def error_matrix(self) -> np.ndarray:
        """Observer error dynamics A - LC (here the scalar -l)."""
        return np.array([[-self.l]])


@dataclass
class AltitudeFilter:
    """Altitude/vertical-velocity observer fusing accelerometer and GPS."""

    l_y: float
    l_v: float
    y_hat: float = 0.0
    v_hat: float = 0.0

    def __post_init__(self) -> None:
        if self.l_y <= 0.0 or self.l_v <= 0.0:
            raise ValueError("gains must be > 0")

    @classmethod
    def from_covariances(
        cls, q: float, r: float, y0: float = 0.0, v0: float = 0.0
    ) -> "AltitudeFilter":
        l_y, l_v = altitude_gains(q, r)
        return cls(l_y=l_y, l_v=l_v, y_hat=y0, v_hat=v0)

    def reset(self, y0: float = 0.0, v0: float = 0.0) -> None:
        self.y_hat = y0
        self.v_hat = v0

    def step(self, a_m: float, y_m: float, dt: float) -> tuple[float, float]:
        """Forward-Euler update; returns the new (y_hat, v_hat)."""
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        innov = y_m - self.y_hat
        y_next = self.y_hat + dt * (self.v_hat + self.l_y * innov)
        v_next = self.v_hat + dt * (a_m + self.l_v * innov)
        self.y_hat, self.v_hat = y_next, v_next
        return y_next, v_next

    def error_matrix(self) -> np.ndarray:
        """Observer error dynamics A - LC."""
        return np.array([[-self.l_y, 1.0], [-self.l_v, 0.0]])


def attitude_transfer_functions(l: float, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(F_theta, F_omega) evaluated at complex frequencies s."""
    s = np.asarray(s, dtype=complex)
    return l / (s + l), 1.0 / (s + l)


def altitude_transfer_functions(
    l_y: float, l_v: float, s: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(F_y, F_a) evaluated at complex frequencies s."""
    s = np.asarray(s, dtype=complex)
    den = s**2 + l_y * s + l_v
    return (l_y * s + l_v) / den, 1.0 / den


@dataclass
class IdentityReport:
    """Complementary-filter identity residuals over a frequency grid."""

    omega: np.ndarray
    deviation: np.ndarray
    max_deviation: float = field(init=False)

    def __post_init__(self) -> None:
        self.max_deviation = float(np.max(self.deviation))


def complementary_identity_check(
    filt: AttitudeFilter | AltitudeFilter,
    omega: np.ndarray = DEFAULT_OMEGA_GRID,
) -> IdentityReport:
    """Check that the measurement paths of a filter sum to unity.

    Evaluates F_theta(jw) + jw F_omega(jw) (attitude) or
    F_y(jw) + (jw)^2 F_a(jw) (altitude) over the grid and reports
    |deviation from 1|, which should sit at rounding level for any gains.
    """
    s = 1j * np.asarray(omega, dtype=float)
    if isinstance(filt, AttitudeFilter):
        f_abs, f_inertial = attitude_transfer_functions(filt.l, s)
        total = f_abs + s * f_inertial
    elif isinstance(filt, AltitudeFilter):
        f_abs, f_inertial = altitude_transfer_functions(filt.l_y, filt.l_v, s)
        total = f_abs + s**2 * f_inertial
    else:
        raise TypeError(f"unsupported filter type {type(filt)!r}")
    return IdentityReport(omega=np.asarray(omega, dtype=float), deviation=np.abs(total - 1.0))
