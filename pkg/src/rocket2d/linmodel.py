"""Linear models about steady vertical flight.

Two things live here: the hand-derived Jacobian of the full six-state
dynamics at an arbitrary operating point, and the small integral-extended
pitch model used for attitude gain design. At the vertical-flight trim the
Jacobian splits into a lateral block (x, u, theta, omega), driven by the
thrust deflection, and a longitudinal block (y, v), driven by the thrust
magnitude; the split is what makes independent controller design per axis
defensible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .plant import ControlInput, PlantState, RocketParams, dynamics_derivative

STATE_LABELS = ("x", "u", "y", "v", "theta", "omega")
INPUT_LABELS = ("T", "gamma")


@dataclass
class StateSpace:
    """(A, B, C) triple with named states/inputs/outputs."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    state_labels: tuple[str, ...] = ()
    input_labels: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B has {self.B.shape[0]} rows, expected {n}")
        if self.C.shape[1] != n:
            raise ValueError(f"C has {self.C.shape[1]} columns, expected {n}")
        for name, mat in (("A", self.A), ("B", self.B), ("C", self.C)):
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class TrimPoint:
    """Steady vertical climb: x held at x_d, y ramping at ydot_d.

    The nominal state at time t is (x_d, 0, ydot_d*t, ydot_d, 0, 0) and the
    nominal input is (m*g, 0); every deviation rate vanishes there.
    """

    x_d: float
    ydot_d: float
    params: RocketParams = field(default_factory=RocketParams)

    def state_at(self, t: float = 0.0) -> PlantState:
        return PlantState(x=self.x_d, u=0.0, y=self.ydot_d * t, v=self.ydot_d, theta=0.0, omega=0.0)

    @property
    def u_star(self) -> ControlInput:
        return ControlInput(T=self.params.m * self.params.g, gamma=0.0)


def attitude_extended_model(p: RocketParams) -> StateSpace:
    """Integral-extended pitch model used for LQR design.

    About trim the pitch dynamics reduce to a double integrator
    theta'' = (L m g / J) * dgamma. Appending the integrated tracking
    error zeta' = theta_d - theta (reference entering separately) gives a
    triple integrator in state (dtheta, domega, zeta); the memory state is
    what forces zero steady-state pitch error.
    """
    b = p.L * p.m * p.g / p.J
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    B = np.array([[0.0], [b], [0.0]])
    C = np.array([[1.0, 0.0, 0.0]])
    return StateSpace(
        A, B, C,
        state_labels=("dtheta", "domega", "zeta_theta"),
        input_labels=("dgamma",),
        output_labels=("dtheta",),
    )


def jacobian_linearize(s0: PlantState, c0: ControlInput, p: RocketParams) -> StateSpace:
    """Analytic Jacobian of the full dynamics at (s0, c0).

    Partials are hand-derived from the six equations, so there is no step
    size to tune; finite differences are kept for the test oracle only.
    C is identity (full state output).
    """
    if not (s0.is_finite() and c0.is_finite()):
        raise ValueError("linearization point must be finite")
    sin_t, cos_t = math.sin(s0.theta), math.cos(s0.theta)
    sin_g, cos_g = math.sin(c0.gamma), math.cos(c0.gamma)
    u, v, omega, T = s0.u, s0.v, s0.omega, c0.T
    m, L, J, g = p.m, p.L, p.J, p.g

    A = np.zeros((6, 6))
    # x' = u cos t - v sin t
    A[0, 1] = cos_t
    A[0, 3] = -sin_t
    A[0, 4] = -u * sin_t - v * cos_t
    # u' = v w - g sin t + (T/m) sin gm
    A[1, 3] = omega
    A[1, 4] = -g * cos_t
    A[1, 5] = v
    # y' = u sin t + v cos t
    A[2, 1] = sin_t
    A[2, 3] = cos_t
    A[2, 4] = u * cos_t - v * sin_t
    # v' = -u w - g cos t + (T/m) cos gm
    A[3, 1] = -omega
    A[3, 4] = g * sin_t
    A[3, 5] = -u
    # theta' = w
    A[4, 5] = 1.0
    # omega' = (L T / J) sin gm  (no state dependence)

    B = np.zeros((6, 2))
    B[1, 0] = sin_g / m
    B[1, 1] = T / m * cos_g
    B[3, 0] = cos_g / m
    B[3, 1] = -T / m * sin_g
    B[5, 0] = L / J * sin_g
    B[5, 1] = L * T / J * cos_g

    return StateSpace(
        A, B, np.eye(6),
        state_labels=STATE_LABELS,
        input_labels=INPUT_LABELS,
        output_labels=STATE_LABELS,
    )


def controllability_matrix(ss: StateSpace) -> np.ndarray:
    """[B, AB, ..., A^(n-1) B]."""
    n = ss.n_states
    blocks = [ss.B]
    for _ in range(n - 1):
        blocks.append(ss.A @ blocks[-1])
    return np.hstack(blocks)


def controllability_rank(ss: StateSpace) -> int:
    """Numerical rank of the controllability matrix.

    Uses the SVD with tolerance n * eps * sigma_max, the standard
    rank-revealing cutoff.
    """
    ctrb = controllability_matrix(ss)
    sigma = np.linalg.svd(ctrb, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    tol = max(ctrb.shape) * np.finfo(float).eps * sigma[0]
    return int(np.sum(sigma > tol))


def trim_derivative_check(trim: TrimPoint, t: float = 0.0) -> PlantState:
    """Derivative at the trim point; (u,v,theta,omega) rates must be zero."""
    return dynamics_derivative(trim.state_at(t), trim.u_star, trim.params)
