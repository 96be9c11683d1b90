"""Control and navigation testbed for a planar thrust-vectored rocket.

Subpackage map: plant (nonlinear dynamics), linmodel (trim and Jacobians),
riccati (CARE solver, LQR/Kalman gains), control (pitch LQR, Lyapunov
guidance, backstepping thrust), navigation (steady-state Kalman filters),
sim (fixed-step closed-loop engine), analysis (Bode/margins/step/stats),
plots (SVG figures), cli (command-line front end).
"""

from .control import AttitudeRegulator, GuidanceGains, TrajectoryRef
from .linmodel import StateSpace, TrimPoint, attitude_extended_model, jacobian_linearize
from .navigation import AltitudeFilter, AttitudeFilter
from .plant import ControlInput, PlantState, RocketParams
from .riccati import CareProblem, kalman_gain, lqr_gain, solve_care
from .sim import ScenarioConfig, SensorSample, SimTrace, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AttitudeRegulator",
    "GuidanceGains",
    "TrajectoryRef",
    "StateSpace",
    "TrimPoint",
    "attitude_extended_model",
    "jacobian_linearize",
    "AltitudeFilter",
    "AttitudeFilter",
    "ControlInput",
    "PlantState",
    "RocketParams",
    "CareProblem",
    "kalman_gain",
    "lqr_gain",
    "solve_care",
    "ScenarioConfig",
    "SensorSample",
    "SimTrace",
    "run_scenario",
    "__version__",
]
