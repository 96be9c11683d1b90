#!/usr/bin/env python3
"""Sweep the horizontal guidance gain and chart the lateral instability.

The guidance law is designed on driftless kinematics (u ~ 0), but the full
plant drifts: tilting to translate also accelerates the lateral body
velocity, which the outer loop never sees. Closing the loop on the full
model therefore moves a complex pole pair into the right half plane for
every k_x > 0. This script quantifies that: for each gain it reports the
unstable pair of the linearized lateral closed loop and whether the
nonlinear 60 s run trips the divergence detector, then renders the
trajectories side by side.

Usage: python scripts/lateral_divergence_study.py [out_dir]
"""

import os
import sys

import numpy as np

from rocket2d.control import GuidanceGains
from rocket2d.linmodel import attitude_extended_model
from rocket2d.plant import RocketParams
from rocket2d.riccati import lqr_gain
from rocket2d.sim import ScenarioConfig, run_scenario


def lateral_closed_loop_eigs(k_x: float, params: RocketParams, ydot_d: float) -> np.ndarray:
    """Eigenvalues of the drift-coupled lateral loop (x, u, theta, omega, zeta)."""
    K = lqr_gain(attitude_extended_model(params), np.diag([100.0, 5.0, 1000.0]), [[100.0]])
    k_p, k_d, k_i = K[0, 0], K[0, 1], -K[0, 2]
    g, b = params.g, params.L * params.m * params.g / params.J
    A = np.array([
        [0.0, 1.0, -ydot_d, 0.0, 0.0],
        [0.0, 0.0, -g * (1.0 + k_p), ydot_d - g * k_d, g * k_i],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -b * k_p, -b * k_d, b * k_i],
        [k_x / ydot_d, 0.0, -1.0, 0.0, 0.0],
    ])
    return np.linalg.eigvals(A)


def main(out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    params = RocketParams()
    traces = []
    print(f"{'k_x':>6}  {'unstable pair':>24}  {'max |x err| [m]':>16}  diverged")
    for k_x in (0.005, 0.01, 0.05, 0.1):
        eigs = lateral_closed_loop_eigs(k_x, params, ydot_d=2.0)
        unstable = eigs[np.argmax(eigs.real)]
        cfg = ScenarioConfig(guidance=GuidanceGains(k_x=k_x), seed=1, duration=60.0)
        trace = run_scenario(cfg)
        traces.append((k_x, trace))
        max_err = np.max(np.abs(trace.x - trace.x_d))
        print(f"{k_x:6.3f}  {unstable.real:+10.4f}{unstable.imag:+10.4f}j  "
              f"{max_err:16.2f}  {trace.diverged}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 5))
    for k_x, trace in traces:
        ax.plot(trace.t, trace.x, label=f"k_x = {k_x}")
    ax.axhline(2.0, color="k", ls="--", lw=0.8, label="target")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("horizontal position [m]")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "lateral_divergence_sweep.svg")
    fig.savefig(path, format="svg", metadata={"Date": None})
    print(f"figure written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else "results/divergence"))
