"""Standalone SVG figure rendering for traces and design results.

SVG output is made byte-reproducible: fixed hash salt, no embedded date.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import FrequencyResponse
from .sim import SimTrace

_SVG_RC = {"svg.hashsalt": "rocket2d", "figure.dpi": 100}
_META = {"Date": None}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def bode_svg(responses: list[tuple[str, FrequencyResponse]], path) -> None:
    """Magnitude/phase plot of one or more frequency responses."""
    with plt.rc_context(_SVG_RC):
        fig, (ax_mag, ax_ph) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
        for label, fr in responses:
            ax_mag.semilogx(fr.omega, fr.magnitude_db, label=label)
            ax_ph.semilogx(fr.omega, fr.phase_deg, label=label)
        ax_mag.axhline(0.0, color="k", lw=0.5, ls=":")
        ax_mag.set_ylabel("magnitude [dB]")
        ax_mag.legend()
        ax_mag.grid(True, which="both", alpha=0.3)
        ax_ph.axhline(-180.0, color="k", lw=0.5, ls=":")
        ax_ph.set_xlabel("frequency [rad/s]")
        ax_ph.set_ylabel("phase [deg]")
        ax_ph.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        _save(fig, path)


def step_svg(t: np.ndarray, y: np.ndarray, path, ylabel: str = "pitch [rad]") -> None:
    """Step response with the reference overlaid."""
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(t, y, label="response")
        ax.axhline(1.0, color="k", ls="--", lw=0.8, label="reference")
        ax.set_xlabel("time [s]")
        ax.set_ylabel(ylabel)
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        _save(fig, path)


def trajectory_svg(trace: SimTrace, path) -> None:
    """Position, pitch and actuation histories with reference overlays."""
    with plt.rc_context(_SVG_RC):
        fig, axes = plt.subplots(2, 2, figsize=(10, 7))
        ax = axes[0, 0]
        ax.plot(trace.t, trace.x, label="x")
        ax.plot(trace.t, trace.x_d, "k--", lw=0.8, label="x_d")
        ax.set_ylabel("horizontal position [m]")
        ax = axes[0, 1]
        ax.plot(trace.t, trace.y, label="y")
        ax.plot(trace.t, trace.y_d, "k--", lw=0.8, label="y_d")
        ax.set_ylabel("altitude [m]")
        ax = axes[1, 0]
        ax.plot(trace.t, trace.theta, label="theta")
        ax.plot(trace.t, trace.theta_d, "k--", lw=0.8, label="theta_d")
        ax.set_ylabel("pitch [rad]")
        ax.set_xlabel("time [s]")
        ax = axes[1, 1]
        ax.plot(trace.t, trace.T, label="thrust [N]")
        ax.plot(trace.t, trace.gamma, label="deflection [rad]")
        ax.set_xlabel("time [s]")
        for a in axes.flat:
            a.legend(fontsize=8)
            a.grid(alpha=0.3)
        fig.tight_layout()
        _save(fig, path)


def estimates_svg(trace: SimTrace, path) -> None:
    """Estimated vs true pitch and altitude, plus estimation errors."""
    with plt.rc_context(_SVG_RC):
        fig, axes = plt.subplots(2, 2, figsize=(10, 6))
        ax = axes[0, 0]
        ax.plot(trace.t, trace.theta, label="theta", lw=0.8)
        ax.plot(trace.t, trace.theta_hat, label="theta_hat", lw=0.8)
        ax.set_ylabel("pitch [rad]")
        ax = axes[0, 1]
        ax.plot(trace.t, trace.y, label="y", lw=0.8)
        ax.plot(trace.t, trace.y_hat, label="y_hat", lw=0.8)
        ax.set_ylabel("altitude [m]")
        ax = axes[1, 0]
        ax.plot(trace.t, trace.theta_hat - trace.theta, lw=0.5)
        ax.set_ylabel("pitch error [rad]")
        ax.set_xlabel("time [s]")
        ax = axes[1, 1]
        ax.plot(trace.t, trace.y_hat - trace.y, lw=0.5)
        ax.set_ylabel("altitude error [m]")
        ax.set_xlabel("time [s]")
        for a in axes.flat[:2]:
            a.legend(fontsize=8)
        for a in axes.flat:
            a.grid(alpha=0.3)
        fig.tight_layout()
        _save(fig, path)
