"""Frequency- and time-domain verification tools.

Bode data comes straight from the resolvent, H(jw) = C (jwI - A)^-1 B,
solved point by point; gain margins are read off the negative-real-axis
crossings of the loop response and sharpened by bisection. Step metrics
use the standard definitions (10-90% rise, 2% settling band, overshoot
relative to the final value).

A note on the margin sign convention: the margin is reported as the dB
distance between the loop gain at the phase crossover and unity, together
with the direction of the gain change that destabilizes. For loops that
cross -180 degrees above unity gain (conditionally stable designs like an
integral-augmented triple integrator) the margin is a gain-reduction
margin; its magnitude is what gets quoted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .linmodel import StateSpace
from .sim import SimTrace

DEFAULT_OMEGA_GRID = np.logspace(-2, 3, 400)


@dataclass
class FrequencyResponse:
    """Complex response over a strictly increasing frequency grid."""

    omega: np.ndarray
    H: np.ndarray
    magnitude_db: np.ndarray = field(init=False)
    phase_deg: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.omega = np.asarray(self.omega, dtype=float)
        self.H = np.asarray(self.H, dtype=complex)
        if np.any(np.diff(self.omega) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        self.magnitude_db = 20.0 * np.log10(np.abs(self.H))
        self.phase_deg = np.degrees(np.unwrap(np.angle(self.H)))

    def to_csv(self, path) -> None:
        write_csv(path, {
            "omega": self.omega,
            "real": self.H.real,
            "imag": self.H.imag,
            "magnitude_db": self.magnitude_db,
            "phase_deg": self.phase_deg,
        })


def write_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Column-oriented CSV at 9 significant digits (shared export format)."""
    arrays = [np.asarray(col, dtype=float) for col in columns.values()]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(f"{v:.9g}" for v in row) + "\n")


def frequency_response(
    ss: StateSpace, omega: np.ndarray = DEFAULT_OMEGA_GRID
) -> FrequencyResponse:
    """H(jw) = C (jwI - A)^-1 B per grid point (SISO).

    Grid points where the resolvent is singular (jw an eigenvalue of A)
    are dropped with a warning.
    """
    if ss.n_inputs != 1 or ss.n_outputs != 1:
        raise ValueError("frequency_response expects a SISO system")
    omega = np.asarray(omega, dtype=float)
    n = ss.n_states
    eye = np.eye(n)
    keep: list[int] = []
    values: list[complex] = []
    for i, w in enumerate(omega):
        try:
            sol = np.linalg.solve(1j * w * eye - ss.A, ss.B)
        except np.linalg.LinAlgError:
            warnings.warn(f"resolvent singular at omega={w:.6g}; point dropped", RuntimeWarning)
            continue
        keep.append(i)
        values.append(complex((ss.C @ sol)[0, 0]))
    return FrequencyResponse(omega=omega[keep], H=np.array(values))


def tf_response(num, den, omega: np.ndarray) -> FrequencyResponse:
    """Rational transfer-function evaluation num(jw)/den(jw).

    Independent of the state-space path; used to cross-check it.
    """
    omega = np.asarray(omega, dtype=float)
    s = 1j * omega
    return FrequencyResponse(omega=omega, H=np.polyval(num, s) / np.polyval(den, s))


@dataclass
class GainMargin:
    """Gain margin at the -180 degree phase crossover.

    gm_db is the magnitude of the dB gain change that reaches unity loop
    gain at the crossover; direction says which way destabilizes
    ("increase" when |L| < 1 there, "reduction" when |L| > 1).
    crossover_gain_db is the signed loop gain 20 log10 |L(j w_pc)|.
    """

    gm_db: float
    omega_pc: float
    crossover_gain_db: float
    direction: str

    @property
    def infinite(self) -> bool:
        return math.isinf(self.gm_db)


def _loop_evaluator(loop):
    if isinstance(loop, StateSpace):
        n = loop.n_states
        eye = np.eye(n)

        def evaluate(w: float) -> complex:
            return complex((loop.C @ np.linalg.solve(1j * w * eye - loop.A, loop.B))[0, 0])

    else:
        num, den = loop

        def evaluate(w: float) -> complex:
            s = 1j * w
            return complex(np.polyval(num, s) / np.polyval(den, s))

    return evaluate


def gain_margin(loop, omega: np.ndarray = DEFAULT_OMEGA_GRID) -> GainMargin:
    """Locate the -180 degree crossover of a SISO loop and report margin.

    The loop may be a StateSpace or a (num, den) polynomial pair. The
    crossover is a sign change of Im L(jw) with Re L < 0, refined by
    bisection to 1e-6 relative frequency accuracy. Without any crossover
    on the grid the margin is reported infinite (not an error). With
    several crossovers the one closest to unity gain governs.
    """
    evaluate = _loop_evaluator(loop)
    omega = np.asarray(omega, dtype=float)
    L = np.array([evaluate(w) for w in omega])
    crossings: list[float] = []
    im_sign = np.sign(L.imag)
    for i in range(omega.size - 1):
        if im_sign[i] == 0.0:
            if L.real[i] < 0.0:
                crossings.append(omega[i])
            continue
        if im_sign[i] * im_sign[i + 1] < 0.0 and (L.real[i] < 0.0 or L.real[i + 1] < 0.0):
            lo, hi = omega[i], omega[i + 1]
            f_lo = evaluate(lo).imag
            while (hi - lo) > 1e-6 * hi:
                mid = math.sqrt(lo * hi)
                f_mid = evaluate(mid).imag
                if f_lo * f_mid <= 0.0:
                    hi = mid
                else:
                    lo, f_lo = mid, f_mid
            w_pc = math.sqrt(lo * hi)
            if evaluate(w_pc).real < 0.0:
                crossings.append(w_pc)
    if not crossings:
        return GainMargin(gm_db=math.inf, omega_pc=math.nan, crossover_gain_db=-math.inf,
                          direction="infinite")
    best = min(crossings, key=lambda w: abs(20.0 * math.log10(abs(evaluate(w)))))
    gain_db = 20.0 * math.log10(abs(evaluate(best)))
    return GainMargin(
        gm_db=abs(gain_db),
        omega_pc=best,
        crossover_gain_db=gain_db,
        direction="reduction" if gain_db > 0.0 else "increase",
    )


@dataclass
class StepMetrics:
    """Time-domain step metrics, all non-negative."""

    rise_time: float
    settling_time: float
    overshoot_pct: float
    steady_state_error: float


def step_response(ss: StateSpace, duration: float = 20.0, dt: float = 1e-3):
    """Unit-step response of a SISO StateSpace (exact ZOH discretization).

    Returns (t, y). The discrete recurrence uses the matrix exponential of
    the augmented [A B; 0 0] block, so there is no integration error to
    tune against the metrics.
    """
    if ss.n_inputs != 1 or ss.n_outputs != 1:
        raise ValueError("step_response expects a SISO system")
    n = ss.n_states
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = ss.A * dt
    aug[:n, n] = ss.B[:, 0] * dt
    md = expm(aug)
    Ad, Bd = md[:n, :n], md[:n, n]
    steps = int(round(duration / dt))
    x = np.zeros(n)
    y = np.empty(steps + 1)
    y[0] = 0.0
    for k in range(steps):
        x = Ad @ x + Bd
        y[k + 1] = ss.C[0] @ x
    return np.arange(steps + 1) * dt, y


def step_metrics(t: np.ndarray, y: np.ndarray, reference: float = 1.0) -> StepMetrics:
    """Metrics of a recorded step response.

    The final value is the mean of the last 10% of samples; the trace must
    already have settled there (every sample of that tail inside the 2%
    band), otherwise a ValueError names the violation. A constant trace
    has zero rise time and zero overshoot by convention.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tail = y[int(0.9 * y.size):]
    final = float(np.mean(tail))
    band = 0.02 * max(abs(final), 1e-12)
    worst = float(np.max(np.abs(tail - final)))
    if worst > band:
        raise ValueError(
            f"trace not settled: tail deviates {worst:.3e} from {final:.6g}, band {band:.3e}"
        )
    span = final - y[0]
    if abs(span) < 1e-15:  # constant signal
        return StepMetrics(0.0, 0.0, 0.0, abs(reference - final))

    def first_crossing(level: float) -> float:
        idx = np.nonzero((y - y[0]) / span >= level)[0]
        return float(t[idx[0]]) if idx.size else float(t[-1])

    rise = first_crossing(0.9) - first_crossing(0.1)
    outside = np.nonzero(np.abs(y - final) > band)[0]
    settling = float(t[outside[-1] + 1]) if outside.size and outside[-1] + 1 < t.size else 0.0
    peak = float(np.max((y - y[0]) / span))
    overshoot = max(0.0, (peak - 1.0) * 100.0)
    return StepMetrics(
        rise_time=max(rise, 0.0),
        settling_time=settling,
        overshoot_pct=overshoot,
        steady_state_error=abs(reference - final),
    )


def error_stats(
    trace: SimTrace, true_field: str, estimate_field: str, discard: float = 10.0
) -> tuple[float, float]:
    """Mean and std of (estimate - truth) after an initial transient."""
    t = trace.t
    if t[-1] <= discard:
        raise ValueError(f"trace ({t[-1]:.3g}s) shorter than discard window ({discard:.3g}s)")
    window = t >= discard
    err = trace.column(estimate_field)[window] - trace.column(true_field)[window]
    return float(np.mean(err)), float(np.std(err))
