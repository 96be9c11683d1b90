"""Continuous-time algebraic Riccati equation (CARE) solver and gain synthesis.

Solves A'P + P A - P B R^-1 B' P + Q = 0 for the stabilizing P >= 0 via the
ordered real Schur decomposition of the 2n x 2n Hamiltonian matrix: the
columns of the orthogonal factor spanning the stable invariant subspace give
P = Z21 Z11^-1. When the subspace extraction is ill-conditioned the solution
is refined by Newton-Kleinman iteration (each step a Lyapunov solve). The
same routine powers both LQR state-feedback design (K = R^-1 B' P) and
steady-state Kalman gain synthesis through duality (L = P C' R^-1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur, solve_continuous_lyapunov

from .linmodel import StateSpace

__all__ = [
    "CareProblem",
    "CareSolverError",
    "CareConvergenceError",
    "solve_care",
    "care_residual",
    "lqr_gain",
    "kalman_gain",
]

_RESIDUAL_RTOL = 1e-8
_NEWTON_MAX_ITER = 50


class CareSolverError(RuntimeError):
    """Raised when no stabilizing CARE solution can be extracted."""


class CareConvergenceError(CareSolverError):
    """Raised when Newton refinement hits the iteration limit; the message
    carries the last residual."""


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass
class CareProblem:
    """Data for A'P + PA - P B R^-1 B' P + Q = 0.

    Parameters
    ----------
    A : (n, n) array
        System matrix.
    B : (n, m) array
        Input matrix (or C' for the dual filter problem).
    Q : (n, n) array
        Symmetric positive-semidefinite state weight / process covariance.
    R : (m, m) array
        Symmetric positive-definite input weight / measurement covariance.

    Construction validates symmetry and definiteness and runs PBH rank
    tests at every eigenvalue of A with nonnegative real part; a failed
    stabilizability or detectability test emits a warning (the solve is
    still attempted and fails cleanly if genuinely impossible).
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        n = self.A.shape[0]
        m = self.B.shape[1]
        if self.A.shape != (n, n) or self.B.shape != (n, m):
            raise ValueError(f"inconsistent shapes A{self.A.shape} B{self.B.shape}")
        if self.Q.shape != (n, n) or self.R.shape != (m, m):
            raise ValueError(f"inconsistent shapes Q{self.Q.shape} R{self.R.shape}")
        for name, M in (("Q", self.Q), ("R", self.R)):
            if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
        q_eigs = np.linalg.eigvalsh(self.Q)
        if q_eigs.min() < -1e-10 * max(1.0, abs(q_eigs.max())):
            raise ValueError("Q must be positive semidefinite")
        r_eigs = np.linalg.eigvalsh(self.R)
        if r_eigs.min() <= 0.0:
            raise ValueError("R must be positive definite")
        self._pbh_warnings()

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def _pbh_warnings(self) -> None:
        n = self.n
        for lam in np.linalg.eigvals(self.A):
            if lam.real < -1e-12:
                continue
            pencil = np.hstack([lam * np.eye(n) - self.A, self.B.astype(complex)])
            if np.linalg.matrix_rank(pencil) < n:
                warnings.warn(
                    f"(A, B) fails the PBH stabilizability test at eigenvalue {lam:.6g}; "
                    "attempting best-effort solve",
                    RuntimeWarning,
                    stacklevel=3,
                )
        # Detectability of (A, Q^1/2): modes invisible to Q with Re >= 0
        # leave the solution non-unique.
        q_eigs, q_vecs = np.linalg.eigh(self.Q)
        Qhalf = q_vecs @ np.diag(np.sqrt(np.clip(q_eigs, 0.0, None))) @ q_vecs.T
        for lam in np.linalg.eigvals(self.A):
            if lam.real < -1e-12:
                continue
            pencil = np.vstack([lam * np.eye(n) - self.A, Qhalf.astype(complex)])
            if np.linalg.matrix_rank(pencil) < n:
                warnings.warn(
                    f"(A, Q^1/2) fails the PBH detectability test at eigenvalue {lam:.6g}",
                    RuntimeWarning,
                    stacklevel=3,
                )


def care_residual(prob: CareProblem, P: np.ndarray) -> float:
    """Frobenius norm of A'P + PA - P B R^-1 B' P + Q."""
    A, B, Q, R = prob.A, prob.B, prob.Q, prob.R
    res = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    return float(np.linalg.norm(res, "fro"))


def _newton_kleinman(prob: CareProblem, P0: np.ndarray) -> np.ndarray:
    """Refine a stabilizing iterate by Newton-Kleinman sweeps.

    Each sweep solves the closed-loop Lyapunov equation and converges
    quadratically near the solution, so a couple of sweeps polish the
    Schur extraction to rounding level even for badly scaled weights.
    Sweeps stop once the residual reaches rounding level or stalls.
    """
    A, B, Q, R = prob.A, prob.B, prob.Q, prob.R
    P = P0
    res = care_residual(prob, P)
    for _ in range(_NEWTON_MAX_ITER):
        scale = 1.0 + np.linalg.norm(P, "fro")
        if res <= 1e-13 * scale:
            return P
        K = np.linalg.solve(R, B.T @ P)
        Acl = A - B @ K
        if np.linalg.eigvals(Acl).real.max() >= 0.0:
            raise CareSolverError("Newton iterate lost closed-loop stability")
        P_next = _symmetrize(solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K)))
        res_next = care_residual(prob, P_next)
        if res_next >= res:  # stalled at the attainable accuracy
            break
        P, res = P_next, res_next
    if res > _RESIDUAL_RTOL * (1.0 + np.linalg.norm(P, "fro")):
        raise CareConvergenceError(
            f"Newton refinement stalled at residual {res:.3e}"
        )
    return P


def solve_care(prob: CareProblem) -> np.ndarray:
    """Solve the CARE for the symmetric stabilizing solution.

    Returns
    -------
    P : (n, n) array
        Symmetric positive-semidefinite solution with A - B R^-1 B' P
        Hurwitz and Frobenius residual below 1e-8 * (1 + ||P||_F).

    Raises
    ------
    CareSolverError
        If the stable invariant subspace cannot be extracted (e.g. a
        non-stabilizable pair).
    CareConvergenceError
        If Newton refinement fails to reach the residual bound.
    """
    A, B, Q, R = prob.A, prob.B, prob.Q, prob.R
    n = prob.n
    G = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -G], [-Q, -A.T]])

    try:
        _, Z, sdim = schur(H, output="real", sort=lambda re, im: re < 0.0)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise CareSolverError(f"Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise CareSolverError(
            f"Hamiltonian has {sdim} stable eigenvalues, expected {n}; "
            "pair is likely not stabilizable"
        )
    Z11 = Z[:n, :n]
    Z21 = Z[n:, :n]
    cond = np.linalg.cond(Z11)
    if not np.isfinite(cond) or cond > 1e12:
        raise CareSolverError(f"stable-subspace basis is singular (cond={cond:.3e})")
    P = _newton_kleinman(prob, _symmetrize(np.linalg.solve(Z11.T, Z21.T).T))

    eig_min = np.linalg.eigvalsh(P).min()
    if eig_min < -1e-8 * (1.0 + np.linalg.norm(P, "fro")):
        raise CareSolverError(f"solution is not positive semidefinite (min eig {eig_min:.3e})")
    closed = np.linalg.eigvals(A - G @ P)
    if closed.real.max() >= 0.0:
        raise CareSolverError("extracted solution does not stabilize the pair")
    return P


def lqr_gain(ss: StateSpace, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """LQR state-feedback gain K = R^-1 B' P for u = -K x.

    The closed loop A - B K is guaranteed Hurwitz on return.
    """
    prob = CareProblem(ss.A, ss.B, Q, R)
    P = solve_care(prob)
    K = np.linalg.solve(prob.R, prob.B.T @ P)
    if np.linalg.eigvals(prob.A - prob.B @ K).real.max() >= 0.0:
        raise CareSolverError("LQR closed loop is not Hurwitz")
    return K


def kalman_gain(ss: StateSpace, Q_proc: np.ndarray, R_meas: np.ndarray) -> np.ndarray:
    """Steady-state Kalman gain L = P C' R^-1 via the dual CARE.

    P solves P A' + A P - P C' R^-1 C P + Q = 0, i.e. the regulator CARE
    on (A', C'). The observer error matrix A - L C is Hurwitz on return.
    """
    prob = CareProblem(ss.A.T, ss.C.T, Q_proc, R_meas)
    P = solve_care(prob)
    L = P @ ss.C.T @ np.linalg.inv(np.atleast_2d(np.asarray(R_meas, dtype=float)))
    if np.linalg.eigvals(ss.A - L @ ss.C).real.max() >= 0.0:
        raise CareSolverError("Kalman observer loop is not Hurwitz")
    return L
