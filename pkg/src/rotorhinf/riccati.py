"""Continuous algebraic Riccati equations via the Hamiltonian Schur method."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ._validation import as_matrix, check_symmetric
from .exceptions import DimensionError, ImaginaryAxisEigError, NoStabilizingSolutionError

IMAG_AXIS_RTOL = 1e-10


@dataclass(frozen=True)
class CareProblem:
    """Data of ``A'X + XA - (XB + S) R^-1 (B'X + S') + Q = 0``."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    S: Optional[np.ndarray] = None

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = as_matrix(self.B, "B", shape=(n, None))
        m = B.shape[1]
        Q = check_symmetric(self.Q, "Q")
        R = check_symmetric(self.R, "R")
        if Q.shape != (n, n) or R.shape != (m, m):
            raise DimensionError("Q must be n x n and R must be m x m")
        S = np.zeros((n, m)) if self.S is None else as_matrix(self.S, "S", shape=(n, m))
        for name, val in zip("ABQRS", (A, B, Q, R, S)):
            object.__setattr__(self, name, val)

    def residual(self, X):
        """Riccati residual matrix at ``X``."""
        XBS = X @ self.B + self.S
        return (self.A.T @ X + X @ self.A
                - XBS @ np.linalg.solve(self.R, XBS.T) + self.Q)

    def gain(self, X):
        """Optimal feedback ``K = R^-1 (B'X + S')`` for ``u = -K x``."""
        return np.linalg.solve(self.R, self.B.T @ X + self.S.T)


def hamiltonian_ric(A, R, Q, imag_tol=IMAG_AXIS_RTOL):
    """Stabilizing solution of ``A'X + XA + XRX + Q = 0``.

    Built from the stable invariant subspace of ``H = [[A, R], [-Q, -A']]``
    using an ordered real Schur form.  ``A + R X`` is Hurwitz on return.
    """
    n = A.shape[0]
    H = np.block([[A, R], [-Q, -A.T]])
    scale = max(np.linalg.norm(H, "fro"), np.finfo(float).tiny)
    T, U, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    eigs = np.linalg.eigvals(T)
    if np.any(np.abs(eigs.real) <= imag_tol * scale):
        raise ImaginaryAxisEigError(
            f"Hamiltonian has eigenvalues on the imaginary axis "
            f"(min |Re| = {np.abs(eigs.real).min():.3e})"
        )
    if sdim != n:
        raise NoStabilizingSolutionError(
            f"stable subspace has dimension {sdim}, expected {n}"
        )
    U11, U21 = U[:n, :n], U[n:, :n]
    if np.linalg.cond(U11) > 1.0 / (1e3 * np.finfo(float).eps):
        raise NoStabilizingSolutionError("stable subspace is not a graph (U11 singular)")
    X = np.linalg.solve(U11.T, U21.T).T
    return (X + X.T) / 2


def care_newton(prob, X0, max_iter=50, tol=1e-13):
    """Kleinman-Newton refinement of a stabilizing CARE solution."""
    Rinv_St = np.linalg.solve(prob.R, prob.S.T)
    At = prob.A - prob.B @ Rinv_St
    Qt = prob.Q - prob.S @ Rinv_St
    X = np.array(X0, dtype=float)
    for _ in range(max_iter):
        K = np.linalg.solve(prob.R, prob.B.T @ X)
        Ak = At - prob.B @ K
        rhs = -(Qt + K.T @ prob.R @ K)
        X_new = scipy.linalg.solve_continuous_lyapunov(Ak.T, rhs)
        X_new = (X_new + X_new.T) / 2
        step = np.linalg.norm(X_new - X, "fro")
        X = X_new
        if step <= tol * max(1.0, np.linalg.norm(X, "fro")):
            break
    return X


def solve_care(prob, tol=1e-9, refine=False):
    """Stabilizing solution of the CARE described by ``prob``.

    The Schur solution is Newton-refined when ``refine`` is set or when its
    residual exceeds ``tol * max(1, ||X||_F)``.

    Raises
    ------
    ImaginaryAxisEigError
        The Hamiltonian has eigenvalues on the imaginary axis.
    NoStabilizingSolutionError
        No stabilizing solution exists or the residual cannot be met.
    """
    if not isinstance(prob, CareProblem):
        prob = CareProblem(*prob)
    Rinv_St = np.linalg.solve(prob.R, prob.S.T)
    At = prob.A - prob.B @ Rinv_St
    Qt = prob.Q - prob.S @ Rinv_St
    Rq = -prob.B @ np.linalg.solve(prob.R, prob.B.T)
    X = hamiltonian_ric(At, Rq, Qt)

    def ok(X):
        res = np.linalg.norm(prob.residual(X), "fro")
        return res <= tol * max(1.0, np.linalg.norm(X, "fro"))

    if refine or not ok(X):
        X = care_newton(prob, X)
    if not ok(X):
        raise NoStabilizingSolutionError("CARE residual above tolerance after refinement")
    Acl = prob.A - prob.B @ prob.gain(X)
    if np.linalg.eigvals(Acl).real.max() >= 0:
        raise NoStabilizingSolutionError("closed-loop matrix is not Hurwitz")
    return X
