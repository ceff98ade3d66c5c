"""Exact LPV form of the rotational dynamics.

The state derivative is written as ``A(rho) x + Bu u`` with the scheduling
vector::

    rho = (sin phi, cos phi, sin theta, cos theta, p, q, r)

``A(rho) = J @ A_tilde(rho) - eps I`` where ``J`` multiplies the rate rows by
the gyroscopic coefficients.  Because ``rho`` is evaluated on the current
state, the representation reproduces the nonlinear model exactly.
"""

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_vector
from .dynamics import GUARD_COS, InertiaParams
from .exceptions import SingularityError
from .statespace import StateSpaceModel

RHO4_FLOOR = GUARD_COS
STATE_LABELS = ("phi", "theta", "psi", "p", "q", "r")
MOMENT_LABELS = ("L", "M", "N")


class RhoVector(NamedTuple):
    rho1: float
    rho2: float
    rho3: float
    rho4: float
    rho5: float
    rho6: float
    rho7: float


HOVER_RHO = RhoVector(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RhoBox:
    """Element-wise bounds on the scheduling vector."""

    min: RhoVector
    max: RhoVector

    def __post_init__(self):
        lo, hi = np.asarray(self.min, float), np.asarray(self.max, float)
        if lo.shape != (7,) or hi.shape != (7,):
            raise ValueError("rho bounds must have 7 entries")
        if np.any(lo > hi):
            raise ValueError("rho box requires min <= max element-wise")
        if lo[1] < 0 or lo[3] < 0:
            raise ValueError("cos(phi) and cos(theta) bounds must be non-negative")
        object.__setattr__(self, "min", RhoVector(*lo))
        object.__setattr__(self, "max", RhoVector(*hi))

    def contains(self, rho, tol=1e-12):
        rho = np.asarray(rho, float)
        return bool(np.all(rho >= np.asarray(self.min) - tol)
                    and np.all(rho <= np.asarray(self.max) + tol))

    def vertices(self):
        lo, hi = np.asarray(self.min), np.asarray(self.max)
        return [RhoVector(*np.where(bits, hi, lo))
                for bits in itertools.product((0, 1), repeat=7)]

    def angle_ranges(self):
        """Roll and pitch intervals [rad] consistent with the trig bounds."""
        def interval(s_lo, s_hi, c_lo):
            lim = math.acos(min(1.0, c_lo))
            return (max(math.asin(s_lo), -lim), min(math.asin(s_hi), lim))
        return (interval(self.min.rho1, self.max.rho1, self.min.rho2),
                interval(self.min.rho3, self.max.rho3, self.min.rho4))


def default_rho_box(rate_bound=1.5, rho4_floor=RHO4_FLOOR):
    """Operating-envelope bounds with ``cos(theta)`` floored off zero."""
    return RhoBox(
        RhoVector(-1.0, 0.0, -1.0, rho4_floor, -rate_bound, -rate_bound, -rate_bound),
        RhoVector(1.0, 1.0, 1.0, 1.0, rate_bound, rate_bound, rate_bound),
    )


@dataclass(frozen=True)
class LpvMatrices:
    A: np.ndarray
    Bu: np.ndarray
    J: np.ndarray


def extract_rho(x):
    """Scheduling vector of a state ``(phi, theta, psi, p, q, r)``."""
    x = as_vector(x, "state", 6)
    phi, theta = x[0], x[1]
    return RhoVector(math.sin(phi), math.cos(phi), math.sin(theta), math.cos(theta),
                     x[3], x[4], x[5])


def inertia_multiplier(inertia=InertiaParams()):
    """``J = blkdiag(I3, k1, k2, k3)``."""
    return np.diag(np.concatenate([np.ones(3), inertia.coupling]))


def input_matrix(inertia=InertiaParams()):
    Bu = np.zeros((6, 3))
    Bu[3:, :] = np.diag(1.0 / inertia.diag)
    return Bu


def extract_rho_batch(X):
    """Row-wise :func:`extract_rho`; returns shape (N, 7)."""
    X = np.asarray(X, dtype=float)
    phi, theta = X[:, 0], X[:, 1]
    return np.column_stack([np.sin(phi), np.cos(phi), np.sin(theta), np.cos(theta),
                            X[:, 3], X[:, 4], X[:, 5]])


def lpv_a_batch(R, inertia=InertiaParams(), eps=0.0, rho4_floor=RHO4_FLOOR):
    """State matrices for a stack of scheduling vectors ``R`` (N, 7); shape (N, 6, 6)."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[1] != 7:
        raise ValueError("rho stack must have shape (N, 7)")
    r1, r2, r3, r4, r5, r6, r7 = R.T
    low = r4 < rho4_floor
    if low.any():
        raise SingularityError(f"rho4 = {r4[low].min():.4g} below floor {rho4_floor:.4g}")
    At = np.zeros((R.shape[0], 6, 6))
    At[:, 0, 3] = 1.0
    At[:, 0, 4] = r1 * r3 / r4
    At[:, 0, 5] = r2 * r3 / r4
    At[:, 1, 4], At[:, 1, 5] = r2, -r1
    At[:, 2, 4], At[:, 2, 5] = r1 / r4, r2 / r4
    At[:, 3, 4], At[:, 3, 5] = r7 / 2, r6 / 2
    At[:, 4, 3], At[:, 4, 5] = r7 / 2, r5 / 2
    At[:, 5, 3], At[:, 5, 4] = r6 / 2, r5 / 2
    # left-multiplying by the diagonal J scales rows
    J = np.diag(inertia_multiplier(inertia))
    return J[None, :, None] * At - eps * np.eye(6)


def lpv_a_matrix(rho, inertia=InertiaParams(), eps=0.0, rho4_floor=RHO4_FLOOR):
    """``A(rho) = J At(rho) - eps I`` at one scheduling point."""
    rho = as_vector(rho, "rho", 7)
    return lpv_a_batch(rho[None, :], inertia, eps, rho4_floor)[0]


def lpv_matrices(rho, inertia=InertiaParams(), eps=0.0):
    return LpvMatrices(lpv_a_matrix(rho, inertia, eps), input_matrix(inertia),
                       inertia_multiplier(inertia))


def frozen_lti(rho=HOVER_RHO, inertia=InertiaParams(), eps=0.0):
    """LTI snapshot at fixed ``rho``: torques in, full state out."""
    return StateSpaceModel(lpv_a_matrix(rho, inertia, eps), input_matrix(inertia),
                           np.eye(6), np.zeros((6, 3)), MOMENT_LABELS, STATE_LABELS)


def rho_grid(box=None, points_per_axis=3, samples=200, seed=0, include_vertices=True):
    """Verification points over the scheduling box.

    Consists of the 128 box vertices (optional), a Cartesian grid over roll,
    pitch and the three rates with trig-consistent ``rho1..rho4``, and
    ``samples`` uniformly drawn trig-consistent points.  Deterministic in
    ``seed``.
    """
    if points_per_axis < 2:
        raise ValueError("points_per_axis must be >= 2")
    box = default_rho_box() if box is None else box
    (phi_lo, phi_hi), (th_lo, th_hi) = box.angle_ranges()
    lo, hi = np.asarray(box.min), np.asarray(box.max)

    def from_angles(phi, theta, rates):
        return RhoVector(math.sin(phi), math.cos(phi), math.sin(theta), math.cos(theta),
                         *map(float, rates))

    points = box.vertices() if include_vertices else []
    axes = [np.linspace(phi_lo, phi_hi, points_per_axis),
            np.linspace(th_lo, th_hi, points_per_axis)]
    axes += [np.linspace(lo[k], hi[k], points_per_axis) for k in (4, 5, 6)]
    for phi, theta, *rates in itertools.product(*axes):
        points.append(from_angles(phi, theta, rates))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        phi = rng.uniform(phi_lo, phi_hi)
        theta = rng.uniform(th_lo, th_hi)
        points.append(from_angles(phi, theta, rng.uniform(lo[4:], hi[4:])))
    # rounding of cos at the floor must not leave the box
    return [RhoVector(*np.clip(p, lo, hi)) for p in points]
