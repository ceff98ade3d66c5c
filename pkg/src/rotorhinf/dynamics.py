"""Nonlinear rotational dynamics of a multi-rotor, actuator lags and RK4.

Kinematics use the standard Z-Y-X Euler convention::

    phi_dot   = p + sin(phi) tan(theta) q + cos(phi) tan(theta) r
    theta_dot = cos(phi) q - sin(phi) r
    psi_dot   = (sin(phi) q + cos(phi) r) / cos(theta)

and Euler's rigid-body equations with principal inertias drive the body
rates.  An optional uniform damping ``eps`` subtracts ``eps * x`` from every
state derivative; the simulated truth plant always uses ``eps = 0``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from ._validation import as_vector, check_positive
from .exceptions import NonFiniteError, SingularityError

GUARD_MARGIN_DEG = 84.0
GUARD_COS = math.cos(math.radians(GUARD_MARGIN_DEG))


class AttitudeState(NamedTuple):
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0


class MomentInput(NamedTuple):
    L: float = 0.0
    M: float = 0.0
    N: float = 0.0


@dataclass(frozen=True)
class InertiaParams:
    """Mass [kg] and principal moments of inertia [kg m^2]."""

    mass: float = 10.0
    Ix: float = 0.25
    Iy: float = 0.2
    Iz: float = 0.1

    def __post_init__(self):
        for name in ("mass", "Ix", "Iy", "Iz"):
            check_positive(getattr(self, name), name)

    @property
    def diag(self):
        return np.array([self.Ix, self.Iy, self.Iz])

    @property
    def coupling(self):
        """Gyroscopic coefficients ``(k1, k2, k3)``."""
        Ix, Iy, Iz = self.Ix, self.Iy, self.Iz
        return np.array([(Iy - Iz) / Ix, (Iz - Ix) / Iy, (Ix - Iy) / Iz])


@dataclass(frozen=True)
class ActuatorModel:
    """Per-axis first-order lag ``1 / (tau s + 1)`` with input saturation."""

    time_constant: float = 0.02
    u_max: float = 4.0

    def __post_init__(self):
        check_positive(self.time_constant, "time_constant")
        check_positive(self.u_max, "u_max")


@njit(cache=True)
def _derivative_into(x, L, M, N, Ix, Iy, Iz, eps, out):
    # returns False when the pitch guard is violated
    phi, theta = x[0], x[1]
    p, q, r = x[3], x[4], x[5]
    cth = math.cos(theta)
    if abs(cth) < GUARD_COS:
        return False
    sph, cph = math.sin(phi), math.cos(phi)
    tth = math.sin(theta) / cth
    out[0] = p + sph * tth * q + cph * tth * r - eps * x[0]
    out[1] = cph * q - sph * r - eps * x[1]
    out[2] = (sph * q + cph * r) / cth - eps * x[2]
    out[3] = (Iy - Iz) / Ix * q * r + L / Ix - eps * p
    out[4] = (Iz - Ix) / Iy * p * r + M / Iy - eps * q
    out[5] = (Ix - Iy) / Iz * p * q + N / Iz - eps * r
    return True


def attitude_derivative(x, u, inertia=InertiaParams(), eps=0.0):
    """Time derivative of the 6-vector ``(phi, theta, psi, p, q, r)``.

    Parameters
    ----------
    x : array_like, shape (6,)
        Euler angles [rad] and body rates [rad/s].
    u : array_like, shape (3,)
        Body torques ``(L, M, N)`` [N m].
    inertia : InertiaParams
    eps : float
        Uniform stability-augmentation damping [1/s].

    Raises
    ------
    SingularityError
        ``|cos(theta)|`` is below the guard ``cos(84 deg)``.
    NonFiniteError
        ``x`` or ``u`` contains NaN/Inf.
    """
    x = as_vector(x, "state", 6)
    u = as_vector(u, "moment", 3)
    if not math.isfinite(eps):
        raise NonFiniteError("eps must be finite")
    out = np.empty(6)
    ok = _derivative_into(x, u[0], u[1], u[2], inertia.Ix, inertia.Iy, inertia.Iz,
                          float(eps), out)
    if not ok:
        raise SingularityError(
            f"theta = {math.degrees(x[1]):.2f} deg exceeds the {GUARD_MARGIN_DEG} deg guard"
        )
    return out


@njit(cache=True)
def _derivative_rows(X, U, Ix, Iy, Iz, eps, out):
    for k in range(X.shape[0]):
        if not _derivative_into(X[k], U[k, 0], U[k, 1], U[k, 2], Ix, Iy, Iz, eps, out[k]):
            return k
    return -1


def attitude_derivative_batch(X, U, inertia=InertiaParams(), eps=0.0):
    """Row-wise :func:`attitude_derivative` for states ``X`` (N, 6) and torques ``U`` (N, 3)."""
    X = np.ascontiguousarray(X, dtype=float)
    U = np.ascontiguousarray(U, dtype=float)
    if X.ndim != 2 or X.shape[1] != 6 or U.shape != (X.shape[0], 3):
        raise ValueError("expected X of shape (N, 6) and U of shape (N, 3)")
    if not (np.isfinite(X).all() and np.isfinite(U).all() and math.isfinite(eps)):
        raise NonFiniteError("non-finite state or moment")
    out = np.empty_like(X)
    bad = _derivative_rows(X, U, inertia.Ix, inertia.Iy, inertia.Iz, float(eps), out)
    if bad >= 0:
        raise SingularityError(f"row {bad}: theta exceeds the {GUARD_MARGIN_DEG} deg guard")
    return out


def kinetic_energy(x, inertia=InertiaParams()):
    """Rotational kinetic energy ``0.5 (Ix p^2 + Iy q^2 + Iz r^2)``."""
    x = np.asarray(x, dtype=float)
    return 0.5 * float(inertia.diag @ (x[3:6] ** 2))


def actuator_step(state, command, model=ActuatorModel(), dt=1e-3):
    """Advance the per-axis actuator lags by ``dt`` with an exact exponential update.

    The command is clamped to ``+/- u_max`` before filtering.  Returns
    ``(new_state, delivered)``; the delivered torque equals the new lag state.
    """
    check_positive(dt, "dt")
    state = as_vector(state, "actuator state")
    command = as_vector(command, "command", state.size)
    target = np.clip(command, -model.u_max, model.u_max)
    decay = math.exp(-dt / model.time_constant)
    new = target + (state - target) * decay
    return new, new.copy()


def rk4_step(f, x, t, dt):
    """One classical fourth-order Runge-Kutta step of ``dx/dt = f(t, x)``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x = np.asarray(x, dtype=float)
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
