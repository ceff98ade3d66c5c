"""Gyro-only cascaded PID baseline.

Per axis the controller keeps two states: a pseudo-angle ``xi`` obtained by
leaky integration of the measured rate, and the integral of the inner-loop
rate error.  The outer loop is proportional (``r_ref = -Kp_o xi``) and the
inner loop is PI on ``r_ref - y``.

Tuning is closed-form pole placement on the linear loop
``theta' = w, I w' = u``.  Ignoring the leak and actuator lag the
characteristic polynomial is::

    I s^3 + Kp_i s^2 + (Kp_i Kp_o + Ki) s + Ki Kp_o

which is matched to ``I (s^2 + 2 zeta wc s + wc^2)(s + alpha wc)``.  Real
gains exist only for ``alpha <= 1 / (2 (1 + zeta))``; the bound is used,
giving the fastest attainable third pole and a unique ``Kp_o``::

    Kp_i = I (2 zeta + alpha) wc
    Kp_o = (1 + 2 zeta alpha) wc / (2 (2 zeta + alpha))
    Ki   = I alpha wc^3 / Kp_o
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_vector, check_positive
from .dynamics import InertiaParams, MomentInput

DEFAULT_BANDWIDTH = 6.0
DEFAULT_DAMPING = 0.9
DEFAULT_LEAK = 1e-3
STATES_PER_AXIS = 2


@dataclass(frozen=True)
class CascadedPidGains:
    """Per-axis gains, each a length-3 array ordered roll, pitch, yaw."""

    Kp_o: np.ndarray
    Kp_i: np.ndarray
    Ki_i: np.ndarray
    leak: float = DEFAULT_LEAK

    def __post_init__(self):
        for name in ("Kp_o", "Kp_i", "Ki_i"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (3,)).copy()
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if np.any(self.Ki_i < 0):
            raise ValueError("Ki_i must be non-negative")
        if self.leak < 0:
            raise ValueError("leak must be non-negative")

    @property
    def n_states(self):
        return 3 * STATES_PER_AXIS

    def to_dict(self):
        return {"Kp_o": self.Kp_o.tolist(), "Kp_i": self.Kp_i.tolist(),
                "Ki_i": self.Ki_i.tolist(), "leak": self.leak}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["Kp_o"], doc["Kp_i"], doc["Ki_i"], doc.get("leak", DEFAULT_LEAK))


def third_pole_ratio(zeta):
    """Largest ``alpha`` for which the placement has real gains."""
    return 1.0 / (2.0 * (1.0 + zeta))


def pid_tune(inertia, bandwidth=DEFAULT_BANDWIDTH, damping=DEFAULT_DAMPING):
    """Gains ``(Kp_o, Kp_i, Ki_i)`` for one axis of inertia ``inertia``."""
    check_positive(inertia, "inertia")
    check_positive(bandwidth, "bandwidth")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    w, z = bandwidth, damping
    a = third_pole_ratio(z)
    kp_i = inertia * (2 * z + a) * w
    kp_o = (1 + 2 * z * a) * w / (2 * (2 * z + a))
    ki = inertia * a * w**3 / kp_o
    return kp_o, kp_i, ki


def tune_axes(inertia=InertiaParams(), bandwidth=DEFAULT_BANDWIDTH,
              damping=DEFAULT_DAMPING, leak=DEFAULT_LEAK):
    """Tune all three axes with a common bandwidth and damping."""
    per_axis = [pid_tune(I, bandwidth, damping) for I in inertia.diag]
    kp_o, kp_i, ki = (np.array(v) for v in zip(*per_axis))
    return CascadedPidGains(kp_o, kp_i, ki, leak)


def characteristic_polynomial(inertia, kp_o, kp_i, ki):
    """Closed-loop polynomial coefficients of one axis (no leak, no lag)."""
    return np.array([inertia, kp_i, kp_i * kp_o + ki, ki * kp_o])


@njit(cache=True)
def _pid_update(kp_o, kp_i, ki, leak, u_max, state, y, dt, u):
    """Advance ``state`` (xi[0:3], integ[3:6]) in place and write torques to ``u``."""
    for i in range(3):
        xi = state[i] + dt * (y[i] - leak * state[i])
        e = -kp_o[i] * xi - y[i]
        integ = state[3 + i] + dt * e
        raw = kp_i[i] * e + ki[i] * integ
        if raw > u_max or raw < -u_max:
            # anti-windup: hold the integrator while saturated
            integ = state[3 + i]
            raw = kp_i[i] * e + ki[i] * integ
            raw = min(max(raw, -u_max), u_max)
        state[i] = xi
        state[3 + i] = integ
        u[i] = raw


def pid_step(gains, state, rates, dt, u_max=np.inf):
    """One controller update from measured ``rates``.

    Parameters
    ----------
    gains : CascadedPidGains
    state : array_like, shape (6,)
        Pseudo-angles followed by rate-error integrals.
    rates : array_like, shape (3,)
        Measured ``(p, q, r)`` [rad/s].
    dt : float
        Update period [s].
    u_max : float
        Torque limit used for output clamping and anti-windup.

    Returns
    -------
    torque : MomentInput
    new_state : ndarray, shape (6,)
    """
    check_positive(dt, "dt")
    new = as_vector(state, "state", 6).copy()
    y = as_vector(rates, "rates", 3)
    u = np.empty(3)
    _pid_update(gains.Kp_o, gains.Kp_i, gains.Ki_i, float(gains.leak), float(u_max),
                new, y, float(dt), u)
    return MomentInput(*u), new


class CascadedPID(BaseEstimator):
    """Estimator-style wrapper: ``fit(inertia)`` sets ``gains_``."""

    def __init__(self, bandwidth=DEFAULT_BANDWIDTH, damping=DEFAULT_DAMPING, leak=DEFAULT_LEAK):
        self.bandwidth = bandwidth
        self.damping = damping
        self.leak = leak

    def fit(self, inertia=None, y=None):
        inertia = InertiaParams() if inertia is None else inertia
        self.gains_ = tune_axes(inertia, self.bandwidth, self.damping, self.leak)
        self.poles_ = [np.roots(characteristic_polynomial(I, *g)) for I, g in
                       zip(inertia.diag, zip(self.gains_.Kp_o, self.gains_.Kp_i,
                                             self.gains_.Ki_i))]
        return self

    def initial_state(self):
        check_is_fitted(self, "gains_")
        return np.zeros(self.gains_.n_states)
