"""Generalized plant assembly for H-infinity design.

Channel layout of the assembled plant::

    inputs  = [d_phi, d_theta, d_psi, n_p, n_q, n_r | L_cmd, M_cmd, N_cmd]
    outputs = [z_phi, z_theta, z_psi, z_L, z_M, z_N | y_p, y_q, y_r]

The disturbances are unit-normalized torques scaled by ``w_dist``; noise is
unit-normalized and scaled (optionally shaped) by ``w_noise``.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import as_vector
from .dynamics import InertiaParams
from .exceptions import DimensionError, RegularityError
from .lpv import HOVER_RHO, MOMENT_LABELS, STATE_LABELS, frozen_lti, input_matrix, lpv_a_matrix
from .statespace import StateSpaceModel, lower_lft

W_LABELS = ("d_phi", "d_theta", "d_psi", "n_p", "n_q", "n_r")
U_LABELS = ("L_cmd", "M_cmd", "N_cmd")
Z_LABELS = ("z_phi", "z_theta", "z_psi", "z_L", "z_M", "z_N")
Y_LABELS = ("y_p", "y_q", "y_r")

DEFAULT_EPS = 1e-3
REGULARIZATION = 1e-4


def _per_axis(value, name):
    arr = as_vector(np.broadcast_to(np.asarray(value, float), (3,)), name, 3)
    if np.any(arr <= 0):
        raise ValueError(f"{name} must be > 0 on every axis")
    return arr


@dataclass(frozen=True)
class NoiseShaping:
    """First-order lead ``(s/zero + 1) / (s/pole + 1)`` applied to gyro noise."""

    zero: float = 10.0
    pole: float = 500.0

    def __post_init__(self):
        if not (0 < self.zero and 0 < self.pole):
            raise ValueError("shaping filter zero and pole must be positive (stable)")


@dataclass(frozen=True)
class WeightConfig:
    # w_dist is the calibrated gust-torque peak [N m] and w_noise the 35 dB
    # noise level relative to the 1.5 rad/s rate envelope; w_att and w_act
    # set the attitude/effort trade-off.
    w_att: np.ndarray = field(default_factory=lambda: np.full(3, 20.0))
    w_act: np.ndarray = field(default_factory=lambda: np.full(3, 0.15))
    w_dist: np.ndarray = field(default_factory=lambda: np.full(3, 0.65))
    w_noise: np.ndarray = field(default_factory=lambda: np.full(3, 0.0267))
    noise_shaping: Optional[NoiseShaping] = None

    def __post_init__(self):
        for name in ("w_att", "w_act", "w_dist", "w_noise"):
            object.__setattr__(self, name, _per_axis(getattr(self, name), name))


@dataclass(frozen=True, eq=False)
class GeneralizedPlant:
    """State-space plant with inputs ``[w; u]`` and outputs ``[z; y]``."""

    model: StateSpaceModel
    n_w: int
    n_u: int
    n_z: int
    n_y: int

    def __post_init__(self):
        m = self.model
        if m.n_inputs != self.n_w + self.n_u or m.n_outputs != self.n_z + self.n_y:
            raise DimensionError("channel partition does not match the model")

    @property
    def n_states(self):
        return self.model.n_states

    def blocks(self):
        """``(A, B1, B2, C1, C2, D11, D12, D21, D22)``."""
        m, nw, nz = self.model, self.n_w, self.n_z
        return (m.A, m.B[:, :nw], m.B[:, nw:], m.C[:nz], m.C[nz:],
                m.D[:nz, :nw], m.D[:nz, nw:], m.D[nz:, :nw], m.D[nz:, nw:])

    @classmethod
    def from_blocks(cls, A, B1, B2, C1, C2, D11=None, D12=None, D21=None, D22=None):
        A, B1, B2, C1, C2 = (np.atleast_2d(np.asarray(v, float)) for v in (A, B1, B2, C1, C2))
        nz, ny, nw, nu = C1.shape[0], C2.shape[0], B1.shape[1], B2.shape[1]
        D11 = np.zeros((nz, nw)) if D11 is None else np.atleast_2d(D11)
        D12 = np.zeros((nz, nu)) if D12 is None else np.atleast_2d(D12)
        D21 = np.zeros((ny, nw)) if D21 is None else np.atleast_2d(D21)
        D22 = np.zeros((ny, nu)) if D22 is None else np.atleast_2d(D22)
        model = StateSpaceModel(A, np.hstack([B1, B2]), np.vstack([C1, C2]),
                                np.block([[D11, D12], [D21, D22]]))
        return cls(model, nw, nu, nz, ny)


def hover_nominal(inertia=InertiaParams(), eps=DEFAULT_EPS):
    """Stability-augmented hover plant used for synthesis."""
    return frozen_lti(HOVER_RHO, inertia, eps)


def check_regularity(plant, tol=1e-10):
    """Raise :class:`RegularityError` unless D12 has full column rank and D21 full row rank."""
    *_, D12, D21, _ = plant.blocks()
    if np.linalg.matrix_rank(D12, tol=tol * max(1.0, np.abs(D12).max())) < plant.n_u:
        raise RegularityError("D12 does not have full column rank")
    if np.linalg.matrix_rank(D21, tol=tol * max(1.0, np.abs(D21).max())) < plant.n_y:
        raise RegularityError("D21 does not have full row rank")


def regularize(plant, delta=REGULARIZATION):
    """Add ``delta`` feedthrough to rank-deficient D12 / D21 and warn.

    Extra performance outputs (``delta * u``) and exogenous inputs
    (``delta * w_extra`` on ``y``) are appended only where needed.
    """
    A, B1, B2, C1, C2, D11, D12, D21, D22 = plant.blocks()
    changed = False
    if np.linalg.matrix_rank(D12) < plant.n_u:
        C1 = np.vstack([C1, np.zeros((plant.n_u, plant.n_states))])
        D11 = np.vstack([D11, np.zeros((plant.n_u, D11.shape[1]))])
        D12 = np.vstack([D12, delta * np.eye(plant.n_u)])
        changed = True
    if np.linalg.matrix_rank(D21) < plant.n_y:
        B1 = np.hstack([B1, np.zeros((plant.n_states, plant.n_y))])
        D11 = np.hstack([D11, np.zeros((D11.shape[0], plant.n_y))])
        D21 = np.hstack([D21, delta * np.eye(plant.n_y)])
        changed = True
    if not changed:
        return plant
    warnings.warn(f"generalized plant regularized with {delta:g} feedthrough", stacklevel=2)
    return GeneralizedPlant.from_blocks(A, B1, B2, C1, C2, D11, D12, D21, D22)


def build_generalized_plant(nominal=None, actuators=None, weights=None, *,
                            inertia=InertiaParams(), eps=DEFAULT_EPS):
    """Assemble the weighted interconnection around a frozen attitude plant.

    Parameters
    ----------
    nominal : StateSpaceModel, optional
        Six-state plant from torques to the full attitude state; defaults to
        the stability-augmented hover model.
    actuators : ActuatorModel or None
        First-order lags inserted in the control path.  ``None`` drives the
        plant directly with the commanded torques.
    weights : WeightConfig, optional

    Returns
    -------
    GeneralizedPlant
        States are ``[plant (6), actuators (3), noise filters (0 or 3)]``.
    """
    nominal = hover_nominal(inertia, eps) if nominal is None else nominal
    weights = WeightConfig() if weights is None else weights
    if nominal.n_inputs != 3 or nominal.n_outputs != 6:
        raise DimensionError("nominal plant must map 3 torques to 6 states")
    n_p = nominal.n_states
    Ap, Bp = nominal.A, nominal.B
    C_ang, C_rate = nominal.C[:3], nominal.C[3:]
    if np.any(nominal.D):
        raise DimensionError("nominal plant must be strictly proper")
    Wd = np.diag(weights.w_dist)

    if actuators is not None:
        tau = actuators.time_constant
        n_a = 3
        A = np.block([
            [Ap, Bp],
            [np.zeros((3, n_p)), -np.eye(3) / tau],
        ])
        B_dist = np.vstack([Bp @ Wd, np.zeros((3, 3))])
        B_u = np.vstack([np.zeros((n_p, 3)), np.eye(3) / tau])
    else:
        n_a = 0
        A = Ap
        B_dist = Bp @ Wd
        B_u = Bp
    n_x = n_p + n_a
    C_z_att = np.hstack([np.diag(weights.w_att) @ C_ang, np.zeros((3, n_a))])
    C_y = np.hstack([C_rate, np.zeros((3, n_a))])

    shaping = weights.noise_shaping
    if shaping is None:
        B_noise = np.zeros((n_x, 3))
        D_noise = np.diag(weights.w_noise)
    else:
        # g (s/z + 1)/(s/p + 1) = g p/z + g p/z (z - p) / (s + p)
        hf = weights.w_noise * shaping.pole / shaping.zero
        A = np.block([
            [A, np.zeros((n_x, 3))],
            [np.zeros((3, n_x)), -shaping.pole * np.eye(3)],
        ])
        B_dist = np.vstack([B_dist, np.zeros((3, 3))])
        B_u = np.vstack([B_u, np.zeros((3, 3))])
        B_noise = np.vstack([np.zeros((n_x, 3)), np.eye(3)])
        C_z_att = np.hstack([C_z_att, np.zeros((3, 3))])
        C_y = np.hstack([C_y, np.diag(hf * (shaping.zero - shaping.pole))])
        D_noise = np.diag(hf)
    n = A.shape[0]

    B = np.hstack([B_dist, B_noise, B_u])
    C = np.vstack([C_z_att, np.zeros((3, n)), C_y])
    D = np.zeros((9, 9))
    D[3:6, 6:9] = np.diag(weights.w_act)
    D[6:9, 3:6] = D_noise
    model = StateSpaceModel(A, B, C, D, W_LABELS + U_LABELS, Z_LABELS + Y_LABELS)
    plant = GeneralizedPlant(model, n_w=6, n_u=3, n_z=6, n_y=3)
    check_regularity(plant)
    return plant


def closed_loop(plant, controller):
    """Closed-loop ``T_{w->z}`` of a generalized plant and a controller ``y -> u``."""
    return lower_lft(plant.model, controller, plant.n_u, plant.n_y)


# Scheduling-dependent entries of A(rho): (row, col, value(rho, k)).  Written
# as deviations from the hover value so the LFT nominal is the hover plant.
_RHO_ENTRIES = (
    (0, 4, lambda r, k: r[0] * r[2] / r[3]),
    (0, 5, lambda r, k: r[1] * r[2] / r[3]),
    (1, 4, lambda r, k: r[1] - 1.0),
    (1, 5, lambda r, k: -r[0]),
    (2, 4, lambda r, k: r[0] / r[3]),
    (2, 5, lambda r, k: r[1] / r[3] - 1.0),
    (3, 4, lambda r, k: k[0] * r[6] / 2),
    (3, 5, lambda r, k: k[0] * r[5] / 2),
    (4, 3, lambda r, k: k[1] * r[6] / 2),
    (4, 5, lambda r, k: k[1] * r[4] / 2),
    (5, 3, lambda r, k: k[2] * r[5] / 2),
    (5, 4, lambda r, k: k[2] * r[4] / 2),
)


def rho_lft(inertia=InertiaParams(), eps=DEFAULT_EPS):
    """Upper-LFT form of the attitude plant with one scalar channel per varying entry.

    Returns ``(M, n_delta)``: ``M`` has inputs ``[w_delta; L, M, N]`` and
    outputs ``[z_delta; states]``.  Closing ``w_delta = diag(rho_deltas(rho))
    z_delta`` reproduces :func:`frozen_lti` at ``rho``.
    """
    n_d = len(_RHO_ENTRIES)
    A0 = lpv_a_matrix(HOVER_RHO, inertia, eps)
    Bd = np.zeros((6, n_d))
    Cd = np.zeros((n_d, 6))
    for k, (row, col, _) in enumerate(_RHO_ENTRIES):
        Bd[row, k] = 1.0
        Cd[k, col] = 1.0
    Bu = input_matrix(inertia)
    B = np.hstack([Bd, Bu])
    C = np.vstack([Cd, np.eye(6)])
    D = np.zeros((n_d + 6, n_d + 3))
    ins = tuple(f"w_delta{k}" for k in range(n_d)) + MOMENT_LABELS
    outs = tuple(f"z_delta{k}" for k in range(n_d)) + STATE_LABELS
    return StateSpaceModel(A0, B, C, D, ins, outs), n_d


def rho_deltas(rho, inertia=InertiaParams()):
    """Diagonal of the uncertainty block for the scheduling point ``rho``."""
    r = as_vector(rho, "rho", 7)
    k = inertia.coupling
    return np.array([f(r, k) for _, _, f in _RHO_ENTRIES])
