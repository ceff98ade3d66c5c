"""Continuous-time LTI state-space models and block-diagram algebra."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from ._validation import as_matrix
from .exceptions import AlgebraicLoopError, DimensionError


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """LTI system ``dx = A x + B u``, ``y = C x + D u``.

    Labels are optional and only carried for bookkeeping; they never affect
    the arithmetic.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    input_labels: tuple = field(default=())
    output_labels: tuple = field(default=())

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        D = np.asarray(self.D, dtype=float)
        n = A.shape[0] if A.size else 0
        A = A.reshape(n, n)
        if D.ndim != 2:
            raise DimensionError(f"D must be 2-D, got shape {D.shape}")
        p, m = D.shape
        B = B.reshape(n, m)
        C = C.reshape(p, n)
        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(mat)):
                raise DimensionError(f"{name} contains non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        ins = tuple(self.input_labels) or tuple(f"u{i}" for i in range(m))
        outs = tuple(self.output_labels) or tuple(f"y{i}" for i in range(p))
        if len(ins) != m or len(outs) != p:
            raise DimensionError("label count does not match system dimensions")
        object.__setattr__(self, "input_labels", ins)
        object.__setattr__(self, "output_labels", outs)

    @classmethod
    def from_matrices(cls, A, B, C, D, input_labels=(), output_labels=()):
        A = as_matrix(A, "A") if np.size(A) else np.zeros((0, 0))
        D = as_matrix(D, "D")
        n = A.shape[0]
        p, m = D.shape
        B = np.asarray(B, dtype=float).reshape(n, m)
        C = np.asarray(C, dtype=float).reshape(p, n)
        if A.shape[1] != n:
            raise DimensionError(f"A must be square, got {A.shape}")
        return cls(A, B, C, D, tuple(input_labels), tuple(output_labels))

    @classmethod
    def static_gain(cls, D, input_labels=(), output_labels=()):
        D = as_matrix(D, "D")
        p, m = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D,
                   tuple(input_labels), tuple(output_labels))

    @classmethod
    def from_tf(cls, num, den):
        """SISO system from polynomial coefficients (highest power first)."""
        A, B, C, D = scipy.signal.tf2ss(num, den)
        return cls(A, B, C, D)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.D.shape[1]

    @property
    def n_outputs(self):
        return self.D.shape[0]

    def poles(self):
        if self.n_states == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A)

    def spectral_abscissa(self):
        """Largest real part of the poles (``-inf`` for a static gain)."""
        poles = self.poles()
        return float(poles.real.max()) if poles.size else -np.inf

    def is_stable(self, margin=0.0):
        return self.spectral_abscissa() < margin

    def evalfr(self, s):
        """Transfer matrix evaluated at the complex point ``s``."""
        if self.n_states == 0:
            return self.D.astype(complex)
        M = s * np.eye(self.n_states) - self.A
        return self.C @ np.linalg.solve(M, self.B.astype(complex)) + self.D

    def freqresp(self, omega):
        """Frequency response, shape ``(len(omega), p, m)``."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        return np.stack([self.evalfr(1j * w) for w in omega])

    def dc_gain(self):
        return self.evalfr(0.0).real

    def __neg__(self):
        return StateSpaceModel(self.A, self.B, -self.C, -self.D,
                               self.input_labels, self.output_labels)

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
            "input_labels": list(self.input_labels),
            "output_labels": list(self.output_labels),
        }

    @classmethod
    def from_dict(cls, doc):
        p, m = np.shape(doc["D"])
        n = len(doc["A"])
        return cls(
            np.asarray(doc["A"], dtype=float).reshape(n, n),
            np.asarray(doc["B"], dtype=float).reshape(n, m),
            np.asarray(doc["C"], dtype=float).reshape(p, n),
            np.asarray(doc["D"], dtype=float).reshape(p, m),
            tuple(doc.get("input_labels", ())),
            tuple(doc.get("output_labels", ())),
        )


def series(first, second):
    """Cascade: the output of ``first`` drives the input of ``second``."""
    if first.n_outputs != second.n_inputs:
        raise DimensionError(
            f"series: {first.n_outputs} outputs cannot drive {second.n_inputs} inputs"
        )
    n1, n2 = first.n_states, second.n_states
    A = np.block([
        [first.A, np.zeros((n1, n2))],
        [second.B @ first.C, second.A],
    ])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpaceModel(A, B, C, D, first.input_labels, second.output_labels)


def parallel(g1, g2):
    """Sum of two systems sharing the same input."""
    if (g1.n_inputs, g1.n_outputs) != (g2.n_inputs, g2.n_outputs):
        raise DimensionError("parallel: systems must have identical I/O sizes")
    A = scipy.linalg.block_diag(g1.A, g2.A)
    B = np.vstack([g1.B, g2.B])
    C = np.hstack([g1.C, g2.C])
    return StateSpaceModel(A, B, C, g1.D + g2.D, g1.input_labels, g1.output_labels)


def append(*systems):
    """Block-diagonal stacking: inputs and outputs are concatenated."""
    A = scipy.linalg.block_diag(*[s.A for s in systems])
    B = scipy.linalg.block_diag(*[s.B for s in systems])
    C = scipy.linalg.block_diag(*[s.C for s in systems])
    D = scipy.linalg.block_diag(*[s.D for s in systems])
    ins = sum((s.input_labels for s in systems), ())
    outs = sum((s.output_labels for s in systems), ())
    return StateSpaceModel(A, B, C, D, ins, outs)


def feedback(plant, controller=None, sign=-1):
    """Close ``u = r + sign * controller(y)`` around ``plant``.

    ``controller`` defaults to a unit static gain.  The returned system maps
    ``r`` to ``y``.
    """
    if controller is None:
        controller = StateSpaceModel.static_gain(np.eye(plant.n_outputs))
    if controller.n_inputs != plant.n_outputs or controller.n_outputs != plant.n_inputs:
        raise DimensionError("feedback: controller dimensions do not match plant")
    Dg, Dh = plant.D, controller.D
    E = np.eye(plant.n_outputs) - sign * Dg @ Dh
    if np.linalg.cond(E) > 1e12:
        raise AlgebraicLoopError("feedback interconnection is not well-posed")
    Einv = np.linalg.inv(E)
    # y = Einv (Cg xg + s Dg Ch xh + Dg r)
    Cy = Einv @ np.hstack([plant.C, sign * Dg @ controller.C])
    Dy = Einv @ Dg
    # u_g = r + s (Ch xh + Dh y)
    Cu = sign * np.hstack([np.zeros((plant.n_inputs, plant.n_states)), controller.C]) \
        + sign * Dh @ Cy
    Du = np.eye(plant.n_inputs) + sign * Dh @ Dy
    ng = plant.n_states
    A = np.vstack([
        np.hstack([plant.A, np.zeros((ng, controller.n_states))]) + plant.B @ Cu,
        np.hstack([np.zeros((controller.n_states, ng)), controller.A]) + controller.B @ Cy,
    ])
    B = np.vstack([plant.B @ Du, controller.B @ Dy])
    return StateSpaceModel(A, B, Cy, Dy, plant.input_labels, plant.output_labels)


def lower_lft(plant, controller, n_u, n_y):
    """Lower linear fractional transformation ``F_l(P, K)``.

    ``plant`` has inputs ``[w; u]`` and outputs ``[z; y]`` with the last
    ``n_u`` inputs and ``n_y`` outputs forming the loop; ``controller`` maps
    ``y`` to ``u``.  Returns the closed loop from ``w`` to ``z`` with state
    ``[x_plant; x_controller]``.
    """
    if controller.n_inputs != n_y or controller.n_outputs != n_u:
        raise DimensionError(
            f"controller must map {n_y} measurements to {n_u} controls, "
            f"got {controller.n_inputs} -> {controller.n_outputs}"
        )
    n_w = plant.n_inputs - n_u
    n_z = plant.n_outputs - n_y
    if n_w < 0 or n_z < 0:
        raise DimensionError("loop channel counts exceed plant dimensions")
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    B1, B2 = B[:, :n_w], B[:, n_w:]
    C1, C2 = C[:n_z], C[n_z:]
    D11, D12 = D[:n_z, :n_w], D[:n_z, n_w:]
    D21, D22 = D[n_z:, :n_w], D[n_z:, n_w:]
    Ak, Bk, Ck, Dk = controller.A, controller.B, controller.C, controller.D
    n, nk = plant.n_states, controller.n_states

    S = np.eye(n_u) - Dk @ D22
    if np.linalg.cond(S) > 1e12:
        raise AlgebraicLoopError("I - Dk D22 is singular")
    Sinv = np.linalg.inv(S)
    # u and y as linear maps of [x; xk; w]
    Mu = Sinv @ np.hstack([Dk @ C2, Ck, Dk @ D21])
    My = np.hstack([C2, np.zeros((n_y, nk)), D21]) + D22 @ Mu
    Acl = np.block([
        [A, np.zeros((n, nk))],
        [np.zeros((nk, n)), Ak],
    ]) + np.vstack([B2 @ Mu[:, :n + nk], Bk @ My[:, :n + nk]])
    Bcl = np.vstack([B1 + B2 @ Mu[:, n + nk:], Bk @ My[:, n + nk:]])
    Ccl = np.hstack([C1, np.zeros((n_z, nk))]) + D12 @ Mu[:, :n + nk]
    Dcl = D11 + D12 @ Mu[:, n + nk:]
    return StateSpaceModel(Acl, Bcl, Ccl, Dcl,
                           plant.input_labels[:n_w], plant.output_labels[:n_z])


def upper_lft_static(model, delta):
    """Close a static block ``w_delta = delta @ z_delta`` on the leading channels.

    ``model`` has inputs ``[w_delta; u]`` and outputs ``[z_delta; y]`` where
    the sizes of the delta channels are taken from ``delta.shape``.
    """
    delta = as_matrix(delta, "delta")
    n_wd, n_zd = delta.shape
    D11 = model.D[:n_zd, :n_wd]
    E = np.eye(n_wd) - delta @ D11
    if np.linalg.cond(E) > 1e12:
        raise AlgebraicLoopError("I - delta D11 is singular")
    # w_delta = (I - delta D11)^-1 delta (C1 x + D12 u)
    G = np.linalg.solve(E, delta)
    C1, C2 = model.C[:n_zd], model.C[n_zd:]
    B1, B2 = model.B[:, :n_wd], model.B[:, n_wd:]
    D12 = model.D[:n_zd, n_wd:]
    D21, D22 = model.D[n_zd:, :n_wd], model.D[n_zd:, n_wd:]
    A = model.A + B1 @ G @ C1
    B = B2 + B1 @ G @ D12
    C = C2 + D21 @ G @ C1
    D = D22 + D21 @ G @ D12
    return StateSpaceModel(A, B, C, D, model.input_labels[n_wd:],
                           model.output_labels[n_zd:])


def c2d_bilinear(model, dt):
    """Tustin discretization, returned as raw ``(Ad, Bd, Cd, Dd)`` arrays."""
    Ad, Bd, Cd, Dd, _ = scipy.signal.cont2discrete(
        (model.A, model.B, model.C, model.D), dt, method="bilinear"
    )
    return Ad, Bd, Cd, Dd


def unobservable_modes(A, C, tol=1e-9):
    """Eigenvalues of ``A`` that fail the PBH observability rank test."""
    A = np.asarray(A, float)
    C = np.asarray(C, float)
    n = A.shape[0]
    bad = []
    for lam in np.linalg.eigvals(A):
        M = np.vstack([lam * np.eye(n) - A, C.astype(complex)])
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= tol * max(1.0, s[0]):
            bad.append(lam)
    return np.array(bad)


def is_detectable(A, C, tol=1e-9):
    bad = unobservable_modes(A, C, tol)
    return bool(np.all(bad.real < 0)) if bad.size else True


def is_stabilizable(A, B, tol=1e-9):
    return is_detectable(np.asarray(A).T, np.asarray(B).T, tol)
