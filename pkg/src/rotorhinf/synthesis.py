"""Output-feedback H-infinity synthesis and robust-stability grid checks.

The synthesizer implements the two-Riccati (Glover-Doyle) central
controller for plants with ``D11 = 0``.  Control and measurement channels
are first normalized so that ``D12' D12 = I`` and ``D21 D21' = I``; cross
terms ``D12' C1`` and ``B1 D21'`` are handled directly in the Riccati data.
A nonzero ``D22`` is removed by loop shifting.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .augmentation import DEFAULT_EPS, GeneralizedPlant, check_regularity, closed_loop
from .dynamics import ActuatorModel, InertiaParams
from .exceptions import (
    BisectionFailure,
    DimensionError,
    ImaginaryAxisEigError,
    NoStabilizingSolutionError,
    RegularityError,
)
from .lpv import frozen_lti
from .norms import hinf_norm
from .riccati import hamiltonian_ric
from .statespace import StateSpaceModel, is_detectable, is_stabilizable, unobservable_modes

log = logging.getLogger(__name__)

PSD_RTOL = 1e-8
STABILITY_MARGIN = -1e-6


@dataclass(eq=False)
class SynthesisResult:
    controller: StateSpaceModel
    gamma: float
    X: np.ndarray
    Y: np.ndarray
    spectral_radius: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "controller": self.controller.to_dict(),
            "gamma": self.gamma,
            "X": np.asarray(self.X).tolist(),
            "Y": np.asarray(self.Y).tolist(),
            "spectral_radius": self.spectral_radius,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            controller=StateSpaceModel.from_dict(doc["controller"]),
            gamma=float(doc["gamma"]),
            X=np.asarray(doc["X"], dtype=float),
            Y=np.asarray(doc["Y"], dtype=float),
            spectral_radius=float(doc["spectral_radius"]),
            diagnostics=dict(doc.get("diagnostics", {})),
        )

    def save(self, path, metadata=None):
        doc = self.to_dict()
        doc["metadata"] = metadata or {}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _is_psd(M):
    eigs = np.linalg.eigvalsh((M + M.T) / 2)
    scale = max(np.abs(eigs).max(), 0.0) if eigs.size else 0.0
    return bool(eigs.min() >= -PSD_RTOL * scale) if eigs.size else True


def _inv_sqrt(M):
    w, V = np.linalg.eigh((M + M.T) / 2)
    return V @ np.diag(w ** -0.5) @ V.T


class _NormalizedPlant:
    """Plant with scaled ``u`` and ``y`` so that D12'D12 = I, D21 D21' = I."""

    def __init__(self, plant):
        A, B1, B2, C1, C2, D11, D12, D21, D22 = plant.blocks()
        if np.abs(D11).max(initial=0.0) > 0:
            raise DimensionError("synthesis requires D11 = 0")
        self.Su = _inv_sqrt(D12.T @ D12)   # u = Su u_n
        self.Sy = _inv_sqrt(D21 @ D21.T)   # y_n = Sy y
        self.A, self.B1, self.C1 = A, B1, C1
        self.B2 = B2 @ self.Su
        self.C2 = self.Sy @ C2
        self.D12 = D12 @ self.Su
        self.D21 = self.Sy @ D21
        self.D22 = D22


class _GammaIterate:
    def __init__(self, gamma, X, Y, radius):
        self.gamma, self.X, self.Y, self.radius = gamma, X, Y, radius


def _riccati_pair(p, gamma):
    """Solve both Riccati equations at ``gamma``; return an iterate or raise."""
    g2 = gamma ** -2
    Ax = p.A - p.B2 @ p.D12.T @ p.C1
    C1t = p.C1 - p.D12 @ (p.D12.T @ p.C1)
    X = hamiltonian_ric(Ax, g2 * p.B1 @ p.B1.T - p.B2 @ p.B2.T, C1t.T @ C1t)
    Ay = p.A - p.B1 @ p.D21.T @ p.C2
    B1t = p.B1 - (p.B1 @ p.D21.T) @ p.D21
    Y = hamiltonian_ric(Ay.T, g2 * p.C1.T @ p.C1 - p.C2.T @ p.C2, B1t @ B1t.T)
    if not (_is_psd(X) and _is_psd(Y)):
        raise NoStabilizingSolutionError("Riccati solution is not positive semidefinite")
    radius = float(np.abs(np.linalg.eigvals(X @ Y)).max())
    if radius >= gamma ** 2:
        raise NoStabilizingSolutionError("coupling condition rho(XY) < gamma^2 violated")
    return _GammaIterate(gamma, X, Y, radius)


def _try_gamma(p, gamma):
    try:
        return _riccati_pair(p, gamma)
    except (ImaginaryAxisEigError, NoStabilizingSolutionError, np.linalg.LinAlgError):
        return None


def _central_controller(p, it):
    g2 = it.gamma ** -2
    X, Y = it.X, it.Y
    n = p.A.shape[0]
    F = -(p.B2.T @ X + p.D12.T @ p.C1)
    L = -(Y @ p.C2.T + p.B1 @ p.D21.T)
    Z = np.linalg.inv(np.eye(n) - g2 * Y @ X)
    Ak = (p.A + g2 * p.B1 @ p.B1.T @ X + p.B2 @ F
          + Z @ L @ (p.C2 + g2 * p.D21 @ p.B1.T @ X))
    Bk = -Z @ L
    Ck = F
    # back to physical units: u = Su u_n, y_n = Sy y
    Bk = Bk @ p.Sy
    Ck = p.Su @ Ck
    Dk = np.zeros((Ck.shape[0], Bk.shape[1]))
    if np.any(p.D22):
        # loop shift: u = K (y - D22 u) with Dk = 0 gives Ak - Bk D22 Ck
        Ak = Ak - Bk @ p.D22 @ Ck
    return StateSpaceModel(Ak, Bk, Ck, Dk)


def check_synthesis_conditions(plant, tol=1e-9):
    """Rank, stabilizability and detectability preconditions; raises RegularityError."""
    check_regularity(plant)
    A, B1, B2, C1, C2, D11, D12, D21, D22 = plant.blocks()
    if not is_stabilizable(A, B2, tol):
        raise RegularityError("(A, B2) is not stabilizable")
    if not is_detectable(A, C2, tol):
        raise RegularityError("(C2, A) is not detectable")
    # no invariant zeros of the (1,2) and (2,1) blocks on the imaginary axis
    for M, name in ((_zero_pencil_12(A, B2, C1, D12), "P12"),
                    (_zero_pencil_21(A, B1, C2, D21), "P21")):
        if M is not None:
            raise RegularityError(f"{name} has an invariant zero on the imaginary axis at {M}")


def _zero_pencil_12(A, B2, C1, D12):
    m = B2.shape[1]
    U, _, _ = np.linalg.svd(D12)
    perp = U[:, m:]
    # zeros of [A - sI, B2; C1, D12] with D12 full column rank equal the
    # unobservable modes of (A - B2 D12^+ C1, perp' C1)
    Dp = np.linalg.pinv(D12)
    Ar = A - B2 @ Dp @ C1
    bad = unobservable_modes(Ar, perp.T @ C1)
    bad = bad[np.abs(bad.real) <= 1e-9 * max(1.0, np.abs(Ar).max())] if bad.size else bad
    return bad[0] if bad.size else None


def _zero_pencil_21(A, B1, C2, D21):
    return _zero_pencil_12(A.T, C2.T, B1.T, D21.T)


class HinfSynthesizer(BaseEstimator):
    """Two-Riccati H-infinity output-feedback synthesis with gamma bisection.

    Parameters
    ----------
    gamma_min, gamma_max : float
        Bisection bracket.
    tol : float
        Relative bisection tolerance on gamma.
    max_iter : int
        Maximum number of bisection steps.

    Attributes
    ----------
    controller_ : StateSpaceModel
        Central controller mapping measurements to controls.
    gamma_ : float
        Smallest accepted performance level.
    result_ : SynthesisResult
    """

    def __init__(self, gamma_min=1e-4, gamma_max=1e4, tol=1e-3, max_iter=60):
        self.gamma_min = gamma_min
        self.gamma_max = gamma_max
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, plant, y=None):
        if not isinstance(plant, GeneralizedPlant):
            raise TypeError("fit expects a GeneralizedPlant")
        if not (0 < self.gamma_min <= self.gamma_max):
            raise ValueError("require 0 < gamma_min <= gamma_max")
        check_synthesis_conditions(plant)
        p = _NormalizedPlant(plant)

        def attempt(gamma):
            # a level is accepted only if the central controller it yields
            # actually meets it; near the optimum (I - YX/gamma^2) is too
            # ill-conditioned for that to hold in floating point
            it = _try_gamma(p, gamma)
            if it is None:
                return None
            K = _central_controller(p, it)
            T = closed_loop(plant, K)
            if T.spectral_abscissa() >= 0:
                return None
            achieved = hinf_norm(T, tol=1e-2 * self.tol)
            if achieved > gamma * (1 + 10 * self.tol):
                return None
            return it, K, T, achieved

        best = attempt(self.gamma_max)
        if best is None:
            raise BisectionFailure(f"gamma_max = {self.gamma_max:g} is infeasible")
        lo, hi = self.gamma_min, self.gamma_max
        iterations = 0
        low = attempt(lo) if lo < hi else None
        if low is not None:
            best, hi = low, lo
        else:
            while iterations < self.max_iter and hi - lo > self.tol * lo:
                mid = math.sqrt(lo * hi) if hi / lo > 2.0 else 0.5 * (lo + hi)
                trial = attempt(mid)
                iterations += 1
                if trial is None:
                    lo = mid
                else:
                    best, hi = trial, mid
        it, K, T, achieved = best
        assert it.gamma == hi
        abscissa = T.spectral_abscissa()
        self.result_ = SynthesisResult(
            controller=StateSpaceModel(K.A, K.B, K.C, K.D,
                                       plant.model.output_labels[plant.n_z:],
                                       plant.model.input_labels[plant.n_w:]),
            gamma=float(it.gamma),
            X=it.X,
            Y=it.Y,
            spectral_radius=it.radius,
            diagnostics={
                "iterations": iterations,
                "gamma_lower": float(lo),
                "closed_loop_hinf_norm": float(achieved),
                "closed_loop_abscissa": float(abscissa),
                "controller_order": int(K.n_states),
            },
        )
        self.controller_ = self.result_.controller
        self.gamma_ = self.result_.gamma
        log.info("hinfsyn: gamma=%.6g, closed-loop norm=%.6g", self.gamma_, achieved)
        return self

    def closed_loop(self, plant):
        check_is_fitted(self, "controller_")
        return closed_loop(plant, self.controller_)


def hinfsyn(plant, gamma_range=(1e-4, 1e4), tol=1e-3, max_iter=60):
    """Functional wrapper around :class:`HinfSynthesizer`."""
    est = HinfSynthesizer(gamma_range[0], gamma_range[1], tol, max_iter).fit(plant)
    return est.result_


@dataclass
class StabilityReport:
    abscissae: np.ndarray
    points: list
    margin: float = STABILITY_MARGIN

    @property
    def max_abscissa(self):
        return float(self.abscissae.max())

    @property
    def worst_rho(self):
        return tuple(float(v) for v in self.points[int(np.argmax(self.abscissae))])

    @property
    def passed(self):
        return bool(self.max_abscissa < self.margin)

    @property
    def failures(self):
        return [tuple(map(float, p)) for p, a in zip(self.points, self.abscissae)
                if a >= self.margin]

    def to_dict(self):
        return {
            "n_points": len(self.points),
            "max_abscissa": self.max_abscissa,
            "worst_rho": list(self.worst_rho),
            "margin": self.margin,
            "passed": self.passed,
            "failures": [list(f) for f in self.failures],
        }


def robust_stability_grid(controller, grid, inertia=InertiaParams(),
                          actuators=ActuatorModel(), eps=DEFAULT_EPS,
                          plant_factory=frozen_lti, margin=STABILITY_MARGIN):
    """Closed-loop spectral abscissa of ``controller`` at each frozen ``rho``.

    The loop is ``controller -> actuator lags -> frozen plant -> body rates``.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must contain at least one point")
    tau = actuators.time_constant if actuators is not None else None
    Ak, Bk, Ck, Dk = controller.A, controller.B, controller.C, controller.D
    nk = Ak.shape[0]
    abscissae = np.empty(len(grid))
    for i, rho in enumerate(grid):
        G = plant_factory(rho, inertia, eps)
        Ap, Bp = G.A, G.B
        Cy = G.C[3:6]
        n = Ap.shape[0]
        if tau is None:
            Acl = np.block([
                [Ap + Bp @ Dk @ Cy, Bp @ Ck],
                [Bk @ Cy, Ak],
            ])
        else:
            Acl = np.block([
                [Ap, Bp, np.zeros((n, nk))],
                [Dk @ Cy / tau, -np.eye(3) / tau, Ck / tau],
                [Bk @ Cy, np.zeros((nk, 3)), Ak],
            ])
        abscissae[i] = np.linalg.eigvals(Acl).real.max()
    return StabilityReport(abscissae, grid, margin)
