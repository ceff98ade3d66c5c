"""Closed-loop nonlinear simulation and comparison metrics.

The truth plant is the undamped nonlinear model (``eps = 0``) with
first-order actuator lags.  A continuous controller is integrated together
with the plant in one RK4 step; disturbance torques and gyro noise are held
constant over each step.  The PID baseline and the optional discrete H-inf
mode update once per step and hold their torque command (zero-order hold).
"""

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .dynamics import ActuatorModel, AttitudeState, InertiaParams, _derivative_into
from .environment import DrydenConfig, GyroNoiseConfig, disturbance_torques, gyro_noise
from .pid import CascadedPidGains, _pid_update, tune_axes
from .statespace import StateSpaceModel, c2d_bilinear
from .synthesis import SynthesisResult

CSV_COLUMNS = ("t", "phi", "theta", "psi", "p", "q", "r", "y_p", "y_q", "y_r",
               "L", "M", "N", "d_phi", "d_theta", "d_psi")
PID_SWEEP = (4.0, 6.0, 8.0)

_MODE_CONTINUOUS, _MODE_DISCRETE, _MODE_PID = 0, 1, 2
_OK, _SINGULAR, _NONFINITE = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    """Scenario description for :func:`run_closed_loop`.

    ``dryden`` or ``gyro_noise`` set to ``None`` switches that input off.
    When ``seed`` is given it overrides the seeds stored in both generator
    configs (two independent streams are derived from it).
    """

    controller: str = "hinf"
    hinf: Optional[StateSpaceModel] = None
    pid: Optional[CascadedPidGains] = None
    duration: float = 60.0
    dt: float = 1e-3
    initial_state: AttitudeState = AttitudeState()
    dryden: Optional[DrydenConfig] = field(default_factory=DrydenConfig)
    gyro_noise: Optional[GyroNoiseConfig] = field(default_factory=GyroNoiseConfig)
    actuator: ActuatorModel = ActuatorModel()
    inertia: InertiaParams = InertiaParams()
    seed: Optional[int] = None
    discrete: bool = False

    def __post_init__(self):
        if self.controller not in ("hinf", "pid"):
            raise ValueError("controller must be 'hinf' or 'pid'")
        if not self.duration > 0 or not self.dt > 0:
            raise ValueError("duration and dt must be > 0")
        if isinstance(self.hinf, SynthesisResult):
            object.__setattr__(self, "hinf", self.hinf.controller)
        if self.controller == "hinf":
            if self.hinf is None:
                raise ValueError("controller 'hinf' needs a controller model")
            if self.hinf.n_inputs != 3 or self.hinf.n_outputs != 3:
                raise ValueError("H-inf controller must map 3 rates to 3 torques")
        if self.controller == "pid" and self.pid is None:
            object.__setattr__(self, "pid", tune_axes(self.inertia))
        if self.gyro_noise is not None:
            ratio = 1.0 / (self.gyro_noise.sample_rate * self.dt)
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ValueError("dt must divide the sensor period")
        object.__setattr__(self, "initial_state",
                           AttitudeState(*np.asarray(self.initial_state, dtype=float)))

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def stream_seeds(self):
        """Seeds for (disturbance, noise)."""
        if self.seed is None:
            return (None if self.dryden is None else self.dryden.seed,
                    None if self.gyro_noise is None else self.gyro_noise.seed)
        a, b = np.random.SeedSequence(int(self.seed)).generate_state(2)
        return int(a), int(b)


@dataclass(eq=False)
class SimResult:
    """Sampled trajectories; row ``k`` is at ``t[k] = k dt``.

    ``controls`` are the saturated torque commands, ``disturbances`` the
    torques added at the plant input.  ``diverged`` is set when the run hit
    the pitch guard or produced non-finite values; trajectories then stop at
    the last valid sample.
    """

    t: np.ndarray
    states: np.ndarray
    measurements: np.ndarray
    controls: np.ndarray
    disturbances: np.ndarray
    controller: str
    diverged: bool = False
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.t.size
        for name in ("states", "measurements", "controls", "disturbances"):
            if getattr(self, name).shape[0] != n:
                raise ValueError("trajectory lengths differ")
        if not self.metrics:
            self.metrics = compute_metrics(self.states, self.controls)

    def to_array(self):
        return np.column_stack([self.t, self.states, self.measurements,
                                self.controls, self.disturbances])

    def write_csv(self, path):
        write_csv(path, CSV_COLUMNS, self.to_array())

    def summary(self):
        doc = {"controller": self.controller, "diverged": self.diverged,
               "samples": int(self.t.size)}
        doc.update(self.metrics)
        return doc


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def compute_metrics(states, controls):
    """Peak and RMSE of the Euler angles [deg], RMS and peak of the torques [N m].

    Peak is the largest absolute angle over all axes and samples; RMSE pools
    the three axes and all samples.  Torque metrics follow the same pooling.
    """
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    if states.shape[0] == 0:
        raise ValueError("empty trajectory")
    ang = np.degrees(states[:, :3])
    return {
        "peak_deg": float(np.abs(ang).max()),
        "rmse_deg": float(np.sqrt(np.mean(ang**2))),
        "control_rms": float(np.sqrt(np.mean(controls**2))),
        "control_peak": float(np.abs(controls).max()),
    }


@njit(cache=True)
def _joint_derivative(z, d, y_noise, Ak, Bk, Ck, Dk, u_hold, mode,
                      Ix, Iy, Iz, tau, u_max, out, u_out):
    # z = [plant(6), actuators(3), controller states]
    y = np.empty(3)
    for i in range(3):
        y[i] = z[3 + i] + y_noise[i]
    if mode == _MODE_CONTINUOUS:
        nk = Ak.shape[0]
        for i in range(3):
            v = 0.0
            for j in range(nk):
                v += Ck[i, j] * z[9 + j]
            for j in range(3):
                v += Dk[i, j] * y[j]
            u_out[i] = min(max(v, -u_max), u_max)
        for i in range(nk):
            v = 0.0
            for j in range(nk):
                v += Ak[i, j] * z[9 + j]
            for j in range(3):
                v += Bk[i, j] * y[j]
            out[9 + i] = v
    else:
        for i in range(3):
            u_out[i] = u_hold[i]
    for i in range(3):
        out[6 + i] = (u_out[i] - z[6 + i]) / tau
    return _derivative_into(z[:6], z[6] + d[0], z[7] + d[1], z[8] + d[2],
                            Ix, Iy, Iz, 0.0, out[:6])


@njit(cache=True)
def _simulate(z, xk, mode, Ak, Bk, Ck, Dk, kp_o, kp_i, ki, leak, pid_state,
              dist, noise, dt, Ix, Iy, Iz, tau, u_max,
              states, meas, controls):
    n = states.shape[0]
    nz = z.size
    k1 = np.empty(nz)
    k2 = np.empty(nz)
    k3 = np.empty(nz)
    k4 = np.empty(nz)
    tmp = np.empty(nz)
    u_hold = np.zeros(3)
    u_now = np.zeros(3)
    y = np.empty(3)
    for k in range(n):
        for i in range(3):
            y[i] = z[3 + i] + noise[k, i]
        if mode == _MODE_PID:
            _pid_update(kp_o, kp_i, ki, leak, u_max, pid_state, y, dt, u_hold)
        elif mode == _MODE_DISCRETE:
            nk = Ak.shape[0]
            for i in range(3):
                v = 0.0
                for j in range(nk):
                    v += Ck[i, j] * xk[j]
                for j in range(3):
                    v += Dk[i, j] * y[j]
                u_hold[i] = min(max(v, -u_max), u_max)
            xn = np.empty(nk)
            for i in range(nk):
                v = 0.0
                for j in range(nk):
                    v += Ak[i, j] * xk[j]
                for j in range(3):
                    v += Bk[i, j] * y[j]
                xn[i] = v
            xk[:] = xn
        ok = _joint_derivative(z, dist[k], noise[k], Ak, Bk, Ck, Dk, u_hold, mode,
                               Ix, Iy, Iz, tau, u_max, k1, u_now)
        for i in range(6):
            states[k, i] = z[i]
        for i in range(3):
            meas[k, i] = y[i]
            controls[k, i] = u_now[i]
        if not ok:
            return k, _SINGULAR
        if k == n - 1:
            break
        for i in range(nz):
            tmp[i] = z[i] + 0.5 * dt * k1[i]
        ok2 = _joint_derivative(tmp, dist[k], noise[k], Ak, Bk, Ck, Dk, u_hold, mode,
                                Ix, Iy, Iz, tau, u_max, k2, u_now)
        for i in range(nz):
            tmp[i] = z[i] + 0.5 * dt * k2[i]
        ok3 = _joint_derivative(tmp, dist[k], noise[k], Ak, Bk, Ck, Dk, u_hold, mode,
                                Ix, Iy, Iz, tau, u_max, k3, u_now)
        for i in range(nz):
            tmp[i] = z[i] + dt * k3[i]
        ok4 = _joint_derivative(tmp, dist[k], noise[k], Ak, Bk, Ck, Dk, u_hold, mode,
                                Ix, Iy, Iz, tau, u_max, k4, u_now)
        if not (ok2 and ok3 and ok4):
            return k + 1, _SINGULAR
        finite = True
        for i in range(nz):
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(z[i]):
                finite = False
        if not finite:
            return k + 1, _NONFINITE
    return n, _OK


def exogenous_inputs(cfg):
    """Disturbance torques and gyro noise, each of shape ``(n_steps + 1, 3)``."""
    n = cfg.n_steps + 1
    span = n * cfg.dt
    d_seed, n_seed = cfg.stream_seeds()
    dist = (np.zeros((n, 3)) if cfg.dryden is None
            else disturbance_torques(cfg.dryden, span, cfg.dt, d_seed))
    noise = (np.zeros((n, 3)) if cfg.gyro_noise is None
             else gyro_noise(cfg.gyro_noise, span, cfg.dt, n_seed))
    return dist[:n], noise[:n]


def run_closed_loop(cfg, dist=None, noise=None):
    """Simulate ``cfg`` and return a :class:`SimResult`.

    ``dist`` and ``noise`` may be supplied to reuse precomputed exogenous
    series (shape ``(n_steps + 1, 3)``); otherwise they are generated from
    the configured seeds.
    """
    n = cfg.n_steps + 1
    if dist is None or noise is None:
        gen_dist, gen_noise = exogenous_inputs(cfg)
        dist = gen_dist if dist is None else dist
        noise = gen_noise if noise is None else noise
    dist = np.ascontiguousarray(dist, dtype=float)
    noise = np.ascontiguousarray(noise, dtype=float)
    if dist.shape != (n, 3) or noise.shape != (n, 3):
        raise ValueError(f"exogenous series must have shape ({n}, 3)")

    kp_o = kp_i = ki = np.zeros(3)
    leak = 0.0
    if cfg.controller == "pid":
        mode = _MODE_PID
        g = cfg.pid
        kp_o, kp_i, ki, leak = g.Kp_o, g.Kp_i, g.Ki_i, float(g.leak)
        Ak, Bk, Ck, Dk = np.zeros((0, 0)), np.zeros((0, 3)), np.zeros((3, 0)), np.zeros((3, 3))
    else:
        K = cfg.hinf
        mats = c2d_bilinear(K, cfg.dt) if cfg.discrete else (K.A, K.B, K.C, K.D)
        mode = _MODE_DISCRETE if cfg.discrete else _MODE_CONTINUOUS
        Ak, Bk, Ck, Dk = (np.ascontiguousarray(M, dtype=float) for M in mats)
    # continuous controller states ride along in the RK4 state vector
    n_cont = Ak.shape[0] if mode == _MODE_CONTINUOUS else 0
    n_disc = Ak.shape[0] if mode == _MODE_DISCRETE else 0
    z = np.zeros(9 + n_cont)
    z[:6] = cfg.initial_state
    states = np.zeros((n, 6))
    meas = np.zeros((n, 3))
    controls = np.zeros((n, 3))
    done, status = _simulate(z, np.zeros(n_disc), mode, Ak, Bk, Ck, Dk, kp_o, kp_i, ki,
                             leak, np.zeros(6), dist, noise, cfg.dt, cfg.inertia.Ix,
                             cfg.inertia.Iy, cfg.inertia.Iz, cfg.actuator.time_constant,
                             cfg.actuator.u_max, states, meas, controls)
    m = done if status != _OK else n
    t = np.arange(m) * cfg.dt
    return SimResult(t, states[:m], meas[:m], controls[:m], dist[:m],
                     controller=cfg.controller, diverged=status != _OK)


def pid_sweep(cfg, bandwidths=PID_SWEEP, dist=None, noise=None):
    """Run the PID at each bandwidth; return ``(best, results)`` by lowest RMSE.

    Diverged runs are never selected unless every run diverged.
    """
    from dataclasses import replace

    if dist is None or noise is None:
        dist, noise = exogenous_inputs(cfg)
    results = {}
    for wc in bandwidths:
        gains = tune_axes(cfg.inertia, wc, leak=cfg.pid.leak if cfg.pid else 1e-3)
        run = replace(cfg, controller="pid", pid=gains)
        results[wc] = run_closed_loop(run, dist, noise)

    def key(item):
        wc, res = item
        return (res.diverged, res.metrics["rmse_deg"], wc)

    best_wc = min(results.items(), key=key)[0]
    return best_wc, results
