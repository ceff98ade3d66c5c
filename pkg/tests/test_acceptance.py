"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from rotorhinf.augmentation import build_generalized_plant, closed_loop, hover_nominal
from rotorhinf.cli import main, run_comparison
from rotorhinf.config import RunConfig
from rotorhinf.dynamics import ActuatorModel, attitude_derivative, attitude_derivative_batch, \
    kinetic_energy, rk4_step
from rotorhinf.environment import DrydenConfig, GyroNoiseConfig, analytic_psd, \
    gust_velocities, gyro_noise
from rotorhinf.lpv import RHO4_FLOOR, default_rho_box, extract_rho_batch, input_matrix, \
    lpv_a_batch, rho_grid
from rotorhinf.norms import hinf_norm, sigma_max
from rotorhinf.riccati import CareProblem, solve_care
from rotorhinf.simulation import SimConfig, exogenous_inputs, run_closed_loop
from rotorhinf.statespace import StateSpaceModel
from rotorhinf.synthesis import HinfSynthesizer, robust_stability_grid

from conftest import acceptance_lines, random_stable
from test_environment import third_octave_psd_error
from test_riccati_norms import _refined_peak


def report(number, passed, detail, runtime):
    line = f"[criterion {number}] {'PASS' if passed else 'FAIL'}  {detail}  ({runtime:.2f} s)"
    print(line)
    acceptance_lines.append(line)
    return passed


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_criterion_1_lpv_exactness():
    rng = np.random.default_rng(1)
    n = 10**5
    lim = math.acos(RHO4_FLOOR) - 1e-6
    X = np.column_stack([rng.uniform(-lim, lim, (n, 3)), rng.uniform(-1.5, 1.5, (n, 3))])
    U = rng.uniform(-4.0, 4.0, (n, 3))
    with Timer() as t:
        lpv = np.einsum("nij,nj->ni", lpv_a_batch(extract_rho_batch(X)), X) + U @ input_matrix().T
        worst = float(np.abs(lpv - attitude_derivative_batch(X, U)).max())
    ok = worst <= 1e-12 and t.elapsed < 5.0
    assert report(1, ok, f"max |LPV - nonlinear| = {worst:.2e} over {n} samples (<= 1e-12, < 5 s)",
                  t.elapsed)


def _bracketing_systems():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n, m, p = rng.integers(1, 7), rng.integers(1, 4), rng.integers(1, 4)
        yield random_stable(rng, n, m, p, with_d=bool(rng.integers(0, 2)))


SWEEP = np.concatenate([[0.0], np.logspace(-3, 3, 400)])


def test_criterion_2_riccati_and_norm_oracles():
    tol = 1e-6
    with Timer() as t:
        x1 = solve_care(CareProblem([[0.0]], [[1.0]], [[1.0]], [[1.0]]))[0, 0]
        x2 = solve_care(CareProblem([[1.0]], [[1.0]], [[1.0]], [[1.0]]))[0, 0]
        n1 = hinf_norm(StateSpaceModel.from_tf([1], [1, 1]))
        z, wn = 0.1, 3.0
        n2 = hinf_norm(StateSpaceModel.from_tf([wn**2], [1, 2 * z * wn, wn**2]))
        lower = upper = 0
        for G in _bracketing_systems():
            h = hinf_norm(G, tol=tol)
            lower += bool(sigma_max(G, SWEEP).max() <= h)
            upper += bool(h <= _refined_peak(G) * (1 + 5 * tol))
    ok = (abs(x1 - 1) <= 1e-10 and abs(x2 - 1 - math.sqrt(2)) <= 1e-10 and abs(n1 - 1) <= 1e-6
          and abs(n2 - 5.02519) <= 1e-4 and lower == 100 and upper == 100 and t.elapsed < 30)
    assert report(2, ok, f"CARE err {abs(x1 - 1):.1e}/{abs(x2 - 1 - math.sqrt(2)):.1e}, "
                         f"||1/(s+1)|| = {n1:.8f}, resonant peak = {n2:.6f}, "
                         f"sweep <= norm {lower}/100, norm <= refined peak {upper}/100",
                  t.elapsed)


@pytest.mark.xfail(strict=True, reason="a 400-point sweep can miss a sharp peak by > 5 tol")
def test_criterion_2_literal_sweep_upper_bound():
    tol = 1e-6
    with Timer() as t:
        ok_count = sum(hinf_norm(G, tol=tol) <= sigma_max(G, SWEEP).max() * (1 + 5 * tol)
                       for G in _bracketing_systems())
    assert report("2b", ok_count == 100,
                  f"norm <= 400-pt sweep max (1 + 5 tol) on {ok_count}/100 systems", t.elapsed)


def test_criterion_3_synthesis():
    with Timer() as t:
        plant = build_generalized_plant(hover_nominal(), ActuatorModel())
        est = HinfSynthesizer().fit(plant)
        norm = hinf_norm(closed_loop(plant, est.controller_))
    order = est.controller_.n_states
    ok = (np.isfinite(est.gamma_) and norm <= est.gamma_ * (1 + 1e-2) and order == 9
          and t.elapsed < 10)
    assert report(3, ok, f"gamma = {est.gamma_:.4f}, ||T_wz|| = {norm:.4f}, order = {order}",
                  t.elapsed)


def test_criterion_4_robust_stability(default_design):
    box = default_rho_box()
    grid = rho_grid(box, 2, 200)
    R = np.array(grid)
    interior = R[128:]
    trig = (np.allclose(interior[:, 0]**2 + interior[:, 1]**2, 1.0)
            and np.allclose(interior[:, 2]**2 + interior[:, 3]**2, 1.0)
            and interior[:, 3].min() >= RHO4_FLOOR)
    with Timer() as t:
        rep = robust_stability_grid(default_design.controller_, grid)
    vertices = {tuple(v) for v in box.vertices()}
    ok = (rep.passed and vertices <= {tuple(p) for p in grid} and len(interior) >= 200 and trig
          and t.elapsed < 20)
    assert report(4, ok, f"{len(grid)} points (128 vertices + {len(interior)} trig-consistent), "
                         f"max abscissa = {rep.max_abscissa:.3e}", t.elapsed)


def test_criterion_5_directional_comparison(default_design):
    cfg = RunConfig()
    with Timer() as t:
        rows, agg, _ = run_comparison(cfg, default_design.controller_, list(range(10)))
    pairs = list(zip(rows[0::2], rows[1::2]))
    rmse_ok = all(h["rmse_deg"] < p["rmse_deg"] for h, p in pairs)
    ratio = agg["peak_ratio_pid_over_hinf"]
    u_ok = agg["hinf"]["control_rms"] <= agg["pid"]["control_rms"]
    # disturbance level actually seen by the paired runs (roll and pitch)
    peaks = [np.abs(exogenous_inputs(cfg.sim_config("pid", seed=s))[0][:, :2]).max()
             for s in range(10)]
    ok = rmse_ok and ratio >= 2.0 and u_ok and t.elapsed < 180
    assert report(5, ok, f"H-inf RMSE < PID on {sum(h['rmse_deg'] < p['rmse_deg'] for h, p in pairs)}"
                         f"/10 seeds, mean peak ratio = {ratio:.3f}, control RMS "
                         f"{agg['hinf']['control_rms']:.4f} vs {agg['pid']['control_rms']:.4f} N m, "
                         f"disturbance peak {min(peaks):.2f}-{max(peaks):.2f} N m", t.elapsed)


def test_criterion_6_turbulence_fidelity():
    cfg = DrydenConfig()
    with Timer() as t:
        g = gust_velocities(cfg, 600.0, 1e-3)
        errs = [third_octave_psd_error(g[:, i], lambda w, i=i: analytic_psd(cfg, w)[i], 1e-3)
                for i in range(3)]
        noise_cfg = GyroNoiseConfig()
        n = gyro_noise(noise_cfg, 1000.0, 1e-3)
        var_err = float(np.max(np.abs(n.var(axis=0) / np.square(noise_cfg.sigma) - 1)))
    ok = max(errs) <= 3.0 and var_err <= 0.01 and t.elapsed < 30
    assert report(6, ok, f"PSD error u/v/w = {errs[0]:.2f}/{errs[1]:.2f}/{errs[2]:.2f} dB, "
                         f"gyro variance error = {100 * var_err:.3f}%", t.elapsed)


def test_criterion_7_determinism(tmp_path, default_design):
    ctrl = tmp_path / "controller.json"
    default_design.result_.save(ctrl)
    outs = [tmp_path / "run1", tmp_path / "run2"]
    with Timer() as t:
        codes = [main(["compare", "--controller", str(ctrl), "--out", str(o)]) for o in outs]
    csv_same = (outs[0] / "compare.csv").read_bytes() == (outs[1] / "compare.csv").read_bytes()
    docs = [json.loads((o / "compare_metrics.json").read_text()) for o in outs]
    for d in docs:
        d.pop("metadata")
    json_same = docs[0] == docs[1]
    raw = [(o / "compare_metrics.json").read_text().splitlines() for o in outs]
    diff = [a for a, b in zip(*raw) if a != b]
    ok = codes == [0, 0] and csv_same and json_same and all('"created"' in a for a in diff)
    assert report(7, ok, f"compare CSV identical = {csv_same}, JSON identical modulo "
                         f"timestamp = {json_same} ({len(diff)} differing line)", t.elapsed)


def test_criterion_8_integration_quality(default_design):
    with Timer() as t:
        cfg = SimConfig(hinf=default_design.controller_, seed=0)
        dist, noise = exogenous_inputs(cfg)
        fine = replace(cfg, dt=cfg.dt / 2)
        held = lambda x: np.repeat(x, 2, axis=0)[:fine.n_steps + 1]
        a = run_closed_loop(cfg, dist, noise).metrics["rmse_deg"]
        b = run_closed_loop(fine, held(dist), held(noise)).metrics["rmse_deg"]
        change = abs(b / a - 1)
        x = np.array([0.0, 0.0, 0.0, 0.5, 0.1, -0.3])
        e0 = kinetic_energy(x)
        f = lambda _, s: attitude_derivative(s, np.zeros(3))
        for k in range(10000):
            x = rk4_step(f, x, k * 1e-3, 1e-3)
        drift = abs(kinetic_energy(x) - e0) / e0
    ok = change < 0.01 and drift <= 1e-6
    assert report(8, ok, f"RMSE change on dt/2 = {100 * change:.2e}%, "
                         f"energy drift over 10 s = {drift:.2e}", t.elapsed)
