import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.signal

from rotorhinf.dynamics import AttitudeState, InertiaParams
from rotorhinf.simulation import (
    CSV_COLUMNS,
    SimConfig,
    SimResult,
    compute_metrics,
    exogenous_inputs,
    pid_sweep,
    run_closed_loop,
)
from rotorhinf.synthesis import SynthesisResult

QUIET = dict(dryden=None, gyro_noise=None)


@pytest.fixture(scope="module")
def K(default_design):
    return default_design.controller_


def hover_closed_loop(K, inertia=InertiaParams(), tau=0.02):
    """Linear hover loop, state (angles, rates, actuator torques, controller)."""
    nk = K.n_states
    n = 9 + nk
    A = np.zeros((n, n))
    A[0:3, 3:6] = np.eye(3)
    A[3:6, 6:9] = np.diag(1 / np.asarray(inertia.diag))
    A[6:9, 6:9] = -np.eye(3) / tau
    A[6:9, 3:6] = K.D / tau
    A[6:9, 9:] = K.C / tau
    A[9:, 3:6] = K.B
    A[9:, 9:] = K.A
    return A


def test_zero_scenario_stays_zero(K):
    for cfg in (SimConfig(hinf=K, duration=2.0, **QUIET),
                SimConfig(controller="pid", duration=2.0, **QUIET)):
        res = run_closed_loop(cfg)
        for arr in (res.states, res.measurements, res.controls, res.disturbances):
            assert not arr.any()
        assert all(v == 0.0 for v in res.metrics.values())
        assert not res.diverged


def test_result_shapes(K):
    res = run_closed_loop(SimConfig(hinf=K, duration=1.0, seed=1))
    n = 1001
    assert res.t.shape == (n,)
    assert res.to_array().shape == (n, len(CSV_COLUMNS))
    np.testing.assert_allclose(np.diff(res.t), 1e-3)
    np.testing.assert_array_equal(res.measurements[0], res.states[0, 3:] +
                                  exogenous_inputs(SimConfig(hinf=K, duration=1.0, seed=1))[1][0])


def test_linear_consistency(K):
    """Small-angle nonlinear run matches the frozen-hover linear loop within 5% L2."""
    x0 = np.array([math.radians(1.0), math.radians(-2.0), math.radians(1.5), 0.05, -0.03, 0.04])
    cfg = SimConfig(hinf=K, duration=10.0, initial_state=AttitudeState(*x0), **QUIET)
    res = run_closed_loop(cfg)
    A = hover_closed_loop(K)
    z0 = np.zeros(A.shape[0])
    z0[:6] = x0
    sys = scipy.signal.StateSpace(A, np.zeros((A.shape[0], 1)), np.eye(A.shape[0])[:6],
                                  np.zeros((6, 1)))
    _, lin, _ = scipy.signal.lsim(sys, np.zeros(res.t.size), res.t, X0=z0)
    err = np.linalg.norm(res.states - lin) / np.linalg.norm(lin)
    assert err <= 0.05
    assert not res.diverged


def test_linear_loop_oracle_is_marginal_only_in_angles(K):
    lam = np.linalg.eigvals(hover_closed_loop(K))
    assert np.sum(np.abs(lam) < 1e-9) == 3
    assert np.max(lam[np.abs(lam) >= 1e-9].real) < 0


@pytest.mark.xfail(strict=True, reason="gyro-only loop cannot observe or correct attitude")
def test_hinf_initial_attitude_recovery(K):
    x0 = AttitudeState(*np.radians([5.0, 5.0, 5.0]), 0.0, 0.0, 0.0)
    res = run_closed_loop(SimConfig(hinf=K, duration=10.0, initial_state=x0, **QUIET))
    assert np.degrees(np.linalg.norm(res.states[-1, :3])) < 0.1


def test_metrics_constant():
    states = np.zeros((100, 6))
    states[:, :3] = math.radians(2.0)
    m = compute_metrics(states, np.zeros((100, 3)))
    assert m["peak_deg"] == pytest.approx(2.0)
    assert m["rmse_deg"] == pytest.approx(2.0)


def test_metrics_single_axis_sine():
    t = np.linspace(0, 10, 100000, endpoint=False)
    A = 3.0
    states = np.zeros((t.size, 6))
    states[:, 1] = math.radians(A) * np.sin(2 * np.pi * t)
    controls = np.zeros((t.size, 3))
    controls[:, 2] = 0.5 * np.sin(2 * np.pi * t)
    m = compute_metrics(states, controls)
    assert m["peak_deg"] == pytest.approx(A, rel=1e-8)
    assert m["rmse_deg"] == pytest.approx(A / math.sqrt(6), rel=1e-10)
    assert m["control_rms"] == pytest.approx(0.5 / math.sqrt(6), rel=1e-10)
    assert m["control_peak"] == pytest.approx(0.5, rel=1e-8)


def test_metrics_zero_and_empty():
    assert set(compute_metrics(np.zeros((5, 6)), np.zeros((5, 3))).values()) == {0.0}
    with pytest.raises(ValueError):
        compute_metrics(np.zeros((0, 6)), np.zeros((0, 3)))


def test_metrics_recomputable(K):
    res = run_closed_loop(SimConfig(hinf=K, duration=3.0, seed=5))
    assert res.metrics == compute_metrics(res.states, res.controls)


def test_seed_reproducibility(K):
    cfg = SimConfig(hinf=K, duration=5.0, seed=11)
    a, b = run_closed_loop(cfg), run_closed_loop(cfg)
    np.testing.assert_array_equal(a.to_array(), b.to_array())
    c = run_closed_loop(replace(cfg, seed=12))
    assert not np.array_equal(a.states, c.states)


def test_streams_differ_between_seeds():
    a = SimConfig(controller="pid", seed=0).stream_seeds()
    assert len(set(a)) == 2
    assert a != SimConfig(controller="pid", seed=1).stream_seeds()


def test_controller_file_roundtrip(tmp_path, default_design):
    path = tmp_path / "controller.json"
    default_design.result_.save(path)
    loaded = SynthesisResult.load(path)
    a = run_closed_loop(SimConfig(hinf=default_design.controller_, duration=5.0, seed=2))
    b = run_closed_loop(SimConfig(hinf=loaded, duration=5.0, seed=2))
    np.testing.assert_array_equal(a.to_array(), b.to_array())


def test_dt_halving_changes_rmse_below_1pct(K):
    cfg = SimConfig(hinf=K, seed=0)
    dist, noise = exogenous_inputs(cfg)
    fine = replace(cfg, dt=cfg.dt / 2)
    # same piecewise-constant inputs, so only integration error differs
    held = lambda x: np.repeat(x, 2, axis=0)[:fine.n_steps + 1]
    coarse = run_closed_loop(cfg, dist, noise).metrics["rmse_deg"]
    refined = run_closed_loop(fine, held(dist), held(noise)).metrics["rmse_deg"]
    assert abs(refined / coarse - 1) < 0.01


def test_discrete_mode_tracks_continuous(K):
    cfg = SimConfig(hinf=K, duration=10.0, seed=4)
    c = run_closed_loop(cfg)
    d = run_closed_loop(replace(cfg, discrete=True))
    assert not d.diverged
    assert d.metrics["rmse_deg"] == pytest.approx(c.metrics["rmse_deg"], rel=0.02)


def test_divergence_is_flagged():
    cfg = SimConfig(controller="pid", duration=5.0, **QUIET)
    n = cfg.n_steps + 1
    dist = np.zeros((n, 3))
    dist[:, 1] = 20.0  # far beyond the 4 N m actuator authority
    res = run_closed_loop(cfg, dist, np.zeros((n, 3)))
    assert res.diverged
    assert res.t.size < n
    assert np.all(np.isfinite(res.states))
    assert abs(math.degrees(res.states[-1, 1])) <= 90.0


def test_pid_sweep_selects_lowest_rmse():
    cfg = SimConfig(controller="pid", duration=10.0, seed=3)
    best, runs = pid_sweep(cfg, (4.0, 6.0, 8.0))
    assert set(runs) == {4.0, 6.0, 8.0}
    assert runs[best].metrics["rmse_deg"] == min(r.metrics["rmse_deg"] for r in runs.values())


def test_hinf_beats_pid_single_seed(K):
    cfg = SimConfig(hinf=K, seed=0)
    dist, noise = exogenous_inputs(cfg)
    h = run_closed_loop(cfg, dist, noise)
    best, runs = pid_sweep(cfg, dist=dist, noise=noise)
    assert h.metrics["rmse_deg"] < runs[best].metrics["rmse_deg"]


@pytest.mark.parametrize("kw", [dict(controller="lqr"), dict(controller="hinf"),
                                dict(controller="pid", dt=3e-4), dict(controller="pid", duration=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_result_length_check():
    with pytest.raises(ValueError):
        SimResult(np.zeros(3), np.zeros((2, 6)), np.zeros((3, 3)), np.zeros((3, 3)),
                  np.zeros((3, 3)), "pid")


def test_csv_export(tmp_path, K):
    res = run_closed_loop(SimConfig(hinf=K, duration=0.5, seed=1))
    path = tmp_path / "run.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back, res.to_array())
