"""Command-line entry points: ``synth``, ``verify``, ``simulate``, ``compare``, ``turbulence``.

Exit codes: 0 success, 1 configuration or usage error, 2 regularity
failure, 3 gamma bisection failure, 4 robust-stability check failed,
5 runtime error in a simulation.
"""

import argparse
import datetime
import json
import logging
import os
import sys

import numpy as np

from .environment import disturbance_torques
from .exceptions import BisectionFailure, ConfigError, RegularityError, RotorHinfError
from .lpv import RhoVector
from .simulation import exogenous_inputs, pid_sweep, run_closed_loop, write_csv, write_json
from .synthesis import SynthesisResult, robust_stability_grid

EXIT_OK, EXIT_CONFIG, EXIT_REGULARITY, EXIT_BISECTION, EXIT_UNSTABLE, EXIT_RUNTIME = range(6)

log = logging.getLogger("rotorhinf")


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _out_dir(args, cfg):
    path = args.out or cfg.output.directory
    os.makedirs(path, exist_ok=True)
    return path


def _load(args):
    from .config import load_config

    return load_config(args.config)


def _load_controller(path):
    try:
        return SynthesisResult.load(path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load controller {path}: {exc}") from None


def _metrics_table(rows):
    head = f"{'seed':>6} {'controller':<12} {'peak [deg]':>11} {'RMSE [deg]':>11} " \
           f"{'u RMS [Nm]':>11} {'u peak [Nm]':>12}"
    lines = [head, "-" * len(head)]
    for r in rows:
        tag = r["controller"] + ("*" if r.get("diverged") else "")
        lines.append(f"{str(r.get('seed', '-')):>6} {tag:<12} {r['peak_deg']:11.4f} "
                     f"{r['rmse_deg']:11.4f} {r['control_rms']:11.4f} {r['control_peak']:12.4f}")
    return "\n".join(lines)


def cmd_synth(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    try:
        plant = cfg.generalized_plant()
        est = cfg.synthesizer().fit(plant)
    except RegularityError as exc:
        print(f"regularity check failed: {exc}", file=sys.stderr)
        return EXIT_REGULARITY
    except BisectionFailure as exc:
        print(f"gamma bisection failed: {exc}", file=sys.stderr)
        return EXIT_BISECTION
    path = os.path.join(out, "controller.json")
    est.result_.save(path, metadata={"created": _timestamp()})
    print(f"gamma = {est.gamma_:.6g}")
    print(f"controller order = {est.controller_.n_states}")
    print(f"closed-loop H-inf norm = {est.result_.diagnostics['closed_loop_hinf_norm']:.6g}")
    print(f"wrote {path}")
    return EXIT_OK


def _read_grid(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read grid file {path}: {exc}") from None
    points = doc.get("points", doc) if isinstance(doc, dict) else doc
    if not isinstance(points, list):
        raise ConfigError("grid file must hold a list of 7-element rho vectors")
    try:
        return [RhoVector(*map(float, p)) for p in points]
    except TypeError:
        raise ConfigError("every grid point needs exactly 7 entries") from None


def cmd_verify(args):
    cfg = _load(args)
    result = _load_controller(args.controller)
    grid = _read_grid(args.grid_file) if args.grid_file else cfg.grid_points(args.seed)
    if not grid:
        print("usage error: the verification grid is empty", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args, cfg)
    report = robust_stability_grid(result.controller, grid, cfg.inertia.build(),
                                   cfg.actuator.build(), cfg.synthesis.eps)
    doc = report.to_dict()
    doc["metadata"] = {"created": _timestamp()}
    path = os.path.join(out, "verify_report.json")
    write_json(path, doc)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status}: {len(grid)} points, worst abscissa {report.max_abscissa:.6g}")
    print(f"worst rho = {[round(v, 6) for v in report.worst_rho]}")
    print(f"wrote {path}")
    return EXIT_OK if report.passed else EXIT_UNSTABLE


def cmd_simulate(args):
    cfg = _load(args)
    if args.controller == "pid":
        sim = cfg.sim_config("pid", seed=args.seed)
    else:
        sim = cfg.sim_config("hinf", _load_controller(args.controller).controller,
                             seed=args.seed)
    out = _out_dir(args, cfg)
    try:
        res = run_closed_loop(sim)
    except RotorHinfError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    name = sim.controller
    csv_path = os.path.join(out, f"sim_{name}.csv")
    json_path = os.path.join(out, f"metrics_{name}.json")
    res.write_csv(csv_path)
    doc = res.summary()
    doc["seed"] = sim.seed
    doc["metadata"] = {"created": _timestamp()}
    write_json(json_path, doc)
    print(_metrics_table([dict(doc, seed=sim.seed if sim.seed is not None else "-")]))
    if res.diverged:
        print("run diverged (pitch guard or non-finite state)")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _combined_rows(h, p, dist, dt):
    n = max(h.t.size, p.t.size)

    def padded(a):
        full = np.full((n, a.shape[1]), np.nan)
        full[:a.shape[0]] = a
        return full

    t = np.arange(n) * dt
    return np.column_stack([t, dist[:n], padded(h.states[:, :3]), padded(p.states[:, :3]),
                            padded(h.controls), padded(p.controls)])


COMPARE_COLUMNS = ("t", "d_phi", "d_theta", "d_psi",
                   "hinf_phi", "hinf_theta", "hinf_psi", "pid_phi", "pid_theta", "pid_psi",
                   "hinf_L", "hinf_M", "hinf_N", "pid_L", "pid_M", "pid_N")


def run_comparison(cfg, controller, seeds):
    """Paired runs per seed; returns ``(rows, aggregate, first_seed_runs)``."""
    rows = []
    first = None
    for seed in seeds:
        base = cfg.sim_config("hinf", controller, seed=seed)
        dist, noise = exogenous_inputs(base)
        h = run_closed_loop(base, dist, noise)
        wc, runs = pid_sweep(base, cfg.pid.sweep, dist, noise)
        p = runs[wc]
        rows.append(dict(h.summary(), seed=seed))
        rows.append(dict(p.summary(), seed=seed, bandwidth=wc))
        if first is None:
            first = (h, p, dist)
    aggregate = {}
    for name in ("hinf", "pid"):
        sel = [r for r in rows if r["controller"] == name]
        aggregate[name] = {k: float(np.mean([r[k] for r in sel]))
                           for k in ("peak_deg", "rmse_deg", "control_rms", "control_peak")}
        aggregate[name]["diverged_runs"] = int(sum(r["diverged"] for r in sel))
    pairs = list(zip(rows[0::2], rows[1::2]))
    aggregate["peak_ratio_pid_over_hinf"] = float(np.mean(
        [p["peak_deg"] / h["peak_deg"] for h, p in pairs if h["peak_deg"] > 0] or [np.nan]))
    aggregate["hinf_rmse_lower_every_seed"] = bool(all(h["rmse_deg"] < p["rmse_deg"]
                                                       for h, p in pairs))
    return rows, aggregate, first


def cmd_compare(args):
    cfg = _load(args)
    if args.controller:
        controller = _load_controller(args.controller).controller
    else:
        try:
            controller = cfg.synthesizer().fit(cfg.generalized_plant()).controller_
        except RegularityError as exc:
            print(f"regularity check failed: {exc}", file=sys.stderr)
            return EXIT_REGULARITY
        except BisectionFailure as exc:
            print(f"gamma bisection failed: {exc}", file=sys.stderr)
            return EXIT_BISECTION
    seeds = [args.seed] if args.seed is not None else list(cfg.sim.seeds)
    out = _out_dir(args, cfg)
    try:
        rows, aggregate, (h, p, dist) = run_comparison(cfg, controller, seeds)
    except RotorHinfError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    csv_path = os.path.join(out, "compare.csv")
    json_path = os.path.join(out, "compare_metrics.json")
    write_csv(csv_path, COMPARE_COLUMNS, _combined_rows(h, p, dist, cfg.sim.dt))
    write_json(json_path, {"per_seed": rows, "aggregate": aggregate,
                           "metadata": {"created": _timestamp()}})
    print(_metrics_table(rows))
    mean_rows = [dict(aggregate[n], controller=n, seed="mean") for n in ("hinf", "pid")]
    print(_metrics_table(mean_rows).split("\n", 2)[2])
    print(f"mean peak ratio PID/H-inf = {aggregate['peak_ratio_pid_over_hinf']:.3f}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_turbulence(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    dryden = cfg.dryden.build()
    d = disturbance_torques(dryden, cfg.sim.duration, cfg.sim.dt, args.seed)
    t = np.arange(d.shape[0]) * cfg.sim.dt
    path = os.path.join(out, "disturbances.csv")
    write_csv(path, ("t", "d_phi", "d_theta", "d_psi"), np.column_stack([t, d]))
    print(f"peak |d| per axis [N m]: {np.round(np.abs(d).max(axis=0), 4).tolist()}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rotorhinf", description="H-inf and cascaded-PID attitude control of a multi-rotor")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration (defaults if omitted)")
        p.add_argument("--out", help="output directory (default: config output.directory)")
        p.add_argument("--seed", type=int, default=None, help="seed override")

    p = sub.add_parser("synth", help="synthesize the H-inf controller")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="robust-stability check over the rho grid")
    common(p)
    p.add_argument("--controller", required=True, help="controller JSON from synth")
    p.add_argument("--grid-file", help="JSON list of rho vectors replacing the config grid")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="closed-loop nonlinear simulation")
    common(p)
    p.add_argument("--controller", required=True, help="controller JSON, or 'pid'")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="paired H-inf vs PID runs over the seed list")
    common(p)
    p.add_argument("--controller", help="controller JSON (synthesized from config if omitted)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("turbulence", help="export Dryden disturbance torques")
    common(p)
    p.set_defaults(func=cmd_turbulence)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.seed is not None and args.seed < 0:
        print("--seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
