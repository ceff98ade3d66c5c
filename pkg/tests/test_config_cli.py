import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from rotorhinf.cli import COMPARE_COLUMNS, main
from rotorhinf.config import RunConfig, load_config, parse_config
from rotorhinf.exceptions import ConfigError
from rotorhinf.simulation import CSV_COLUMNS
from rotorhinf.statespace import StateSpaceModel

FAST = {"sim": {"duration": 2.0, "seeds": [0, 1]}, "pid": {"sweep": [6.0, 8.0]}}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def fast_config(tmp_path):
    return write(tmp_path / "fast.json", FAST)


@pytest.fixture(scope="module")
def controller_file(tmp_path_factory, default_design):
    path = tmp_path_factory.mktemp("ctrl") / "controller.json"
    default_design.result_.save(path)
    return str(path)


def strip_metadata(doc):
    doc = dict(doc)
    doc.pop("metadata", None)
    return doc


def test_defaults_match_library():
    cfg = load_config(None)
    assert cfg == RunConfig()
    assert cfg.weights.w_act == 0.15
    assert cfg.generalized_plant().n_states == 9
    assert list(cfg.sim.seeds) == list(range(10))


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError) as exc:
        parse_config({"weights": {"w_atx": 3.0}})
    assert "weights.w_atx" in str(exc.value)


def test_invalid_value_reports_path():
    with pytest.raises(ConfigError) as exc:
        parse_config({"actuator": {"time_constant": -1.0}, "sim": {"dt": 0}})
    msg = str(exc.value)
    assert "actuator.time_constant" in msg and "sim.dt" in msg


def test_per_axis_weights():
    cfg = parse_config({"weights": {"w_att": [20, 10, 5]}})
    assert cfg.weights.build().w_att.tolist() == [20.0, 10.0, 5.0]
    with pytest.raises(ConfigError):
        parse_config({"weights": {"w_att": [20, -1, 5]}})


def test_sim_config_from_run_config():
    cfg = parse_config({"dryden": {"enabled": False}, "sim": {"seed": 4}})
    sc = cfg.sim_config("pid")
    assert sc.dryden is None and sc.seed == 4
    assert sc.pid.Kp_i.tolist() == cfg.pid_gains().Kp_i.tolist()


def test_unreadable_config_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["synth", "--config", str(tmp_path / "missing.json")]) == 1


def test_unknown_key_exit_1(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"synthesis": {"gamma_mx": 3}})
    assert main(["synth", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "synthesis.gamma_mx" in capsys.readouterr().err


def test_synth_exit_0(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "controller.json").read_text())
    assert len(doc["controller"]["A"]) == 9
    assert "created" in doc["metadata"]
    assert "gamma =" in capsys.readouterr().out


def test_synth_regularity_exit_2(tmp_path):
    cfg = write(tmp_path / "c.json", {"synthesis": {"eps": 0.0}})
    assert main(["synth", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_synth_bisection_exit_3(tmp_path):
    cfg = write(tmp_path / "c.json", {"synthesis": {"gamma_min": 1e-4, "gamma_max": 1e-4}})
    assert main(["synth", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_verify_pass_exit_0(tmp_path, controller_file):
    assert main(["verify", "--controller", controller_file, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["passed"] and rep["n_points"] == 128 + 243 + 200


def test_verify_unstable_exit_4(tmp_path, default_design):
    res = default_design.result_
    K = res.controller
    flipped = replace(res, controller=StateSpaceModel(K.A, K.B, -K.C, K.D))
    path = tmp_path / "flipped.json"
    flipped.save(path)
    grid = write(tmp_path / "grid.json", [[0, 0, 1, 1, 0, 0, 1], [0.5, -0.5, 1, 0.9, 0.2, 0, 1]])
    assert main(["verify", "--controller", str(path), "--grid-file", grid,
                 "--out", str(tmp_path)]) == 4
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert not rep["passed"]
    assert rep["worst_rho"] is not None


def test_verify_empty_grid_exit_1(tmp_path, controller_file):
    grid = write(tmp_path / "grid.json", [])
    assert main(["verify", "--controller", controller_file, "--grid-file", grid,
                 "--out", str(tmp_path)]) == 1


def test_verify_bad_grid_point_exit_1(tmp_path, controller_file):
    grid = write(tmp_path / "grid.json", [[0, 0, 1]])
    assert main(["verify", "--controller", controller_file, "--grid-file", grid]) == 1


def test_missing_controller_exit_1(tmp_path):
    assert main(["simulate", "--controller", str(tmp_path / "nope.json")]) == 1


def test_negative_seed_exit_1():
    assert main(["turbulence", "--seed", "-3"]) == 1


def test_simulate_outputs_deterministic(tmp_path, fast_config, controller_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--config", fast_config, "--controller", controller_file,
                     "--seed", "7", "--out", str(out)]) == 0
        outs.append(out)
    a, b = outs
    assert (a / "sim_hinf.csv").read_bytes() == (b / "sim_hinf.csv").read_bytes()
    ja = json.loads((a / "metrics_hinf.json").read_text())
    jb = json.loads((b / "metrics_hinf.json").read_text())
    assert strip_metadata(ja) == strip_metadata(jb)
    with open(a / "sim_hinf.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 2001


def test_simulate_pid(tmp_path, fast_config):
    assert main(["simulate", "--config", fast_config, "--controller", "pid",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "metrics_pid.json").exists()


def test_compare_byte_identical(tmp_path, fast_config, controller_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["compare", "--config", fast_config, "--controller", controller_file,
                     "--out", str(out)]) == 0
        outs.append(out)
    a, b = outs
    assert (a / "compare.csv").read_bytes() == (b / "compare.csv").read_bytes()
    ja = json.loads((a / "compare_metrics.json").read_text())
    jb = json.loads((b / "compare_metrics.json").read_text())
    assert strip_metadata(ja) == strip_metadata(jb)
    assert [r["seed"] for r in ja["per_seed"]] == [0, 0, 1, 1]
    header = (a / "compare.csv").read_text().splitlines()[0]
    assert tuple(header.split(",")) == COMPARE_COLUMNS


def test_compare_synthesizes_when_no_controller(tmp_path, fast_config):
    assert main(["compare", "--config", fast_config, "--seed", "3", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "compare_metrics.json").read_text())
    assert [r["seed"] for r in doc["per_seed"]] == [3, 3]


def test_turbulence_export(tmp_path, fast_config):
    assert main(["turbulence", "--config", fast_config, "--seed", "0",
                 "--out", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "disturbances.csv", delimiter=",", skiprows=1)
    header = (tmp_path / "disturbances.csv").read_text().splitlines()[0]
    assert header == "t,d_phi,d_theta,d_psi"
    assert data.shape == (2000, 4)


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "rotorhinf", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    for cmd in ("synth", "verify", "simulate", "compare", "turbulence"):
        assert cmd in proc.stdout
