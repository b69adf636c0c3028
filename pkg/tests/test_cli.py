import json
import math
import subprocess
import sys

import numpy as np
import pytest

from capflow.cli import EXIT_CONFIG, EXIT_MONITOR, EXIT_OK, inequality_rows, main
from capflow.output import read_series


def write_config(path, **doc):
    doc.setdefault("theta_degrees", 120)
    doc.setdefault("grid", {"n_beta": 64})
    path.write_text(json.dumps(doc))
    return path


def cap_info_values(capsys, *argv):
    assert main(["cap-info", *argv]) == EXIT_OK
    out = capsys.readouterr().out
    return {line.split()[0]: float(line.split()[1]) for line in out.splitlines()
            if line.startswith("  ") and not line.split()[0] == "quantity"}


@pytest.mark.parametrize("deg, name, value", [
    ("90", "b_theta", 2 * math.pi / 3),
    ("120", "V1", 27 * math.pi / 8),
    ("60", "b_theta", 5 * math.pi / 24),
])
def test_cap_info_examples(capsys, deg, name, value):
    vals = cap_info_values(capsys, "--theta", deg)
    assert vals[name] == pytest.approx(value, rel=1e-12)


def test_cap_info_higher_dimension(capsys):
    assert main(["cap-info", "--theta", "30,150", "--n", "3", "--r", "2"]) == EXIT_OK
    assert "MISMATCH" not in capsys.readouterr().out


def test_simulate_cap(tmp_path, capsys):
    cfg = write_config(tmp_path / "cap.json", stepping={"t_max": 20.0})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == EXIT_OK
    s = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert s["stop_reason"] == "converged"
    assert abs(s["final_deficit_norm"]) <= 1e-3
    assert (tmp_path / "run" / "summary.timing.json").exists()


def test_simulate_perturbed_V2_nonincreasing(tmp_path, capsys):
    cfg = write_config(tmp_path / "p.json", grid={"n_beta": 128}, stepping={"t_max": 3.0},
                       init={"kind": "perturbed_cap", "epsilon": 0.05})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == EXIT_OK
    data = read_series(tmp_path / "run" / "series.csv")
    V2 = data["V2"]
    assert len(V2) > 10
    assert np.all(np.diff(V2) <= 1e-8 * abs(V2[0]))
    assert V2[-1] < V2[0]


def test_csv_header_and_determinism(tmp_path, capsys):
    cfg = write_config(tmp_path / "p.json", stepping={"t_max": 0.5},
                       init={"kind": "perturbed_cap", "epsilon": 0.05, "seed": 3})
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) == EXIT_OK
    a, b = tmp_path / "a", tmp_path / "b"
    header = (a / "series.csv").read_text().splitlines()[0]
    assert header == ("t,dt,V1,V2,area,wetted_area,contact_length,total_H,deficit,deficit_norm,"
                      "min_ubar,max_H,min_P,gauge_min,gauge_max,sup_G")
    assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


@pytest.mark.parametrize("text", ["{broken", '{"theta_degrees": 60, "grid": {"cells": 1}}', '{"n": 2}'])
def test_malformed_config_writes_nothing(tmp_path, capsys, text):
    cfg = tmp_path / "bad.json"
    cfg.write_text(text)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == EXIT_CONFIG
    assert not (tmp_path / "run").exists()
    assert "config error" in capsys.readouterr().err


def test_monitor_abort_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / "m.json", init={"kind": "perturbed_cap", "epsilon": 0.05},
                       monitors={"tol_V1_drift": 1e-15, "action": "abort"}, stepping={"t_max": 1.0})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == EXIT_MONITOR
    s = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert s["stop_reason"] == "monitor_violation"
    assert s["violations"][0]["monitor"] == "V1_drift"


def test_obj_meshes(tmp_path, capsys):
    cfg = write_config(tmp_path / "o.json", stepping={"t_max": 0.2},
                       output={"mesh_every": 1, "n_xi_export": 12})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == EXIT_OK
    meshes = sorted((tmp_path / "run" / "mesh").glob("*.obj"))
    assert meshes
    lines = meshes[0].read_text().splitlines()
    verts = np.array([[float(x) for x in l.split()[1:]] for l in lines if l.startswith("v ")])
    faces = np.array([[int(x) for x in l.split()[1:]] for l in lines if l.startswith("f ")])
    rows = 64 + 1
    assert len(verts) == 1 + rows * 12
    assert faces.shape == (12 + 2 * 12 * (rows - 1), 3)
    assert faces.min() == 1 and faces.max() == len(verts)
    # equator ring sits on the support plane
    assert np.max(np.abs(verts[-12:, 2])) < 1e-12
    assert np.all(verts[:, 2] >= -1e-12)


def test_verify_inequality_empty(capsys):
    assert main(["verify-inequality", "--seeds", "0"]) == EXIT_OK
    assert "0 rows" in capsys.readouterr().out


def test_zero_epsilon_rows_are_equality_cases():
    rows = inequality_rows((30.0, 90.0, 150.0), 2, 0.0, 256)
    assert all(r["status"] == "ok" for r in rows)
    assert max(abs(r["deficit_norm_t0"]) for r in rows) <= 1e-5


def test_verify_inequality_table(tmp_path, capsys):
    code = main(["verify-inequality", "--theta", "45,135", "--seeds", "3", "--resolution", "64",
                 "--t-flow", "0.2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    text = (tmp_path / "inequality.csv").read_text().splitlines()
    assert len(text) == 7
    assert all(line.endswith(",ok") for line in text[1:])


def test_sweep_matches_simulate(tmp_path, capsys):
    cfg = write_config(tmp_path / "s.json", theta_degrees=90, stepping={"t_max": 0.5},
                       init={"kind": "perturbed_cap", "epsilon": 0.05})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "single")]) == EXIT_OK
    assert main(["sweep", "--config", str(cfg), "--theta", "90", "--out", str(tmp_path / "sw")]) == EXIT_OK
    for name in ("series.csv", "summary.json"):
        assert (tmp_path / "single" / name).read_bytes() == (tmp_path / "sw" / "theta_90" / name).read_bytes()


def test_sweep_rejects_tiny_angle(tmp_path, capsys):
    cfg = write_config(tmp_path / "s.json")
    assert main(["sweep", "--config", str(cfg), "--theta", "1", "--out", str(tmp_path / "sw")]) == EXIT_CONFIG
    assert "admissible range" in capsys.readouterr().err


@pytest.mark.slow
def test_sweep_recovers_radii(tmp_path, capsys):
    cfg = write_config(tmp_path / "s.json", grid={"n_beta": 64},
                       init={"kind": "perturbed_cap", "epsilon": 0.05})
    code = main(["sweep", "--config", str(cfg), "--theta", "30,60,90,120,150", "--workers", "5",
                 "--out", str(tmp_path / "sw")])
    assert code == EXIT_OK
    runs = json.loads((tmp_path / "sw" / "sweep.json").read_text())["runs"]
    assert len(runs) == 5
    for r in runs:
        assert r["stop_reason"] == "converged"
        assert r["r_rel_error"] <= 1e-2
        assert (tmp_path / "sw" / f"theta_{r['theta_degrees']:g}" / "summary.json").exists()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "capflow.cli", "cap-info", "--theta", "120"],
                         capture_output=True, text=True, check=True).stdout
    assert "10.6028752" in out
