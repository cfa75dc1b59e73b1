import csv
import subprocess
import sys

import pytest

from ensemble_cosched.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main

SMALL = """\
platform: {n_nodes: 16, cores_per_node: 32, mem_per_node: 128GB, bandwidth_per_node: 10GB/s}
generator: {n_steps: 2}
scenarios: [ideal, increasing-50]
policies: ["co:co"]
sweep: {axis: data_volume, values: [1GB, 4GB]}
trials: 2
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


def test_solve_writes_one_record_per_app(config, tmp_path, capsys):
    out = tmp_path / "alloc.csv"
    assert main(["solve", "--config", str(config), "--scenario", "increasing-50",
                 "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 20
    assert sum(int(r["nodes"]) for r in rows if r["app"].startswith("S")) + \
        int(next(r["nodes"] for r in rows if r["allocation"] == "<NC1>")) == 16
    assert "equalized iteration time =" in capsys.readouterr().err


def test_solve_jsonl_to_stdout(config, capsys):
    assert main(["solve", "--config", str(config), "--format", "jsonl", "--value", "4GB"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 20 and '"app": "S1"' in lines[0]


def test_simulate_trace(config, tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["simulate", "--config", str(config), "--out", str(out)]) == EXIT_OK
    text = out.read_text().splitlines()
    assert text[0] == "app,iter,stage,start,end" and text[-1].startswith("*,,makespan,")


def test_sweep_outputs_are_deterministic(config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(config), "--out", str(a)]) == EXIT_OK
    assert main(["sweep", "--config", str(config), "--out", str(b), "--jobs", "2",
                 "--no-figures"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1 + 2 * 2 * 2
    assert (tmp_path / "a_summary.csv").exists()
    assert (tmp_path / "a_co-co.png").stat().st_size > 0
    assert not (tmp_path / "b_co-co.png").exists()


def test_overrides_change_rows(config, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["sweep", "--config", str(config), "--out", str(out), "--no-figures",
                 "--seed-override", "40", "--policy", "co:co", "--policy", "ev:co",
                 "--calibration", "b1"]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert {r["seed"] for r in rows} == {"40", "41"}
    assert {r["policy"] for r in rows} == {"co:co", "ev:co"}
    assert {r["calibration"] for r in rows} == {"b1"}


def test_calibrate(config, tmp_path):
    out = tmp_path / "cal.csv"
    assert main(["calibrate", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 1 + 2 * 2 * 2
    assert (tmp_path / "cal_calibration.png").exists()


def test_config_errors_exit_2(tmp_path, config, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenarios: [sideways]\ntrials: 0\n")
    assert main(["sweep", "--config", str(bad)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "scenarios[0]" in err and "trials" in err
    assert main(["solve", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG
    assert main(["solve", "--config", str(config), "--policy", "co"]) == EXIT_CONFIG
    assert main(["solve", "--config", str(config), "--scenario", "upside-down"]) == EXIT_CONFIG
    assert main(["solve", "--config", str(config), "--value", "lots"]) == EXIT_CONFIG


def test_infeasible_exit_1(tmp_path, capsys):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text("platform: {n_nodes: 4}\ngenerator: {n_steps: 1}\n"
                   "scenarios: [in-transit]\ntrials: 1\n")
    assert main(["solve", "--config", str(cfg)]) == EXIT_INFEASIBLE
    out = tmp_path / "rows.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == EXIT_INFEASIBLE
    assert "infeasible" in out.read_text()


def test_cosched_flag(tmp_path):
    cfg = tmp_path / "mem.yaml"
    cfg.write_text("platform: {mem_per_node: 64GB}\n"
                   "generator: {n_steps: 1, sim_mem: 40GB, analysis_mem_range: [8GB, 8GB]}\n"
                   "scenarios: [ideal]\ntrials: 1\n")
    out = tmp_path / "alloc.csv"
    assert main(["solve", "--config", str(cfg), "--cosched", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    # 40 GB + 3 x 8 GB just fits a node, so one analysis per simulation moves
    assert sum(r["co_located"] == "False" for r in rows) == 4


def test_console_script_entry_point(config, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ensemble_cosched.cli", "solve", "--config",
                           str(config), "--out", str(tmp_path / "x.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "ensemble_cosched.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "sweep" in proc.stdout
