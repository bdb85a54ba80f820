"""Tests for the command-line front end: exit codes, CSV output, determinism."""

import json
import os

import pytest

from aoi_csma.cli import PRESETS, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analytic_single_point(capsys):
    code, out, _ = run_cli(capsys, "analytic", "--policy", "I", "--scheme", "wp",
                           "--lambda", "1", "--mu", "1", "--k", "1", "--p", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "policy,scheme,lambda,mu,k,p,aoi,gap"
    assert lines[1] == "I,WP,1,1,1,1,2.75,0.75"


def test_analytic_p_grid_reproduces_figure_rows(capsys):
    code, out, _ = run_cli(capsys, "analytic", "--policy", "all", "--scheme", "all",
                           "--lambda", "0.9", "--mu", "1", "--k", "2",
                           "--p-grid", "0.3:1.0:15")
    assert code == 0
    rows = out.strip().splitlines()[1:]
    assert len(rows) == 6 * 15


def test_analytic_grid_with_zero_p_flags_partial_failure(capsys):
    code, out, _ = run_cli(capsys, "analytic", "--policy", "I", "--scheme", "wp",
                           "--lambda", "1", "--mu", "1", "--k", "1",
                           "--sweep", "p=0.0:1.0:3")
    assert code == 2
    rows = out.strip().splitlines()
    assert any("DivergentAoi" in row for row in rows)
    assert any(row.endswith("2.75,0.75") for row in rows)


def test_analytic_missing_flags_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "analytic", "--policy", "I")
    assert code == 1
    assert "missing required flags" in err


def test_bad_sweep_syntax_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, "analytic", "--lambda", "1", "--mu", "1", "--k", "1",
                         "--sweep", "p=1:0:5")
    assert code == 1
    code, _, _ = run_cli(capsys, "analytic", "--lambda", "1", "--mu", "1", "--k", "1",
                         "--sweep", "nope=0:1:5")
    assert code == 1


def test_crossvalidate_passes_and_detects_injected_error(capsys):
    code, out, _ = run_cli(capsys, "crossvalidate", "--count", "40", "--seed", "5")
    assert code == 0
    assert "max_relative_deviation" in out and "OK" in out
    code, out, _ = run_cli(capsys, "crossvalidate", "--count", "5", "--seed", "5",
                           "--selftest-perturb", "1e-6")
    assert code == 3
    assert "FAIL" in out
    code, _, _ = run_cli(capsys, "crossvalidate", "--count", "0")
    assert code == 1


def test_meanfield_equilibrium_row(capsys):
    code, out, _ = run_cli(capsys, "meanfield", "--policy", "W", "--lambda", "0.8",
                           "--mu", "1", "--w", "2", "--gamma", "5", "--p", "0.7")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("policy,lambda,mu,w,gamma,p,x_I,x_W,x_S,k,delta,residual")
    fields = lines[1].split(",")
    assert fields[0] == "W"
    assert float(fields[8]) == pytest.approx(0.174143, abs=1e-5)
    assert float(fields[9]) == pytest.approx(0.258570, abs=1e-5)


def test_meanfield_sweep_and_monotonicity(tmp_path, capsys):
    out_dir = tmp_path / "mf"
    code, out, _ = run_cli(capsys, "meanfield", "--lambda", "0.8", "--mu", "1.5",
                           "--w", "2", "--gamma", "5", "--p", "0.7",
                           "--sweep", "mu=0.5:3:5",
                           "--monotonicity", "w=1:3:4",
                           "--out", str(out_dir))
    assert code == 0
    sweep = (out_dir / "sweep.csv").read_text().splitlines()
    assert sweep[0] == "policy,scheme,param,value,k,aoi"
    assert len(sweep) == 1 + 6 * 5
    mono = (out_dir / "monotonicity_I-WP_w.csv").read_text().splitlines()
    assert mono[0] == "param,value,dAoI,sign"
    assert "monotonicity I-WP d/dw" in out


def test_meanfield_sweep_through_p_zero_is_numerical_failure(capsys):
    code, _, err = run_cli(capsys, "meanfield", "--policy", "I", "--lambda", "0.8",
                           "--mu", "1", "--w", "2", "--gamma", "5", "--p", "0.7",
                           "--sweep", "p=0.0:1.0:3")
    assert code == 2
    assert "numerical failure" in err


def test_meanfield_trajectory(tmp_path, capsys):
    out_dir = tmp_path / "traj"
    code, _, _ = run_cli(capsys, "meanfield", "--policy", "W", "--lambda", "0.8",
                         "--mu", "1", "--w", "2", "--gamma", "5", "--p", "0.7",
                         "--trajectory", "--t-end", "1.0", "--dt", "0.01",
                         "--out", str(out_dir))
    assert code == 0
    lines = (out_dir / "trajectory_W.csv").read_text().splitlines()
    assert lines[0] == "t,x_I,x_W,x_S"
    assert lines[1].startswith("0,1,0,0")


def test_simulate_writes_csvs_and_is_byte_deterministic(tmp_path, capsys):
    args = ["simulate", "--policy", "W", "--scheme", "wp", "--lambda", "0.8",
            "--mu", "1", "--w", "2", "--p", "0.7", "--n", "20", "--m", "4",
            "--arrivals", "1000", "--seed", "9", "--reps", "2", "--sample-dt", "5"]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli(capsys, *args, "--out", str(out_a))[0] == 0
    assert run_cli(capsys, *args, "--out", str(out_b))[0] == 0
    for name in ("summary.csv", "aoi.csv", "traj.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    summary = (out_a / "summary.csv").read_text().splitlines()
    assert summary[0] == "mean,stderr,arrivals,delivered,failed,preempted,discarded,k_estimate"


def test_simulate_missing_channels_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "simulate", "--policy", "W", "--scheme", "wp",
                           "--lambda", "0.8", "--mu", "1", "--w", "2", "--p", "0.7",
                           "--n", "20", "--arrivals", "1000")
    assert code == 1
    assert "--m" in err


def test_seed_falls_back_to_environment(capsys, monkeypatch):
    monkeypatch.setenv("AOI_DENSE_SEED", "77")
    code, out_env, _ = run_cli(capsys, "crossvalidate", "--count", "3")
    assert code == 0
    monkeypatch.delenv("AOI_DENSE_SEED")
    code, out_flag, _ = run_cli(capsys, "crossvalidate", "--count", "3", "--seed", "77")
    assert out_env == out_flag
    monkeypatch.setenv("AOI_DENSE_SEED", "not-a-number")
    assert run_cli(capsys, "crossvalidate", "--count", "3")[0] == 1


def test_config_file_supplies_defaults_and_flags_override(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"lambda": 1.0, "mu": 1.0, "k": 1.0, "p": 1.0,
                                  "policy": "I", "scheme": "wp"}))
    code, out, _ = run_cli(capsys, "analytic", "--config", str(config))
    assert code == 0
    assert out.strip().splitlines()[1] == "I,WP,1,1,1,1,2.75,0.75"
    # a flag beats the file value
    code, out, _ = run_cli(capsys, "analytic", "--config", str(config), "--p", "0.5")
    assert code == 0
    assert out.strip().splitlines()[1].split(",")[5] == "0.5"
    config.write_text(json.dumps({"bogus": 1}))
    assert run_cli(capsys, "analytic", "--config", str(config))[0] == 1


def test_gnuplot_script_emitted(tmp_path, capsys):
    out_dir = tmp_path / "plots"
    code, _, _ = run_cli(capsys, "reproduce", "aoi-vs-p", "--out", str(out_dir),
                         "--gnuplot-script")
    assert code == 0
    script = (out_dir / "plot.gp").read_text()
    assert "aoi_vs_p.csv" in script


def test_preset_parameters_match_the_figure_captions():
    assert PRESETS["aoi-vs-p"].params == {
        "lam": 0.9, "mu": 1.0, "k": 2.0, "p_grid": (0.3, 1.0, 15)}
    assert PRESETS["accuracy"].params == {
        "lam": 0.8, "mu": 1.0, "w": 2.0, "gamma": 5.0, "p": 0.7,
        "populations": (10, 100, 1000)}
    assert PRESETS["aoi-vs-lambda"].params == {
        "mu": 0.5, "w": 2.0, "gamma": 5.0, "p": 0.7}
    assert PRESETS["param-sweeps"].params == {
        "lam": 0.8, "mu": 1.5, "w": 2.0, "gamma": 5.0, "p": 0.7}
    assert PRESETS["single-device"].params == {
        "lam": 1.0, "mu": 1.0, "w": 1.0, "p": 1.0, "n": 1, "m": 1}


def test_reproduce_single_device_prints_relative_error(capsys):
    code, out, _ = run_cli(capsys, "reproduce", "single-device",
                           "--arrivals", "20000", "--seed", "4")
    assert code == 0
    assert "closed_form=2.75" in out
    assert "rel_error=" in out


def test_reproduce_accuracy_small_scale(tmp_path, capsys):
    out_dir = tmp_path / "acc"
    code, _, _ = run_cli(capsys, "reproduce", "accuracy", "--reps", "3",
                         "--seed", "2", "--out", str(out_dir))
    assert code == 0
    for n in (10, 100, 1000):
        lines = (out_dir / f"accuracy_N{n}.csv").read_text().splitlines()
        assert lines[0] == "t,x_I,mean_x_I"
    assert (out_dir / "accuracy_ode.csv").exists()


def test_reproduce_param_sweeps(tmp_path, capsys):
    out_dir = tmp_path / "sweeps"
    code, _, _ = run_cli(capsys, "reproduce", "param-sweeps", "--out", str(out_dir))
    assert code == 0
    for which in ("mu", "w", "gamma", "p"):
        lines = (out_dir / f"param_sweep_{which}.csv").read_text().splitlines()
        assert len(lines) == 1 + 6 * 20


def test_presets_listing(capsys):
    code, out, _ = run_cli(capsys, "presets")
    assert code == 0
    for name in PRESETS:
        assert name in out
