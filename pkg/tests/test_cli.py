import json
import math

import pytest

from mcd.cli import CliError, RunConfig, _parse_grid, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# option plumbing

def test_grid_parser_forms():
    assert _parse_grid("0.34:0.70:0.02") == pytest.approx(
        [0.34 + 0.02 * k for k in range(19)])
    assert _parse_grid("1,2,3.5") == [1.0, 2.0, 3.5]
    assert _parse_grid("7") == [7.0]
    assert _parse_grid(7) == [7.0]
    assert _parse_grid("200:800:200", "int") == [200, 400, 600, 800]
    with pytest.raises(CliError):
        _parse_grid("1:2")
    with pytest.raises(CliError):
        _parse_grid("5:1:1")
    with pytest.raises(CliError):
        _parse_grid("0.5:1:0.25", "int")


def test_runconfig_roundtrips_through_flag_named_json():
    rc = RunConfig(command="experiment", experiment="sm_tail", n=[100, 200],
                   q=1.0, lam=0.5, rho=0.2, replicas=10, seed=3, threads=1)
    data = json.loads(json.dumps(rc.to_dict()))
    assert "lambda" in data and "lam" not in data
    assert RunConfig.from_dict(data) == rc


# ---------------------------------------------------------------------------
# subcommands

def test_critical_points_json(capsys):
    code, out, _ = run(capsys, "critical-points", "--q", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["lambda_c"] == pytest.approx(4 * math.log(2), abs=1e-12)
    assert payload["lambda_S"] == 3.0


def test_drift_table_and_fixed_points(capsys):
    code, out, _ = run(capsys, "drift", "--q", "3", "--lambda", "2.7725887",
                       "--grid", "0.4:0.6:0.1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "z,F,f,g"
    assert len(lines) == 4
    code, out, _ = run(capsys, "drift", "--q", "3",
                       "--lambda", str(4 * math.log(2)), "--fixed-points")
    assert code == 0
    assert json.loads(out)["a_lambda"] == pytest.approx(2 / 3, abs=1e-8)


def test_lambda_beta_exclusivity(capsys):
    code, _, err = run(capsys, "drift", "--q", "3", "--grid", "0.5")
    assert code == 1 and "exactly one" in err
    code, _, err = run(capsys, "drift", "--q", "3", "--lambda", "1",
                       "--beta", "1", "--grid", "0.5")
    assert code == 1
    # beta needs a single n to convert
    code, _, err = run(capsys, "experiment", "sm_tail", "--n", "100:200:100",
                       "--beta", "0.5")
    assert code == 1 and "single" in err


def test_beta_conversion_matches_formula(capsys):
    n, beta = 50, 0.5
    lam = -n * math.expm1(-beta / n)
    code, out, _ = run(capsys, "experiment", "cluster_tail_bound",
                       "--n", str(n), "--beta", str(beta), "--grid", "2",
                       "--replicas", "5", "--seed", "1",
                       "--out", "/tmp/ct_beta.csv")
    assert code == 0
    side = json.loads(open("/tmp/ct_beta.json").read())
    assert side["config"]["lambda"] == pytest.approx(lam, rel=1e-12)


def test_sw_requires_integer_q(capsys):
    code, _, err = run(capsys, "simulate", "--kind", "sw", "--n", "20",
                       "--q", "2.5", "--lambda", "1", "--steps", "1")
    assert code == 1 and "integer q" in err
    code, _, err = run(capsys, "experiment", "sw_drift_map", "--n", "50",
                       "--q", "2.5", "--lambda", "1", "--grid", "0.5",
                       "--replicas", "2")
    assert code == 1 and "integer q" in err


def test_simulate_trajectory_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--kind", "glauber", "--n", "12",
                       "--q", "2", "--lambda", "1", "--steps", "4",
                       "--seed", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "step,l1_frac,sm_frac,edge_count,counts"
    assert len(lines) == 6


def test_unknown_experiment_and_oracle(capsys):
    code, _, err = run(capsys, "experiment", "nope", "--n", "10",
                       "--lambda", "1")
    assert code == 1 and "unknown experiment" in err
    code, _, err = run(capsys, "oracle", "nope", "--n", "3", "--q", "2",
                       "--lambda", "1")
    assert code == 1


def test_oracle_pass_fail_exit_codes(capsys):
    code, out, _ = run(capsys, "oracle", "stationarity", "--kind", "glauber",
                       "--n", "3", "--q", "2", "--lambda", "1")
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "oracle", "stationarity", "--kind", "glauber",
                       "--n", "3", "--q", "2", "--lambda", "1",
                       "--tol", "1e-30")
    assert code == 2 and "FAIL" in out


def test_regime_error_exit_code(capsys):
    code, _, err = run(capsys, "experiment", "one_step_exit", "--n", "30",
                       "--q", "3", "--lambda", "2.0", "--start", "ordered",
                       "--replicas", "2")
    assert code == 3 and "regime" in err.lower()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "n": "30:60:30", "q": 3, "lambda": 2.772588722239781,
        "rho": 0.08, "start": "balanced", "replicas": 50, "seed": 4}))
    out1 = tmp_path / "a.csv"
    code, _, _ = run(capsys, "experiment", "one_step_exit",
                     "--config", str(cfg), "--out", str(out1))
    assert code == 0
    assert ",50," in out1.read_text()
    out2 = tmp_path / "b.csv"
    code, _, _ = run(capsys, "experiment", "one_step_exit",
                     "--config", str(cfg), "--replicas", "20",
                     "--out", str(out2))
    assert code == 0
    assert ",20," in out2.read_text()


def test_sidecar_roundtrips_to_runconfig(tmp_path, capsys):
    out = tmp_path / "tail.csv"
    code, _, _ = run(capsys, "experiment", "sm_tail", "--n", "40,80",
                     "--lambda", "0.5", "--rho", "0.5", "--replicas", "30",
                     "--m-threshold", "5", "--seed", "11", "--out", str(out))
    assert code == 0
    side = json.loads((tmp_path / "tail.json").read_text())
    rc = RunConfig.from_dict(side["config"])
    assert rc.experiment == "sm_tail"
    assert rc.n == [40, 80]
    assert rc.m_threshold == 5
    assert RunConfig.from_dict(rc.to_dict()) == rc


def test_cli_rerun_is_byte_identical(tmp_path, capsys):
    argv = ["experiment", "one_step_exit", "--n", "30", "--q", "3",
            "--lambda", "2.7725887", "--rho", "0.08", "--start", "balanced",
            "--replicas", "40", "--seed", "21"]
    a, b = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert run(capsys, *argv, "--threads", "1", "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--threads", "4", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
