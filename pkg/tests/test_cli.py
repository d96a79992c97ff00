import json
import os
import subprocess
import sys

import pytest

from coverage_lab import load_problem, paper_example

CLI = [sys.executable, "-m", "coverage_lab"]


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    env.pop("COVERAGE_LAB_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(CLI + list(args), capture_output=True, text=True, env=env)


def test_identify_paper_example():
    result = run_cli("identify", "--paper-example")
    assert result.returncode == 0
    labels = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    assert labels == ["theta1", "theta2"]


def test_identify_no_restrictions():
    result = run_cli("identify", "--paper-example", "--no-restrictions")
    assert result.returncode == 0
    labels = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    assert labels == ["theta1", "theta2", "theta3", "theta4"]


def test_identify_empty_set_warns(tmp_path):
    # impossible marginal given tol=0: nothing matches
    problem = paper_example(1.0)
    from coverage_lab import problem_to_dict

    data = problem_to_dict(problem)
    data["p_x"] = [0.9, 0.1]
    path = tmp_path / "skewed.json"
    path.write_text(json.dumps(data), encoding="utf-8")

    result = run_cli("identify", "--problem", str(path))
    assert result.returncode == 0
    labels = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    assert labels == []
    assert "empty" in result.stderr


def test_identify_malformed_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"x_values": ["F"]', encoding="utf-8")
    result = run_cli("identify", "--problem", str(path))
    assert result.returncode == 2
    assert "line" in result.stderr


def test_identify_dimension_mismatch(tmp_path):
    problem = paper_example(1.0)
    from coverage_lab import problem_to_dict

    data = problem_to_dict(problem)
    data["models"]["theta1"] = [1.0]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    result = run_cli("identify", "--problem", str(path))
    assert result.returncode == 2
    assert "theta1" in result.stderr


def test_decide_maxmin_full_region():
    result = run_cli("decide", "--paper-example", "--region", "theta1,theta2", "--rule", "maxmin")
    assert result.returncode == 0
    assert "chosen: a3" in result.stdout
    assert "value: 0" in result.stdout


def test_decide_maxmin_singleton():
    result = run_cli("decide", "--paper-example", "--region", "theta2", "--rule", "maxmin")
    assert result.returncode == 0
    assert "chosen: a1" in result.stdout
    assert "value: 0.5" in result.stdout


def test_decide_minmax_regret():
    result = run_cli("decide", "--paper-example", "--region", "theta1,theta2", "--rule", "minmax_regret")
    assert result.returncode == 0
    assert "chosen: a3" in result.stdout
    assert "worst_case_regret: 0.5" in result.stdout


def test_decide_unknown_label_lists_valid():
    result = run_cli("decide", "--paper-example", "--region", "theta7")
    assert result.returncode == 2
    assert "theta1" in result.stderr  # valid labels listed


def test_decide_empty_region():
    result = run_cli("decide", "--paper-example", "--region", "")
    assert result.returncode == 2


def test_dump_round_trip(tmp_path):
    path = tmp_path / "dumped.json"
    result = run_cli("identify", "--dump-paper-example", str(path))
    assert result.returncode == 0
    assert load_problem(path) == paper_example(1.0)

    check = run_cli("identify", "--problem", str(path))
    labels = [line for line in check.stdout.splitlines() if not line.startswith("#")]
    assert labels == ["theta1", "theta2"]


def test_experiment_files_and_determinism(tmp_path):
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    args = ["experiment", "--paper-example", "--synthetic", "--R", "200", "--seed", "3"]
    first = run_cli(*args, "--out", str(out1))
    second = run_cli(*args, "--out", str(out2))
    assert first.returncode == 0 and second.returncode == 0

    summary1 = (out1 / "summary.json").read_bytes()
    summary2 = (out2 / "summary.json").read_bytes()
    assert summary1 == summary2
    assert (out1 / "replications.csv").read_bytes() == (out2 / "replications.csv").read_bytes()

    report = json.loads(summary1)
    assert report["kind"] == "monte_carlo"
    assert report["replications"] == 200
    assert report["seed"] == 3
    assert report["config"]["problem_name"] == "paper_example"
    assert set(report["processes"]) == {"SC", "PC"}

    csv_lines = (out1 / "replications.csv").read_text().splitlines()
    assert len(csv_lines) == 1 + 2 * 200
    assert csv_lines[0] == "rep,process,region_labels,rule,chosen_action,region_min,identified_min,violation"


def test_experiment_single_replication(tmp_path):
    result = run_cli("experiment", "--paper-example", "--R", "1", "--seed", "0", "--out", str(tmp_path))
    assert result.returncode == 0
    report = json.loads((tmp_path / "summary.json").read_text())
    for name in ("SC", "PC"):
        s = report["processes"][name]
        assert s["violation_rate"] in (0.0, 1.0)
        assert s["set_coverage"] in (0.0, 1.0)
    csv_lines = (tmp_path / "replications.csv").read_text().splitlines()
    assert len(csv_lines) == 3


def test_experiment_exact(tmp_path):
    result = run_cli(
        "experiment", "--paper-example", "--exact", "--alpha", "0.05", "--out", str(tmp_path), "--format", "json"
    )
    assert result.returncode == 0
    report = json.loads((tmp_path / "summary.json").read_text())
    assert report["kind"] == "exact"
    assert report["replications"] is None
    pc = report["processes"]["PC"]
    assert pc["violation_rate"] == pytest.approx(0.0975, abs=1e-15)
    assert pc["violation_rate_se"] == 0.0
    assert pc["action_freq"]["a1"] == pytest.approx(0.0475, abs=1e-15)
    assert not (tmp_path / "replications.csv").exists()  # json-only format


def test_experiment_format_csv_only(tmp_path):
    result = run_cli(
        "experiment", "--paper-example", "--R", "10", "--seed", "1", "--out", str(tmp_path), "--format", "csv"
    )
    assert result.returncode == 0
    assert (tmp_path / "replications.csv").exists()
    assert not (tmp_path / "summary.json").exists()


def test_experiment_unwritable_out():
    result = run_cli("experiment", "--paper-example", "--R", "5", "--out", "/dev/null/nope")
    assert result.returncode == 3


def test_experiment_invalid_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"problem": "paper_example", "bogus": 1}), encoding="utf-8")
    result = run_cli("experiment", "--config", str(path), "--out", str(tmp_path))
    assert result.returncode == 2
    assert "bogus" in result.stderr


def test_experiment_config_file_with_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps({"problem": "paper_example", "alpha": 0.1, "R": 50, "seed": 5}), encoding="utf-8"
    )
    result = run_cli("experiment", "--config", str(path), "--R", "20", "--out", str(tmp_path))
    assert result.returncode == 0
    report = json.loads((tmp_path / "summary.json").read_text())
    assert report["replications"] == 20  # flag overrides file
    assert report["alpha"] == 0.1  # file value kept
    assert report["seed"] == 5  # file value kept


def test_seed_env_fallback(tmp_path):
    out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    args = ["experiment", "--paper-example", "--R", "100"]
    first = run_cli(*args, "--out", str(out1), env_extra={"COVERAGE_LAB_SEED": "44"})
    second = run_cli(*args, "--seed", "44", "--out", str(out2))
    third = run_cli(*args, "--seed", "45", "--out", str(out3), env_extra={"COVERAGE_LAB_SEED": "44"})
    assert first.returncode == second.returncode == third.returncode == 0
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    assert (out1 / "summary.json").read_bytes() != (out3 / "summary.json").read_bytes()  # --seed wins


def test_coverage_zero_alpha():
    result = run_cli("coverage", "--paper-example", "--alpha", "0", "--R", "200", "--process", "both")
    assert result.returncode == 0
    assert "set_coverage: 1 (se 0)" in result.stdout


def test_coverage_synthetic_pc():
    result = run_cli("coverage", "--paper-example", "--alpha", "0.05", "--R", "5000", "--seed", "2", "--process", "pc")
    assert result.returncode == 0
    assert "process: PC synthetic:point_coverage" in result.stdout
    set_line = next(line for line in result.stdout.splitlines() if line.startswith("set_coverage:"))
    value = float(set_line.split()[1])
    assert abs(value - 0.9025) < 0.025


def test_coverage_test_inversion_smoke():
    result = run_cli(
        "coverage",
        "--paper-example",
        "--test-inversion",
        "--n", "100",
        "--resamples", "100",
        "--R", "50",
        "--seed", "1",
        "--process", "sc",
    )
    assert result.returncode == 0
    assert "test_inversion:shared" in result.stdout


def test_version_flag():
    result = run_cli("--version")
    assert result.returncode == 0
    assert "coverage-lab" in result.stdout
