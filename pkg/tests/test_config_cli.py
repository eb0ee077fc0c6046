import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from adaptive_sgd.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main
from adaptive_sgd.config import PRESETS, ExperimentConfig, apply_override, load_config, preset
from adaptive_sgd.errors import InvalidSpec
from adaptive_sgd.optimizer import TRACE_COLUMNS

GOLDEN = Path(__file__).parent / "data" / "golden_trace.csv"

MIN_CONFIG = {
    "name": "min",
    "problem": {"family": "quadratic", "n": 2, "mu": 1.0, "L": 2.0, "sigma_A": 0.0, "sigma_b": 0.0, "seed": 0},
    "iterations": 100,
}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_trace_header_is_stable():
    assert TRACE_COLUMNS == ("k", "alpha_k", "f_curr", "f_next", "grad_norm_sq", "L_est", "var_est", "g_est",
                             "accepted", "phase", "D_k", "dist_sq")


def test_golden_trace(tmp_path):
    cfg = dict(MIN_CONFIG, iterations=5,
               problem={"family": "quadratic", "n": 3, "mu": 1.0, "L": 4.0, "sigma_A": 0.1, "sigma_b": 0.1, "seed": 1})
    out = tmp_path / "out"
    assert main(["run", write(tmp_path / "c.json", cfg), "--out", str(out), "--no-plots"]) == EXIT_OK
    assert (out / "trace_0.csv").read_text() == GOLDEN.read_text()


def test_run_minimal_config(tmp_path):
    out = tmp_path / "out"
    code = main(["run", write(tmp_path / "c.json", MIN_CONFIG), "--out", str(out)])
    assert code == EXIT_OK
    lines = (out / "trace_0.csv").read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == 102
    assert lines[1].startswith("0,") and lines[-1].startswith("100,")
    assert (out / "aggregate.csv").exists()
    assert {p.name for p in out.glob("*.svg")} >= {"D_k.svg", "dist_sq.svg", "alpha_k.svg", "L_est.svg"}
    assert json.loads((out / "config.json").read_text())["iterations"] == 100


def test_no_plots_flag(tmp_path):
    out = tmp_path / "out"
    assert main(["--no-plots", "run", write(tmp_path / "c.json", MIN_CONFIG), "--out", str(out)]) == EXIT_OK
    assert not list(out.rglob("*.svg"))


def test_plots_disabled_in_config(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path / "c.json", dict(MIN_CONFIG, plots=False)), "--out", str(out)]) == EXIT_OK
    assert not list(out.rglob("*.svg"))


def test_seed_flag_and_env_out(tmp_path, monkeypatch):
    monkeypatch.setenv("ADAPTIVE_SGD_OUT", str(tmp_path / "env"))
    assert main(["run", write(tmp_path / "c.json", dict(MIN_CONFIG, n_seeds=2)), "--seed", "5", "--no-plots"]) == EXIT_OK
    assert sorted(p.name for p in (tmp_path / "env").glob("trace_*.csv")) == ["trace_5.csv", "trace_6.csv"]


@pytest.mark.parametrize(
    "cfg",
    [
        dict(MIN_CONFIG, iterations=0),
        dict(MIN_CONFIG, unknown_field=1),
        dict(MIN_CONFIG, sweep={"problem.L": []}),
        dict(MIN_CONFIG, sweep={"problem.nope": [1]}),
        {"iterations": 10},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    assert main(["run", write(tmp_path / "c.json", cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_and_malformed_config(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_run_failure_exit_1(tmp_path):
    cfg = dict(MIN_CONFIG, mode="fixed", alpha=100.0, iterations=2000)
    assert main(["run", write(tmp_path / "c.json", cfg), "--out", str(tmp_path / "o"), "--no-plots"]) == EXIT_FAILURE


def test_sweep_index_and_directories(tmp_path):
    cfg = dict(MIN_CONFIG, iterations=20, n_seeds=10, sweep={"problem.L": [2.0, 4.0, 8.0, 16.0]})
    out = tmp_path / "out"
    assert main(["sweep", write(tmp_path / "c.json", cfg), "--out", str(out), "--no-plots"]) == EXIT_OK
    with open(out / "index.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 40
    assert {r["directory"] for r in rows} == {"problem.L=2", "problem.L=4", "problem.L=8", "problem.L=16"}
    assert all(r["status"] == "ok" for r in rows)
    for r in rows:
        assert (out / r["directory"] / r["trace"]).exists()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_sweep_records_failures_and_continues(tmp_path):
    cfg = dict(MIN_CONFIG, mode="fixed", alpha=0.5, iterations=2000, sweep={"alpha": [0.5, 100.0]})
    out = tmp_path / "out"
    assert main(["sweep", write(tmp_path / "c.json", cfg), "--out", str(out), "--no-plots"]) == EXIT_FAILURE
    with open(out / "index.csv") as fh:
        status = {r["alpha"]: r["status"] for r in csv.DictReader(fh)}
    assert status == {"0.5": "ok", "100.0": "failed"}


def test_repeat_is_byte_identical(tmp_path):
    cfg = write(tmp_path / "c.json", dict(MIN_CONFIG, problem=dict(MIN_CONFIG["problem"], sigma_A=0.1, sigma_b=0.1),
                                          n_seeds=2, sweep={"problem.L": [2.0, 3.0]}))
    for name in ("a", "b"):
        assert main(["sweep", cfg, "--out", str(tmp_path / name), "--no-plots"]) == EXIT_OK
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    assert len(files) == 2 * 2 + 2 + 1
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_parallel_jobs_match_serial(tmp_path):
    cfg = write(tmp_path / "c.json", dict(MIN_CONFIG, problem=dict(MIN_CONFIG["problem"], sigma_A=0.1, sigma_b=0.1),
                                          n_seeds=3))
    main(["run", cfg, "--out", str(tmp_path / "a"), "--no-plots"])
    main(["run", cfg, "--out", str(tmp_path / "b"), "--no-plots", "--jobs", "2"])
    for s in range(3):
        assert (tmp_path / "a" / f"trace_{s}.csv").read_bytes() == (tmp_path / "b" / f"trace_{s}.csv").read_bytes()


def test_preset_scenario_gives_four_aggregates(tmp_path):
    d = dict(PRESETS["scenario1-noninterp"], iterations=20, n_seeds=2)
    out = tmp_path / "out"
    assert main(["sweep", write(tmp_path / "c.json", d), "--out", str(out), "--no-plots"]) == EXIT_OK
    assert len(list(out.rglob("aggregate.csv"))) == 4


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_valid(name):
    exp = preset(name)
    assert exp.n_seeds == 10 and exp.run.problem.n == 50
    assert len(list(exp.combinations())) == 4
    if "noninterp" in name:
        assert exp.run.problem.sigma_b > 0 and exp.run.iterations == 100_000
    else:
        assert exp.run.problem.sigma_b == 0 and exp.run.iterations == 10_000


def test_config_round_trip(tmp_path):
    exp = ExperimentConfig.from_dict(dict(MIN_CONFIG, sweep={"problem.L": [2.0, 3.0]}, n_seeds=3, plots=False))
    p = tmp_path / "x.json"
    exp.to_json(p)
    back = load_config(p)
    assert back == exp
    assert back.to_dict() == exp.to_dict()


def test_apply_override():
    d = {"problem": {"L": 1.0}, "alpha": 1.0}
    apply_override(d, "problem.L", 5.0)
    apply_override(d, "alpha", 0.5)
    assert d == {"problem": {"L": 5.0}, "alpha": 0.5}
    with pytest.raises(InvalidSpec):
        apply_override(d, "problem.L.x", 1)


def test_verify_lemmas(tmp_path, capsys):
    assert main(["verify", "--suite", "lemmas", "--out", str(tmp_path)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "[PASS]" in text and "[FAIL]" not in text
    with open(tmp_path / "verify_lemmas.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"criterion", "check", "bound", "observed", "margin", "pass", "gating", "detail"}


def test_module_entry_point(tmp_path):
    env = dict(os.environ, ADAPTIVE_SGD_OUT=str(tmp_path))
    r = subprocess.run([sys.executable, "-m", "adaptive_sgd", "--help"], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "verify" in r.stdout
    r = subprocess.run([sys.executable, "-m", "adaptive_sgd", "run", "no-such-preset"], capture_output=True,
                       text=True, env=env)
    assert r.returncode == EXIT_CONFIG
