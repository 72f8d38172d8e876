import csv
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from qwalk import cli, selftest
from qwalk.engine import RunConfig, simulate
from qwalk.disorder import DisorderParams


def run(*args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def schema():
    s = cli.load_schema()
    jsonschema.Draft202012Validator.check_schema(s)
    return s


def test_zero_steps_gives_one_row(tmp_path):
    assert run("simulate", "--T", 0, "--R", 5, "--j", 3, "--p", 0.3, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "matrix.csv")
    assert len(rows) == 2
    values = [float(v) for v in rows[1][1:]]
    assert values.count(1.0) == 1 and sum(values) == 1.0
    assert rows[0][1:][values.index(1.0)] == "0.5"
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["seed"] == 0 and meta["version"]
    assert meta["initial_slot"] == values.index(1.0)


def test_csv_layout_and_round_trip(tmp_path):
    args = ["simulate", "--mode", "dynamic", "--T", 12, "--R", 70, "--j", 5, "--p", 0.3, "--seed", 9,
            "--record-every", 5, "--out", tmp_path]
    assert run(*args) == 0
    raw = (tmp_path / "matrix.csv").read_bytes()
    assert b"\r" not in raw
    times, channels, probs = cli.read_matrix(tmp_path / "matrix.csv")
    assert times.tolist() == [0, 5, 10, 12]
    assert channels[0] == -19.5 and channels[-1] == 19.5
    config = RunConfig(DisorderParams(40, 5, 0.3, "dynamic"), T=12, R=70, master_seed=9, record_every=5)
    expected = simulate(config, threads=1).probabilities
    assert np.max(np.abs(probs - expected)) <= 1e-12
    summary = read_csv(tmp_path / "summary.csv")
    assert summary[0] == ["t", "var", "shannon", "tsallis2"]
    assert len(summary) == 5


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_output_identical_across_threads(tmp_path, fmt):
    outs = []
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        assert run("simulate", "--mode", "static", "--T", 30, "--R", 200, "--j", 7, "--p", 0.25,
                   "--seed", 123, "--threads", threads, "--format", fmt, "--out", out) == 0
        outs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
    assert outs[0] == outs[1]


def test_threads_env_does_not_change_output(tmp_path, monkeypatch):
    blobs = []
    for env in ("1", "3"):
        monkeypatch.setenv("QWALK_THREADS", env)
        out = tmp_path / env
        assert run("simulate", "--T", 10, "--R", 130, "--j", 3, "--p", 0.2, "--out", out) == 0
        blobs.append((out / "matrix.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_json_output_validates(tmp_path, schema):
    assert run("simulate", "--T", 6, "--R", 10, "--j", 3, "--p", 0.2, "--format", "json", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "result.json").read_text())
    jsonschema.validate(doc, schema)
    assert len(doc["probabilities"]) == 7
    bad = dict(doc, probabilities=[[-1.0]])
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, schema)


def test_validation_errors_exit_2(tmp_path, capsys):
    assert run("simulate", "--N", 8, "--j", 4, "--T", 2, "--out", tmp_path) == 2
    assert "N/gcd(N,j) must exceed 2" in capsys.readouterr().err
    assert run("simulate", "--N", 20, "--T", 50, "--j", 3, "--out", tmp_path) == 2
    assert run("simulate", "--p", 1.0, "--T", 2, "--out", tmp_path) == 2
    assert run("simulate", "--T", 2, "--initial-channel", 0.25, "--out", tmp_path) == 2
    assert run("sweep", "--out", tmp_path) == 2
    with pytest.raises(SystemExit) as exc:
        run("simulate", "--mode", "frozen")
    assert exc.value.code == 2


def test_allow_wrap(tmp_path):
    assert run("simulate", "--N", 20, "--T", 30, "--j", 3, "--R", 4, "--allow-wrap", "--out", tmp_path) == 0


def test_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "job.json"
    conf.write_text(json.dumps({"T": 8, "R": 20, "j": 5, "p": 0.1, "mode": "dynamic", "seed": 4}))
    assert run("simulate", "--config", conf, "--p", 0.3, "--out", tmp_path / "a") == 0
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert meta["config"] == {"mode": "dynamic", "N": 32, "j": 5, "p": 0.3, "T": 8, "R": 20, "seed": 4,
                              "record_every": 1, "initial_channel": 0.5, "allow_wrap": False}
    conf.write_text(json.dumps({"bogus": 1}))
    assert run("simulate", "--config", conf, "--out", tmp_path / "b") == 2


def test_unwritable_output_exits_1(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("simulate", "--T", 2, "--R", 2, "--j", 3, "--out", blocker / "sub") == 1


def test_sweep_table_with_error_row(tmp_path, schema):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"p": [0.2], "j": [3, 20]}))
    assert run("sweep", "--grid", grid, "--N", 40, "--T", 10, "--R", 8, "--out", tmp_path / "c") == 0
    rows = read_csv(tmp_path / "c" / "sweep.csv")
    header, good, bad = rows
    assert header == ["p", "j", "var", "shannon", "tsallis2", "inv_a_whole", "inv_a_peak", "x", "y",
                      "second_moment_injection", "failed", "error"]
    rec = dict(zip(header, good))
    assert rec["failed"] == "0" and rec["error"] == "" and float(rec["var"]) > 0
    rec = dict(zip(header, bad))
    assert rec["failed"] == "1" and "N/gcd(N,j)" in rec["error"] and rec["var"] == "nan"
    assert run("sweep", "--grid", grid, "--N", 40, "--T", 10, "--R", 8, "--format", "json",
               "--out", tmp_path / "d") == 0
    jsonschema.validate(json.loads((tmp_path / "d" / "sweep.json").read_text()), schema)


def test_singleton_sweep(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"p": [0.0], "j": [5]}))
    assert run("sweep", "--grid", grid, "--T", 10, "--R", 2, "--out", tmp_path) == 0
    assert len(read_csv(tmp_path / "sweep.csv")) == 2


def test_stats_command(tmp_path, schema):
    assert run("simulate", "--T", 40, "--R", 50, "--j", 7, "--p", 0.2, "--out", tmp_path) == 0
    assert run("stats", "--input", tmp_path / "matrix.csv", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "stats.csv")
    assert rows[0] == list(cli.STATS_COLUMNS) and len(rows) == 42
    summary = read_csv(tmp_path / "summary.csv")
    assert rows[-1][1] == summary[-1][1]  # same variance as simulate reported
    assert run("stats", "--input", tmp_path / "matrix.csv", "--format", "json", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "stats.json").read_text())
    jsonschema.validate(doc, schema)
    assert doc["metadata"]["j"] == 7 and doc["metadata"]["R"] == 50
    assert run("stats", "--input", tmp_path / "missing.csv", "--out", tmp_path) == 2


def test_selftest_passes(capsys):
    assert run("selftest") == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_selftest_detects_corrupt_coin(capsys):
    bad = np.array([[1.0, 1.0], [1.0, -0.9]]) / np.sqrt(2)
    results = {r.name: r.passed for r in selftest.run_checks(coin=bad)}
    assert results["coin unitarity"] is False
    assert selftest.main(sys.stdout, coin=bad) == 1
    assert "FAIL  coin unitarity" in capsys.readouterr().out


def test_selftest_deterministic():
    a = [(r.name, r.passed, r.detail) for r in selftest.run_checks()]
    b = [(r.name, r.passed, r.detail) for r in selftest.run_checks()]
    assert a == b


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qwalk", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "qwalk", "simulate", "--N", "8", "--j", "4", "--T", "1",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 2
