import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rwpf import cli, lowdisc, oracles, smc
from rwpf.errors import DegeneracyError


def _run(*args):
    return subprocess.run([sys.executable, "-m", "rwpf", *args],
                          capture_output=True, text=True)


def _write_config(path, extra=None, **top):
    raw = {
        "model": {"name": "zero"},
        "x0": 0.0,
        "observation_times": [1.0, 2.0, 3.0],
        "noise_sd": 1.0,
        "particles": 64,
        "seed": 12345,
    }
    raw.update(top)
    if extra:
        raw.update(extra)
    path.write_text(json.dumps(raw))
    return path


def _summary_without_walltime(path):
    with open(path) as f:
        data = json.load(f)
    data.pop("wall_time_seconds")
    return data


def test_simulate_and_filter_roundtrip(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    out1 = tmp_path / "o1"
    r = _run("simulate", "--config", str(cfg), "--out", str(out1))
    assert r.returncode == 0, r.stderr
    ds_path = out1 / "dataset.json"
    assert ds_path.exists()

    r = _run("filter", "--config", str(cfg), "--data", str(ds_path),
             "--out", str(out1))
    assert r.returncode == 0, r.stderr
    with open(out1 / "steps.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 3
    assert set(rows[0]) == {"step", "time", "ess", "loglik_inc", "resampled",
                            "mean_kappa", "post_mean", "post_var"}
    summary = _summary_without_walltime(out1 / "summary.json")
    assert summary["n_steps"] == 3
    assert math.isfinite(summary["total_log_likelihood"])
    assert summary["config"]["seed"] == 12345


def test_filter_reproducible_byte_for_byte(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    outs = []
    for name, threads in [("a", "1"), ("b", "8")]:
        out = tmp_path / name
        assert _run("simulate", "--config", str(cfg), "--out", str(out)).returncode == 0
        assert _run("filter", "--config", str(cfg), "--data",
                    str(out / "dataset.json"), "--out", str(out),
                    "--threads", threads).returncode == 0
        outs.append(out)
    a, b = outs
    assert (a / "dataset.json").read_bytes() == (b / "dataset.json").read_bytes()
    assert (a / "steps.csv").read_bytes() == (b / "steps.csv").read_bytes()
    assert _summary_without_walltime(a / "summary.json") == \
        _summary_without_walltime(b / "summary.json")


def test_filter_dataset_hash_mismatch_exits_2(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    out = tmp_path / "out"
    _run("simulate", "--config", str(cfg), "--out", str(out))
    other = _write_config(tmp_path / "cfg2.json", seed=999)
    r = _run("filter", "--config", str(other), "--data",
             str(out / "dataset.json"), "--out", str(out))
    assert r.returncode == 2
    assert "mismatch" in r.stderr


def test_seed_override_changes_outputs(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    _run("simulate", "--config", str(cfg), "--out", str(out1))
    _run("simulate", "--config", str(cfg), "--out", str(out2), "--seed", "777")
    d1 = json.loads((out1 / "dataset.json").read_text())
    d2 = json.loads((out2 / "dataset.json").read_text())
    assert d1["observations"] != d2["observations"]
    assert d2["seed"] == 777


def test_bad_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    r = _run("simulate", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert r.returncode == 2
    missing = _write_config(tmp_path / "missing.json")
    raw = json.loads(missing.read_text())
    del raw["seed"]
    missing.write_text(json.dumps(raw))
    r = _run("simulate", "--config", str(missing), "--out", str(tmp_path / "o"))
    assert r.returncode == 2
    assert "seed" in r.stderr


def test_degeneracy_maps_to_exit_3(tmp_path, monkeypatch):
    cfg = _write_config(tmp_path / "cfg.json")
    out = tmp_path / "out"
    assert _run("simulate", "--config", str(cfg), "--out", str(out)).returncode == 0

    def boom(model, obs, fcfg):
        raise DegeneracyError("all weights zero", step_index=1)

    monkeypatch.setattr(smc, "run_filter", boom)
    code = cli.main(["filter", "--config", str(cfg), "--data",
                     str(out / "dataset.json"), "--out", str(out / "f")])
    assert code == 3


def test_psi_bench_smoke_and_reproducibility(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json", extra={
        "model": {"name": "sine"},
        "bench": {"x_a": 0.0, "x_b": 0.0, "a": 0.0, "b": 1.0,
                  "inner_points_grid": [4, 8], "replications": 200,
                  "modes": ["mc", "rqmc-times-values"]},
    })
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    for out, threads in [(out1, "1"), (out2, "8")]:
        r = _run("psi-bench", "--config", str(cfg), "--out", str(out),
                 "--threads", threads)
        assert r.returncode == 0, r.stderr
    assert (out1 / "psi_bench.csv").read_bytes() == (out2 / "psi_bench.csv").read_bytes()
    assert _summary_without_walltime(out1 / "summary.json") == \
        _summary_without_walltime(out2 / "summary.json")

    # CSV is loss-free: re-read values equal the summary-level means
    with open(out1 / "psi_bench.csv") as f:
        rows = list(csv.DictReader(f))
    vals = [float(r["value"]) for r in rows
            if r["mode"] == "mc" and r["M"] == "4"]
    summary = json.loads((out1 / "summary.json").read_text())
    stat = next(s for s in summary["stats"]
                if s["mode"] == "mc" and s["inner_points"] == 4)
    assert np.mean(vals) == stat["mean"]  # exact, not approximate


def test_psi_bench_tanh_degenerate_ratio(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json", extra={
        "model": {"name": "tanh"},
        "bench": {"x_a": 0.0, "x_b": 0.0, "a": 0.0, "b": 1.0,
                  "inner_points_grid": [8], "replications": 100,
                  "modes": ["mc", "rqmc-times-values"]},
    })
    out = tmp_path / "out"
    r = _run("psi-bench", "--config", str(cfg), "--out", str(out))
    assert r.returncode == 0, r.stderr
    summary = json.loads((out / "summary.json").read_text())
    for s in summary["stats"]:
        assert s["variance"] == 0.0
        assert s["mean"] == math.exp(-0.5)
    ratio = summary["variance_ratios"][0]
    assert ratio["degenerate"] is True
    assert ratio["ratio"] is None  # NaN flagged, not serialized as a number


def test_psi_bench_skeleton_dump(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json", extra={
        "model": {"name": "sine"},
        "bench": {"x_a": 0.0, "x_b": 0.0, "a": 0.0, "b": 1.0,
                  "inner_points_grid": [4], "replications": 20,
                  "modes": ["mc"]},
    })
    out = tmp_path / "out"
    r = _run("psi-bench", "--config", str(cfg), "--out", str(out),
             "--dump-skeletons")
    assert r.returncode == 0, r.stderr
    with open(out / "skeletons.csv") as f:
        rows = list(csv.DictReader(f))
    assert rows and set(rows[0]) == {"mode", "M", "time", "value"}
    times = [float(r["time"]) for r in rows]
    assert times[0] == 0.0 and times[-1] == 1.0  # endpoints always present
    assert times == sorted(times)


def test_psi_bench_requires_section(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    r = _run("psi-bench", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert r.returncode == 2
    assert "bench" in r.stderr


def test_qmc_dump_matches_generator_and_roundtrips(tmp_path):
    out = tmp_path / "q1"
    r = _run("qmc-dump", "--dimension", "1", "--count", "4",
             "--scheme", "none", "--out", str(out))
    assert r.returncode == 0, r.stderr
    with open(out / "points.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["point_index", "c0"]
    vals = [float(r[1]) for r in rows[1:]]
    assert vals == [0.0, 0.5, 0.25, 0.75]

    out2 = tmp_path / "q2"
    _run("qmc-dump", "--dimension", "1", "--count", "4",
         "--scheme", "none", "--out", str(out2))
    assert (out / "points.csv").read_bytes() == (out2 / "points.csv").read_bytes()

    out3 = tmp_path / "q3"
    r = _run("qmc-dump", "--dimension", "2", "--count", "256",
             "--scheme", "digital-shift", "--seed", "7", "--out", str(out3))
    assert r.returncode == 0, r.stderr
    with open(out3 / "points.csv") as f:
        rows = list(csv.reader(f))
    pts = np.array([[float(c) for c in row[1:]] for row in rows[1:]])
    direct = lowdisc.randomize(lowdisc.generate_base(2, 256), "digital-shift", 7)
    assert np.array_equal(pts, direct.points)  # full round-trip precision
    reread = lowdisc.PointSet(2, 256, pts, "digital-shift", 7,
                              lowdisc.shift_from_floats(pts))
    report = lowdisc.projection_quality(reread)
    assert report.max_stat <= report.threshold_999


def test_qmc_dump_dimension_error(tmp_path):
    r = _run("qmc-dump", "--dimension", "65", "--count", "4",
             "--scheme", "none", "--out", str(tmp_path / "o"))
    assert r.returncode == 2


def test_oracle_psi_bruteforce(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json", extra={
        "model": {"name": "tanh"},
        "oracle": {"kind": "psi-bruteforce", "x_a": 0.0, "x_b": 0.0,
                   "a": 0.0, "b": 1.0, "n_steps": 200, "n_paths": 2000},
    })
    out = tmp_path / "out"
    r = _run("oracle", "--config", str(cfg), "--out", str(out))
    assert r.returncode == 0, r.stderr
    res = json.loads((out / "oracle.json").read_text())
    assert res["value"] == pytest.approx(math.exp(-0.5), rel=1e-9)
    assert res["se"] < 1e-12
    assert res["settings"]["kind"] == "psi-bruteforce"


def test_oracle_kalman_matches_library(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    out = tmp_path / "out"
    _run("simulate", "--config", str(cfg), "--out", str(out))
    cfg2 = _write_config(tmp_path / "cfg2.json", extra={
        "oracle": {"kind": "kalman", "dataset": str(out / "dataset.json")},
    })
    r = _run("oracle", "--config", str(cfg2), "--out", str(out))
    assert r.returncode == 0, r.stderr
    res = json.loads((out / "oracle.json").read_text())
    ds = json.loads((out / "dataset.json").read_text())
    ref = oracles.kalman_filter(0.0, [1.0, 1.0, 1.0], ds["observations"], 1.0)
    assert res["value"] == ref.log_likelihood


def test_oracle_unknown_kind(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json",
                        extra={"oracle": {"kind": "tarot"}})
    r = _run("oracle", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert r.returncode == 2
