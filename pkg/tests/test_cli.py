from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from surfdens.bench import BenchRow, rows_to_csv, run_bench
from surfdens.cli import main
from surfdens.io import SampleFileError, read_samples, write_samples
from surfdens.polynomial import PiecewiseEstimate


def run(*argv):
    return main([str(a) for a in argv])


def test_read_write_round_trip(tmp_path):
    values = np.random.default_rng(0).normal(size=50)
    for name in ("a.txt", "a.f64"):
        write_samples(tmp_path / name, values)
        assert np.array_equal(read_samples(tmp_path / name), values)


def test_read_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0\n# note\n\n2.5\nnope\n")
    with pytest.raises(SampleFileError, match=r"bad.txt:5:"):
        read_samples(bad)
    inf = tmp_path / "inf.txt"
    inf.write_text("1\ninf\n")
    with pytest.raises(SampleFileError, match=":2:"):
        read_samples(inf)
    short = tmp_path / "short.bin"
    short.write_bytes(b"\0" * 12)
    with pytest.raises(SampleFileError, match="multiple of 8"):
        read_samples(short)


def test_fit_uniform_degree_zero(tmp_path, capsys):
    x = np.random.default_rng(1).random(127)
    src = tmp_path / "u.txt"
    write_samples(src, x)
    out = tmp_path / "est.json"
    assert run("fit", src, "--degree", 0, "--out", out) == 0
    est = PiecewiseEstimate.loads(out.read_text())
    assert est.hull == (x.min(), x.max())
    echo = capsys.readouterr().out
    assert f"pieces={len(est.pieces)}" in echo and '"degree": 0' in echo


def test_fit_bad_line_reports_line_and_writes_nothing(tmp_path, capsys):
    src = tmp_path / "s.txt"
    src.write_text("\n".join(["0.1"] * 10 + ["oops"]) + "\n")
    out = tmp_path / "est.json"
    assert run("fit", src, "--out", out) != 0
    err = capsys.readouterr().err
    assert ":11:" in err and len(err.strip().splitlines()) == 1
    assert not out.exists()


def test_fit_rejects_degree_nine(tmp_path, capsys):
    src = tmp_path / "s.txt"
    write_samples(src, np.arange(20.0))
    with pytest.raises(SystemExit) as info:
        run("fit", src, "--degree", 9)
    assert info.value.code != 0
    assert "degree must be ≤ 8" in capsys.readouterr().err


def test_fit_too_few_samples(tmp_path, capsys):
    src = tmp_path / "s.txt"
    write_samples(src, np.arange(6.0))
    assert run("fit", src) == 1
    assert "at least 7" in capsys.readouterr().err


def test_fit_seed_from_environment(tmp_path, monkeypatch, capsys):
    src = tmp_path / "s.txt"
    write_samples(src, np.random.default_rng(2).random(300))
    monkeypatch.setenv("SURF_SEED", "5")
    run("fit", src, "--out", tmp_path / "a.json")
    run("fit", src, "--seed", 5, "--out", tmp_path / "b.json")
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert a["pieces"] == b["pieces"] and a["meta"]["config"]["seed"] == 5


def test_config_file_supplies_defaults(tmp_path, capsys):
    src = tmp_path / "s.txt"
    write_samples(src, np.random.default_rng(3).random(255))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "degree": 2}))
    assert run("--config", cfg, "fit", src, "--out", tmp_path / "e.json") == 0
    meta = json.loads((tmp_path / "e.json").read_text())["meta"]["config"]
    assert meta["alpha"] == 0.5 and meta["degree"] == 2
    run("--config", cfg, "fit", src, "--alpha", 0.1, "--out", tmp_path / "f.json")
    assert json.loads((tmp_path / "f.json").read_text())["meta"]["config"]["alpha"] == 0.1


def test_theory_alpha(tmp_path):
    src = tmp_path / "s.txt"
    write_samples(src, np.random.default_rng(4).random(255))
    run("fit", src, "--theory-alpha", "--out", tmp_path / "e.json")
    assert json.loads((tmp_path / "e.json").read_text())["meta"]["config"]["alpha"] == 4.5


def test_sample_then_curve_and_error(tmp_path, capsys):
    samples = tmp_path / "g.f64"
    assert run("sample", "gauss-f1", "--count", 1023, "--seed", 1, "--out", samples) == 0
    assert read_samples(samples).size == 1023
    est = tmp_path / "e.json"
    run("fit", samples, "--out", est)
    capsys.readouterr()
    assert run("curve", est, "--spec", "gauss-f1", "--points", 5) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,estimate,density" and len(lines) == 6
    assert run("error", est, "gauss-f1") == 0
    assert 0 < float(capsys.readouterr().out) < 2


def test_unknown_spec(capsys):
    assert run("sample", "nope", "--count", 3) == 1
    assert "unknown spec" in capsys.readouterr().err


def test_bench_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run("bench", "beta-f3", "gauss-f2", "--degree", "0,1", "--n", "64,128", "--trials", 1,
                   "--seed", 3, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "spec,degree,n,trials,mean_l1,std_l1"
    keys = [tuple(line.split(",")[:3]) for line in lines[1:]]
    assert keys == sorted(keys, key=lambda k: (k[0], int(k[1]), int(k[2])))
    assert len(keys) == 8


def test_bench_jobs_same_rows():
    one = run_bench(["beta-f1"], [1], [128, 256], 3, seed=1, jobs=1)
    two = run_bench(["beta-f1"], [1], [128, 256], 3, seed=1, jobs=2)
    assert rows_to_csv(one) == rows_to_csv(two)
    assert "wall_seconds" in rows_to_csv(one, timing=True).splitlines()[0]


def test_bench_row_validation():
    with pytest.raises(ValueError):
        BenchRow("x", 1, 100, 1, 0.1, 0.0)
    with pytest.raises(ValueError):
        BenchRow("x", 1, 128, 0, 0.1, 0.0)


def test_verify_nodes_csv(tmp_path):
    out = tmp_path / "nodes.csv"
    assert run("verify-nodes", "--degree", "0-3", "--out", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "degree,nodes,ratio,published_ratio,delta,optimized_nodes,optimized_ratio"
    assert len(rows) == 5
    d2 = rows[3].split(",")
    assert abs(float(d2[2]) - 1.423) < 0.01
    assert abs(float(d2[5].split()[1]) - 0.2599) < 0.002


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "surfdens", "sample", "beta-f3", "-c", "2", "--seed", "1"],
                         capture_output=True, text=True, check=True)
    assert len(res.stdout.split()) == 2
