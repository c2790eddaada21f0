import json
import struct
import subprocess
import sys

import numpy as np
import pytest

from confband.cli import main


def png_chunks(path):
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    pos, kinds = 8, []
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        kinds.append(data[pos + 4 : pos + 8].decode())
        pos += 12 + length
    return kinds


@pytest.fixture
def workspace(tmp_path):
    x = np.random.default_rng(0).standard_normal(3000)
    (tmp_path / "x.csv").write_text("x\n" + "\n".join(repr(float(v)) for v in x) + "\n")
    (tmp_path / "c.json").write_text(json.dumps({"seed": 11, "kernel": "bl2"}))
    (tmp_path / "cov.json").write_text(json.dumps({"seed": 11, "kernel": "haar", "n": 2000, "reps": 3}))
    return tmp_path


def test_band_outputs(workspace):
    out = workspace / "o"
    assert main(["band", "--config", str(workspace / "c.json"), "--data", str(workspace / "x.csv"), "--out", str(out)]) == 0
    header = (out / "band.csv").read_text().splitlines()[0]
    assert header == "y,center,lower,upper"
    meta = json.loads((out / "band.json").read_text())
    for key in ("j_hat", "u_n", "sigma_hat", "A_hat", "B_hat", "c_K", "x", "alpha", "M", "seed"):
        assert key in meta
    assert meta["config"]["seed"] == 11
    kinds = png_chunks(out / "band.png")
    assert "tEXt" not in kinds and "iTXt" not in kinds and "tIME" not in kinds


def test_coverage_outputs(workspace):
    out = workspace / "cov"
    assert main(["coverage", "--config", str(workspace / "cov.json"), "--out", str(out)]) == 0
    summary = json.loads((out / "coverage.json").read_text())
    assert summary["reps"] == 3
    assert (out / "coverage_reps.csv").read_text().startswith("rep,status,j_hat,sup_halfwidth,error\n")
    assert (out / "coverage.png").exists()


def test_limits_outputs(workspace):
    out = workspace / "lim"
    assert main(["limits", "--family", "bl3", "--j", "5", "--reps", "120", "--seed", "4", "--out", str(out)]) == 0
    rows = (out / "limits.csv").read_text().splitlines()
    assert rows[0] == "normalized_sup" and len(rows) == 121
    assert json.loads((out / "limits.json").read_text())["reps"] == 120


def test_lemma1_outputs(workspace, capsys):
    out = workspace / "lem"
    assert main(["lemma1", "--r", "4", "--out", str(out)]) == 0
    info = json.loads((out / "lemma1.json").read_text())
    assert info["C"] > 0 and info["A"] > 0
    assert json.loads(capsys.readouterr().out) == info


@pytest.mark.parametrize(
    "argv,kind",
    [
        (["band", "--config", "missing.json", "--data", "x.csv", "--out", "o"], "config"),
        (["limits", "--family", "bl3", "--j", "5", "--reps", "10", "--out", "o"], "usage"),
        (["lemma1", "--r", "7", "--out", "o"], "config"),
        (["frobnicate"], "usage"),
    ],
)
def test_errors_are_json_on_stderr(workspace, capsys, monkeypatch, argv, kind):
    monkeypatch.chdir(workspace)
    status = main(argv)
    err = json.loads(capsys.readouterr().err)
    assert status != 0 and err["error"] == kind and err["message"]


def test_bad_data_line_reported(workspace, capsys):
    (workspace / "bad.csv").write_text("\n".join(["1.0"] * 50 + ["oops"] + ["1.0"] * 60))
    status = main(["band", "--config", str(workspace / "c.json"), "--data", str(workspace / "bad.csv"), "--out", str(workspace / "o")])
    err = json.loads(capsys.readouterr().err)
    assert status != 0 and err == {"error": "data", "line": 51, "message": "line 51: not a real number: 'oops'"}


def test_module_entry_point(workspace):
    proc = subprocess.run([sys.executable, "-m", "confband", "lemma1", "--r", "2", "--out", str(workspace / "m")], capture_output=True, text=True)
    assert proc.returncode == 0
    bad = subprocess.run([sys.executable, "-m", "confband", "lemma1", "--r", "9", "--out", str(workspace / "m")], capture_output=True, text=True)
    assert bad.returncode != 0 and json.loads(bad.stderr)["error"] == "config"
