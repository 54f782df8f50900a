import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from isoprod import __version__
from isoprod.bonnet import BonnetData
from isoprod.cli import dumps, main

SCENES = Path(__file__).resolve().parent.parent / "scenes"


def run(*args, tmp_path):
    report = tmp_path / "report.json"
    code = main([*args, "--report", str(report)])
    return code, json.loads(report.read_text()) if report.exists() else None


def scene(name):
    return str(SCENES / f"{name}.json")


def test_verify_passes(tmp_path):
    code, rep = run("verify", "--scene", scene("circle_sum"), tmp_path=tmp_path)
    assert code == 0 and rep["pass"] and rep["points"] == 60
    assert rep["report"]["eq4_R"]["pass"]


def test_verify_bad_weights_is_an_input_error(tmp_path):
    code, rep = run("verify", "--scene", scene("bad_weights"), tmp_path=tmp_path)
    assert code == 2 and rep["stage"] == "input" and rep["error_type"] == "WeightError"


def test_verify_empty_grid(tmp_path):
    code, _ = run("verify", "--scene", scene("empty_grid"), tmp_path=tmp_path)
    assert code == 2


def test_verify_reports_failures_with_exit_one(tmp_path):
    code, rep = run("verify", "--scene", scene("circle_sum"), "--tol-override", "algebraic=1e-30",
                    tmp_path=tmp_path)
    assert code == 1 and not rep["pass"] and rep["failures"]


@pytest.mark.parametrize("args", [["verify"], ["verify", "--scene", "/nonexistent.json"],
                                  ["verify", "--scene", scene("circle_sum"), "--grid", "3x"],
                                  ["verify", "--scene", scene("circle_sum"), "--tol-override", "bogus=1"],
                                  ["verify", "--scene", scene("circle_sum"), "--tol-override", "gauss"],
                                  ["reduce", "--scene", scene("circle_sum")],
                                  ["reduce", "--scene", scene("circle_sum"), "--factor", "5"],
                                  ["detect", "--data", scene("circle_sum")],
                                  ["frobnicate"]])
def test_input_errors(args, tmp_path):
    assert main([*args, "--report", str(tmp_path / "r.json")]) == 2


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--scene", str(bad), "--report", str(tmp_path / "r.json")]) == 2
    bad.write_text(json.dumps({"space": {"factors": [{"n": 1, "k": 1.0}]}, "immersion": {"op": "circle", "k": 1}}))
    assert main(["verify", "--scene", str(bad), "--report", str(tmp_path / "r.json")]) == 2
    bad.write_text(json.dumps({"space": {"factors": [{"n": 1, "k": 1.0}, {"n": 1, "k": 1.0}]},
                               "immersion": {"op": "teapot"}}))
    assert main(["verify", "--scene", str(bad), "--report", str(tmp_path / "r.json")]) == 2


def test_detect_verdicts(tmp_path):
    _, rep = run("detect", "--scene", scene("slice_circle"), tmp_path=tmp_path)
    assert rep["detection"]["verdict"] == "slice(2)"
    _, rep = run("detect", "--scene", scene("flat_torus"), tmp_path=tmp_path)
    assert rep["detection"]["kind"] == "product"
    code, rep = run("detect", "--scene", scene("chirped_sum"), tmp_path=tmp_path)
    assert code == 0 and rep["detection"]["verdict"] == "none"
    ev = rep["detection"]["evidence"]
    assert any(not e["pass"] for e in ev.values())


def test_reduce(tmp_path):
    code, rep = run("reduce", "--scene", scene("great_circle"), tmp_path=tmp_path)
    assert code == 0 and rep["reducible"] and rep["nbar"] == 1
    assert rep["theorem_check"]["consistent"]
    _, rep = run("reduce", "--scene", scene("latitude_circle"), "--factor", "1", tmp_path=tmp_path)
    assert rep["reducible"] and rep["nbar"] == 0


def test_reconstruct_round_trip(tmp_path):
    pts = tmp_path / "points.json"
    code, rep = run("reconstruct", "--scene", scene("circle_sum"), "--emit-points", str(pts),
                    tmp_path=tmp_path)
    assert code == 0 and rep["pass"]
    assert rep["match"]["error"] <= 1e-5
    samples = json.loads(pts.read_text())
    assert np.asarray(samples["points"]).shape == (200, 4)


def test_reconstruct_error_limit(tmp_path):
    code, rep = run("reconstruct", "--scene", scene("circle_sum"), "--grid", "60", "--max-error", "1e-30",
                    tmp_path=tmp_path)
    assert code == 1 and "round_trip_error" in rep["failures"]


def test_corrupted_data_fails_gauss(tmp_path):
    data_path = tmp_path / "data.json"
    code, _ = run("reconstruct", "--scene", scene("small_sphere_sum"), "--emit-data", str(data_path),
                  tmp_path=tmp_path)
    assert code == 0
    code, rep = run("reconstruct", "--data", str(data_path), tmp_path=tmp_path)
    assert code == 0 and rep["pass"]
    data = BonnetData.from_dict(json.loads(data_path.read_text()))
    data_path.write_text(json.dumps(data.replace(alpha=np.zeros_like(data.alpha)).to_dict()))
    code, rep = run("reconstruct", "--data", str(data_path), tmp_path=tmp_path)
    assert code == 1 and "eq10_gauss" in rep["failures"]


def test_reports_are_byte_identical(tmp_path):
    outs = []
    for n in range(2):
        path = tmp_path / f"r{n}.json"
        main(["reconstruct", "--scene", scene("flat_torus"), "--grid", "16x16", "--report", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_float_format():
    assert dumps(1.0) == "1.0"
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(float("inf")) == '"inf"'
    assert dumps(np.float64(3)) == "3.0"
    assert dumps({"b": 1, "a": [1e-20, True]}) == '{\n  "a": [\n    9.9999999999999995e-21,\n    true\n  ],\n  "b": 1\n}'


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "isoprod", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
    out = subprocess.run([sys.executable, "-m", "isoprod", "detect", "--scene", scene("slice_circle")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["detection"]["factor"] == 2
