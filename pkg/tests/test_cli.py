import csv
import io
import json
import math

import numpy as np
import pytest

from morse_index import expr
from morse_index.cli import main
from morse_index.config import load_spec_file, number, parse_spec
from morse_index.errors import ConfigError
from morse_index.report import dump_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), out


def test_conjugate_sphere(capsys):
    code, doc, _ = run_json(capsys, "conjugate", "--builtin", "sphere-constcurv", "--length", "2.5pi")
    assert code == 0
    pts = doc["result"]["points"]
    assert [(round(p["t"], 7), p["multiplicity"]) for p in pts] == [(0.4, 1), (0.8, 1)]
    assert doc["schema"] == 1 and doc["command"] == "conjugate"
    assert doc["result"]["wronskian_max"] < 1e-9


def test_conjugate_text_table(capsys):
    code, out, _ = run(capsys, "conjugate", "--builtin", "sphere-constcurv", "--length", "2.5pi")
    assert code == 0
    assert "0.4000000000" in out and "0.8000000000" in out


@pytest.mark.parametrize("name", ["flat", "halfplane-metric2d"])
def test_conjugate_empty(capsys, name):
    code, doc, _ = run_json(capsys, "conjugate", "--builtin", name)
    assert code == 0
    assert doc["result"]["points"] == [] and doc["result"]["nondegenerate"]


@pytest.mark.parametrize("argv, mu", [
    (["--builtin", "sphere-constcurv", "--length", "2.5pi"], 2),
    (["--builtin", "flat"], 0),
    (["--constant", "(1.5pi)^2"], 1),
    (["--constant", "(2.5pi)^2", "--dim", "3"], 4),
])
def test_index(capsys, argv, mu):
    code, doc, _ = run_json(capsys, "index", *argv)
    assert code == 0 and doc["result"]["mu"] == mu


def test_index_text(capsys):
    code, out, _ = run(capsys, "index", "--constant", "(1.5pi)^2")
    assert code == 0 and out.rstrip().endswith(": 1")


def test_verify_sphere(capsys):
    code, doc, _ = run_json(capsys, "verify", "--builtin", "sphere-constcurv", "--length", "2.5pi")
    assert code == 0
    res = doc["result"]
    assert res["agree"] and (res["mu_galerkin"], res["conjugate_total"], res["crossing_signature_sum"]) == (2, 2, -2)
    for d in res["crossings"]:
        assert len(d["closed"]) == len(d["fd"]) == d["multiplicity"]
        assert all(c < 0 for c in d["closed"])


def test_verify_degenerate_exit_code(capsys):
    code, out, err = run(capsys, "verify", "--builtin", "sphere-constcurv", "--length", "2pi", "--format", "json")
    assert code == 2
    assert json.loads(err)["error"] == "DegenerateGeodesic"
    assert json.loads(out)["error"]["exit_code"] == 2


def test_verify_random_suite(capsys):
    argv = ["verify", "--random", "3", "--seed", "7", "--modes", "32", "--format", "json"]
    code, doc, raw = run_json(capsys, *argv[:-2])
    assert code == 0
    assert doc["result"]["prng"] == "PCG64" and doc["result"]["seed"] == 7
    assert doc["result"]["all_agree"] and len(doc["result"]["trials"]) == 3
    _, _, again = run_json(capsys, *argv[:-2])
    assert again == raw


def test_verify_random_text_summary(capsys):
    code, out, _ = run(capsys, "verify", "--random", "2", "--seed", "1", "--modes", "16")
    assert code == 0 and "2/2 trials agree" in out and "PCG64 seed 1" in out


def test_crossings_command(capsys):
    code, doc, _ = run_json(capsys, "crossings", "--constant", "(2.5pi)^2", "--modes", "32")
    assert code == 0
    res = doc["result"]
    assert res["matched"] and res["signature_sum"] == -2
    assert [round(c["lambda0"], 7) for c in res["crossings"]] == [0.4, 0.8]


@pytest.mark.parametrize("argv", [
    ["conjugate", "--builtin", "sphere-constcurv", "--length", "2.5pi"],
    ["verify", "--constant", "30", "--dim", "3"],
    ["crossings", "--constant", "(1.5pi)^2", "--modes", "16"],
])
def test_json_round_trip_and_determinism(capsys, argv):
    _, doc, raw = run_json(capsys, *argv)
    assert dump_json(doc) == raw
    _, _, again = run_json(capsys, *argv)
    assert again == raw


def test_out_file(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, "index", "--builtin", "flat", "--format", "json", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["result"]["mu"] == 0


def test_csv_conjugate(capsys):
    code, out, _ = run(capsys, "conjugate", "--constant", "(2.5pi)^2", "--steps", "200", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["t", "det_J", "sigma_min_J"]
    assert len(rows) == 202
    t = np.array([float(r[0]) for r in rows[1:]])
    det = np.array([float(r[1]) for r in rows[1:]])
    c = 2.5 * math.pi
    assert np.allclose(det, np.sin(c * t) / c, atol=1e-6)


def test_csv_crossings(capsys):
    code, out, _ = run(capsys, "crossings", "--constant", "20", "--modes", "8", "--grid", "16", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0][0] == "lambda" and len(rows) == 18


@pytest.mark.parametrize("argv", [
    ["index"],
    ["index", "--builtin", "flat", "--constant", "1"],
    ["index", "--builtin", "torus"],
    ["index", "--constant", "1 +"],
    ["index", "--constant", "__import__('os')"],
    ["index", "--builtin", "flat", "--bogus"],
    ["index", "--builtin", "flat", "--steps", "5"],
    ["verify", "--random", "2", "--builtin", "flat"],
    ["frobnicate"],
])
def test_config_errors_exit_4(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 4
    assert json.loads(err)["error"] == "ConfigError"


def test_missing_spec_file(capsys, tmp_path):
    code, _, err = run(capsys, "index", "--spec", str(tmp_path / "nope.yaml"))
    assert code == 4 and "cannot read" in json.loads(err)["message"]


def test_spec_file_metric2d(capsys, tmp_path):
    path = tmp_path / "sphere.yaml"
    path.write_text(
        "kind: metric2d\n"
        "metric: {g11: '1', g12: '0', g22: 'sin(x)^2'}\n"
        "start: [pi/2, 0]\n"
        "direction: [0, 1]\n"
        "length: 2.5pi\n"
    )
    code, doc, _ = run_json(capsys, "conjugate", "--spec", str(path))
    assert code == 0
    assert [p["t"] for p in doc["result"]["points"]] == pytest.approx([0.4, 0.8], abs=1e-6)


def test_spec_file_direct_profile(capsys, tmp_path):
    path = tmp_path / "profile.yaml"
    path.write_text("kind: direct_profile\nprofile:\n  - ['(2.5pi)^2', '0']\n  - ['0', '-1']\n")
    code, doc, _ = run_json(capsys, "verify", "--spec", str(path), "--modes", "32")
    assert code == 0 and doc["result"]["mu_galerkin"] == 2


def test_spec_file_json(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(json.dumps({"kind": "constant_curvature", "dim": 3, "kappa": -1, "length": 2}))
    loaded = load_spec_file(path)
    assert loaded.spec.dim == 3 and loaded.spec.kappa == -1.0 and loaded.length == 2.0


@pytest.mark.parametrize("data", [
    {"kind": "constant_curvature", "dim": 2, "kappa": 1, "colour": "red"},
    {"kind": "torus"},
    {"kind": "constant_curvature", "dim": 1},
    {"kind": "metric2d", "metric": {"g11": "1", "g22": "1"}, "start": [0, 0], "direction": [1, 0]},
    {"kind": "metric2d", "metric": {"g11": "1", "g12": "0", "g22": "1"}, "start": [0, 0]},
    {"kind": "metric2d", "metric": {"g11": "1", "g12": "0", "g22": "1"}, "start": [0], "direction": [1, 0]},
    {"kind": "direct_profile", "profile": [["1", "x"], ["0", "1"]]},
    {"kind": "direct_profile", "profile": [["1", "0"]]},
    ["not", "a", "mapping"],
])
def test_strict_spec_parsing(data):
    with pytest.raises(ConfigError):
        parse_spec(data)


@pytest.mark.parametrize("text, value", [
    ("2.5pi", 2.5 * math.pi),
    ("(1.5pi)^2", (1.5 * math.pi) ** 2),
    ("2**3", 8.0),
    ("-sqrt(4) + exp(0)", -1.0),
    ("pi/2", math.pi / 2),
    (".5pi", 0.5 * math.pi),
    (3, 3.0),
])
def test_number(text, value):
    assert number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["x", "1 +", "sinh(1)", "a.b", "[1]", "", "1 if 1 else 2", "1/0", True])
def test_number_rejects(text):
    with pytest.raises(ConfigError):
        number(text)


def test_compiled_expression_and_derivative():
    e = expr.parse("x^2 * sin(y)")
    f = expr.compile_expr(e, ("x", "y"))
    fx = expr.compile_expr(expr.derivative(e, "x"), ("x", "y"))
    x, y = np.array([1.0, 2.0]), np.array([0.5, 1.0])
    assert np.allclose(f(x, y), x**2 * np.sin(y))
    assert np.allclose(fx(x, y), 2 * x * np.sin(y))
    assert np.allclose(expr.compile_expr(expr.parse("3", ("x",)), ("x",))(np.zeros(4)), 3.0)
