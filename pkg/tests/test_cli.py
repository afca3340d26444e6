import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from conftest import CAT_EXPONENT
from toralcent import cli

DATA = Path(__file__).resolve().parent.parent / "data"
SCHEMA = json.loads(cli.schema_path().read_text())


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    return code, report, out


def test_analyze_d4(capsys):
    code, rep, _ = run(capsys, "analyze", DATA / "d4_example.json", "--spread", 1)
    r = rep["result"]
    assert code == 0 and rep["schema_version"] == 1 and rep["command"] == "analyze"
    assert r["irreducible"] and r["ergodic"] and r["property_p"]["holds"]
    assert r["no_three_same_modulus"] and r["poly_in_tn"] == 1
    assert (r["r1"], r["r2"], r["rank_bound"]) == (2, 1, 2)
    assert r["det"] == "1" and r["char_poly"] == ["1", "-3", "3", "-3", "1"]
    assert r["spread"] == {"1": True}


def test_analyze_cat(capsys):
    code, rep, _ = run(capsys, "analyze", DATA / "cat_linear.json")
    r = rep["result"]
    assert code == 0 and not r["property_p"]["holds"] and r["circle_pairs"] == 0
    assert float(r["exponent_values"][0]) == pytest.approx(CAT_EXPONENT, abs=1e-9)


def test_parse_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[[1, 2],\n [3 4]]")
    code, rep, _ = run(capsys, "analyze", bad)
    assert code == 1 and rep["error"]["type"] == "parse" and "line 2" in rep["error"]["message"]
    rect = tmp_path / "rect.json"
    rect.write_text("[[1, 2, 3], [4, 5, 6]]")
    assert run(capsys, "analyze", rect)[0] == 1
    assert run(capsys, "analyze", tmp_path / "missing.json")[0] == 1
    assert run(capsys, "construct")[0] == 1


def test_centralizer(capsys):
    code, rep, _ = run(capsys, "centralizer", DATA / "d4_example.json", "--radius", 3, "--cone")
    r = rep["result"]
    assert code == 0 and r["achieved_rank"] == 2 and r["generators"] == ["L", "L - I"]
    assert r["hyperbolic"]["L - I"] and not r["hyperbolic"]["L"]
    assert r["cone"]["word"] == "L^-1 * (L - I)^2"
    assert run(capsys, "centralizer", DATA / "cat_linear.json", "--radius", 2)[1]["result"]["achieved_rank"] == 1
    assert run(capsys, "centralizer", DATA / "d4_example.json", "--radius", 0)[1]["result"]["achieved_rank"] == 0
    assert run(capsys, "centralizer", DATA / "d4_example.json", "--radius", -1)[0] == 1


def test_construct(capsys, tmp_path):
    out = tmp_path / "m.json"
    code, rep, _ = run(capsys, "construct", "--dim", 4, "--spread", 1, "--matrix-out", out)
    assert code == 0 and rep["result"]["property_p"]["holds"] and rep["result"]["spread"]
    assert json.loads(out.read_text()) == rep["result"]["matrix"]
    code, rep, _ = run(capsys, "construct", "--dim", 5)
    assert code == 2 and "d must be even" in rep["error"]["message"]


def test_dynamics_modes(capsys):
    code, rep, _ = run(capsys, "dynamics", DATA / "d4_perturbed.json", "--cocycle", 0, "--per-axis", 12)
    c = rep["result"]["cocycle"]
    assert code == 0 and float(c["residual_sup"]) <= 1e-8
    assert float(c["fresh_residual_sup"]) <= float(c["bound"])
    code, rep, _ = run(capsys, "dynamics", DATA / "cat_map.json", "--lyapunov", "--steps", 500, "--orbits", 2)
    exps = [float(x) for x in rep["result"]["lyapunov"]["exponents"]]
    assert code == 0 and exps == pytest.approx([CAT_EXPONENT, -CAT_EXPONENT], abs=1e-9)
    code, rep, _ = run(capsys, "dynamics", DATA / "cat_perturbed.json", "--fixed-points", "--semiconjugacy",
                       "--per-axis", 32)
    assert code == 0 and rep["result"]["fixed_points"]["numeric_count"] == 1
    assert float(rep["result"]["semiconjugacy"]["residual_sup"]) <= 1e-6
    code, rep, _ = run(capsys, "dynamics", DATA / "d4_example.json", "--volume-growth", "--steps-volume", 5)
    assert code == 0 and abs(float(rep["result"]["volume_growth"]["rate"])) <= 1e-12


def test_dynamics_errors(capsys):
    code, rep, _ = run(capsys, "dynamics", DATA / "cat_too_large.json", "--lyapunov")
    assert code == 2 and "perturbation too large for class chi" in rep["error"]["message"]
    assert rep["error"]["type"] == "precondition"
    assert run(capsys, "dynamics", DATA / "d4_example.json")[0] == 1
    assert run(capsys, "dynamics", DATA / "d4_example.json", "--semiconjugacy")[0] == 2


def test_reports_are_byte_identical(capsys, monkeypatch):
    argv = ["dynamics", DATA / "cat_perturbed.json", "--lyapunov", "--steps", 300, "--orbits", 2]
    first = run(capsys, *argv)[2]
    assert run(capsys, *argv)[2] == first
    monkeypatch.setenv("THREADS", "3")
    assert run(capsys, *argv, "--threads", 1)[2] == first
    assert run(capsys, *argv)[2] == first
    monkeypatch.setenv("THREADS", "0")
    assert run(capsys, *argv)[0] == 1


def test_config_hash_tracks_options(capsys):
    a = run(capsys, "analyze", DATA / "d4_example.json")[1]["config_hash"]
    b = run(capsys, "analyze", DATA / "d4_example.json", "--spread", 2)[1]["config_hash"]
    c = run(capsys, "analyze", DATA / "d4_example.json", "--timing")[1]
    assert a != b and a == c["config_hash"] and "timing_seconds" in c


def test_output_file_and_console_script(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "toralcent.cli", "analyze", str(DATA / "cat_linear.json"),
                           "-o", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""
    jsonschema.validate(json.loads(out.read_text()), SCHEMA)
    proc = subprocess.run([sys.executable, "-m", "toralcent.cli", "construct", "--dim", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "d must be even" in proc.stderr
