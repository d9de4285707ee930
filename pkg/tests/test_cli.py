import json
import subprocess
import sys

import pytest

from napt.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ma_vshape(capsys, fixtures):
    code, out, _ = run(capsys, "ma", fixtures / "g1.json", "vshape")
    assert code == 0 and out == "m: 1/1\n"


def test_ma_toric_trivial(capsys, fixtures):
    code, out, _ = run(capsys, "ma", fixtures / "toric_square.json", "hp")
    assert code == 0 and out == "(0,0): 1/1\n"


def test_ma_unknown_metric(capsys, fixtures):
    code, _, err = run(capsys, "ma", fixtures / "g1.json", "nope")
    assert code == 3 and "unknown metric" in err


def test_ma_not_psh_names_violation(capsys, fixtures):
    code, _, err = run(capsys, "ma", fixtures / "g1.json", "tent")
    assert code == 3 and "not psh" in err and "m" in err


def test_mixed_measure(capsys, fixtures):
    code, out, _ = run(capsys, "ma", fixtures / "toric_square.json", "hp", "u2")
    assert code == 0 and out == "(0,0): 1/2\n(1,0): 1/2\n"


def test_solve_graph(capsys, fixtures):
    code, out, _ = run(capsys, "solve", fixtures / "g1.json", "delta_m")
    assert code == 0
    assert out == "a: 0\nb: 0\nm: -1/2\nnormalization: sup = 0\nresidual: 0\n"


def test_solve_toric_interval(capsys, fixtures):
    code, out, _ = run(capsys, "solve", fixtures / "toric_interval.json", "two_point")
    assert code == 0
    assert out.splitlines()[0] == "max(0, 1/2*w, w - 1/2)"
    assert "residual: 0" in out


def test_solve_mass_two(capsys, fixtures):
    assert run(capsys, "solve", fixtures / "g1.json", "mass_two")[0] == 3
    assert run(capsys, "solve", fixtures / "toric_interval.json", "heavy")[0] == 3


def test_solve_toric_square(capsys, fixtures):
    code, out, _ = run(capsys, "solve", fixtures / "toric_square.json", "corners")
    assert code == 0 and "normalization: sup = 0" in out


def test_energy(capsys, fixtures):
    code, out, _ = run(capsys, "energy", fixtures / "g1.json", "vshape", "zero")
    assert code == 0
    assert out.splitlines()[:4] == ["E: -1/4", "I: 1/2", "J: 1/4", "I-J: 1/4"]
    code, out, _ = run(capsys, "energy", fixtures / "g1.json", "vshape", "vshape")
    assert all(line.endswith(": 0") for line in out.splitlines())


def test_measure_energy(capsys, fixtures):
    code, out, _ = run(capsys, "measure-energy", fixtures / "g1.json", "delta_m")
    assert code == 0 and out == "E*: 1/4\n"


def test_envelopes(capsys, fixtures):
    code, out, _ = run(capsys, "envelope", fixtures / "g1.json", "tent", "--grid", "8")
    assert code == 0 and out == "a: 0\nb: 0\nm: 0\northogonality defect: 0\n"
    code, out, _ = run(capsys, "envelope", fixtures / "toric_interval.json", "capped")
    assert code == 0 and out.startswith("max(0, 1/3*w, w - 1/2)\n")


def test_check_g1_seed7(capsys, fixtures):
    code, out, _ = run(capsys, "check", fixtures / "g1.json", "--seed", "7", "--samples", "50")
    assert code == 0 and out.rstrip().endswith("status: PASS")
    assert "mixed_cs" in out and "cocycle" in out


def test_check_is_deterministic(capsys, fixtures):
    a = run(capsys, "check", fixtures / "g1.json", "--seed", "3", "--samples", "10")
    b = run(capsys, "check", fixtures / "g1.json", "--seed", "3", "--samples", "10")
    assert a == b


def test_check_nonpsd_refused(capsys, fixtures):
    code, _, err = run(capsys, "check", fixtures / "algebra_nonpsd.json", "--suite", "estimates")
    assert code == 5 and "not certified" in err


def test_check_zero_samples(capsys, fixtures):
    code, out, _ = run(capsys, "check", fixtures / "g1.json", "--samples", "0")
    assert code == 0 and "empty report" in out


def test_check_reports_failure(capsys, fixtures):
    # the non-geometric table breaks the mass law for divisors, so translation fails
    code, out, _ = run(capsys, "check", fixtures / "algebra_nonpsd.json", "--suite", "identities",
                       "--samples", "5")
    assert code == 1 and "FAIL" in out


def test_algebra_commands(capsys, fixtures):
    assert run(capsys, "ma", fixtures / "algebra_g1.json", "vshape")[1] == "m: 1/1\n"
    code, out, _ = run(capsys, "check", fixtures / "algebra_g1.json", "--samples", "10")
    assert code == 0


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "ma", bad, "x")[0] == 2
    bad.write_text(json.dumps({"napt_version": 1, "kind": "toric"}))
    assert run(capsys, "ma", bad, "x")[0] == 2
    assert run(capsys, "ma", tmp_path / "missing.json", "x")[0] == 2


def test_render_to_file(capsys, fixtures, tmp_path):
    out = tmp_path / "m.svg"
    assert run(capsys, "render", fixtures / "g1.json", "delta_m", "--out", out)[0] == 0
    assert out.read_text().count('class="atom"') == 1
    assert run(capsys, "render", fixtures / "g1.json", "ghost")[0] == 3


def test_console_script_entry_point(fixtures):
    res = subprocess.run([sys.executable, "-m", "napt.cli", "ma", str(fixtures / "g1.json"), "vshape"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "m: 1/1\n"
