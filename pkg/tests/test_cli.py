from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from mpmath import mpf

from indefzeta.cli import main

JOBS = Path(__file__).resolve().parent.parent / "jobs"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def write_job(tmp_path, doc, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


SQRT3_KLF = {
    "command": "klf-s0",
    "precision": 25,
    "parameters": {
        "M": [["2", "0"], ["0", "-6"]],
        "c1": ["-1", "1"],
        "c2": ["1", "1"],
        "q": ["1/5", "0"],
    },
}


def test_stark_job_reproduces_reference(capsys):
    code, out = run_cli(capsys, "-i", str(JOBS / "sqrt3_conductor5.json"), "-f", "structured")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"].startswith("indefzeta.result/")
    assert abs(mpf(rep["value"]) - mpf("1.35863065339220816259511308230")) < mpf("1e-25")
    assert abs(mpf(rep["unit"]) - mpf("3.89086171394307925533764395962")) < mpf("1e-25")
    assert mpf(rep["diagnostics"]["polynomial_residual"]) < mpf("1e-20")
    assert isinstance(rep["value"], str)


def test_klf_s1_with_equal_directions_is_zero(capsys, tmp_path):
    doc = {"command": "klf-s1", "precision": 20,
           "parameters": {"M": [["2", "0"], ["0", "-6"]], "c1": ["-1", "1"], "c2": ["-1", "1"],
                          "p": ["1/5", "0"]}}
    code, out = run_cli(capsys, "-i", write_job(tmp_path, doc), "-f", "structured")
    assert code == 0
    assert json.loads(out)["value"] == {"re": "0.0", "im": "0.0"}


def test_funceq_check_on_complex_instance(capsys):
    code, out = run_cli(capsys, "-i", str(JOBS / "funceq_complex.json"), "-f", "structured")
    assert code == 0
    rep = json.loads(out)
    assert mpf(rep["value"]) < mpf("1e-16")
    assert len(rep["diagnostics"]["rows"]) == 2


def test_deterministic_structured_output(capsys, tmp_path):
    path = write_job(tmp_path, SQRT3_KLF)
    _, a = run_cli(capsys, "-i", path, "-f", "structured", "--no-timing")
    _, b = run_cli(capsys, "-i", path, "-f", "structured", "--no-timing")
    assert a == b


def test_output_round_trips_as_input(capsys, tmp_path):
    doc = json.loads(json.dumps(SQRT3_KLF))
    doc["parameters"]["M"] = [["2", "0"], ["0", "-6"]]
    doc["parameters"]["c1"] = ["-676/3", "676/3"]
    _, out = run_cli(capsys, "-i", write_job(tmp_path, doc), "-f", "structured", "--no-timing")
    rep = json.loads(out)
    assert rep["parameters"] == doc["parameters"]
    assert rep["parameters"]["c1"][1] == "676/3"
    _, again = run_cli(capsys, "-i", write_job(tmp_path, rep, "echo.json"), "-f", "structured", "--no-timing")
    again = json.loads(again)
    assert again["parameters"] == rep["parameters"]
    assert again["value"] == rep["value"]


def test_rational_input_is_exact():
    from indefzeta.mpcore import parse_rational

    assert parse_rational("676/3") == Fraction(676, 3)
    assert parse_rational("676/3") * 3 == 676


def test_override_parameter(capsys, tmp_path):
    path = write_job(tmp_path, SQRT3_KLF)
    _, base = run_cli(capsys, "-i", path, "-f", "structured", "--no-timing")
    _, same = run_cli(capsys, "-i", path, "-f", "structured", "--no-timing", "--set", 'c2=["-1", "1"]')
    assert mpf(json.loads(same)["value"]) == 0
    assert mpf(json.loads(base)["value"]) != 0


def test_text_format(capsys, tmp_path):
    code, out = run_cli(capsys, "-i", write_job(tmp_path, SQRT3_KLF))
    assert code == 0
    assert out.startswith("klf-s0")
    assert "value      = 1.0556498614887477111681" in out


@pytest.mark.parametrize("doc", [
    "not json",
    json.dumps({"command": "nope"}),
    json.dumps({"command": "klf-s0", "parameters": {"M": [["2", "0"], ["0", "-6"]]}}),
    json.dumps({"command": "klf-s0", "parameters": {"M": [[2.0, 0], [0, -6]], "c1": [-1, 1],
                                                      "c2": [1, 1], "q": ["1/5", 0]}}),
])
def test_parse_errors_exit_2(capsys, tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(doc)
    code, out = run_cli(capsys, "-i", str(path), "-f", "structured")
    assert code == 2
    assert json.loads(out)["error"]["exit_code"] == 2


def test_missing_file_exits_2(capsys, tmp_path):
    code, _ = run_cli(capsys, "-i", str(tmp_path / "absent.json"))
    assert code == 2


@pytest.mark.parametrize("change", [
    {"c1": ["1", "0"]},                       # not admissible
    {"M": [["1", "0"], ["0", "1"]]},          # wrong signature
    {"q": ["1", "0"]},                        # integral characteristic
])
def test_validation_errors_exit_3(capsys, tmp_path, change):
    doc = json.loads(json.dumps(SQRT3_KLF))
    doc["parameters"].update(change)
    code, out = run_cli(capsys, "-i", write_job(tmp_path, doc), "-f", "structured")
    assert code == 3
    err = json.loads(out)["error"]
    assert err["exit_code"] == 3 and err["message"]


def test_precision_floor_and_accuracy_floor(capsys, tmp_path):
    path = write_job(tmp_path, SQRT3_KLF)
    assert run_cli(capsys, "-i", path, "--precision", "10")[0] == 3
    assert run_cli(capsys, "-i", path, "--accuracy", "1e-40")[0] == 3


def test_convergence_error_exits_4(capsys, tmp_path):
    # c1 and c2 in opposite halves of the negative cone: the theta series diverges
    doc = {"command": "theta", "precision": 20,
           "parameters": {"M": [["2", "0"], ["0", "-6"]], "c1": ["-1", "1"], "c2": ["1", "-1"],
                          "p": ["1/5", "0"], "q": ["1/5", "0"]}}
    code, out = run_cli(capsys, "-i", write_job(tmp_path, doc), "-f", "structured")
    assert code == 4
    assert json.loads(out)["error"]["type"] == "ConvergenceError"


def test_module_entry_point(tmp_path):
    path = write_job(tmp_path, SQRT3_KLF)
    proc = subprocess.run([sys.executable, "-m", "indefzeta", "-i", path, "-f", "structured", "--no-timing"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "klf-s0"
