import csv
import io
import json
import subprocess
import sys

import pytest

from conftest import MODELS
from spe_qmc.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def payload(text):
    doc = json.loads(text)
    doc.pop("timing")
    return doc


def test_validate_good_and_bad(capsys):
    code, out, _ = run_cli(capsys, "validate", "--model", str(MODELS / "star3.json"))
    assert code == 0 and json.loads(out)["results"]["valid"]
    code, out, _ = run_cli(capsys, "validate", "--model", str(MODELS / "triangle.json"))
    doc = json.loads(out)
    assert code == 1
    assert any("not bipartite" in v for v in doc["results"]["violations"])


def test_malformed_file_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_sites": 2,\n "sublattice": ["A", "B"],\n "afm_edges": [[0, 1]]}')
    code, out, _ = run_cli(capsys, "validate", "--model", str(bad))
    assert code == 1 and "afm_edges[0]" in out
    bad.write_text('{"n_sites": 2,\n "sublattice": ["A" "B"]}')
    code, out, _ = run_cli(capsys, "validate", "--model", str(bad))
    assert code == 1 and "line 2" in out


def test_usage_errors(capsys):
    assert run_cli(capsys, "bogus")[0] == 2
    assert run_cli(capsys, "energy", "--model", str(MODELS / "star3.json"))[0] == 2  # missing --B/--steps
    code, _, err = run_cli(capsys, "energy", "--model", str(MODELS / "star3.json"), "--B", "auto:x",
                           "--steps", "10")
    assert code == 2 and "epsilon" in err
    assert run_cli(capsys, "analyze", "gap", "--B", "1")[0] == 2
    assert run_cli(capsys, "analyze", "gap", "--model", str(MODELS / "triangle.json"), "--B", "1")[0] == 1


def test_potts_subcommands(capsys):
    for argv in (("analyze", "potts", "--N", "3", "--B", "1"), ("potts", "--N", "3", "--B", "1")):
        code, out, _ = run_cli(capsys, *argv)
        assert code == 0
        assert json.loads(out)["results"]["relative_error"] < 1e-10


def test_counterexample(capsys):
    code, out, _ = run_cli(capsys, "counterexample", "--N", "6")
    res = json.loads(out)["results"]
    assert code == 0 and res["ratio"] == pytest.approx(16.0)
    assert run_cli(capsys, "counterexample", "--N", "5")[0] == 1


@pytest.mark.parametrize("what", ["gap", "congestion", "encoding", "topology"])
def test_analyze_model_reports(what, capsys):
    code, out, _ = run_cli(capsys, "analyze", what, "--model", str(MODELS / "star3.json"), "--B", "1",
                           "--n-configs", "200")
    assert code == 0
    res = json.loads(out)["results"]
    assert {"gap": "t_rel", "congestion": "phi", "encoding": "max_ratio", "topology": "violations"}[what] in res


def test_energy_report_and_determinism(capsys):
    argv = ("energy", "--model", str(MODELS / "star3.json"), "--B", "auto:0.2", "--steps", "20000",
            "--burn-in", "1000", "--seed", "7", "--chains", "2")
    code, first, err = run_cli(capsys, *argv)
    assert code == 0 and "chain 1" in err
    doc = payload(first)
    assert doc["seed"] == 7 and len(doc["model_sha256"]) == 64
    res = doc["results"]
    for key in ("estimate", "stderr", "B", "steps", "acceptance_rate", "terms"):
        assert key in res
    assert abs(res["estimate"] + 1.5) < 5 * res["stderr"] + 0.05
    assert payload(run_cli(capsys, *argv)[1]) == doc


def test_energy_csv(tmp_path, capsys):
    out = tmp_path / "e.csv"
    code, stdout, _ = run_cli(capsys, "energy", "--model", str(MODELS / "star3.json"), "--B", "4", "--steps",
                              "2000", "--format", "csv", "--out", str(out))
    assert code == 0 and stdout == ""
    rows = dict(csv.reader(io.StringIO(out.read_text())))
    assert rows["results.B"] == "4" and "results.estimate" in rows


def test_sample_streams(capsys):
    base = ("sample", "--model", str(MODELS / "star4_fm_fields.json"), "--B", "2", "--steps", "30",
            "--burn-in", "10", "--thin", "5", "--seed", "3")
    code, out, _ = run_cli(capsys, *base)
    lines = [json.loads(l) for l in out.splitlines()]
    assert code == 0 and "header" in lines[0] and len(lines) == 1 + 4
    assert set(lines[1]["measurements"]) >= {"A:0-1", "F:1-2", "V:3"}
    code, out, err = run_cli(capsys, *base, "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:4] == ["chain", "step", "loop_count", "acceptance"]
    assert [r[1] for r in rows[1:]] == ["15", "20", "25", "30"]
    assert json.loads(err)["B"] == 2


def test_oracle_commands(capsys):
    code, out, _ = run_cli(capsys, "oracle", "ground-energy", "--model", str(MODELS / "star5.json"), "--sector-lm")
    assert code == 0 and json.loads(out)["results"]["ground_energy"] == pytest.approx(-2.5)
    code, out, _ = run_cli(capsys, "oracle", "leakage", "--model", str(MODELS / "star3.json"), "--B", "auto:0.1",
                           "--epsilon", "0.1")
    res = json.loads(out)["results"]
    assert code == 0 and res["leakage"] < 0.05
    assert run_cli(capsys, "oracle", "leakage", "--model", str(MODELS / "star3.json"))[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spe_qmc", "potts", "--N", "2", "--B", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["Z_potts_scaled"] == pytest.approx(8.0)
