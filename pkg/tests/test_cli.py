import csv
import json
import subprocess
import sys

import pytest

from polydyn.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_predict_square(capsys):
    code, out, _ = run(capsys, "predict", "--vertices", "1,1j,-1,-1j", "--curvature", "1,1,1,1", "--oracle")
    assert code == 0
    data = json.loads(out)
    assert data["J"] == pytest.approx([0, 2])
    assert data["I"] == pytest.approx([0, 0], abs=1e-12)
    assert "inf" in data["candidates"]
    assert data["oracle"]["relative_error"] < 1e-5


def test_simulate_writes_trace_and_report(capsys, tmp_path):
    trace, report = tmp_path / "trace.csv", tmp_path / "report.json"
    code, out, _ = run(capsys, "simulate", "--system", "flat", "--n", "5", "--seed", "3",
                       "--iters", "15", "--csv", str(trace), "--report", str(report))
    assert code == 0
    summary = json.loads(out)
    assert summary == json.loads(report.read_text())
    rows = list(csv.reader(trace.open()))
    assert rows[0][:4] == ["iteration", "vertex_index", "re", "im"]
    assert len(rows) == 1 + 5 * (summary["iterations"] + 1)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"system": "leapfrog", "n": 4, "seed": 9, "iterations": 5}))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--iters", "3")
    assert code == 0
    assert json.loads(out)["iterations"] <= 3


def test_invariants_subcommand(capsys):
    code, out, _ = run(capsys, "invariants", "--n", "6", "--seed", "1", "--steps", "2")
    data = json.loads(out)
    assert code == (0 if data["pass"] else 4)
    assert len(data["series"]) == 3 and "G3" in data["series"][0]


def test_special_and_relations(capsys):
    code, out, _ = run(capsys, "special", "--n", "4", "--kind", "geometric", "--q", "2")
    assert code == 0
    data = json.loads(out)
    assert data["image_error"] < 1e-9 and data["expected_class"] == "loxodromic"
    code, out, _ = run(capsys, "relations", "--n", "5", "--trials", "10")
    assert code == 0 and json.loads(out)["pass"]


def test_scan_subcommand(capsys, tmp_path):
    rows = tmp_path / "rows.csv"
    code, out, _ = run(capsys, "scan", "--trials", "2", "--iters", "10", "--csv", str(rows))
    assert code == 0
    assert json.loads(out)["trials"] == 2 and "rows" not in json.loads(out)
    assert len(rows.read_text().splitlines()) == 3


def test_degenerate_input_exit_code(capsys):
    code, _, err = run(capsys, "predict", "--vertices", "0,0,1,2")
    assert code == 2 and "degenerate" in err


def test_bad_vertex_count(capsys):
    code, _, err = run(capsys, "predict", "--vertices", "0,1,2,3", "--n", "5")
    assert code == 2 and "expected 5 vertices" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "polydyn", "special", "--n", "3"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["placement"] == 2
