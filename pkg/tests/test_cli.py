import json
import subprocess
import sys
from pathlib import Path

import pytest

from qcanon.cli import (ScenarioError, dumps, emit_plotdata, load_scenario, main, report_failed,
                        run_scenario)

ROOT = Path(__file__).resolve().parents[1]
SHOWCASE = ROOT / "scenarios" / "showcase.json"


def write(tmp_path, data, name="s.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


class TestExitCodes:
    def test_empty_scenario(self, tmp_path, capsys):
        assert main(["run", write(tmp_path, {"name": "empty", "tasks": []})]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["tasks"] == [] and report["summary"]["pass"] == 0

    def test_parse_error_has_location(self, tmp_path, capsys):
        assert main(["run", write(tmp_path, '{"tasks": [\n  {"type": "star-eval",}\n]}')]) == 2
        assert ":2:" in capsys.readouterr().err

    def test_unknown_task_type(self, tmp_path):
        assert main(["run", write(tmp_path, {"tasks": [{"type": "integrate"}]})]) == 2

    def test_order_guard(self, tmp_path):
        assert main(["run", write(tmp_path, {"K": 13, "tasks": []})]) == 2
        assert main(["run", write(tmp_path, {"tasks": []}), "--k", "40"]) == 2

    def test_usage(self):
        assert main(["example", "6.1"]) == 2
        assert main(["run", "/nonexistent/scenario.json"]) == 2

    def test_failed_golden_check(self, tmp_path):
        bad = {"tasks": [{"type": "star-eval", "f": "x", "g": "p", "expect": "x*p"}]}
        assert main(["run", write(tmp_path, bad), "--out", str(tmp_path / "r.json")]) == 1


class TestReports:
    def test_example_constants(self):
        rep = run_scenario({"K": 6, "tasks": [{"id": "t", "type": "example", "example": "5.3", "nmax": 4}]})
        task = rep["tasks"][0]
        assert task["status"] == "pass"
        assert task["values"]["A"] == ["1/2", "1/4", "1/4", "7/24"]
        assert task["values"]["B"] == ["1/2", "3/4", "5/4", "49/24"]

    def test_task_errors_do_not_abort(self):
        data = {"symbols": [], "tasks": [
            {"id": "bad", "type": "star-eval", "f": "y*x", "g": "p"},
            {"id": "good", "type": "star-eval", "f": "x", "g": "p", "expect": "x*p + I*hbar/2"}]}
        rep = run_scenario(load_scenario(json.dumps(data)))
        assert [t["status"] for t in rep["tasks"]] == ["error", "pass"]
        assert "UnknownSymbolError" in rep["tasks"][0]["error"]
        assert report_failed(rep)

    def test_rationals_are_strings(self):
        rep = run_scenario({"K": 2, "tasks": [{"type": "star-eval", "f": "x^2", "g": "p^2"}]})
        assert rep["tasks"][0]["values"]["series"] == {"0": "p^2*x^2", "1": "2*I*p*x", "2": "-1/2"}

    def test_byte_identical(self, tmp_path):
        outs = []
        for k in range(2):
            out = tmp_path / f"r{k}.json"
            assert main(["run", str(SHOWCASE), "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_timing_is_opt_in(self):
        data = {"tasks": [{"type": "star-eval", "f": "x", "g": "p"}]}
        assert "wall_time" not in run_scenario(data)["tasks"][0]
        assert run_scenario(data, timing=True)["tasks"][0]["wall_time"] >= 0


class TestPlot:
    def test_grid_csv(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["run", str(SHOWCASE), "--out", str(out)]) == 0
        assert main(["plot", str(out), "sqrt-ground-state"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "xp,re,im"
        assert len(lines) > 100 and all(len(ln.split(",")) == 3 for ln in lines[1:])

    def test_non_grid_task(self):
        rep = run_scenario({"tasks": [{"id": "s", "type": "star-eval", "f": "x", "g": "p"}]})
        with pytest.raises(ScenarioError, match="no grid output"):
            emit_plotdata(rep, "s")
        with pytest.raises(ScenarioError, match="no task"):
            emit_plotdata(rep, "missing")

    def test_wigner_columns(self):
        rep = run_scenario({"K": 4, "tasks": [{"id": "w", "type": "example", "example": "5.1"}]})
        header = emit_plotdata(rep, "w").splitlines()[0]
        assert header == "x,p,W"


def test_module_entry_point(tmp_path):
    path = write(tmp_path, {"tasks": []})
    proc = subprocess.run([sys.executable, "-m", "qcanon", "run", path], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout) == json.loads(dumps(run_scenario({"tasks": []})))
