import csv
import json
import re
import subprocess
import sys

import pytest

from trigcert.cli import OUT_ENV, RunRecord, emit_plot_data, main


def run(argv, tmp_path):
    return main(["--out", str(tmp_path)] + argv)


def stderr_lines(capsys):
    return [json.loads(x) for x in capsys.readouterr().err.splitlines() if x.strip()]


class TestExitCodes:
    def test_sequence_passes(self, tmp_path):
        assert run(["sequence", "--kind", "packing-linear", "--count", "200"], tmp_path) == 0
        out = tmp_path / "sequence"
        run_json = json.loads((out / "run.json").read_text())
        assert run_json["passed"]
        assert run_json["config"]["count"] == 200
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["data"]["count"] == 200
        rows = list(csv.reader(open(out / "partial_sums.csv")))
        assert rows[0] == ["n", "sum_a"] and len(rows) == 201

    def test_zero_count_is_usage(self, tmp_path, capsys):
        assert run(["sequence", "--count", "0"], tmp_path) == 2
        assert stderr_lines(capsys)[0]["error"] == "parameter_error"

    def test_bad_choice_is_usage(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            run(["riesz", "--kind", "nope"], tmp_path)
        assert info.value.code == 2
        assert stderr_lines(capsys)[0]["error"] == "usage_error"

    def test_hypothesis_violation(self, tmp_path, capsys):
        code = run(["sequence", "--kind", "packing-square", "--gauge", "power:2"], tmp_path)
        assert code == 2
        assert stderr_lines(capsys)[0]["error"] == "hypothesis_error"

    def test_resource_exit(self, tmp_path, capsys):
        assert run(["katz1", "--J", "3"], tmp_path) == 3
        err = stderr_lines(capsys)[0]
        assert err["error"] == "resource_error"
        assert err["details"]["achieved_J"] < 3

    def test_certificate_miss_exit(self, tmp_path, capsys):
        code = run(["katznelson", "--gamma", "0.02", "--seed", "7"], tmp_path)
        assert code == 1
        failed = [x["failed"]["name"] for x in stderr_lines(capsys) if "failed" in x]
        assert failed == ["weighted_sum"]


class TestCommands:
    def test_riesz(self, tmp_path):
        assert run(["riesz", "--kind", "orlicz-growth", "--levels", "6"], tmp_path) == 0
        blocks = json.loads((tmp_path / "riesz" / "blocks.json").read_text())
        assert [b["N"] for b in blocks] == [3 ** j for j in range(1, 7)]
        # the growth variant has no concentration curve: header only
        rows = list(csv.reader(open(tmp_path / "riesz" / "concentration.csv")))
        assert rows == [["level", "measure"]]

    def test_hadamard(self, tmp_path):
        assert run(["hadamard", "--J", "64"], tmp_path) == 0
        cert = json.loads((tmp_path / "hadamard" / "certificate.json").read_text())
        assert cert["data"]["J"] == 64

    def test_bump(self, tmp_path):
        assert run(["bump", "--eps", "0.1", "--center", "0.25"], tmp_path) == 0
        psi = json.loads((tmp_path / "bump" / "psi.json").read_text())
        assert psi["certificate"]["phi_sum"] <= 0.1
        assert psi["center"] == 0.25

    def test_carve_demo(self, tmp_path):
        assert run(["carve-demo", "--steps", "2"], tmp_path) == 0
        data = json.loads((tmp_path / "carve-demo" / "carve.json").read_text())
        assert len(data["steps"]) == 2

    def test_lacunary_dist(self, tmp_path):
        assert run(["lacunary-dist", "--J", "100"], tmp_path) == 0
        rows = list(csv.DictReader(open(tmp_path / "lacunary-dist" / "coefficients.csv")))
        assert rows[2]["frequency"] == "2^3"

    def test_katz1_single(self, tmp_path):
        assert run(["katz1", "--J", "1"], tmp_path) == 0

    def test_verify_subset(self, tmp_path, capsys):
        assert run(["verify-all", "--only", "1", "13"], tmp_path) == 0
        out = capsys.readouterr().out
        assert re.search(r"^\[PASS\]\s+1 ", out, re.M)
        assert re.search(r"^\[PASS\]\s+13 ", out, re.M)
        assert "2/2 criteria passed" in out

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert main(["sequence", "--count", "10"]) == 0
        assert (tmp_path / "env" / "sequence" / "run.json").exists()


class TestPlotData:
    def test_header_only(self, tmp_path):
        rec = RunRecord("x", {})
        rec.series["s"] = (["a", "b"], [])
        emit_plot_data(rec, "s", tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().strip() == "a,b"
        assert rec.artifacts == [str(tmp_path / "s.csv")]

    def test_floats_round_trip(self, tmp_path):
        rec = RunRecord("x", {})
        rec.series["s"] = (["n", "v"], [(1, 0.1), (2, 1 / 3)])
        emit_plot_data(rec, "s", tmp_path / "s.csv")
        rows = list(csv.reader(open(tmp_path / "s.csv")))
        assert float(rows[2][1]) == 1 / 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trigcert.cli", "--out", str(tmp_path),
                           "sequence", "--count", "5"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
