import csv
import io
import json
import subprocess
import sys

import pytest

from monobvp.cli import CONVERGE_COLUMNS, DEPEND_COLUMNS, main


def run(args, config=None, tmp_path=None):
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        args = args + ["--config", str(path)]
    out, err = io.StringIO(), io.StringIO()
    code = main(args, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def parse_csv(text):
    lines = text.strip().splitlines()
    assert lines[-1].startswith("# ")
    footer = json.loads(lines[-1][2:])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[:-1]))))
    return lines[0].split(","), rows, footer


SMALL = {"sweep": {"n_list": [16, 32, 64]}}


class TestSolve:
    def test_linear_manufactured(self, tmp_path):
        code, out, _ = run(["solve"], {"sweep": {"n_list": [64]}}, tmp_path)
        assert code == 0
        cert = float(out.split("certificate=")[1].split()[0])
        assert cert <= 1e-10 and "n=64" in out

    def test_zero_forcing(self, tmp_path):
        cfg = {"problem": {"f_id": "2.3-c", "h_id": "zero"}, "sweep": {"n_list": [32]}}
        code, out, _ = run(["solve"], cfg, tmp_path)
        assert code == 0 and "iterations=0" in out and "norm_E=0 " in out

    def test_unknown_id(self, tmp_path):
        code, _, err = run(["solve"], {"problem": {"f_id": "mystery"}}, tmp_path)
        assert code == 1 and "mystery" in err

    def test_nonconvergence(self, tmp_path):
        cfg = {"sweep": {"n_list": [64]}, "solver": {"max_iterations": 1}}
        code, _, _ = run(["solve"], cfg, tmp_path)
        assert code == 2

    def test_writes_file(self, tmp_path):
        target = tmp_path / "solve.json"
        code, _, _ = run(["solve", "--out", str(target), "--format", "json"],
                         {"sweep": {"n_list": [8, 16]}}, tmp_path)
        doc = json.loads(target.read_text())
        assert code == 0 and doc["schema_version"] == 1 and len(doc["rows"]) == 2


class TestConverge:
    def test_linear_sweep(self, tmp_path):
        code, out, _ = run(["converge"], {}, tmp_path)
        header, rows, footer = parse_csv(out)
        assert code == 0 and header == CONVERGE_COLUMNS
        assert [int(r["n"]) for r in rows] == [16, 32, 64, 128, 256, 512]
        assert footer["fit_e_x"]["slope"] <= -1.9
        assert footer["schema_version"] == 1
        assert footer["ogr_bound_holds"] is False and footer["ogr_first_failure_n"] == 16

    def test_affine_sweep(self, tmp_path):
        cfg = {"problem": {"f_id": "2.4-b"}}
        code, out, _ = run(["converge"], cfg, tmp_path)
        _, _, footer = parse_csv(out)
        assert code == 0 and footer["fit_e_v"]["slope"] <= -0.9

    def test_zero_problem(self, tmp_path):
        cfg = {"problem": {"f_id": "zero", "h_id": "zero"}, "sweep": {"n_list": [8, 16, 32]},
               "reference": {"n_ref": 256}}
        code, out, _ = run(["converge"], cfg, tmp_path)
        _, rows, footer = parse_csv(out)
        assert code == 0
        assert all(float(r[c]) == 0 for r in rows for c in ("e_x", "e_v", "norm_E"))
        assert footer["fit_e_x"]["undefined"] is True

    def test_reference_kinds(self, tmp_path):
        base = {"problem": {"f_id": "linear"}, "sweep": {"n_list": [8, 16, 32]}}
        for kind in ("fine-grid", "linear-direct"):
            cfg = dict(base, reference={"kind": kind, "n_ref": 1024})
            code, out, _ = run(["converge"], cfg, tmp_path)
            _, _, footer = parse_csv(out)
            assert code == 0 and footer["reference"] == kind
            assert footer["fit_e_x"]["slope"] <= -1.9

    def test_n_ref_too_small(self, tmp_path):
        cfg = {"sweep": {"n_list": [16, 32]}, "reference": {"kind": "fine-grid", "n_ref": 128}}
        assert run(["converge"], cfg, tmp_path)[0] == 1

    def test_oracle_failure(self, tmp_path):
        cfg = {"problem": {"f_id": "zero", "h_id": "poly", "h_amplitude": 1e6},
               "sweep": {"n_list": [8, 16]},
               "reference": {"kind": "shooting", "steps": 200}}
        assert run(["converge"], cfg, tmp_path)[0] == 3

    def test_csv_round_trip_precision(self, tmp_path):
        code, out, _ = run(["converge"], SMALL, tmp_path)
        _, rows, _ = parse_csv(out)
        for r in rows:
            mantissa = r["e_x"].split("e")[0].replace("-", "").replace(".", "")
            assert len(mantissa.lstrip("0")) <= 17


class TestBounds:
    def test_report(self, tmp_path):
        code, out, _ = run(["bounds", "--format", "json"], SMALL, tmp_path)
        doc = json.loads(out)
        assert code == 0 and doc["footer"]["chain_ok"] is True
        assert all(r["chain_ok"] for r in doc["rows"])


class TestProbe:
    def test_linear(self, tmp_path):
        cfg = {"probe": {"trials": 2000, "operator_trials": 200}}
        code, out, _ = run(["probe"], cfg, tmp_path)
        rep = json.loads(out)["reports"]
        assert code == 0
        assert rep["p2"]["min_value"] >= 0
        assert rep["operator_monotonicity"]["min_value"] >= 1
        assert rep["p1"]["min_value"] >= 0

    def test_23a_counterexample(self, tmp_path):
        cfg = {"problem": {"f_id": "2.3-a", "h_id": "zero"},
               "probe": {"trials": 5000, "operator_trials": 50}}
        code, out, _ = run(["probe"], cfg, tmp_path)
        p2 = json.loads(out)["reports"]["p2"]
        assert code == 0 and p2["min_value"] < 0 and set(p2["witness"]) == set("klstwz")

    def test_byte_identical(self, tmp_path):
        cfg = {"problem": {"f_id": "2.3-b", "h_id": "zero"},
               "probe": {"trials": 1000, "operator_trials": 30}}
        a = run(["probe", "--seed", "9"], cfg, tmp_path)[1]
        b = run(["probe", "--seed", "9"], cfg, tmp_path)[1]
        c = run(["probe", "--seed", "10"], cfg, tmp_path)[1]
        assert a == b and a != c and json.loads(a)["seed"] == 9

    def test_no_dominator(self, tmp_path):
        cfg = {"problem": {"f_id": "2.4-b"}, "probe": {"trials": 100, "operator_trials": 5}}
        code, out, _ = run(["probe"], cfg, tmp_path)
        assert code == 0 and json.loads(out)["reports"]["p1"] is None


class TestDepend:
    def test_linear(self, tmp_path):
        cfg = {"dependence": {"m_list": [1, 2, 4, 8], "n_ref": 2048}}
        code, out, _ = run(["depend"], cfg, tmp_path)
        header, rows, footer = parse_csv(out)
        assert code == 0 and header == DEPEND_COLUMNS
        assert [r["m"] for r in rows] == ["1", "2", "4", "8", "inf"]
        assert footer["fit_sup_gap"]["slope"] <= -2.5

    def test_zero_amplitude(self, tmp_path):
        cfg = {"dependence": {"amplitude": 0, "m_list": [1, 2, 4], "n_ref": 256}}
        code, out, _ = run(["depend"], cfg, tmp_path)
        _, rows, footer = parse_csv(out)
        assert code == 0 and all(float(r["sup_gap"]) == 0 for r in rows)
        assert footer["fit_sup_gap"]["undefined"] is True

    def test_non_affine(self, tmp_path):
        code, _, err = run(["depend"], {"problem": {"f_id": "2.3-a", "h_id": "sin"}}, tmp_path)
        assert code == 1 and "f1(t, x) + v g(t)" in err


class TestConfig:
    @pytest.mark.parametrize("cfg", [
        {"sweep": {"n_list": [32, 16]}},
        {"bogus": 1},
        {"problem": {"h_id": "sin", "manufactured": "sin"}},
        {"problem": {"manufactured": "cos"}},
        {"output": {"format": "xml"}},
        {"reference": {"kind": "magic"}},
        {"problem": {"g_params": {"q": 1}}},
        {"solver": {"tol_cert": -1.0}},
        {"solver": {"method": "bisection"}},
    ])
    def test_invalid(self, cfg, tmp_path):
        assert run(["solve"], cfg, tmp_path)[0] == 1

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        out, err = io.StringIO(), io.StringIO()
        assert main(["solve", "--config", str(path)], out, err) == 1
        assert main(["solve", "--config", str(tmp_path / "missing.json")], out, err) == 1

    def test_g_params(self, tmp_path):
        cfg = {"problem": {"f_id": "2.3-b", "h_id": "sin", "h_amplitude": 4,
                           "g_params": {"g": [1.0, 0.5]}}, "sweep": {"n_list": [16]}}
        assert run(["solve"], cfg, tmp_path)[0] == 0

    def test_list(self, tmp_path):
        code, out, _ = run(["list"], None, tmp_path)
        assert code == 0 and "2.4-b" in out and "linear-direct" in out

    def test_usage_error(self):
        assert main(["frobnicate"], io.StringIO(), io.StringIO()) == 1

    def test_help_shows_defaults(self, capsys):
        assert main(["--help"]) == 0
        assert '"n_ref": 8192' in capsys.readouterr().out

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "monobvp", "list"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "nonlinearities" in proc.stdout
