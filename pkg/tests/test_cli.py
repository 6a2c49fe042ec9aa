import csv
import io
import json
import math
import subprocess
import sys

import pytest

from bellstrong import cli
from bellstrong.cli import main

PP_REAL_ETA09_PHI30_F = 0.002396194573557516879


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestQm:
    def test_ideal_rows(self, capsys):
        doc = run_json(capsys, "qm", "--eta", "1", "--phi-deg", "180", "--angles", "0,30,60", "--ideal")
        rows = {r["angle_deg"]: r for r in doc["rows"]}
        for t, row in rows.items():
            c = math.cos(math.radians(t)) ** 2
            assert row["E"] == pytest.approx(math.cos(math.radians(2 * t)), abs=1e-15)
            assert row["pp"] == pytest.approx(c / 2) and row["mm"] == pytest.approx(c / 2)
            assert row["p_plus"] == row["p_minus"] == 0.5
        assert doc["unit"] == "deg" and doc["branch"] == "ideal"

    def test_real_row_matches_oracle(self, capsys):
        doc = run_json(capsys, "qm", "--eta", "0.9", "--phi-deg", "30", "--angles", "0", "--depolarization")
        assert doc["rows"][0]["pp"] == pytest.approx(PP_REAL_ETA09_PHI30_F, rel=1e-13)
        assert doc["meta"]["eta"] == 0.9 and doc["meta"]["phi_deg"] == 30
        assert doc["meta"]["depolarization_approximate"] is False

    def test_real_row_without_depolarization(self, capsys):
        doc = run_json(capsys, "qm", "--eta", "0.9", "--phi-deg", "30", "--angles", "0")
        assert doc["rows"][0]["pp"] == pytest.approx(PP_REAL_ETA09_PHI30_F * 2 / (1 + 0.98803387171258486), rel=1e-12)

    def test_45_csv(self, capsys):
        code, out, _ = run(capsys, "qm", "--angles", "45", "--ideal", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 1
        assert float(rows[0]["E"]) == pytest.approx(0, abs=1e-15)

    def test_bad_flag_value(self, capsys):
        assert run(capsys, "qm", "--eta", "2")[0] == 2
        assert run(capsys, "qm", "--prisms", "1,2")[0] == 2


class TestEvaluate:
    def test_strong_from_ideal_qm(self, capsys):
        doc = run_json(capsys, "evaluate", "--inequality", "ardehali-strong", "--from-qm", "--ideal")
        assert doc["lhs"] == pytest.approx(1.5, abs=1e-12)
        assert doc["settings"][0] == {"label": "a", "deg": 30.0}

    def test_strong_from_real_qm(self, capsys):
        doc = run_json(capsys, "evaluate", "--inequality", "ardehali-strong-symmetric", "--from-qm",
                       "--eta", "0.2", "--phi-deg", "10")
        assert doc["lhs"] == pytest.approx(1.5, abs=1e-12)
        assert doc["meta"]["eta"] == 0.2

    def test_chsh_optimal_family(self, capsys):
        doc = run_json(capsys, "evaluate", "--inequality", "chsh", "--from-qm", "--ideal",
                       "--a", "45", "--b", "67.5", "--a-prime", "0", "--b-prime", "22.5")
        assert doc["lhs"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)

    def test_bell_zero_file(self, capsys, tmp_path):
        f = tmp_path / "zero.json"
        f.write_text(json.dumps({"inequality": "bell1965", "inputs": {"e_ab": 0, "e_bpa": 0, "e_apb": 0}}))
        doc = run_json(capsys, "evaluate", "--input", str(f))
        assert doc["lhs"] == 0 and doc["violated"] is False

    def test_round_trip_is_byte_identical(self, capsys, tmp_path):
        code, first, _ = run(capsys, "evaluate", "--inequality", "ardehali-ideal", "--from-qm", "--ideal")
        assert code == 0
        f = tmp_path / "report.json"
        f.write_text(first)
        code, second, _ = run(capsys, "evaluate", "--input", str(f))
        assert code == 0 and second == first

    def test_missing_inputs(self, capsys, tmp_path):
        f = tmp_path / "partial.json"
        f.write_text(json.dumps({"inequality": "chsh", "inputs": {"e_ab": 0.1}}))
        assert run(capsys, "evaluate", "--input", str(f))[0] == 2
        assert run(capsys, "evaluate", "--inequality", "chsh")[0] == 2

    def test_degenerate(self, capsys, tmp_path):
        f = tmp_path / "dark.json"
        f.write_text(json.dumps({"inequality": "ardehali-strong-symmetric",
                                 "inputs": {"e30": 0, "e60": 0, "j0": {"pp": 0, "pm": 0, "mp": 0, "mm": 0}}}))
        code, out, err = run(capsys, "evaluate", "--input", str(f))
        assert code == 3 and out == "" and "degenerate" in err

    def test_violation_is_not_an_error(self, capsys):
        assert run(capsys, "evaluate", "--inequality", "bell1965", "--from-qm", "--ideal")[0] == 0


class TestVerifyTheorem:
    def test_unit_box(self, capsys):
        doc = run_json(capsys, "verify-theorem", "--u", "1", "--v", "1", "--samples", "200000", "--seed", "42")
        assert doc["vertex_max_z"] == 0 and doc["sampled_max_z"] <= 0 and doc["passed"]

    def test_rectangular_box(self, capsys):
        doc = run_json(capsys, "verify-theorem", "--u", "2", "--v", "3", "--samples", "1000")
        assert doc["vertex_max_z"] == 0

    def test_single_sample(self, capsys):
        doc = run_json(capsys, "verify-theorem", "--samples", "1")
        assert doc["samples"] == 1 and doc["sampled_max_z"] <= 0

    def test_breach_exit_code(self, capsys, monkeypatch):
        from bellstrong.theorem import ZInputs

        monkeypatch.setattr(cli, "verify_vertices", lambda u, v: (0.5, ZInputs(*[0.0] * 8)))
        assert run(capsys, "verify-theorem", "--samples", "10")[0] == 4


class TestLhv:
    def test_malus_product(self, capsys):
        doc = run_json(capsys, "lhv", "--model", "malus-product", "--d", "0.1", "--shots", "1000000", "--seed", "7")
        assert doc["lhs"] <= 1 + 3 * doc["sigma"]
        assert doc["within_local_bound"] is True
        assert doc["assumptions"]["supplementary"]["passed"] is True
        assert doc["assumptions"]["gr"]["passed"] is True
        assert doc["meta"] == {"seed": 7, "shots": 1000000, "eta": None, "phi_deg": None, "model": "malus-product", "d": 0.1}
        for counts in doc["counts"].values():
            assert counts["n_total"] == 1000000

    def test_noise(self, capsys):
        doc = run_json(capsys, "lhv", "--model", "noise", "--d", "0.1", "--shots", "200000", "--no-check-assumptions")
        assert doc["lhs"] == pytest.approx(-1, abs=4 * doc["sigma"])
        assert "assumptions" not in doc

    def test_threshold_many_shots(self, capsys):
        doc = run_json(capsys, "lhv", "--model", "threshold", "--d", "1", "--shots", "10000000", "--seed", "1")
        assert doc["lhs"] <= 1 + 3 * doc["sigma"]

    def test_unknown_model(self, capsys):
        assert run(capsys, "lhv", "--model", "psi-epistemic")[0] == 2

    def test_contract_violation(self, capsys):
        code, _, err = run(capsys, "lhv", "--model", "noise", "--d", "1.5", "--shots", "100")
        assert code == 5 and "lambda" in err


class TestOptimize:
    def test_ideal(self, capsys):
        doc = run_json(capsys, "optimize", "--inequality", "ardehali-ideal", "--source", "ideal")
        assert doc["t_best_deg"] == pytest.approx(30, abs=0.01)
        assert doc["lhs_best"] == pytest.approx(1.5, abs=1e-9)

    def test_real_eta_half(self, capsys):
        doc = run_json(capsys, "optimize", "--source", "real", "--eta", "0.5", "--phi-deg", "20")
        assert doc["t_best_deg"] == pytest.approx(30, abs=0.01)
        assert doc["lhs_best"] == pytest.approx(1.5, abs=1e-9)

    def test_noise_source(self, capsys):
        doc = run_json(capsys, "optimize", "--inequality", "ardehali-strong", "--source", "lhv",
                       "--model", "noise", "--d", "0.1", "--quadrature-points", "32")
        assert doc["lhs_best"] == pytest.approx(-1, abs=1e-12)

    def test_curve_csv(self, capsys, tmp_path):
        out_file = tmp_path / "curve.csv"
        code, out, _ = run(capsys, "optimize", "--grid", "5", "--format", "csv", "--out", str(out_file))
        assert code == 0
        assert out == out_file.read_text()
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [float(r["t_deg"]) for r in rows] == [5.0 * i for i in range(19)]

    def test_full_grid(self, capsys):
        doc = run_json(capsys, "optimize", "--inequality", "chsh", "--full-grid", "--grid", "15")
        assert doc["mode"] == "full-grid" and doc["lhs_best"] <= 2 * math.sqrt(2) + 1e-12


class TestConfig:
    def test_config_supplies_and_flags_override(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eta": 0.5, "phi-deg": 40, "angles": [0, 30]}))
        doc = run_json(capsys, "qm", "--config", str(cfg))
        assert doc["meta"]["eta"] == 0.5 and doc["meta"]["phi_deg"] == 40 and len(doc["rows"]) == 2
        doc = run_json(capsys, "qm", "--config", str(cfg), "--eta", "0.25")
        assert doc["meta"]["eta"] == 0.25

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert run(capsys, "qm", "--config", str(cfg))[0] == 2


def test_usage_error(capsys):
    assert run(capsys, "frobnicate")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ("lhv", "--model", "lopsided", "--shots", "300000", "--seed", "3", "--threads", "1"),
        ("verify-theorem", "--samples", "100000", "--seed", "9"),
        ("optimize", "--source", "lhv", "--model", "malus-product", "--format", "csv"),
    ],
)
def test_repeat_is_byte_identical(capsys, argv):
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_threads_do_not_change_output(capsys):
    base = ("lhv", "--model", "threshold", "--shots", "600000", "--seed", "5")
    assert run(capsys, *base, "--threads", "1")[1] == run(capsys, *base, "--threads", "3")[1]


def test_module_entry_point():
    cmd = [sys.executable, "-m", "bellstrong", "qm", "--ideal", "--angles", "30"]
    a = subprocess.run(cmd, capture_output=True, check=True)
    b = subprocess.run(cmd, capture_output=True, check=True)
    assert a.stdout == b.stdout and json.loads(a.stdout)["rows"][0]["E"] == pytest.approx(0.5)
