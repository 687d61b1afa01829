import csv
import io
import json

import pytest

from nlbound import save_state, werner
from nlbound.cli import bisect_threshold, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestBound:
    def test_werner_family(self, capsys):
        code, out, _ = run(capsys, "bound", "--family", "werner", "--x", "0.9", "--fast")
        rep = json.loads(out)
        assert code == 0
        assert rep["nonlocal"] is True and rep["bound"] == pytest.approx(1.276, abs=2e-3)
        assert rep["chsh"] == pytest.approx(1.2728, abs=1e-4)
        assert rep["quad"] == {"n_phi": 16, "n_theta": 32}
        assert rep["search"]["coarse_steps"] == 8

    def test_zero(self, capsys):
        code, out, _ = run(capsys, "bound", "--family", "werner", "--x", "0.0", "--fast")
        rep = json.loads(out)
        assert code == 0 and rep["bound"] == 0 and rep["nonlocal"] is False

    def test_state_file(self, capsys, tmp_path):
        path = tmp_path / "singlet.json"
        save_state(werner(1), path)
        code, out, _ = run(capsys, "bound", "--state", str(path), "--fast")
        assert code == 0
        assert json.loads(out)["bound"] == pytest.approx(1.4176, abs=2e-3)

    def test_isotropic_reports_variant(self, capsys):
        code, out, _ = run(capsys, "bound", "--family", "isotropic", "--d", "3", "--x", "0.9",
                           "--fast", "--kernel", "both")
        rep = json.loads(out)
        assert code == 0 and rep["kernel_variant"] in ("as-written", "affine")
        assert set(rep["variant_bounds"]) == {"as-written", "affine"}

    def test_finite_n(self, capsys):
        code, out, _ = run(capsys, "bound", "--family", "werner", "--x", "1", "--fast",
                           "--finite-n", "400", "--seed", "3")
        rep = json.loads(out)
        assert rep["finite_n"]["n"] == 400
        assert rep["finite_n"]["value"] == pytest.approx(rep["bound"], rel=0.05)

    def test_overrides_fast(self, capsys):
        _, out, _ = run(capsys, "bound", "--family", "werner", "--x", "0.5", "--fast",
                        "--quad-phi", "10", "--coarse-steps", "5")
        rep = json.loads(out)
        assert rep["quad"]["n_phi"] == 10 and rep["search"]["coarse_steps"] == 5

    @pytest.mark.parametrize("argv,msg", [
        (["--family", "werner", "--x", "1.5"], "x must lie"),
        (["--family", "bell-diagonal", "--p1", "1", "--p2", "1", "--p3", "-1"], "semidefinite"),
        (["--family", "werner"], "requires --x"),
        ([], "required"),
        (["--family", "werner", "--x", "0.5", "--quad-phi", "2"], "n_phi"),
    ])
    def test_validation_exit_2(self, capsys, argv, msg):
        code, _, err = run(capsys, "bound", *argv)
        assert code == 2 and msg in err

    def test_malformed_json(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("[1, 2")
        code, _, err = run(capsys, "bound", "--state", str(path))
        assert code == 2 and "broken.json" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "bound", "--state", str(tmp_path / "nope.json"))
        assert code == 2 and "nope.json" in err


class TestChsh:
    def test_werner(self, capsys):
        code, out, _ = run(capsys, "chsh", "--family", "werner", "--x", "0.5")
        rep = json.loads(out)
        assert code == 0 and rep["chsh"] == pytest.approx(0.5 * 2**0.5, abs=1e-12)
        assert rep["nonlocal"] is False

    def test_rejects_qutrit(self, capsys):
        code, _, err = run(capsys, "chsh", "--family", "isotropic", "--d", "3", "--x", "0.5")
        assert code == 2


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestScan:
    def test_werner_rows_and_crossing(self, capsys, tmp_path):
        out = tmp_path / "fig1.csv"
        code, _, _ = run(capsys, "scan", "--family", "werner", "--steps", "101", "--fast",
                         "--coarse-steps", "4", "--out", str(out))
        rows = read_csv(out.read_text())
        assert code == 0 and len(rows) == 101
        assert list(rows[0]) == ["x", "bound_t1", "bound_chsh", "nonlocal", "status"]
        first = next(r for r in rows if r["nonlocal"] == "true")
        assert first["x"] == "0.71"
        assert all(float(r["bound_t1"]) >= float(r["bound_chsh"]) - 1e-9 for r in rows if float(r["x"]) > 0.7)

    def test_bell_diagonal_skips_invalid(self, capsys):
        code, out, _ = run(capsys, "scan", "--family", "bell-diagonal", "--p-steps", "3", "--fast",
                           "--coarse-steps", "4")
        rows = read_csv(out)
        assert code == 0 and len(rows) == 27
        bad = next(r for r in rows if (r["p1"], r["p2"], r["p3"]) == ("1", "1", "-1"))
        assert bad["status"].startswith("skipped") and "-0.5" in bad["status"]
        assert bad["bound_t1"] == ""
        ok = [r for r in rows if r["status"] == "ok"]
        assert any(r["nonlocal"] == "true" for r in ok)
        # (0,0,+-1) is a classically correlated separable state: the bound stays at or below 1
        for r in ok:
            if sorted(map(float, (r["p1"], r["p2"], r["p3"]))) in ([-1, 0, 0], [0, 0, 1]):
                assert float(r["bound_t1"]) <= 1 + 1e-6

    def test_cross_section(self, capsys):
        code, out, _ = run(capsys, "scan", "--family", "bell-diagonal", "--fix-p3", "0.9",
                           "--p-steps", "4", "--p-min", "0.6", "--p-max", "0.9", "--fast",
                           "--coarse-steps", "4")
        rows = read_csv(out)
        assert len(rows) == 16 and {r["p3"] for r in rows} == {"0.9"}

    def test_sigma_mixture_json(self, capsys):
        code, out, _ = run(capsys, "scan", "--family", "sigma-mixture", "--alpha-steps", "2",
                           "--alpha-min", "0", "--alpha-max", "2", "--beta-steps", "2", "--fast",
                           "--coarse-steps", "4", "--format", "json")
        rows = json.loads(out)
        assert code == 0 and len(rows) == 4
        assert rows[0]["alpha"] == 0 and rows[0]["beta"] == 0 and rows[0]["status"] == "ok"
        assert rows[2]["status"].startswith("skipped")  # alpha=2, beta=0
        assert rows[1]["nonlocal"] is True  # beta=1: maximally entangled

    def test_isotropic_columns(self, capsys):
        code, out, _ = run(capsys, "scan", "--family", "isotropic", "--d", "3", "--x-min", "0.5",
                           "--x-max", "1", "--steps", "3", "--fast", "--coarse-steps", "4")
        rows = read_csv(out)
        assert list(rows[0]) == ["d", "x", "bound_t2", "kernel_variant", "nonlocal", "status"]
        assert [r["nonlocal"] for r in rows] == ["false", "false", "true"]

    def test_state_files(self, capsys, tmp_path):
        good, bad = tmp_path / "a.json", tmp_path / "b.json"
        save_state(werner(1), good)
        bad.write_text("{}")
        code, out, _ = run(capsys, "scan", "--state", str(good), str(bad), "--fast",
                           "--coarse-steps", "4")
        rows = read_csv(out)
        assert code == 0 and rows[0]["status"] == "ok" and rows[0]["d"] == "2"
        assert rows[1]["status"].startswith("skipped")

    def test_deterministic_bytes(self, capsys, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            run(capsys, "scan", "--family", "werner", "--steps", "7", "--fast", "--out", str(p))
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_threads_do_not_change_output(self, capsys, monkeypatch):
        args = ["scan", "--family", "werner", "--steps", "5", "--fast", "--coarse-steps", "4"]
        monkeypatch.setenv("NLB_THREADS", "1")
        _, single, _ = run(capsys, *args)
        monkeypatch.setenv("NLB_THREADS", "3")
        _, multi, _ = run(capsys, *args)
        assert single == multi

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, err = run(capsys, "scan", "--family", "werner", "--steps", "2", "--fast",
                           "--out", str(tmp_path / "missing" / "x.csv"))
        assert code == 2 and "missing" in err

    def test_empty_range(self, capsys):
        code, _, _ = run(capsys, "scan", "--family", "werner", "--steps", "0")
        assert code == 2


class TestThreshold:
    def test_no_sign_change_exit_3(self, capsys):
        code, _, err = run(capsys, "threshold", "--family", "werner", "--bracket", "0.8", "0.9", "--fast")
        assert code == 3 and "no sign change" in err

    def test_werner_fast(self, capsys):
        code, out, _ = run(capsys, "threshold", "--family", "werner", "--fast")
        rep = json.loads(out)
        assert code == 0 and rep["threshold"] == pytest.approx(0.7054, abs=0.002)

    def test_bell_diagonal_diag_matches_werner(self, capsys):
        _, a, _ = run(capsys, "threshold", "--family", "bell-diagonal", "--bracket", "0.6", "0.8", "--fast")
        _, b, _ = run(capsys, "threshold", "--family", "werner", "--fast")
        assert json.loads(a)["threshold"] == json.loads(b)["threshold"]

    def test_bad_bracket(self, capsys):
        code, _, _ = run(capsys, "threshold", "--family", "werner", "--bracket", "0.8", "0.6")
        assert code == 2


def test_bisection_on_linear_function():
    x, n = bisect_threshold(lambda v: 2 * v, 0.0, 1.0, 1e-6)
    assert x == pytest.approx(0.5, abs=1e-6) and n > 2
