import csv
import json
import math
import shutil
import subprocess
import sys

import numpy as np
import pytest

from conftest import U_CURVED
from kquant.errors import ContractViolation
from kquant.experiments import (
    CSV_HEADER,
    EXIT_FAIL,
    EXIT_INVALID,
    EXIT_OK,
    ConfigError,
    Row,
    StudyKind,
    default_inputs,
    execute,
    parse_config,
    random_potential,
    run_config,
    run_study,
)
from kquant.experiments.cli import main
from kquant.experiments.studies import _fitted_order
from kquant.toric import U_FS, SymplecticPotential


def write_config(path, data):
    path.write_text(json.dumps(data))
    return path


class TestClosedForms:
    def test_flat_distance(self):
        c = 0.7
        u1 = SymplecticPotential((-c,))
        report = run_study(default_inputs("distance", u0=U_FS, u1=u1))
        for row in report.rows:
            assert row.value == pytest.approx(c * math.sqrt(1 + 1 / row.k), rel=1e-12)
            assert row.limit == pytest.approx(c, rel=1e-14)

    def test_constant_path_speed(self):
        report = run_study(default_inputs("speed", u0=U_CURVED, u1=U_CURVED))
        assert all(r.value == pytest.approx(0.0, abs=1e-10) and r.limit == 0.0 for r in report.rows)
        assert report.passed

    def test_gradient_at_fs(self):
        report = run_study(default_inputs("gradient", u0=U_FS))
        assert all(r.value <= 1e-8 and r.limit == pytest.approx(0.0, abs=1e-20) for r in report.rows)

    def test_iquant_flat_direction(self):
        report = run_study(default_inputs("iquant", u0=SymplecticPotential((0.3,))))
        for r in report.rows:
            assert r.limit == pytest.approx(-0.3, rel=1e-12)


def _top_half_monotone(errs, noise=0.1):
    top = errs[len(errs) // 2 :]
    return all(b <= a * (1 + noise) for a, b in zip(top, top[1:]))


@pytest.mark.parametrize("kind", ["distance", "speed", "accel", "gradient", "iquant", "lemmas"])
def test_convergence_invariants(kind):
    report = run_study(default_inputs(kind))
    assert report.passed
    errs = [r.abs_err for r in report.rows]
    assert _top_half_monotone(errs)
    assert report.fitted_order is not None and report.fitted_order <= -0.5


@pytest.mark.parametrize("kind", [k.value for k in StudyKind])
def test_every_default_study_passes(kind):
    report = run_study(default_inputs(kind))
    assert report.passed, report.criterion
    assert [r.k for r in report.rows] == sorted(r.k for r in report.rows)
    assert report.to_json()["pass"] is True


class TestReports:
    def test_row_relative_error(self):
        assert Row.of(8, 1.1, 1.0).rel_err == pytest.approx(0.1)
        assert Row.of(8, 1e-3, 0.0).rel_err == 1e-3

    def test_fitted_order_needs_four_rows(self):
        rows = [Row.of(k, 1.0 + 1.0 / k, 1.0) for k in (8, 16, 32)]
        assert _fitted_order(rows) is None
        rows.append(Row.of(64, 1.0 + 1.0 / 64, 1.0))
        assert _fitted_order(rows) == pytest.approx(-1.0, abs=1e-10)
        report = run_study(default_inputs("distance", kgrid=(8, 16, 32)))
        assert report.fitted_order is None

    def test_rows_sorted(self):
        report = run_study(default_inputs("distance", kgrid=(32, 8, 16)))
        assert [r.k for r in report.rows] == [8, 16, 32]

    def test_missing_input(self):
        from kquant.experiments import StudyInputs

        with pytest.raises(ContractViolation, match="u1"):
            run_study(StudyInputs(kind=StudyKind.DISTANCE))

    def test_csv_and_json(self, tmp_path):
        cfg = parse_config({"studies": [{"kind": "distance", "kgrid": [8, 16], "tol": 0.5}], "out_dir": str(tmp_path / "out")})
        result = execute(cfg)
        assert result.status == EXIT_OK
        csv_path = tmp_path / "out" / "00_distance.csv"
        with open(csv_path) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_HEADER == ("k", "value", "limit", "abs_err", "rel_err")
        assert [int(r[0]) for r in rows[1:]] == [8, 16]
        for r in rows[1:]:
            for cell in r[1:]:
                mantissa = cell.split("e")[0].replace("-", "").replace(".", "").lstrip("0")
                assert len(mantissa) <= 17
                assert float(cell) == float(f"{float(cell):.17g}")
        report = json.loads((tmp_path / "out" / "00_distance.json").read_text())
        assert report["pass"] is True and report["study"] == "distance"
        assert float(rows[1][1]) == report["rows"][0]["value"]

    def test_bit_reproducible(self, tmp_path):
        data = {"studies": [{"kind": "ineq1", "samples": 2, "kgrid": [8, 16]}, {"kind": "angle", "kgrid": [8, 16]}], "seed": 7}
        texts = []
        for name in ("a", "b"):
            cfg = parse_config({**data, "out_dir": str(tmp_path / name)})
            execute(cfg)
            texts.append([(tmp_path / name / f).read_bytes() for f in ("00_ineq1.csv", "00_ineq1.json", "01_angle.csv")])
        assert texts[0] == texts[1]

    def test_random_potential_admissible(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            u = random_potential(rng)
            assert u.validate() is u


class TestConfigErrors:
    @pytest.mark.parametrize(
        "data, location",
        [
            ([], "$"),
            ({"studies": []}, "$.studies"),
            ({"studies": [{"kind": "nope"}]}, "$.studies[0].kind"),
            ({"studies": [{}]}, "$.studies[0]"),
            ({"studies": [{"kind": "distance", "kgrid": [8, 2]}]}, "$.studies[0].kgrid[1]"),
            ({"studies": [{"kind": "distance", "kgrid": [8, 8]}]}, "$.studies[0].kgrid"),
            ({"studies": [{"kind": "distance", "u1": {"coeffs": [0, "a"]}}]}, "$.studies[0].u1.coeffs[1]"),
            ({"studies": [{"kind": "distance", "u1": {"coeffs": [0, -20]}}]}, "$.studies[0].u1.coeffs"),
            ({"studies": [{"kind": "distance", "tol": -1}]}, "$.studies[0].tol"),
            ({"studies": [{"kind": "distance", "bogus": 1}]}, "$.studies[0]"),
            ({"studies": [{"kind": "distance"}], "seed": 1.5}, "$.seed"),
        ],
    )
    def test_locations(self, data, location):
        with pytest.raises(ConfigError) as info:
            parse_config(data)
        assert info.value.location == location

    def test_non_convex_names_coefficients(self):
        with pytest.raises(ConfigError, match=r"\[0\.0, -20\.0\]"):
            parse_config({"studies": [{"kind": "distance", "u1": {"coeffs": [0, -20]}}]})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"studies": [')
        result = run_config(path)
        assert result.status == EXIT_INVALID
        assert "c.json:1:" in result.messages[0]


class TestExitCodes:
    def test_pass(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"studies": [{"kind": "distance", "kgrid": [8, 16], "tol": 0.5}], "out_dir": str(tmp_path / "o")})
        assert run_config(cfg).status == EXIT_OK

    def test_tolerance_failure(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"studies": [{"kind": "distance", "kgrid": [8, 16], "tol": 1e-9}], "out_dir": str(tmp_path / "o")})
        result = run_config(cfg)
        assert result.status == EXIT_FAIL
        assert (tmp_path / "o" / "00_distance.csv").exists()

    def test_invalid(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"studies": [{"kind": "distance", "u1": [0, -20]}]})
        assert run_config(cfg).status == EXIT_INVALID


class TestCli:
    def test_study(self, tmp_path, capsys):
        assert main(["study", "distance", "--k", "8,16", "--tol", "0.5", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "distance.csv").exists()
        assert "distance" in capsys.readouterr().out

    def test_study_tolerance(self):
        assert main(["study", "distance", "--k", "8,16", "--tol", "1e-9"]) == EXIT_FAIL

    def test_negative_coefficients(self, capsys):
        # u_FS - 0.7 p translates psi, so phi_dot = 0.7 p and d = 0.7 / sqrt(3)
        assert main(["dist", "--u0=fs", "--u1=-0.7"]) == EXIT_OK
        out = capsys.readouterr().out
        assert float(out.split("=")[1]) == pytest.approx(0.7 / math.sqrt(3), rel=1e-12)

    def test_dist_with_k(self, capsys):
        assert main(["dist", "--u1", "0.5,-0.5", "--k", "8,16"]) == EXIT_OK
        out = capsys.readouterr().out
        assert f"{0.5 / math.sqrt(30):.17g}"[:12] in out

    def test_density(self, capsys):
        assert main(["density", "--k", "16", "--u", "fs", "--points", "3"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4
        for line in lines[1:]:
            rho, target = map(float, line.split()[2:])
            assert rho == pytest.approx(17.0, rel=1e-10) and target == pytest.approx(17.0, rel=1e-12)

    @pytest.mark.parametrize(
        "argv",
        [
            ["study", "distance", "--k", "8,x"],
            ["study", "distance", "--k", "2"],
            ["dist", "--u1=0,-20"],
            ["density", "--k", "8", "--u", "a"],
            ["study", "nope"],
            [],
        ],
    )
    def test_invalid(self, argv, capsys):
        assert main(argv) == EXIT_INVALID

    def test_non_convex_message(self, capsys):
        main(["dist", "--u1=0,-20"])
        assert "[0.0, -20.0]" in capsys.readouterr().err

    def test_run(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", {"studies": [{"kind": "iquant", "kgrid": [8, 16, 32, 64]}], "out_dir": str(tmp_path / "o")})
        assert main(["run", str(cfg)]) == EXIT_OK
        assert (tmp_path / "o" / "00_iquant.json").exists()

    def test_console_script(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"studies": [{"kind": "distance", "kgrid": [8, 16], "tol": 0.5}], "out_dir": str(tmp_path / "o")})
        kq = [shutil.which("kq")] if shutil.which("kq") else [sys.executable, "-m", "kquant.experiments.cli"]
        proc = subprocess.run([*kq, "run", str(cfg)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        bad = subprocess.run([*kq, "dist", "--u1=0,-20"], capture_output=True, text=True)
        assert bad.returncode == 2
