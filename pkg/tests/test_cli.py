"""End-to-end tests of the experiment runner: artifacts, determinism, exit
codes, and the concurrency switch."""

import json
import os

import numpy as np
import pytest

from cmclab import read_cellset, cellset_to_text
from cmclab.cli import main


def read_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def run_cli(*args):
    return main(list(args))


class TestSpectra:
    def test_stable_cone_document(self, tmp_path):
        out = str(tmp_path)
        assert run_cli("spectra", "--p", "3", "--q", "3", "--kmax", "12",
                       "--outdir", out) == 0
        doc = json.loads(read_text(os.path.join(out, "spectra_p3_q3.json")))
        assert doc["schema_version"] == 1
        assert doc["dimension"] == 7
        assert doc["lambda1"] == -6.0
        assert doc["stable"] is True
        assert doc["gamma"] == [2.0, 3.0]
        assert doc["eigenvalues"] == sorted(doc["eigenvalues"])
        assert doc["config"]["subcommand"] == "spectra"

    def test_unstable_cone_has_no_gamma(self, tmp_path):
        out = str(tmp_path)
        assert run_cli("spectra", "--p", "1", "--q", "1", "--kmax", "8",
                       "--outdir", out) == 0
        doc = json.loads(read_text(os.path.join(out, "spectra_p1_q1.json")))
        assert doc["stable"] is False
        assert doc["gamma"] is None

    def test_rerun_is_byte_identical(self, tmp_path):
        out = str(tmp_path)
        args = ("spectra", "--p", "2", "--q", "4", "--kmax", "10",
                "--outdir", out)
        assert run_cli(*args) == 0
        first = read_text(os.path.join(out, "spectra_p2_q4.json"))
        assert run_cli(*args) == 0
        assert read_text(os.path.join(out, "spectra_p2_q4.json")) == first

    def test_invalid_multiplicity_is_config_error(self, tmp_path, capsys):
        code = run_cli("spectra", "--p", "0", "--q", "3", "--kmax", "8",
                       "--outdir", str(tmp_path))
        assert code == 2
        assert "config error:" in capsys.readouterr().err


class TestPlateau2d:
    def test_chord_row_and_cellset_roundtrip(self, tmp_path):
        out = str(tmp_path)
        assert run_cli("plateau2d", "--radius", "8", "--resolution", "20",
                       "--lambda", "0.0", "--lambda", "0.5",
                       "--outdir", out) == 0
        doc = json.loads(read_text(os.path.join(out, "plateau2d.json")))
        rows = doc["rows"]
        assert [r["lambda"] for r in rows] == [0.0, 0.5]
        assert rows[0]["filled"] is False
        assert rows[0]["contact_excess"] == 0.0
        assert rows[1]["filled"] is True
        # emitted cell sets re-read to the same bytes
        for row in rows:
            path = os.path.join(out, row["cellset"])
            assert cellset_to_text(read_cellset(path)) == read_text(path)
        # the lambda = 0 minimizer is the lower half-plane chord
        D = read_cellset(os.path.join(out, rows[0]["cellset"]))
        _X, Y = D.grid.center_mesh()
        assert np.array_equal(D.bits, Y < 9.5)

    def test_thread_count_does_not_change_bytes(self, tmp_path, monkeypatch):
        out = str(tmp_path)
        args = ("plateau2d", "--radius", "8", "--resolution", "20",
                "--lambda", "0.1", "--lambda", "0.3", "--lambda", "0.6",
                "--outdir", out)
        monkeypatch.delenv("CMC_LAB_THREADS", raising=False)
        assert run_cli(*args) == 0
        single = read_text(os.path.join(out, "plateau2d.json"))
        monkeypatch.setenv("CMC_LAB_THREADS", "3")
        assert run_cli(*args) == 0
        assert read_text(os.path.join(out, "plateau2d.json")) == single

    def test_bad_thread_env_is_config_error(self, tmp_path, monkeypatch,
                                            capsys):
        monkeypatch.setenv("CMC_LAB_THREADS", "zero")
        code = run_cli("plateau2d", "--radius", "8", "--resolution", "20",
                       "--lambda", "0.0", "--outdir", str(tmp_path))
        assert code == 2
        assert "CMC_LAB_THREADS" in capsys.readouterr().err


class TestEquivariant:
    def test_artifacts(self, tmp_path):
        out = str(tmp_path)
        assert run_cli("equivariant", "--p", "3", "--q", "3",
                       "--grid-n", "32", "--lambda", "0.0",
                       "--outdir", out) == 0
        doc = json.loads(read_text(os.path.join(out, "equivariant.json")))
        assert doc["result"]["schema_version"] == 1
        assert doc["cellset"] == "equivariant_largest.csl"
        D = read_cellset(os.path.join(out, "equivariant_largest.csl"))
        assert D.grid.dims == (32, 32)

    def test_overflow_is_numerical_failure(self, tmp_path, capsys):
        code = run_cli("equivariant", "--p", "3", "--q", "3",
                       "--grid-n", "32", "--lambda", "1e9",
                       "--outdir", str(tmp_path))
        assert code == 3
        diag = json.loads(capsys.readouterr().err)
        assert diag["error"] == "CapacityOverflowError"
        assert diag["schema_version"] == 1


class TestLeaf:
    def test_csv_shape_and_determinism(self, tmp_path):
        csv = str(tmp_path / "leaf.csv")
        args = ("leaf", "--p", "3", "--q", "3", "--s0", "1.0",
                "--rmax", "12", "--csv", csv)
        assert run_cli(*args) == 0
        text = read_text(csv)
        lines = text.splitlines()
        assert lines[0] == "s,x,y,curvature_residual"
        assert lines[1].endswith(",nan")
        assert lines[-1].endswith(",nan")
        data = np.loadtxt(csv, delimiter=",", skiprows=1)
        assert data.shape[1] == 4
        assert np.nanmax(data[:, 3]) < 1e-5
        assert run_cli(*args) == 0
        assert read_text(csv) == text


class TestApprox:
    def write_config(self, tmp_path, doc):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)

    def good_config(self):
        h = 1.0 / 32
        return {"p": 3, "q": 3, "lambda": 0.0,
                "grid": {"n": 32, "box": 1.0},
                "t_list": [8 * h, 4 * h, 2 * h]}

    def test_run_and_nesting(self, tmp_path):
        out = str(tmp_path)
        cfg = self.write_config(tmp_path, self.good_config())
        assert run_cli("approx", "--config", cfg, "--outdir", out) == 0
        doc = json.loads(read_text(os.path.join(out, "approx.json")))
        assert doc["inclusion_ok"] == [True, True, True]
        assert doc["chain_ok"] == [True, True, True]
        limit = read_cellset(os.path.join(out, doc["limit"]))
        prev = None
        for name in doc["steps"]:
            D = read_cellset(os.path.join(out, name))
            assert np.all(D.bits <= limit.bits)
            if prev is not None:
                assert np.all(prev.bits <= D.bits)
            prev = D

    @pytest.mark.parametrize("mangle,needle", [
        (lambda d: d.pop("q"), "'q'"),
        (lambda d: d.update(foo=1), "'foo'"),
        (lambda d: d["grid"].update(spacing=0.1), "grid.spacing"),
        (lambda d: d.update(t_list=[]), "t_list"),
        (lambda d: d["grid"].pop("box"), "grid.box"),
    ])
    def test_config_errors(self, tmp_path, capsys, mangle, needle):
        doc = self.good_config()
        mangle(doc)
        cfg = self.write_config(tmp_path, doc)
        assert run_cli("approx", "--config", cfg,
                       "--outdir", str(tmp_path)) == 2
        assert needle in capsys.readouterr().err

    def test_non_object_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text("[1, 2]", encoding="utf-8")
        assert run_cli("approx", "--config", str(cfg),
                       "--outdir", str(tmp_path)) == 2
        assert "object" in capsys.readouterr().err

    def test_unreadable_config(self, tmp_path, capsys):
        assert run_cli("approx", "--config", str(tmp_path / "absent.json"),
                       "--outdir", str(tmp_path)) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text("{nope", encoding="utf-8")
        assert run_cli("approx", "--config", str(cfg),
                       "--outdir", str(tmp_path)) == 2
        assert "JSON" in capsys.readouterr().err


class TestPlot:
    def test_cellset_to_svg(self, tmp_path):
        out = str(tmp_path)
        assert run_cli("equivariant", "--p", "3", "--q", "3",
                       "--grid-n", "32", "--lambda", "0.0",
                       "--outdir", out) == 0
        src = os.path.join(out, "equivariant_largest.csl")
        svg = os.path.join(out, "largest.svg")
        assert run_cli("plot", "--input", src, "--output", svg) == 0
        text = read_text(svg)
        assert text.startswith("<svg ")
        assert text.count("<path ") >= 1
        assert run_cli("plot", "--input", src, "--output", svg) == 0
        assert read_text(svg) == text

    def test_curve_csv_to_svg(self, tmp_path):
        csv = str(tmp_path / "leaf.csv")
        assert run_cli("leaf", "--p", "3", "--q", "3", "--s0", "1.0",
                       "--rmax", "12", "--csv", csv) == 0
        svg = str(tmp_path / "leaf.svg")
        assert run_cli("plot", "--input", csv, "--output", svg) == 0
        assert read_text(svg).count("<path ") == 1

    def test_unknown_format(self, tmp_path, capsys):
        junk = tmp_path / "junk.txt"
        junk.write_text("hello\n", encoding="utf-8")
        assert run_cli("plot", "--input", str(junk),
                       "--output", str(tmp_path / "x.svg")) == 2
        assert "neither" in capsys.readouterr().err


class TestParser:
    def test_unknown_subcommand(self, capsys):
        assert run_cli("frobnicate") == 2
        capsys.readouterr()

    def test_missing_required_flag(self, capsys):
        assert run_cli("spectra", "--p", "3") == 2
        capsys.readouterr()

    def test_no_arguments(self, capsys):
        assert run_cli() == 2
        capsys.readouterr()
