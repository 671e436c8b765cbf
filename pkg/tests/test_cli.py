import json
import subprocess
import sys

import numpy as np
import pytest

from wulffcurv.cli import (EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_TOL, RunConfig, main,
                           run)
from wulffcurv.mesh import read_obj


def run_cli(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    report = out / "report.json"
    doc = json.loads(report.read_text()) if report.exists() else None
    return code, doc, out


class TestWulff:
    def test_unit_sphere(self, tmp_path):
        code, doc, out = run_cli(tmp_path, "wulff", "--F", "const:c=1", "--subdiv", "3")
        assert code == EXIT_OK
        v, f = read_obj(out / "wulff.obj")
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-11)
        assert len(f) == 20 * 4 ** 3
        assert doc["convexity"]["pass"]

    def test_linear_centroid(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "wulff", "--F", "linear:a=[0.3,0,0]", "--subdiv", "3")
        assert code == EXIT_OK
        np.testing.assert_allclose(doc["wulff"]["centroid"], [0.3, 0, 0], atol=1e-3)

    def test_norm_bbox(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "wulff", "--F", "norm:B=[2,1,1]", "--subdiv", "4")
        assert code == EXIT_OK
        np.testing.assert_allclose(doc["wulff"]["bbox_min"], [-2, -1, -1], atol=2e-2)
        np.testing.assert_allclose(doc["wulff"]["bbox_max"], [2, 1, 1], atol=2e-2)

    def test_nonconvex(self, tmp_path, capsys):
        code, doc, _ = run_cli(tmp_path, "wulff", "--F", "quad:c=2,d=[0,0,1]")
        assert code == EXIT_PRECONDITION
        assert "argmin" in capsys.readouterr().err
        assert doc["exit_code"] == EXIT_PRECONDITION


class TestIdentities:
    def test_sphere_const(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "identities", "--surface", "sphere:R=1", "--level", "3",
                               "--conv-levels", "3,4")
        assert code == EXIT_OK
        assert doc["checks"] and all(row["passed"] for row in doc["checks"])

    def test_tolerance_failure(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "identities", "--surface", "ellipsoid:a=1,b=1.5,c=2",
                               "--F", "norm:B=[2,1,1]", "--level", "3", "--conv-levels", "3,4",
                               "--tol-identity", "1e-30")
        assert code == EXIT_TOL
        assert any(not row["passed"] for row in doc["checks"])

    def test_nonconvex(self, tmp_path):
        code, _, _ = run_cli(tmp_path, "identities", "--surface", "sphere:R=1",
                             "--F", "quad:c=3,d=[0,0,1]", "--level", "2")
        assert code == EXIT_PRECONDITION


class TestVariation:
    def test_sphere_normal_field(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "variation", "--surface", "sphere:R=1", "--level", "3",
                               "--r", "0", "--fields", "1")
        assert code == EXIT_OK
        rows = [row for row in doc["checks"] if row["name"].startswith("first variation")
                and "normal" in row.get("field", "")]
        assert rows
        for row in rows:
            assert row["fd"] == pytest.approx(-8 * np.pi, rel=1e-6)
            assert row["formula"] == pytest.approx(-8 * np.pi, rel=1e-10)


class TestStability:
    def test_sphere(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "stability", "--surface", "sphere:R=1", "--r", "0",
                               "--level", "3", "--subdiv", "4")
        assert code == EXIT_OK
        spec = doc["spectra"][0]
        assert spec["verdict"] == "stable" and spec["kernel_dim"] == 3
        np.testing.assert_allclose(spec["eigenvalues"][3:8], 4.0, rtol=2e-2)

    def test_ellipsoid_not_critical(self, tmp_path):
        code, doc, _ = run_cli(tmp_path, "stability", "--surface", "ellipsoid:a=1,b=1,c=2",
                               "--r", "0", "--level", "3", "--subdiv", "2")
        assert code == EXIT_PRECONDITION
        assert any("not constant" in note for note in doc["notes"])


class TestParsing:
    @pytest.mark.parametrize("argv", [
        ["wulff", "--F", "banana"],
        ["stability", "--surface", "torus:R=1"],
        ["identities", "--tol-identity", "-1"],
        ["identities", "--r", "a,b"],
        ["nosuchcommand"],
    ])
    def test_parse_errors(self, tmp_path, argv):
        with pytest.raises(SystemExit) as info:
            code = main([*argv, "--out", str(tmp_path / "p")])
            raise SystemExit(code)
        assert info.value.code == EXIT_PARSE
        assert not (tmp_path / "p" / "report.json").exists()

    def test_dimension_mismatch(self, tmp_path):
        code = main(["identities", "--surface", "sphere:R=1,n=1", "--F", "norm:B=[2,1,1]",
                     "--out", str(tmp_path / "p")])
        assert code == EXIT_PARSE


def test_determinism_across_thread_counts(tmp_path, monkeypatch):
    texts = []
    for threads in ("1", "3"):
        monkeypatch.setenv("WULFFCURV_THREADS", threads)
        cfg = RunConfig(command="variation", F="norm:B=[2,1,1]", level=2, r=[0, 1], fields=2,
                        out=str(tmp_path / f"t{threads}"))
        code, rep = run(cfg)
        assert code == EXIT_OK
        texts.append(rep.canonical())
    assert texts[0] == texts[1]
    a = (tmp_path / "t1" / "report.csv").read_text()
    b = (tmp_path / "t3" / "report.csv").read_text()
    assert a == b


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wulffcurv", "wulff", "--F", "const:c=1",
                           "--subdiv", "1", "--out", str(tmp_path / "m")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "report written" in proc.stdout
