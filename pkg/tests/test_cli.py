import json

import numpy as np
import pytest

from densitygeom.core.codec import dump_matrix, write_matrix
from densitygeom.main import main

LOGGING_YAML = """\
version: 1
disable_existing_loggers: false
loggers:
  DensityGeom:
    level: INFO
    propagate: yes
  DensityGeomAudit:
    level: INFO
    propagate: yes
"""

SUITE_YAML = """\
seed: 11
bounds:
  max_order: 3
  ensembles:
    - {id: "qubit", dim: 2, count: 3, kind: "full_rank", perturb: true}
    - {id: "qutrit-pure", dim: 3, count: 2, kind: "pure"}
"""


@pytest.fixture
def cli(tmp_path):
    log_config = tmp_path / "logging.yaml"
    log_config.write_text(LOGGING_YAML, encoding="utf-8")

    def run(*argv):
        return main([*argv, "--log-config", str(log_config)])

    return run


def without_wall_time(doc):
    doc = dict(doc)
    doc.pop("wall_ms", None)
    if isinstance(doc.get("monte_carlo"), dict):
        doc["monte_carlo"] = {k: v for k, v in doc["monte_carlo"].items() if k != "wall_ms"}
    return doc


class TestSqrt:

    def test_prints_root_and_residual(self, cli, tmp_path, capsys):
        path = tmp_path / "rho.json"
        write_matrix(str(path), np.diag([0.75, 0.25]))
        assert cli("sqrt", str(path)) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["residual"] <= 1e-10
        np.testing.assert_allclose(doc["sqrt"]["re"], [[np.sqrt(3) / 2, 0.0], [0.0, 0.5]], atol=1e-14)

    def test_writes_output_file(self, cli, tmp_path, capsys):
        path, out = tmp_path / "rho.json", tmp_path / "xi.json"
        write_matrix(str(path), np.eye(2) / 2)
        assert cli("sqrt", str(path), "--out", str(out)) == 0
        assert capsys.readouterr().out.startswith("residual")
        doc = json.loads(out.read_text(encoding="utf-8"))
        np.testing.assert_allclose(doc["re"], np.eye(2) / np.sqrt(2), atol=1e-14)

    def test_non_psd_input(self, cli, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(dump_matrix(np.diag([1.5, -0.5]))), encoding="utf-8")
        assert cli("sqrt", str(path)) == 2
        assert "not positive semidefinite" in capsys.readouterr().err

    def test_non_hermitian_input(self, cli, tmp_path, capsys):
        path = tmp_path / "skew.json"
        path.write_text(json.dumps({"dim": 2, "re": [[0.5, 0.1], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]}), encoding="utf-8")
        assert cli("sqrt", str(path)) == 2
        assert "not Hermitian" in capsys.readouterr().err

    def test_missing_input(self, cli, tmp_path):
        assert cli("sqrt", str(tmp_path / "absent.json")) == 2


class TestPreimages:

    def test_generic(self, cli, capsys):
        assert cli("preimages", "0.25", "0", "0") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["case"] == "generic"
        assert len(doc["isolated_points"]) == 4
        assert max(doc["residuals"]) <= 1e-10

    def test_fully_mixed_continuum(self, cli, capsys):
        assert cli("preimages", "0", "0", "0") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["case"] == "fully_mixed"
        assert doc["continuum"]["t"] == 0.0

    def test_invalid_density(self, cli):
        assert cli("preimages", "0.6", "0", "0") == 2

    def test_mesh(self, cli, tmp_path, capsys):
        mesh = tmp_path / "mesh.csv"
        assert cli("preimages", "0.5", "0", "0", "--mesh", str(mesh), "--resolution", "8") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["mesh"]["rows"] == 1712
        assert mesh.exists()


class TestMetric:

    def test_constant_family_has_zero_metric(self, cli, tmp_path):
        out = tmp_path / "metric.json"
        assert cli("metric", "--family", "constant", "--seed", "1", "--samples", "2000", "--out", str(out)) == 0
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["analytic"] == [[0.0]]
        assert doc["monte_carlo"]["components"] == [[0.0]]
        assert doc["kappa"] is None

    def test_qubit_pure(self, cli, tmp_path):
        out = tmp_path / "metric.json"
        theta = np.pi / 3
        assert cli(
            "metric", "--family", "qubit-pure", "--theta", str(theta), "0.5",
            "--seed", "5", "--samples", "40000", "--out", str(out),
        ) == 0
        doc = json.loads(out.read_text(encoding="utf-8"))
        np.testing.assert_allclose(doc["analytic"], [[2.0, 0.0], [0.0, 2 * np.sin(theta) ** 2]], atol=1e-12)
        assert doc["derivative_mode"] == "exact"
        assert abs(doc["kappa"] - 0.25) <= 5 * doc["kappa_stderr"]

    def test_finite_difference_mode_from_config(self, cli, tmp_path):
        config = tmp_path / "fd.yaml"
        config.write_text("seed: 5\nmetric:\n  finite_difference: true\n", encoding="utf-8")
        out = tmp_path / "metric.json"
        theta = np.pi / 3
        assert cli("metric", "--config", str(config), "--theta", str(theta), "0.5", "--samples", "2000", "--out", str(out)) == 0
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["derivative_mode"] == "finite-difference"
        np.testing.assert_allclose(doc["analytic"], [[2.0, 0.0], [0.0, 2 * np.sin(theta) ** 2]], atol=1e-6)

    def test_deterministic_for_fixed_seed(self, cli, tmp_path):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for path, threads in zip(paths, ("1", "2")):
            assert cli("metric", "--seed", "5", "--samples", "5000", "--threads", threads, "--out", str(path)) == 0
        a, b = (json.loads(p.read_text(encoding="utf-8")) for p in paths)
        assert without_wall_time(a) == without_wall_time(b)

    def test_seed_is_mandatory(self, cli, capsys):
        assert cli("metric", "--samples", "2000") == 2
        assert "seed is mandatory" in capsys.readouterr().err

    def test_qubit_family_needs_dim_two(self, cli):
        assert cli("metric", "--family", "qubit-pure", "--dim", "3", "--seed", "1") == 2

    def test_wrong_theta_length(self, cli):
        assert cli("metric", "--family", "qubit-pure", "--theta", "0.1", "--seed", "1", "--samples", "2000") == 2


class TestBounds:

    def test_suite_outputs(self, cli, tmp_path, capsys):
        config = tmp_path / "suite.yaml"
        config.write_text(SUITE_YAML, encoding="utf-8")
        out = tmp_path / "run"
        assert cli("bounds", "--config", str(config), "--out", str(out)) == 0
        assert "0 violations" in capsys.readouterr().out
        for name in ("bounds.jsonl", "bounds_summary.csv", "bounds_summary.md", "bounds_run.json"):
            assert (out / name).exists(), name
        run = json.loads((out / "bounds_run.json").read_text(encoding="utf-8"))
        assert run["violations"] == 0
        assert run["total_records"] == 3 * 2 + 2
        assert [row["ensemble"] for row in run["summary"]] == ["qubit", "qutrit-pure"]

    def test_records_are_reproducible(self, cli, tmp_path):
        config = tmp_path / "suite.yaml"
        config.write_text(SUITE_YAML, encoding="utf-8")
        first, second = tmp_path / "one", tmp_path / "two"
        assert cli("bounds", "--config", str(config), "--out", str(first)) == 0
        assert cli("bounds", "--config", str(config), "--out", str(second), "--threads", "2") == 0
        assert (first / "bounds.jsonl").read_bytes() == (second / "bounds.jsonl").read_bytes()
        assert (first / "bounds_summary.csv").read_bytes() == (second / "bounds_summary.csv").read_bytes()

    def test_dim_flag_overrides_ensembles(self, cli, tmp_path):
        config = tmp_path / "suite.yaml"
        config.write_text(SUITE_YAML, encoding="utf-8")
        out = tmp_path / "run"
        assert cli("bounds", "--config", str(config), "--out", str(out), "--dim", "4") == 0
        run = json.loads((out / "bounds_run.json").read_text(encoding="utf-8"))
        assert {row["dim"] for row in run["summary"]} == {4}


class TestCalibrate:

    def test_small_run(self, cli, tmp_path):
        config = tmp_path / "cal.yaml"
        config.write_text("seed: 3\ncalibrate:\n  points: 2\n  dual_validation: 2\n", encoding="utf-8")
        out = tmp_path / "cal.json"
        assert cli("calibrate", "--config", str(config), "--samples", "2000", "--out", str(out)) == 0
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert len(doc["kappa"]["points"]) == 2
        assert doc["dual"]["validation_size"] == 2


def test_missing_config_file(cli, tmp_path):
    assert cli("bounds", "--config", str(tmp_path / "absent.yaml")) == 2


class TestRunLog:

    def test_stage_banners(self, cli, tmp_path, caplog):
        config = tmp_path / "suite.yaml"
        config.write_text(SUITE_YAML, encoding="utf-8")
        assert cli("bounds", "--config", str(config), "--out", str(tmp_path / "run")) == 0
        messages = [r.getMessage() for r in caplog.records if r.name.startswith("DensityGeom.")]
        assert "🔮 Starting densitygeom 'bounds' (seed=11, threads=1)..." in messages
        assert any(m.startswith("[Suite] Processing ensemble 'qubit'") for m in messages)
        assert any("Clean ensembles: 2/2" in m for m in messages)
        assert any(m.startswith("✅ 'bounds' completed") for m in messages)

    def test_failure_is_marked(self, cli, tmp_path, caplog):
        assert cli("sqrt", str(tmp_path / "absent.json")) == 2
        critical = [r.getMessage() for r in caplog.records if r.levelname == "CRITICAL"]
        assert critical and critical[0].startswith("🔥 Input file not found")
