import csv
import json
from pathlib import Path

import pytest

from densitygeom.core.config import build_experiment_config, ensemble_specs, load_config
from densitygeom.core.errors import ConfigError
from densitygeom.experiments.reporting import render_markdown, write_csv, write_jsonl
from densitygeom.experiments.suite import SUMMARY_HEADER, BoundSuite, EnsembleSpec

SPECS = [
    {"id": "qubit", "dim": 2, "count": 6, "kind": "full_rank", "perturb": True},
    {"id": "qutrit", "dim": 3, "count": 4, "kind": "full_rank", "perturb": True},
    {"id": "pure", "dim": 2, "count": 4, "kind": "pure"},
]
SHIPPED_CONFIG = Path(__file__).parents[1] / "config" / "densitygeom.yaml"


@pytest.fixture(scope="module")
def result():
    return BoundSuite(SPECS, seed=20240601).run()


class TestBoundSuite:

    def test_no_violations(self, result):
        assert result.violations == 0
        assert all(r["violation"] is None for r in result.records)

    def test_record_counts(self, result):
        # возмущённые ансамбли дают две записи на экземпляр
        assert len(result.records) == 6 * 2 + 4 * 2 + 4
        assert [row["records"] for row in result.summary] == [12, 8, 4]

    def test_saturation(self, result):
        for row in result.summary:
            assert row["saturation_max_dev"] < 1e-9
            assert row["crb_gap_min"] >= -1e-9

    def test_pure_uncertainty_product(self, result):
        pure = [r for r in result.records if r["kind"] == "pure"]
        for r in pure:
            assert r["var_T"] * r["var_H"] == pytest.approx(0.25, abs=1e-9)

    def test_qutrit_records_have_three_orders(self, result):
        qutrit = [r for r in result.records if r["ensemble"] == "qutrit"]
        assert all(r["projection_orders"] == [1, 2, 3] for r in qutrit)

    def test_deterministic_and_thread_independent(self, result):
        again = BoundSuite(SPECS, seed=20240601, n_jobs=2).run()
        assert json.dumps(again.records) == json.dumps(result.records)

    def test_different_seed_changes_records(self, result):
        other = BoundSuite(SPECS, seed=1).run()
        assert other.records[0]["var_T"] != result.records[0]["var_T"]

    def test_odd_term_spread_recorded(self, result):
        qutrit = [r for r in result.records if r["ensemble"] == "qutrit"]
        qubit = [r for r in result.records if r["dim"] == 2]
        assert all(r["odd_term_spread"] is not None and r["odd_term_spread"] >= 0.0 for r in qutrit)
        assert any(r["odd_term_spread"] > 0.0 for r in qutrit)
        # у кубита направление k = 3 линейно зависимо и отброшено
        assert all(r["odd_term_spread"] is None for r in qubit)

    def test_summary_spread_column(self, result):
        by_id = {row["ensemble"]: row for row in result.summary}
        assert by_id["qutrit"]["odd_term_spread_max"] > 0.0
        assert by_id["qubit"]["odd_term_spread_max"] is None
        assert by_id["pure"]["odd_term_spread_max"] is None
        assert SUMMARY_HEADER[-1] == "odd_term_spread_max"

    def test_spread_disabled(self):
        specs = [{"id": "qutrit", "dim": 3, "count": 2, "kind": "full_rank", "perturb": True}]
        res = BoundSuite(specs, seed=20240601, spread_trials=0).run()
        assert all(r["odd_term_spread"] is None for r in res.records)
        assert res.summary[0]["odd_term_spread_max"] is None
        assert res.violations == 0


class TestEnsembleSpec:

    @pytest.mark.parametrize("data", [
        {"id": "x", "dim": 2},
        {"id": "x", "dim": 1, "count": 3},
        {"id": "x", "dim": 2, "count": 3, "kind": "mixed"},
        {"id": "x", "dim": "two", "count": 3},
    ])
    def test_invalid(self, data):
        with pytest.raises(ConfigError):
            EnsembleSpec.from_mapping(data)

    def test_empty_suite(self):
        with pytest.raises(ConfigError):
            BoundSuite([], seed=1)


class TestReporting:

    def test_outputs(self, tmp_path, result):
        jsonl = tmp_path / "out" / "bounds.jsonl"
        assert write_jsonl(str(jsonl), result.records) == len(result.records)
        lines = jsonl.read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[0])["ensemble"] == "qubit"

        summary_csv = tmp_path / "out" / "summary.csv"
        write_csv(str(summary_csv), SUMMARY_HEADER, result.summary)
        with open(summary_csv, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert [r["ensemble"] for r in rows] == ["qubit", "qutrit", "pure"]
        # repr float восстанавливает число бит-в-бит
        assert float(rows[0]["crb_gap_mean"]) == result.summary[0]["crb_gap_mean"]

        md = tmp_path / "out" / "summary.md"
        render_markdown(
            {
                "command": "bounds",
                "seed": 20240601,
                "max_order": 3,
                "total_records": len(result.records),
                "violations": result.violations,
                "summary": result.summary,
                "kappa": {"kappa": 0.25, "kappa_stderr": 0.001, "constant_within_3_stderr": True},
                "jsonl_path": str(jsonl),
                "csv_path": str(summary_csv),
            },
            str(md),
        )
        text = md.read_text(encoding="utf-8")
        assert "(all inequalities hold)" in text
        assert "| qutrit | full_rank | 3 |" in text
        assert "kappa: 0.250000" in text
        assert "max k=3 spread" in text
        assert "n/a" in text


@pytest.mark.slow
def test_shipped_configuration_has_no_violations():
    exp = build_experiment_config("bounds", load_config(str(SHIPPED_CONFIG)), {})
    section = exp.section("bounds")
    suite = BoundSuite(
        ensemble_specs(exp),
        exp.seed,
        max_order=int(section["max_order"]),
        n_jobs=-1,
        slack=exp.tolerances.slack,
        spread_trials=int(section["spread_trials"]),
    )
    result = suite.run()
    assert result.violations == 0
    full_rank = [row for row in result.summary if row["kind"] == "full_rank"]
    assert sum(row["instances"] for row in full_rank) >= 10_000
    for row in result.summary:
        assert row["saturation_max_dev"] < 1e-9
