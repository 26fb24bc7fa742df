import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from ..core.algebra import HermitianMatrix, principal_sqrt
from ..core.ensembles import random_density_hs, random_hermitian, random_pure
from ..core.errors import ConfigError, DensityGeomError, TheoremViolationError
from ..estimation.bounds import SLACK
from ..estimation.estimator import make_locally_unbiased, perturb_estimator
from ..estimation.higher_order import higher_order_bound

logger = logging.getLogger("DensityGeom.Experiments")
audit = logging.getLogger("DensityGeomAudit")

KINDS = ("full_rank", "pure")
GAP_NAMES = ("crb", "luo", "dual", "symmetric", "third_order")
SATURATION_TOL = 1e-9
SPREAD_TRIALS = 8

SUMMARY_HEADER = [
    "ensemble", "kind", "dim", "instances", "records", "violations",
    "crb_gap_min", "crb_gap_mean", "luo_gap_min", "luo_gap_mean",
    "dual_gap_min", "dual_gap_mean", "symmetric_gap_min", "symmetric_gap_mean",
    "third_order_gap_min", "third_order_gap_mean",
    "uncertainty_product_mean", "saturation_max_dev", "odd_term_spread_max",
]


@dataclass
class EnsembleSpec:
    """Описание ансамбля случайных экземпляров (ξ, H, T)."""

    id: str
    dim: int
    count: int
    kind: str = "full_rank"
    perturb: bool = False

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "EnsembleSpec":
        try:
            spec = cls(
                id=str(data["id"]),
                dim=int(data["dim"]),
                count=int(data["count"]),
                kind=str(data.get("kind", "full_rank")),
                perturb=bool(data.get("perturb", False)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid ensemble spec {data!r}: {e}")
        if spec.kind not in KINDS:
            raise ConfigError(f"Ensemble '{spec.id}': kind must be one of {KINDS}, got '{spec.kind}'")
        if spec.dim < 2 or spec.count < 1:
            raise ConfigError(f"Ensemble '{spec.id}': dim >= 2 and count >= 1 required")
        return spec


@dataclass
class SuiteResult:
    records: List[Dict[str, Any]] = field(default_factory=list)
    summary: List[Dict[str, Any]] = field(default_factory=list)
    kappa: Optional[Dict[str, Any]] = None

    @property
    def violations(self) -> int:
        return int(sum(row["violations"] for row in self.summary))


def _instance(
    spec: EnsembleSpec,
    index: int,
    seed: np.random.SeedSequence,
    max_order: int,
    slack: float,
    spread_trials: int = SPREAD_TRIALS,
) -> List[Dict[str, Any]]:
    """
    Один экземпляр набора теорем: случайные ξ и H, насыщающая оценка и,
    если задано, её несмещённое возмущение. Разброс члена k = 3 по T
    измеряется тем же генератором экземпляра.
    """
    rng = np.random.default_rng(seed)
    if spec.kind == "pure":
        xi = random_pure(spec.dim, rng).sqrt_state()
    else:
        xi = principal_sqrt(random_density_hs(spec.dim, rng))
    h: HermitianMatrix = random_hermitian(spec.dim, rng)

    estimators = [("saturating", make_locally_unbiased(xi, h))]
    if spec.perturb:
        estimators.append(("perturbed", perturb_estimator(xi, h, estimators[0][1], rng)))

    out = []
    for label, est in estimators:
        record: Dict[str, Any] = {"ensemble": spec.id, "index": index, "kind": spec.kind, "dim": spec.dim, "estimator": label}
        try:
            spread_rng = rng if spread_trials > 0 else None
            report = higher_order_bound(xi, h, est, max_order, rng=spread_rng, n_trials=spread_trials, slack=slack)
            record.update(report.to_dict())
            record["violation"] = None
        except TheoremViolationError as e:
            record.update(e.dump)
            record["violation"] = str(e)
        out.append(record)
    return out


def _stats(values: List[float]) -> Dict[str, float]:
    if not values:
        return {"min": 0.0, "mean": 0.0}
    return {"min": float(np.min(values)), "mean": float(np.mean(values))}


def summarize(spec: EnsembleSpec, records: List[Dict[str, Any]]) -> Dict[str, Any]:
    ok = [r for r in records if r["violation"] is None]
    row: Dict[str, Any] = {
        "ensemble": spec.id,
        "kind": spec.kind,
        "dim": spec.dim,
        "instances": spec.count,
        "records": len(records),
        "violations": len(records) - len(ok),
    }
    gaps = {
        "crb": [r["var_T"] + r["delta_T2"] - r["crb_rhs"] for r in ok],
        "luo": [r["var_T"] - r["luo_rhs"] for r in ok],
        "dual": [r["dual_lhs"] - 0.25 for r in ok],
        "symmetric": [r["symmetric_lhs_rhs"][0] - r["symmetric_lhs_rhs"][1] for r in ok],
        "third_order": [r["var_T"] + r["delta_T2"] - r["third_order_rhs"] for r in ok],
    }
    for name in GAP_NAMES:
        stats = _stats(gaps[name])
        row[f"{name}_gap_min"] = stats["min"]
        row[f"{name}_gap_mean"] = stats["mean"]
    row["uncertainty_product_mean"] = float(np.mean([r["var_T"] * r["var_H"] for r in ok])) if ok else 0.0

    saturating = [r for r in ok if r["estimator"] == "saturating"]
    if spec.kind == "pure":
        devs = [abs(r["var_T"] * r["var_H"] - 0.25) for r in saturating]
    else:
        devs = [abs(r["var_T"] + r["delta_T2"] - r["crb_rhs"]) for r in saturating]
    row["saturation_max_dev"] = float(max(devs)) if devs else 0.0
    spreads = [r["odd_term_spread"] for r in ok if r.get("odd_term_spread") is not None]
    # None: член k = 3 отброшен во всех записях (например, кубит)
    row["odd_term_spread_max"] = float(max(spreads)) if spreads else None
    return row


class BoundSuite:
    """
    Оркестратор набора теорем по манифесту ансамблей.

    1. Разбирает спецификации ансамблей.
    2. Порождает независимые зёрна экземпляров из корневого зерна (SeedSequence.spawn).
    3. Считает экземпляры параллельно (joblib, потоки); порядок результатов фиксирован.
       Генератор экземпляра измеряет и разброс члена k = 3 по допустимым T.
    4. Сводит статистику зазоров и число нарушений по ансамблям.
    """

    def __init__(
        self,
        specs: List[Dict[str, Any]],
        seed: int,
        max_order: int = 3,
        n_jobs: int = 1,
        slack: float = SLACK,
        spread_trials: int = SPREAD_TRIALS,
    ):
        self.specs = [EnsembleSpec.from_mapping(s) for s in specs]
        if not self.specs:
            raise ConfigError("Bound suite needs at least one ensemble")
        self.seed = seed
        self.max_order = max_order
        self.n_jobs = n_jobs
        self.slack = slack
        self.spread_trials = spread_trials

    def run(self) -> SuiteResult:
        root = np.random.SeedSequence(self.seed)
        ensemble_seeds = root.spawn(len(self.specs))
        result = SuiteResult()
        logger.info(f"Starting theorem suite sequence: {len(self.specs)} ensembles, seed={self.seed}, n_jobs={self.n_jobs}...")

        for spec, ens_seed in zip(self.specs, ensemble_seeds):
            logger.info(f"[Suite] Processing ensemble '{spec.id}' | kind={spec.kind}, dim={spec.dim}, count={spec.count}")
            seeds = ens_seed.spawn(spec.count)
            try:
                batches = Parallel(n_jobs=self.n_jobs, prefer="threads")(
                    delayed(_instance)(spec, i, s, self.max_order, self.slack, self.spread_trials) for i, s in enumerate(seeds)
                )
            except DensityGeomError as e:
                logger.error(f"🔥 [Suite] Ensemble '{spec.id}' aborted: {e}")
                raise
            records = [r for batch in batches for r in batch]
            row = summarize(spec, records)
            if row["violations"]:
                audit.error("Theorem suite violations", extra={"ensemble": spec.id, "violations": row["violations"], "seed": self.seed})
                logger.error(f"🔥 [Suite] Ensemble '{spec.id}': {row['violations']} violations")
            if row["saturation_max_dev"] > SATURATION_TOL:
                logger.warning(f"[Suite] Ensemble '{spec.id}': saturating estimators deviate by {row['saturation_max_dev']:.3e}")
            result.records.extend(records)
            result.summary.append(row)

        clean = sum(1 for row in result.summary if row["violations"] == 0)
        logger.info(
            f"Theorem suite completed. Clean ensembles: {clean}/{len(self.specs)}, "
            f"records: {len(result.records)}, violations: {result.violations}."
        )
        return result
