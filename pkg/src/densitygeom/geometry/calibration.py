"""
Калибровка констант пропорциональности между интегралами Монте-Карло и
аналитическими выражениями.

Нормировки элементов объёма на Γ и на D не фиксированы заранее, поэтому
константы измеряются, а не предполагаются:
    κ_n: отношение MC-метрики Фишера-Рао к 4 tr(∂ξ∂ξ);
    c:   множитель дуальной формулы ⟨x|A|x⟩ = c·E_HS[tr(Aρ)·P(ρ|x)].
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..core.ensembles import random_pure, random_traceless_hermitian
from ..core.errors import NumericalError
from .families import ParamFamily
from .metric import fisher_rao_analytic
from .montecarlo import N_BATCHES, dual_expectation_raw, fisher_rao_mc

logger = logging.getLogger("DensityGeom.Geometry")

CALIBRATION_SEED = 20100607
Z_LIMIT = 3.0


@dataclass
class KappaCalibration:
    """
    Подгонка κ по набору точек (семейство, θ).

    ``ratios[i]`` = tr(G_mc)/tr(G_analytic) в i-й точке, ``z_scores``:
    отклонения от подогнанной κ в единицах ошибки.
    """

    kappa: float
    kappa_stderr: float
    ratios: List[float]
    ratio_stderr: List[float]
    z_scores: List[float]
    labels: List[str] = field(default_factory=list)

    @property
    def constant(self) -> bool:
        return all(abs(z) <= Z_LIMIT for z in self.z_scores)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa,
            "kappa_stderr": self.kappa_stderr,
            "constant_within_3_stderr": self.constant,
            "points": [
                {"label": l, "ratio": r, "stderr": s, "z": z}
                for l, r, s, z in zip(self.labels, self.ratios, self.ratio_stderr, self.z_scores)
            ],
        }


@dataclass
class DualCalibration:
    dim: int
    constant: float
    rms_residual: float
    validation_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "constant": self.constant,
            "rms_residual": self.rms_residual,
            "validation_size": self.validation_size,
        }


def trace_ratio(mc_trace: float, mc_trace_stderr: float, analytic_trace: float) -> Tuple[float, float]:
    if analytic_trace <= 0:
        raise NumericalError("Analytic metric has zero trace: proportionality constant undefined")
    return mc_trace / analytic_trace, mc_trace_stderr / analytic_trace


def calibrate_kappa(
    points: Sequence[Tuple[ParamFamily, Sequence[float]]],
    n_samples: int,
    rng: np.random.Generator,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> KappaCalibration:
    """
    Подгоняет κ как взвешенное (1/σ²) среднее отношений следов.

    Args:
        points: Пары (семейство, θ).
        n_samples (int): Выборки Монте-Карло на точку.
        rng (np.random.Generator): Источник зёрен.

    Returns:
        KappaCalibration: κ, ошибка и z-оценки по точкам.
    """
    ratios, errs, labels = [], [], []
    for family, theta in points:
        mc = fisher_rao_mc(family, theta, n_samples, rng, n_batches, n_jobs)
        an = fisher_rao_analytic(family, theta)
        r, s = trace_ratio(float(np.trace(mc.components)), mc.trace_stderr, float(np.trace(an.components)))
        ratios.append(r)
        errs.append(s)
        labels.append(f"{family.name}@{np.round(np.asarray(theta, dtype=float), 6).tolist()}")

    w = 1.0 / np.square(errs)
    kappa = float(np.sum(w * np.array(ratios)) / np.sum(w))
    kappa_err = float(1.0 / np.sqrt(np.sum(w)))
    z = [(r - kappa) / s for r, s in zip(ratios, errs)]

    result = KappaCalibration(kappa, kappa_err, ratios, errs, z, labels)
    logger.info(
        f"[Calibration] kappa={kappa:.6f} +- {kappa_err:.2e} over {len(ratios)} points, "
        f"max |z|={max(abs(v) for v in z):.2f}"
    )
    if not result.constant:
        logger.warning("[Calibration] Kappa is not constant across calibration points within 3 stderr")
    return result


def calibrate_dual_constant(
    dim: int,
    n_samples: int,
    rng: np.random.Generator,
    n_validation: int = 16,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> DualCalibration:
    """
    Регрессия ⟨x|A|x⟩ = c·m(A, x) по валидационному набору случайных пар
    (бесследовая A, чистое x) без свободного члена.
    """
    targets, raws = [], []
    for _ in range(n_validation):
        a = random_traceless_hermitian(dim, rng)
        x = random_pure(dim, rng)
        raw, _ = dual_expectation_raw(a, x, n_samples, rng, n_batches, n_jobs)
        targets.append(x.expectation(a))
        raws.append(raw)

    t, m = np.array(targets), np.array(raws)
    c = float(np.dot(t, m) / np.dot(m, m))
    rms = float(np.sqrt(np.mean((t - c * m) ** 2)))
    logger.info(f"[Calibration] Dual constant: dim={dim}, c={c:.6f}, rms residual={rms:.2e}")
    return DualCalibration(dim, c, rms, n_validation)


@lru_cache(maxsize=None)
def default_dual_constant(dim: int) -> float:
    """Константа c для размерности dim, откалиброванная один раз с фиксированным зерном."""
    rng = np.random.default_rng(CALIBRATION_SEED + dim)
    return calibrate_dual_constant(dim, 40000, rng).constant
