import logging
from typing import Sequence

import numpy as np

from ..core.algebra import HermitianMatrix, hs_inner
from .families import ParamFamily
from .montecarlo import MetricEstimate

logger = logging.getLogger("DensityGeom.Geometry")


def gram_matrix(directions: Sequence[HermitianMatrix]) -> np.ndarray:
    """Матрица Грама tr(A_a A_b) в скалярном произведении Гильберта-Шмидта."""
    k = len(directions)
    g = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            g[a, b] = g[b, a] = hs_inner(directions[a], directions[b])
    return g


def fisher_rao_analytic(family: ParamFamily, theta) -> MetricEstimate:
    """
    Квантовая метрика Фишера-Рао G_ab = 4 tr(∂_a ξ ∂_b ξ).

    Производные точные, если семейство их знает, иначе центральные разности.
    """
    derivs = family.derivatives(theta)
    comps = 4.0 * gram_matrix(derivs)
    logger.debug(f"Analytic Fisher-Rao [{family.name}, {family.mode.value}]: diag={np.diag(comps).tolist()}")
    return MetricEstimate(components=comps, stderr=np.zeros_like(comps))
