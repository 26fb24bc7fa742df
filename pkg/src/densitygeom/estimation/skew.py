"""
Косая информация Вигнера-Янасе, её дополнение второго рода и скорость
унитарной кривой квадратных корней.

Разложение дисперсии: ΔH² = I_ρ(H) + δH², где
    I_ρ(H) = tr(H²ρ) − tr(H√ρ H√ρ),
    δH²    = tr(H√ρ H√ρ) − (tr Hρ)².
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple, Union

import numpy as np

from ..core.algebra import (
    DensityMatrix,
    HermitianMatrix,
    as_array,
    derivatives_unitary,
    hs_inner,
    hs_norm,
    principal_sqrt,
)
from ..core.errors import DimensionMismatchError, InvalidOrderError, TheoremViolationError

logger = logging.getLogger("DensityGeom.Estimation")

IDENTITY_TOL = 1e-10
MOMENT_ORDERS = (2, 3, 4)

DensityLike = Union[DensityMatrix, np.ndarray]


def _density(rho: DensityLike) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def _pair(a: Any, h: Any) -> Tuple[np.ndarray, np.ndarray]:
    x, hm = as_array(a), as_array(h)
    if x.shape != hm.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {x.shape[0]} vs {hm.shape[0]}")
    return x, hm


def _tr(a: np.ndarray) -> float:
    return float(np.real(np.trace(a)))


def variance(rho: DensityLike, h) -> float:
    """ΔH² = tr(H²ρ) − (tr Hρ)²."""
    r = _density(rho)
    x, hm = _pair(r, h)
    mean = _tr(hm @ x)
    return _tr(hm @ hm @ x) - mean * mean


def skew_information(rho: DensityLike, h) -> float:
    """
    Косая информация Вигнера-Янасе I_ρ(H).

    Args:
        rho: Матрица плотности.
        h: Эрмитова наблюдаемая той же размерности.

    Returns:
        float: tr(H²ρ) − tr(H√ρ H√ρ), где √ρ главный корень.
    """
    r = _density(rho)
    x, hm = _pair(r, h)
    s = principal_sqrt(r).data
    return _tr(hm @ hm @ x) - _tr(hm @ s @ hm @ s)


def skew_second(rho: DensityLike, h) -> float:
    """Косая информация второго рода δH² = tr(H√ρ H√ρ) − (tr Hρ)²."""
    r = _density(rho)
    x, hm = _pair(r, h)
    s = principal_sqrt(r).data
    mean = _tr(hm @ x)
    return _tr(hm @ s @ hm @ s) - mean * mean


def velocity_sq(xi, h) -> float:
    """
    Квадрат скорости tr(ξ'ξ') кривой ξ_t = exp(−iHt) ξ exp(iHt).

    Считается двумя независимыми путями: через коммутатор ξ' = −i[H, ξ] и через
    следы 2[tr(H²ξ²) − tr(HξHξ)]. Расхождение больше 1e-10 (в масштабе ‖H‖²)
    означает ошибку реализации.

    Raises:
        TheoremViolationError: Два пути расходятся.
    """
    x, hm = _pair(xi, h)
    d = derivatives_unitary(x, hm, 1)
    direct = hs_inner(d, d)
    traced = 2.0 * (_tr(hm @ hm @ x @ x) - _tr(hm @ x @ hm @ x))
    scale = max(1.0, hs_norm(HermitianMatrix(hm)) ** 2)
    if abs(direct - traced) > IDENTITY_TOL * scale:
        raise TheoremViolationError(
            f"Velocity identity violated: tr(xi'xi') = {direct:.15g}, trace form = {traced:.15g}",
            dump={"direct": direct, "traced": traced},
        )
    return direct


def centered(h, xi) -> np.ndarray:
    """H̃ = H − tr(Hξ²)·I."""
    x, hm = _pair(xi, h)
    mean = _tr(hm @ x @ x)
    return hm - mean * np.eye(hm.shape[0])


@dataclass(frozen=True)
class SkewMoments:
    """
    Разложение центрального момента порядка k.

    total  = tr(H̃^k ξ²);
    second = Re tr(H̃^{k−1} ξ H̃ ξ)  (часть "второго рода");
    skew   = total − second.

    При k = 2 и ξ = √ρ это ΔH² = I_ρ(H) + δH². Для чистого ξ вторая часть
    исчезает и skew совпадает с классическим центральным моментом.
    """

    order: int
    total: float
    skew: float
    second: float

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "total": self.total, "skew": self.skew, "second": self.second}


def skew_moment_decomposition(xi, h, k: int) -> SkewMoments:
    if k not in MOMENT_ORDERS:
        raise InvalidOrderError(f"Skew moment order must be 2, 3 or 4 (got {k})")
    x, _ = _pair(xi, h)
    ht = centered(h, x)
    power = np.linalg.matrix_power(ht, k - 1)
    total = _tr(power @ ht @ x @ x)
    second = _tr(power @ x @ ht @ x)
    return SkewMoments(order=k, total=total, skew=total - second, second=second)


def quantum_skew_moments(xi, h, k: int) -> float:
    """Квантовый косой момент порядка k: skew-часть разложения центрального момента."""
    return skew_moment_decomposition(xi, h, k).skew
