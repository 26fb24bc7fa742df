"""
Локально несмещённые оценки времени T для унитарной кривой ξ_t.

Условие локальной несмещённости в точке t: tr((T̃ξ + ξT̃)ξ') = 1, T̃ = T − t·I.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..core.algebra import HermitianMatrix, anticommutator, as_array, derivatives_unitary, eigh, hs_inner
from ..core.errors import DimensionMismatchError, InvalidInputError, RankDeficientError
from ..core.ensembles import random_hermitian
from .curve import nonzero_velocity

logger = logging.getLogger("DensityGeom.Estimation")

UNBIASED_TOL = 1e-9
LYAPUNOV_FLOOR = 1e-10


@dataclass(frozen=True)
class EstimatorT:
    """
    Оценка времени: эрмитова матрица T и опорное время t.
    """

    matrix: HermitianMatrix
    reference_time: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.dim

    def shifted(self) -> np.ndarray:
        """T̃ = T − t·I."""
        return self.matrix.data - self.reference_time * np.eye(self.dim)

    def unbiasedness(self, xi, h) -> float:
        """tr((T̃ξ + ξT̃)ξ') для кривой, порождённой H, в точке ξ."""
        x = as_array(xi)
        if x.shape[0] != self.dim:
            raise DimensionMismatchError(f"Dimension mismatch: {self.dim} vs {x.shape[0]}")
        d1 = derivatives_unitary(x, h, 1)
        return hs_inner(anticommutator(self.shifted(), x), d1)

    def is_locally_unbiased(self, xi, h, tol: float = UNBIASED_TOL) -> bool:
        return abs(self.unbiasedness(xi, h) - 1.0) <= tol


def make_locally_unbiased(xi, h, reference_time: float = 0.0) -> EstimatorT:
    """
    Оценка, насыщающая неравенство Шварца: решение уравнения Ляпунова
    T̃ξ + ξT̃ = c·ξ', c = 1/tr(ξ'ξ').

    В собственном базисе ξ (собственные значения λ): T̃_jk = c·ξ'_jk/(λ_j + λ_k).
    Пары с |λ_j + λ_k| ≤ 1e-10 допустимы только при ξ'_jk = 0 (блок ядра
    чистого состояния), там T̃_jk = 0.

    Args:
        xi: Квадратный корень ξ (эрмитов, tr ξ² = 1).
        h: Гамильтониан.
        reference_time (float): Опорное время t оценки.

    Returns:
        EstimatorT: Оценка с tr((T̃ξ + ξT̃)ξ') = 1.

    Raises:
        ZeroVelocityError: [H, ξ] = 0, оценки не существует.
        RankDeficientError: λ_j + λ_k ≈ 0 при ξ'_jk ≠ 0.
    """
    d1, v = nonzero_velocity(xi, h)
    c = 1.0 / v
    lam, vecs = eigh(xi)
    dprime = vecs.conj().T @ d1.data @ vecs
    denom = lam[:, None] + lam[None, :]

    singular = np.abs(denom) <= LYAPUNOV_FLOOR
    blocked = singular & (np.abs(dprime) > LYAPUNOV_FLOOR)
    if np.any(blocked):
        j, k = np.argwhere(blocked)[0]
        raise RankDeficientError(
            f"Lyapunov equation is singular: lambda_{j} + lambda_{k} = {denom[j, k]:.3e} "
            f"with nonzero velocity component"
        )

    t_eig = np.where(singular, 0.0, c * dprime / np.where(singular, 1.0, denom))
    t_tilde = vecs @ t_eig @ vecs.conj().T
    est = EstimatorT(HermitianMatrix(t_tilde + reference_time * np.eye(t_tilde.shape[0])), float(reference_time))

    residual = est.unbiasedness(xi, h) - 1.0
    if abs(residual) > UNBIASED_TOL:
        raise RankDeficientError(f"Saturating estimator misses local unbiasedness by {residual:.3e}")
    logger.debug(f"Saturating estimator: dim={est.dim}, pseudo-inverse pairs={int(np.sum(singular))}")
    return est


def perturb_estimator(
    xi,
    h,
    estimator: EstimatorT,
    rng: np.random.Generator,
    scale: float = 1.0,
) -> EstimatorT:
    """
    Добавляет к T случайную эрмитову P, спроецированную на ядро условия
    несмещённости: hs_inner(P, ξξ' + ξ'ξ) = 0. Результат остаётся локально
    несмещённым.
    """
    if not scale > 0:
        raise InvalidInputError(f"Perturbation scale must be positive (got {scale})")
    x = as_array(xi)
    g = anticommutator(x, derivatives_unitary(x, h, 1))
    gg = hs_inner(g, g)
    p = random_hermitian(estimator.dim, rng).data * scale
    if gg > 0:
        p = p - (hs_inner(p, g) / gg) * g.data
    return EstimatorT(HermitianMatrix(estimator.matrix.data + p), estimator.reference_time)


def shift_estimator(estimator: EstimatorT, p, weight: float = 1.0) -> EstimatorT:
    """T -> T + w·P при том же опорном времени."""
    return EstimatorT(HermitianMatrix(estimator.matrix.data + weight * as_array(p)), estimator.reference_time)


def time_estimate(xi, t) -> float:
    """t(ξ) = tr(ξTξ)/tr(ξξ) для произвольной ненулевой эрмитовой ξ."""
    x, tm = as_array(xi), as_array(t)
    if x.shape != tm.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {x.shape[0]} vs {tm.shape[0]}")
    return float(np.real(np.trace(x @ tm @ x)) / np.real(np.vdot(x, x)))


def gradient_t(xi, t) -> HermitianMatrix:
    """
    Градиент t(ξ) по Гильберту-Шмидту в точке tr(ξξ) = 1:
    ∇t = Tξ + ξT − 2 tr(ξTξ)·ξ = T̃ξ + ξT̃, где T̃ центрирована по среднему.
    """
    x, tm = as_array(xi), as_array(t)
    if x.shape != tm.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {x.shape[0]} vs {tm.shape[0]}")
    mean = float(np.real(np.trace(x @ tm @ x)))
    return HermitianMatrix(tm @ x + x @ tm - 2.0 * mean * x)
