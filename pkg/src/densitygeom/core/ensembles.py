"""
Случайные ансамбли для тестов и Монте-Карло.

Каждая функция принимает явный ``np.random.Generator``; глобальный ГПСЧ numpy
не используется. Один поток выборок на воркер, потоки никогда не разделяются.
"""

import logging
from typing import Optional, Union

import numpy as np

from .algebra import DensityMatrix, HermitianMatrix, PureState
from .errors import InvalidInputError

logger = logging.getLogger("DensityGeom.Core")

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Generator из зерна, SeedSequence или готового Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_dim(dim: int) -> None:
    if dim < 2:
        raise InvalidInputError(f"Random ensembles need dim >= 2 (got {dim})")


def ginibre(dim: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Стандартная комплексная гауссова матрица (E|G_ij|² = 1); с ``size`` возвращает пачку."""
    shape = (dim, dim) if size is None else (size, dim, dim)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(dim: int, rng: np.random.Generator) -> HermitianMatrix:
    """(G + G†)/2 для комплексной гауссовой G."""
    _check_dim(dim)
    return HermitianMatrix(ginibre(dim, rng))


def random_traceless_hermitian(dim: int, rng: np.random.Generator) -> HermitianMatrix:
    h = random_hermitian(dim, rng).data
    return HermitianMatrix(h - np.trace(h).real / dim * np.eye(dim))


def random_density_hs(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """GG†/tr(GG†): мера Гильберта-Шмидта на матрицах плотности."""
    _check_dim(dim)
    g = ginibre(dim, rng)
    w = g @ g.conj().T
    return DensityMatrix(w / np.trace(w).real)


def random_pure(dim: int, rng: np.random.Generator) -> PureState:
    """Нормированный комплексный гауссов вектор: мера Хаара / Фубини-Штуди."""
    _check_dim(dim)
    z = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / np.sqrt(2)
    return PureState(z, normalize=True)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Унитарная матрица Хаара: QR от Гинибра с исправлением фаз диагонали R."""
    _check_dim(dim)
    q, r = np.linalg.qr(ginibre(dim, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def pure_batch(dim: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Пачка (size, dim) векторов Хаара без канонизации фазы (для Монте-Карло)."""
    z = (rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))) / np.sqrt(2)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def density_batch_hs(dim: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Пачка (size, dim, dim) матриц плотности меры Гильберта-Шмидта."""
    g = ginibre(dim, rng, size=size)
    w = g @ np.conj(np.swapaxes(g, 1, 2))
    tr = np.real(np.trace(w, axis1=1, axis2=2))
    return w / tr[:, None, None]
