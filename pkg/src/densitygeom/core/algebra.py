"""
Эрмитова матричная алгебра: типы состояний и базовые операции.

Все значения неизменяемы после создания (массивы помечены ``write=False``),
поэтому их безопасно разделять между потоками.
"""

import logging
from functools import cached_property
from typing import Any, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatchError,
    EigensolverError,
    InvalidInputError,
    InvalidOrderError,
    NotHermitianError,
    NotPositiveSemidefiniteError,
    TraceError,
)

logger = logging.getLogger("DensityGeom.Core")

HERMITIAN_TOL = 1e-12
PSD_CLAMP = 1e-10
TRACE_TOL = 1e-10
PURE_NORM_TOL = 1e-12

MatrixLike = Union["HermitianMatrix", np.ndarray, List[List[complex]]]


def as_array(a: Any) -> np.ndarray:
    """Комплексный 2D массив из HermitianMatrix или array-like (без копирования, если возможно)."""
    if isinstance(a, HermitianMatrix):
        return a.data
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"Expected a square matrix, got shape {arr.shape}")
    return arr


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def eigh(a: Any) -> Tuple[np.ndarray, np.ndarray]:
    """
    Спектральное разложение эрмитовой матрицы.

    Сбой сходимости LAPACK никогда не проглатывается молча.

    Raises:
        EigensolverError: Собственные значения не сошлись.
    """
    try:
        w, v = linalg.eigh(as_array(a))
    except (linalg.LinAlgError, ValueError) as e:
        logger.error(f"Eigensolver failed: {e}")
        raise EigensolverError(f"Eigensolver did not converge: {e}")
    return w, v


class HermitianMatrix:
    """
    Эрмитова матрица n×n: объемлющая алгебра для H, T и произвольных наблюдаемых.

    Конструктор симметризует вход, A <- (A + A†)/2. Вход, отклоняющийся от
    эрмитовости сильнее ``strict_tol`` (если он задан), отвергается.
    """

    def __init__(self, entries: Any, strict_tol: Optional[float] = None):
        a = np.array(as_array(entries), dtype=complex, copy=True)
        if strict_tol is not None:
            skew = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
            if skew > strict_tol:
                raise NotHermitianError(f"Matrix is not Hermitian (max |A - A†| = {skew:.3e})")
        a = (a + a.conj().T) / 2
        a.setflags(write=False)
        self._data = a

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data.copy() if copy else self._data
        return self._data.astype(dtype)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"

    # Линейные операции остаются в эрмитовой алгебре (вещественные скаляры)
    def __add__(self, other: MatrixLike) -> "HermitianMatrix":
        b = as_array(other)
        _check_dims(self._data, b)
        return HermitianMatrix(self._data + b)

    def __sub__(self, other: MatrixLike) -> "HermitianMatrix":
        b = as_array(other)
        _check_dims(self._data, b)
        return HermitianMatrix(self._data - b)

    def __mul__(self, scalar: float) -> "HermitianMatrix":
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise InvalidInputError("Only real scalars keep a matrix Hermitian")
        return HermitianMatrix(self._data * float(np.real(scalar)))

    __rmul__ = __mul__

    def __neg__(self) -> "HermitianMatrix":
        return HermitianMatrix(-self._data)

    def trace(self) -> float:
        return float(np.real(np.trace(self._data)))

    @cached_property
    def eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        return eigh(self._data)

    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem[0]

    def is_positive(self, tol: float = PSD_CLAMP) -> bool:
        return bool(self.eigenvalues()[0] >= -tol)


class DensityMatrix(HermitianMatrix):
    """
    Матрица плотности: эрмитова, PSD, след 1.

    Собственные значения в окне [-psd_clamp, 0) обрезаются до нуля (шум
    округления), более отрицательные отвергаются, а не чинятся.
    """

    def __init__(
        self,
        entries: Any,
        psd_clamp: float = PSD_CLAMP,
        trace_tol: float = TRACE_TOL,
        strict_tol: Optional[float] = None,
    ):
        super().__init__(entries, strict_tol)
        tr = np.real(np.trace(self._data))
        if abs(tr - 1.0) > trace_tol:
            raise TraceError(f"Density matrix trace must be 1 (got {tr:.12g})")

        w, v = eigh(self._data)
        if w[0] < -psd_clamp:
            raise NotPositiveSemidefiniteError(
                f"Density matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})"
            )
        if w[0] < 0:
            w = np.clip(w, 0.0, None)
            w = w / w.sum()
            a = (v * w) @ v.conj().T
            a = (a + a.conj().T) / 2
            a.setflags(write=False)
            self._data = a
            logger.debug(f"Clamped eigenvalues within {psd_clamp:g} to zero")
        self.__dict__["eigensystem"] = (w, v)

    def purity(self) -> float:
        return float(np.real(np.vdot(self._data, self._data)))

    def rank(self, tol: float = PSD_CLAMP) -> int:
        return int(np.sum(self.eigenvalues() > tol))


class SqrtState(HermitianMatrix):
    """
    Точка ξ на сфере квадратных корней: эрмитова, tr(ξ²) = 1.

    ξ не обязана быть положительной; ξ² всегда является матрицей плотности.
    """

    def __init__(self, entries: Any, trace_tol: float = TRACE_TOL):
        super().__init__(entries)
        norm = float(np.real(np.vdot(self._data, self._data)))
        if abs(norm - 1.0) > trace_tol:
            raise TraceError(f"Square-root state must satisfy tr(xi^2) = 1 (got {norm:.12g})")

    def density(self) -> DensityMatrix:
        return DensityMatrix(self._data @ self._data)


class PureState:
    """
    Нормированный вектор состояния |x⟩ с канонической фазой.

    Первая ненулевая амплитуда вещественна и положительна.
    """

    def __init__(self, amplitudes: Any, normalize: bool = False):
        x = np.array(amplitudes, dtype=complex, copy=True).reshape(-1)
        if x.size < 1:
            raise InvalidInputError("Pure state needs at least one amplitude")
        norm = np.linalg.norm(x)
        if normalize:
            if norm == 0:
                raise InvalidInputError("Cannot normalize the zero vector")
            x = x / norm
        elif abs(norm ** 2 - 1.0) > PURE_NORM_TOL:
            raise TraceError(f"Pure state must have unit norm (got <x|x> = {norm ** 2:.15g})")

        nonzero = np.flatnonzero(np.abs(x) > 1e-14)
        if nonzero.size:
            first = x[nonzero[0]]
            x = x * (abs(first) / first)
        x.setflags(write=False)
        self._amplitudes = x

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def dim(self) -> int:
        return self._amplitudes.size

    def expectation(self, a: MatrixLike) -> float:
        m = as_array(a)
        if m.shape[0] != self.dim:
            raise DimensionMismatchError(f"Dimension mismatch: {self.dim} vs {m.shape[0]}")
        return float(np.real(np.vdot(self._amplitudes, m @ self._amplitudes)))

    def projector(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self._amplitudes, self._amplitudes.conj()))

    def sqrt_state(self) -> SqrtState:
        # Проектор идемпотентен: ξ = ρ = |x⟩⟨x|
        return SqrtState(np.outer(self._amplitudes, self._amplitudes.conj()))

    def __repr__(self) -> str:
        return f"PureState(dim={self.dim})"


def hs_inner(a: MatrixLike, b: MatrixLike) -> float:
    """Скалярное произведение Гильберта-Шмидта tr(AB) для эрмитовых A, B."""
    x, y = as_array(a), as_array(b)
    _check_dims(x, y)
    # tr(AB) = Σ A_ij B_ji = Σ A_ij conj(B_ij) для эрмитовой B
    return float(np.real(np.vdot(y, x)))


def hs_norm(a: MatrixLike) -> float:
    return float(np.sqrt(max(hs_inner(a, a), 0.0)))


def principal_sqrt(rho: Union[DensityMatrix, MatrixLike]) -> SqrtState:
    """
    Единственный положительно полуопределённый квадратный корень ρ.

    Args:
        rho: Матрица плотности (array-like проходит валидацию DensityMatrix).

    Returns:
        SqrtState: ξ ⪰ 0 с ξ² = ρ.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    w, v = rho.eigensystem
    root = np.sqrt(np.clip(w, 0.0, None))
    xi = SqrtState((v * root) @ v.conj().T)
    logger.debug(f"Principal sqrt: dim={rho.dim}, residual={hs_norm(xi.data @ xi.data - rho.data):.2e}")
    return xi


def commutator(a: MatrixLike, b: MatrixLike) -> HermitianMatrix:
    """Возвращает i[A, B] = i(AB − BA), которая эрмитова для эрмитовых A, B."""
    x, y = as_array(a), as_array(b)
    _check_dims(x, y)
    return HermitianMatrix(1j * (x @ y - y @ x))


def anticommutator(a: MatrixLike, b: MatrixLike) -> HermitianMatrix:
    """AB + BA."""
    x, y = as_array(a), as_array(b)
    _check_dims(x, y)
    return HermitianMatrix(x @ y + y @ x)


def evolution_operator(h: MatrixLike, t: float) -> np.ndarray:
    """exp(−iHt) через спектральное разложение H."""
    w, v = eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def unitary_evolve(xi0: SqrtState, h: MatrixLike, t: float) -> SqrtState:
    """
    Эволюция Гейзенберга ξ_t = exp(−iHt) ξ_0 exp(iHt).

    Спектр и tr(ξ²) сохраняются.
    """
    x = as_array(xi0)
    hm = as_array(h)
    _check_dims(x, hm)
    if t == 0:
        return xi0 if isinstance(xi0, SqrtState) else SqrtState(x)
    u = evolution_operator(hm, t)
    return SqrtState(u @ x @ u.conj().T)


def derivatives_unitary(xi: MatrixLike, h: MatrixLike, order: int) -> HermitianMatrix:
    """
    Производная порядка ``order`` кривой ξ_t = exp(−iHt) ξ exp(iHt) в t = 0.

    ξ' = −i[H, ξ], ξ'' = −[H, [H, ξ]], ξ''' = i[H, [H, [H, ξ]]].

    Raises:
        InvalidOrderError: order вне {1, 2, 3}.
    """
    if order not in (1, 2, 3):
        raise InvalidOrderError(f"Derivative order must be 1, 2 or 3 (got {order})")
    d = as_array(xi)
    hm = as_array(h)
    _check_dims(d, hm)
    for _ in range(order):
        # d <- −i[H, d]
        d = -1j * (hm @ d - d @ hm)
    return HermitianMatrix(d)


def hermitian_basis(dim: int) -> List[HermitianMatrix]:
    """
    Ортонормированный (по Гильберту-Шмидту) базис вещественного пространства
    эрмитовых матриц dim×dim: обобщённые матрицы Гелл-Манна плюс I/√dim.
    """
    if dim < 1:
        raise InvalidInputError(f"Dimension must be positive, got {dim}")
    basis = [HermitianMatrix(np.eye(dim) / np.sqrt(dim))]
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            asym = np.zeros((dim, dim), dtype=complex)
            asym[j, k] = -1j / np.sqrt(2)
            asym[k, j] = 1j / np.sqrt(2)
            basis.append(HermitianMatrix(sym))
            basis.append(HermitianMatrix(asym))
    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(HermitianMatrix(np.diag(diag) / np.sqrt(l * (l + 1))))
    return basis


def is_traceless(a: MatrixLike, tol: float = TRACE_TOL) -> bool:
    return abs(np.trace(as_array(a))) <= tol
