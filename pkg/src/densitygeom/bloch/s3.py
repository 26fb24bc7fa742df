"""
Замкнутая 2×2 геометрия: параметризация (t, x, y, z), сфера следа S³
радиуса 1/√2 и все эрмитовы квадратные корни матрицы плотности кубита.

ξ = [[t+z, x−iy], [x+iy, t−z]],  tr(ξ²) = 2(t²+x²+y²+z²) = 1.
ξ² = [[1/2 + a, b − ic], [b + ic, 1/2 − a]],  (a, b, c) = (2tz, 2tx, 2ty).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.algebra import HermitianMatrix, SqrtState, as_array
from ..core.errors import InvalidDensityError, InvalidInputError

logger = logging.getLogger("DensityGeom.Bloch")

S3_TOL = 1e-12
CLASSIFY_EPS = 1e-9
SQRT_HALF = 1 / np.sqrt(2)


class CaseTag(str, Enum):
    FULLY_MIXED = "fully_mixed"
    PURE = "pure"
    GENERIC = "generic"


@dataclass(frozen=True)
class S3Point:
    """Точка (t, x, y, z) на сфере t² + x² + y² + z² = 1/2."""

    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = self.t ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2
        if abs(norm - 0.5) > S3_TOL:
            raise InvalidInputError(f"S3 point violates the trace condition t^2+x^2+y^2+z^2 = 1/2 (got {norm:.15g})")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.t, self.x, self.y, self.z)

    def __neg__(self) -> "S3Point":
        return S3Point(-self.t, -self.x, -self.y, -self.z)

    def distance(self, other: "S3Point") -> float:
        return float(np.linalg.norm(np.subtract(self.as_tuple(), other.as_tuple())))

    def xi_eigenvalues(self) -> Tuple[float, float]:
        r = float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))
        return (self.t - r, self.t + r)

    def is_positive(self, tol: float = 1e-12) -> bool:
        return self.xi_eigenvalues()[0] >= -tol


@dataclass(frozen=True)
class QubitDensityParams:
    """Параметры (a, b, c) матрицы [[1/2+a, b−ic], [b+ic, 1/2−a]]; 0 ≤ R² ≤ 1/4."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.radius_sq > 0.25 + S3_TOL:
            raise InvalidDensityError(
                f"Invalid density: R = {np.sqrt(self.radius_sq):.12g} exceeds the Bloch radius 1/2"
            )

    @property
    def radius_sq(self) -> float:
        return self.a ** 2 + self.b ** 2 + self.c ** 2

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.radius_sq))

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.a, self.b, self.c)

    def matrix(self) -> np.ndarray:
        return np.array(
            [[0.5 + self.a, self.b - 1j * self.c], [self.b + 1j * self.c, 0.5 - self.a]],
            dtype=complex,
        )

    @classmethod
    def from_matrix(cls, rho: Any) -> "QubitDensityParams":
        m = as_array(rho)
        if m.shape != (2, 2):
            raise InvalidInputError(f"Qubit parameters need a 2x2 matrix, got {m.shape}")
        return cls(
            a=float(np.real(m[0, 0] - m[1, 1]) / 2),
            b=float(np.real(m[1, 0] + m[0, 1]) / 2),
            c=float(np.imag(m[1, 0] - m[0, 1]) / 2),
        )


@dataclass(frozen=True)
class ContinuumDescriptor:
    """Символьное описание двумерной сферы t = 0, x² + y² + z² = 1/2."""

    t: float = 0.0
    radius_sq: float = 0.5

    def contains(self, p: S3Point, tol: float = 1e-9) -> bool:
        return abs(p.t) <= tol

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "equation": "x^2 + y^2 + z^2 = 1/2", "radius_sq": self.radius_sq}


@dataclass(frozen=True)
class PreimageSet:
    """
    Все эрмитовы квадратные корни одной матрицы плотности кубита.

    Attributes:
        case_tag: Класс вырождения.
        isolated_points: Изолированные прообразы (замкнуты относительно p -> −p).
        continuum: Сфера t = 0 для полностью смешанного случая, иначе None.
        params: Матрица, которую представляют точки (для граничных случаев
                спроецированная на границу полосы ε).
    """

    case_tag: CaseTag
    isolated_points: Tuple[S3Point, ...]
    continuum: Optional[ContinuumDescriptor]
    params: QubitDensityParams

    def principal(self) -> S3Point:
        """PSD-корень: прообраз с наибольшим t."""
        return max(self.isolated_points, key=lambda p: p.t)

    def residuals(self) -> List[float]:
        target = np.array(self.params.as_tuple())
        return [float(np.max(np.abs(np.array(rho_from_s3(p).as_tuple()) - target))) for p in self.isolated_points]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case": self.case_tag.value,
            "params": dict(zip(("a", "b", "c"), self.params.as_tuple())),
            "R": self.params.radius,
            "isolated_points": [dict(zip(("t", "x", "y", "z"), p.as_tuple())) for p in self.isolated_points],
            "continuum": self.continuum.to_dict() if self.continuum else None,
            "residuals": self.residuals(),
        }


def bloch_matrix(t: float, x: float, y: float, z: float) -> HermitianMatrix:
    """[[t+z, x−iy], [x+iy, t−z]] без проверки условия следа (нужно и для производных)."""
    return HermitianMatrix(np.array([[t + z, x - 1j * y], [x + 1j * y, t - z]], dtype=complex))


def xi_from_s3(p: S3Point) -> SqrtState:
    return SqrtState(bloch_matrix(*p.as_tuple()).data)


def rho_from_s3(p: S3Point) -> QubitDensityParams:
    return QubitDensityParams(a=2 * p.t * p.z, b=2 * p.t * p.x, c=2 * p.t * p.y)


def classify(q: QubitDensityParams, eps: float = CLASSIFY_EPS) -> CaseTag:
    """Три случая: R < ε: полностью смешанное, |R − 1/2| < ε: чистое, иначе общее."""
    r = q.radius
    if r < eps:
        return CaseTag.FULLY_MIXED
    if abs(r - 0.5) < eps:
        return CaseTag.PURE
    return CaseTag.GENERIC


def _points_for_t(t: float, q: QubitDensityParams) -> List[S3Point]:
    # 2tx = b, 2ty = c, 2tz = a
    p = S3Point(t, q.b / (2 * t), q.c / (2 * t), q.a / (2 * t))
    return [p, -p]


def quartic_roots(radius_sq: float) -> Tuple[float, float]:
    """
    Положительные корни 4t⁴ − 2t² + R² = 0: t² = (1 ± √(1 − 4R²))/4.

    Малый корень берётся из произведения корней t₁²t₂² = R²/4, чтобы не терять
    точность при R -> 0.
    """
    disc = np.sqrt(max(1.0 - 4.0 * radius_sq, 0.0))
    big_sq = (1.0 + disc) / 4.0
    small_sq = radius_sq / (4.0 * big_sq)
    return float(np.sqrt(big_sq)), float(np.sqrt(small_sq))


def sqrt_preimages(q: QubitDensityParams, eps: float = CLASSIFY_EPS) -> PreimageSet:
    """
    Перечисляет все прообразы ρ(a, b, c) на S³.

    Случаи:
        fully_mixed: t = ±1/√2 и двойной корень t = 0 (сфера-континуум);
        pure: t = ±1/2, точки ±(1/2, b, c, a);
        generic: четыре точки, две антиподальные пары.

    Вблизи границ полос (ε) совпадающие корни сливаются, а параметры
    проецируются на границу, чтобы точки лежали на S³ в пределах 1e-12.

    Raises:
        InvalidDensityError: R > 1/2.
    """
    if q.radius > 0.5 + 1e-12:
        raise InvalidDensityError(f"Invalid density: R = {q.radius:.12g} > 1/2")

    tag = classify(q, eps)
    if tag is CaseTag.FULLY_MIXED:
        target = QubitDensityParams(0.0, 0.0, 0.0)
        points = [S3Point(SQRT_HALF, 0.0, 0.0, 0.0), S3Point(-SQRT_HALF, 0.0, 0.0, 0.0)]
        result = PreimageSet(tag, tuple(points), ContinuumDescriptor(), target)
    elif tag is CaseTag.PURE:
        scale = 0.5 / q.radius
        target = QubitDensityParams(q.a * scale, q.b * scale, q.c * scale)
        result = PreimageSet(tag, tuple(_points_for_t(0.5, target)), None, target)
    else:
        t_big, t_small = quartic_roots(q.radius_sq)
        points = _points_for_t(t_big, q) + _points_for_t(t_small, q)
        result = PreimageSet(tag, tuple(points), None, q)

    logger.debug(f"Preimages of (a,b,c)={q.as_tuple()}: case={tag.value}, isolated={len(result.isolated_points)}")
    return result
