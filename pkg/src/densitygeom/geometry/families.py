"""
Параметризованные семейства θ -> ξ(θ) с доступом к производным.

Семейство либо знает точные производные (замкнутая форма или коммутатор для
унитарных кривых), либо дифференцируется центральными разностями с шагом
h·max(1, |θ_a|).
"""

import logging
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..bloch.s3 import bloch_matrix
from ..core.algebra import (
    HermitianMatrix,
    SqrtState,
    as_array,
    derivatives_unitary,
    unitary_evolve,
)
from ..core.errors import InvalidInputError, StepUnderflowError

logger = logging.getLogger("DensityGeom.Geometry")

FD_STEP = 1e-5

Evaluator = Callable[[np.ndarray], SqrtState]
Derivative = Callable[[np.ndarray], List[HermitianMatrix]]


class DerivativeMode(str, Enum):
    EXACT = "exact"
    FINITE_DIFFERENCE = "finite-difference"


class ParamFamily:
    """
    Гладкое отображение вещественного вектора параметров в SqrtState.

    Args:
        param_dim (int): Число параметров.
        evaluator (Evaluator): θ -> ξ(θ).
        derivative (Optional[Derivative]): θ -> [∂_a ξ]; если не задан, семейство
                                           работает в режиме конечных разностей.
        step (float): Относительный шаг конечных разностей.
        name (str): Имя для отчётов.
    """

    def __init__(
        self,
        param_dim: int,
        evaluator: Evaluator,
        derivative: Optional[Derivative] = None,
        step: float = FD_STEP,
        name: str = "custom",
    ):
        if param_dim < 1:
            raise InvalidInputError(f"Parameter dimension must be positive (got {param_dim})")
        if not step > 0:
            raise InvalidInputError(f"Finite-difference step must be positive (got {step})")
        self.param_dim = param_dim
        self._evaluator = evaluator
        self._derivative = derivative
        self.step = step
        self.name = name

    @property
    def mode(self) -> DerivativeMode:
        return DerivativeMode.EXACT if self._derivative is not None else DerivativeMode.FINITE_DIFFERENCE

    def _theta(self, theta: Sequence[float]) -> np.ndarray:
        th = np.asarray(theta, dtype=float).reshape(-1)
        if th.size != self.param_dim:
            raise InvalidInputError(f"Family '{self.name}' expects {self.param_dim} parameters, got {th.size}")
        return th

    def __call__(self, theta: Sequence[float]) -> SqrtState:
        return self._evaluator(self._theta(theta))

    def steps(self, theta: Sequence[float]) -> np.ndarray:
        """
        Шаги центральных разностей по каждому параметру.

        Raises:
            StepUnderflowError: θ_a ± h неотличимы в двойной точности.
        """
        th = self._theta(theta)
        h = self.step * np.maximum(1.0, np.abs(th))
        for a in range(self.param_dim):
            if th[a] + h[a] == th[a] - h[a] or h[a] < np.finfo(float).tiny:
                raise StepUnderflowError(f"Finite-difference step underflow at parameter {a} (theta={th[a]:.3e})")
        return h

    def finite_difference(self, theta: Sequence[float]) -> List[HermitianMatrix]:
        th = self._theta(theta)
        h = self.steps(th)
        out = []
        for a in range(self.param_dim):
            e = np.zeros(self.param_dim)
            e[a] = h[a]
            plus, minus = self._evaluator(th + e), self._evaluator(th - e)
            out.append(HermitianMatrix((plus.data - minus.data) / (2 * h[a])))
        return out

    def derivatives(self, theta: Sequence[float]) -> List[HermitianMatrix]:
        th = self._theta(theta)
        if self._derivative is not None:
            return list(self._derivative(th))
        return self.finite_difference(th)

    def without_exact_derivative(self, step: Optional[float] = None) -> "ParamFamily":
        """Та же кривая в режиме конечных разностей (для сверок)."""
        return ParamFamily(self.param_dim, self._evaluator, None, step or self.step, f"{self.name}[fd]")

    def __repr__(self) -> str:
        return f"ParamFamily(name={self.name!r}, param_dim={self.param_dim}, mode={self.mode.value})"


# --- Встроенные семейства ---

def constant_family(xi: SqrtState, param_dim: int = 1) -> ParamFamily:
    zero = HermitianMatrix(np.zeros_like(as_array(xi)))
    return ParamFamily(
        param_dim,
        lambda th: xi,
        lambda th: [zero] * param_dim,
        name="constant",
    )


def qubit_pure_family() -> ParamFamily:
    """
    Чистые состояния кубита (θ, φ): t = 1/2, (x, y, z) = ½(sinθ cosφ, sinθ sinφ, cosθ).
    """

    def evaluate(th: np.ndarray) -> SqrtState:
        theta, phi = th
        return SqrtState(bloch_matrix(
            0.5, 0.5 * np.sin(theta) * np.cos(phi), 0.5 * np.sin(theta) * np.sin(phi), 0.5 * np.cos(theta)
        ).data)

    def derivative(th: np.ndarray) -> List[HermitianMatrix]:
        theta, phi = th
        return [
            bloch_matrix(0.0, 0.5 * np.cos(theta) * np.cos(phi), 0.5 * np.cos(theta) * np.sin(phi), -0.5 * np.sin(theta)),
            bloch_matrix(0.0, -0.5 * np.sin(theta) * np.sin(phi), 0.5 * np.sin(theta) * np.cos(phi), 0.0),
        ]

    return ParamFamily(2, evaluate, derivative, name="qubit-pure")


def qubit_mixed_family() -> ParamFamily:
    """
    Смешанные состояния кубита (u, θ, φ): t = (1/2 − u²)^{1/2}, (x, y, z) = u·n(θ, φ).

    Область: 0 < u < 1/√2.
    """

    def _t(u: float) -> float:
        if not 0.0 <= u * u < 0.5:
            raise InvalidInputError(f"Mixed qubit family needs 0 <= u < 1/sqrt(2) (got u={u})")
        return float(np.sqrt(0.5 - u * u))

    def evaluate(th: np.ndarray) -> SqrtState:
        u, theta, phi = th
        return SqrtState(bloch_matrix(
            _t(u), u * np.sin(theta) * np.cos(phi), u * np.sin(theta) * np.sin(phi), u * np.cos(theta)
        ).data)

    def derivative(th: np.ndarray) -> List[HermitianMatrix]:
        u, theta, phi = th
        t = _t(u)
        return [
            bloch_matrix(-u / t, np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)),
            bloch_matrix(0.0, u * np.cos(theta) * np.cos(phi), u * np.cos(theta) * np.sin(phi), -u * np.sin(theta)),
            bloch_matrix(0.0, -u * np.sin(theta) * np.sin(phi), u * np.sin(theta) * np.cos(phi), 0.0),
        ]

    return ParamFamily(3, evaluate, derivative, name="qubit-mixed")


def unitary_curve_family(xi0: SqrtState, h) -> ParamFamily:
    """Кривая t -> exp(−iHt) ξ_0 exp(iHt); производная задана точным коммутатор −i[H, ξ_t]."""
    hm = HermitianMatrix(h)

    def evaluate(th: np.ndarray) -> SqrtState:
        return unitary_evolve(xi0, hm, float(th[0]))

    def derivative(th: np.ndarray) -> List[HermitianMatrix]:
        return [derivatives_unitary(evaluate(th), hm, 1)]

    return ParamFamily(1, evaluate, derivative, name="unitary-curve")


def reparameterize(
    family: ParamFamily,
    phi: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    param_dim: Optional[int] = None,
) -> ParamFamily:
    """
    Семейство θ' -> ξ(φ(θ')); точные производные по цепному правилу
    ∂'_b ξ = Σ_a J_ab ∂_a ξ, где J = ∂φ/∂θ'.
    """
    new_dim = param_dim or family.param_dim

    def evaluate(th: np.ndarray) -> SqrtState:
        return family(phi(th))

    derivative = None
    if family.mode is DerivativeMode.EXACT:
        def derivative(th: np.ndarray) -> List[HermitianMatrix]:
            base = family.derivatives(phi(th))
            jac = np.atleast_2d(np.asarray(jacobian(th), dtype=float))
            return [
                HermitianMatrix(sum(jac[a, b] * base[a].data for a in range(family.param_dim)))
                for b in range(new_dim)
            ]

    return ParamFamily(new_dim, evaluate, derivative, family.step, f"{family.name}[reparam]")


def conjugate(family: ParamFamily, u: np.ndarray) -> ParamFamily:
    """Семейство U ξ(θ) U†."""
    u = np.asarray(u, dtype=complex)
    ud = u.conj().T

    def evaluate(th: np.ndarray) -> SqrtState:
        return SqrtState(u @ family(th).data @ ud)

    derivative = None
    if family.mode is DerivativeMode.EXACT:
        def derivative(th: np.ndarray) -> List[HermitianMatrix]:
            return [HermitianMatrix(u @ d.data @ ud) for d in family.derivatives(th)]

    return ParamFamily(family.param_dim, evaluate, derivative, family.step, f"{family.name}[conj]")


BUILTIN_FAMILIES = ("qubit-pure", "qubit-mixed", "unitary-curve", "constant")
