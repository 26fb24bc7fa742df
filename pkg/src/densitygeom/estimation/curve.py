"""
Кинематика унитарной кривой ξ_t = exp(−iHt) ξ exp(iHt) на сфере tr(ξ²) = 1:
ускорение, кривизна и ортонормированные направления высших производных.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core.algebra import HermitianMatrix, as_array, derivatives_unitary, hs_inner, hs_norm
from ..core.errors import DimensionMismatchError, InvalidOrderError, ZeroVelocityError

logger = logging.getLogger("DensityGeom.Estimation")

VELOCITY_FLOOR = 1e-12
DROP_NORM = 1e-12
MAX_ORDER = 3


def nonzero_velocity(xi, h) -> Tuple[HermitianMatrix, float]:
    x, hm = as_array(xi), as_array(h)
    if x.shape != hm.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {x.shape[0]} vs {hm.shape[0]}")
    d1 = derivatives_unitary(x, hm, 1)
    v = hs_inner(d1, d1)
    if v <= VELOCITY_FLOOR:
        raise ZeroVelocityError(f"Curve has zero velocity (tr(xi'xi') = {v:.3e}): H commutes with xi")
    return d1, v


def acceleration_curvature(xi, h) -> Tuple[HermitianMatrix, float]:
    """
    Ускорение α = ξ'' − tr(ξ''ξ)ξ и кривизна γ² = 16 tr(αα)/tr(ξ'ξ').

    Returns:
        Tuple[HermitianMatrix, float]: (α, γ²).

    Raises:
        ZeroVelocityError: [H, ξ] = 0.
    """
    _, v = nonzero_velocity(xi, h)
    x = as_array(xi)
    d2 = derivatives_unitary(x, h, 2)
    alpha = HermitianMatrix(d2.data - hs_inner(d2, x) * x)
    gamma2 = 16.0 * hs_inner(alpha, alpha) / v
    logger.debug(f"Curvature: gamma2={gamma2:.6g}, tr(alpha xi)={hs_inner(alpha, x):.2e}")
    return alpha, max(gamma2, 0.0)


@dataclass
class DirectionSet:
    """
    Ортонормированные направления e_k, построенные из ξ', ξ'', ξ''' процедурой
    Грама-Шмидта (с ξ в начале базиса, сам ξ в набор не входит).

    ``orders[i]``: порядок производной, давшей ``directions[i]``.
    ``beta``: ξ''' − (tr(ξ'''ξ')/tr(ξ'ξ'))ξ' без ортогонализации к ξ''.
    """

    directions: List[HermitianMatrix]
    orders: List[int]
    dropped: List[int] = field(default_factory=list)
    raw_norms: List[float] = field(default_factory=list)
    beta: Optional[HermitianMatrix] = None

    def direction(self, order: int) -> Optional[HermitianMatrix]:
        for o, e in zip(self.orders, self.directions):
            if o == order:
                return e
        return None

    def beta_overlap(self) -> Optional[float]:
        """Косинус угла между β и e_3 (None, если e_3 отброшено или β = 0)."""
        e3 = self.direction(3)
        if e3 is None or self.beta is None:
            return None
        nb = hs_norm(self.beta)
        if nb <= DROP_NORM:
            return None
        return hs_inner(self.beta, e3) / nb

    def max_overlap(self) -> float:
        k = len(self.directions)
        worst = 0.0
        for a in range(k):
            for b in range(a + 1, k):
                worst = max(worst, abs(hs_inner(self.directions[a], self.directions[b])))
        return worst


def _orthogonalize(v: np.ndarray, basis: List[np.ndarray]) -> np.ndarray:
    # Два прохода модифицированного Грама-Шмидта
    for _ in range(2):
        for e in basis:
            v = v - np.real(np.vdot(e, v)) * e
    return v


def bhattacharyya_directions(xi, h, max_order: int = MAX_ORDER) -> DirectionSet:
    """
    Направления {ξ', ортогонализованные ξ'', ξ'''} до порядка max_order.

    Производная, чья норма после ортогонализации меньше 1e-12·max(1, ‖d‖),
    линейно зависима от предыдущих и отбрасывается с сообщением в лог.

    Raises:
        InvalidOrderError: max_order вне {1, 2, 3}.
        ZeroVelocityError: [H, ξ] = 0.
    """
    if max_order not in (1, 2, 3):
        raise InvalidOrderError(f"Direction order must be 1, 2 or 3 (got {max_order})")
    d1, v = nonzero_velocity(xi, h)
    x = as_array(xi)

    basis = [x / hs_norm(x)]
    result = DirectionSet(directions=[], orders=[])
    derivs = {1: d1}
    for k in range(1, max_order + 1):
        if k not in derivs:
            derivs[k] = derivatives_unitary(x, h, k)
        d = derivs[k]
        raw = hs_norm(d)
        u = _orthogonalize(d.data, basis)
        norm = float(np.sqrt(np.real(np.vdot(u, u))))
        result.raw_norms.append(raw)
        if norm < DROP_NORM * max(1.0, raw):
            logger.info(f"Direction of order {k} is linearly dependent on lower orders; dropped")
            result.dropped.append(k)
            continue
        e = u / norm
        basis.append(e)
        result.directions.append(HermitianMatrix(e))
        result.orders.append(k)

    if max_order >= 3:
        d3 = derivs[3]
        result.beta = HermitianMatrix(d3.data - (hs_inner(d3, d1) / v) * d1.data)
    return result
