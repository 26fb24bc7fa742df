"""
Поправки высших порядков к неравенству Крамера-Рао (типа Бхаттачарьи).

Оценка времени задаёт скалярное поле t(ξ) = tr(ξTξ)/tr(ξξ) на пространстве
эрмитовых матриц. Его градиент на сфере tr(ξξ) = 1 имеет квадрат нормы
2(ΔT² + δT²), а проекции на ортонормированные направления e_k (ξ', ξ'', ξ''')
дают неравенство Бесселя 2(ΔT² + δT²) ≥ Σ_k (∇t, e_k)².

Член k = 1 равен 1/tr(ξ'ξ') для любой несмещённой оценки. Чётные члены
зависят от T и в оценку, не зависящую от T, не включаются. Зависимость
нечётного члена k = 3 от T измеряется эмпирически.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.algebra import HermitianMatrix, as_array, hermitian_basis, hs_inner
from ..core.errors import TheoremViolationError
from .bounds import SLACK, BoundReport, bound_report, slack_for
from .curve import DirectionSet, bhattacharyya_directions
from .estimator import EstimatorT, gradient_t, perturb_estimator, time_estimate
from .skew import MOMENT_ORDERS, SkewMoments, skew_moment_decomposition

logger = logging.getLogger("DensityGeom.Estimation")
audit = logging.getLogger("DensityGeomAudit")

IDENTITY_TOL = 1e-10
FD_GRADIENT_STEP = 1e-6


@dataclass
class HigherOrderReport:
    """
    Расширенный отчёт: базовые величины плюс проекционные члены по порядкам.

    ``terms[i]``: (∇t, e_k)² для порядка ``orders[i]``; ``cumulative[i]``:
    сумма членов до i-го включительно.
    """

    base: BoundReport
    gradient_norm_sq: float
    orders: List[int]
    terms: List[float]
    cumulative: List[float]
    dropped: List[int] = field(default_factory=list)
    beta_overlap: Optional[float] = None
    skew_moments: List[SkewMoments] = field(default_factory=list)
    odd_term_spread: Optional[float] = None

    def term(self, order: int) -> float:
        for o, value in zip(self.orders, self.terms):
            if o == order:
                return value
        return 0.0

    def bound(self, order: int) -> float:
        """Σ членов порядков ≤ order: нижняя граница для 2(ΔT² + δT²)."""
        return float(sum(v for o, v in zip(self.orders, self.terms) if o <= order))

    @property
    def odd_bound(self) -> float:
        return self.term(1) + self.term(3)

    def to_dict(self) -> Dict[str, Any]:
        data = self.base.to_dict()
        data.update({
            "gradient_norm_sq": self.gradient_norm_sq,
            "projection_orders": list(self.orders),
            "projection_terms": list(self.terms),
            "projection_cumulative": list(self.cumulative),
            "dropped_orders": list(self.dropped),
            "beta_overlap": self.beta_overlap,
            "odd_bound": self.odd_bound,
            "odd_term_spread": self.odd_term_spread,
            "skew_moments": [m.to_dict() for m in self.skew_moments],
        })
        return data


def _fail(message: str, dump: Dict[str, Any]) -> None:
    audit.critical(message, extra=dump)
    raise TheoremViolationError(message, dump=dump)


def projection_terms(xi, estimator: EstimatorT, directions: DirectionSet) -> List[float]:
    grad = gradient_t(xi, estimator.matrix)
    return [hs_inner(grad, e) ** 2 for e in directions.directions]


def odd_term_spread(
    xi,
    h,
    estimator: EstimatorT,
    rng: np.random.Generator,
    n_trials: int = 8,
    scale: float = 1.0,
) -> float:
    """
    Наибольшее изменение члена k = 3 при случайных возмущениях T,
    сохраняющих локальную несмещённость.
    """
    directions = bhattacharyya_directions(xi, h, 3)
    e3 = directions.direction(3)
    if e3 is None:
        return 0.0
    ref = hs_inner(gradient_t(xi, estimator.matrix), e3) ** 2
    spread = 0.0
    for _ in range(n_trials):
        moved = perturb_estimator(xi, h, estimator, rng, scale)
        spread = max(spread, abs(hs_inner(gradient_t(xi, moved.matrix), e3) ** 2 - ref))
    logger.debug(f"Third-order term spread over {n_trials} unbiased estimators: {spread:.3e}")
    return spread


def higher_order_bound(
    xi,
    h,
    estimator: EstimatorT,
    max_order: int = 3,
    rng: Optional[np.random.Generator] = None,
    n_trials: int = 8,
    slack: float = SLACK,
) -> HigherOrderReport:
    """
    Проекционная граница до порядка max_order с проверкой тождеств.

    Args:
        xi: Квадратный корень ξ.
        h: Гамильтониан кривой.
        estimator (EstimatorT): Локально несмещённая оценка.
        max_order (int): 1, 2 или 3.
        rng (Optional[np.random.Generator]): Если задан, измеряется зависимость
                                             члена k = 3 от T.
        n_trials (int): Число возмущённых оценок для этого измерения.

    Returns:
        HigherOrderReport: Члены, накопленные суммы, диагностика.

    Raises:
        TheoremViolationError: Нарушено тождество для градиента, член k = 1
                               не равен 1/tr(ξ'ξ') или нарушено неравенство Бесселя.
    """
    base = bound_report(xi, h, estimator, slack)
    x = as_array(xi)
    grad = gradient_t(x, estimator.matrix)
    grad_sq = hs_inner(grad, grad)
    two_var = 2.0 * base.crb_lhs
    dump = {"gradient_norm_sq": grad_sq, "two_var": two_var, "velocity_sq": base.velocity_sq}

    if abs(grad_sq - two_var) > IDENTITY_TOL * max(1.0, two_var):
        _fail("Gradient identity |grad t|^2 = 2(dT2 + deltaT2) violated", dump)

    directions = bhattacharyya_directions(x, h, max_order)
    terms = projection_terms(x, estimator, directions)
    cumulative = [float(c) for c in np.cumsum(terms)]

    first = terms[0]
    if abs(first - 1.0 / base.velocity_sq) > IDENTITY_TOL * max(1.0, 1.0 / base.velocity_sq):
        _fail("First projection term differs from 1/tr(xi'xi')", {**dump, "first_term": first})
    if any(b < a - slack_for(a, slack) for a, b in zip(cumulative, cumulative[1:])):
        _fail("Projection bound is not monotone in order", {**dump, "cumulative": cumulative})
    if cumulative[-1] > grad_sq + slack_for(grad_sq, slack):
        _fail("Bessel inequality violated", {**dump, "cumulative": cumulative})

    report = HigherOrderReport(
        base=base,
        gradient_norm_sq=grad_sq,
        orders=list(directions.orders),
        terms=[float(t) for t in terms],
        cumulative=cumulative,
        dropped=list(directions.dropped),
        beta_overlap=directions.beta_overlap(),
        skew_moments=[skew_moment_decomposition(x, h, k) for k in MOMENT_ORDERS],
    )
    if rng is not None and 3 in directions.orders:
        report.odd_term_spread = odd_term_spread(x, h, estimator, rng, n_trials)

    logger.debug(f"Higher-order bound: orders={report.orders}, cumulative={cumulative}, |grad|^2={grad_sq:.6g}")
    return report


def time_estimate_gradient_fd(xi, t, step: float = FD_GRADIENT_STEP) -> HermitianMatrix:
    """
    Градиент t(ξ) центральными разностями по ортонормированному базису
    эрмитовых матриц: ∇t = Σ_i [t(ξ + hB_i) − t(ξ − hB_i)]/(2h) · B_i.
    """
    x = as_array(xi)
    grad = np.zeros_like(x)
    for b in hermitian_basis(x.shape[0]):
        g = (time_estimate(x + step * b.data, t) - time_estimate(x - step * b.data, t)) / (2 * step)
        grad = grad + g * b.data
    return HermitianMatrix(grad)
