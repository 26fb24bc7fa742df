"""
Отчёт о неравенствах типа Крамера-Рао для оценки времени унитарной кривой.

Все величины центрированы по фактическому среднему: T̃ = T − tr(Tξ²)·I,
H̃ = H − tr(Hξ²)·I. Сдвиг T на константу не меняет условие несмещённости,
поэтому отчёт не зависит от опорного времени.

Проверяемые неравенства (теоремы, нарушение = ошибка реализации):
    ΔT² + δT² ≥ 1/(2 tr ξ'ξ')                   (Крамер-Рао для смешанных состояний)
    ΔT² ≥ 1/(4 tr ξ'ξ')                         (форма через косую информацию)
    (ΔT² − δT²)(ΔH² + δH²) ≥ 1/4                (дуальное)
    ΔT²ΔH² ≥ 1/4 + δT²δH²                        (симметричное)
    ΔT² + δT² ≥ ½(член 1 + член 3)              (проекции градиента, нечётные порядки)
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.algebra import as_array, eigh, hs_inner
from ..core.codec import dump_matrix
from ..core.errors import DimensionMismatchError, InvalidInputError, TheoremViolationError
from .curve import acceleration_curvature, bhattacharyya_directions
from .estimator import UNBIASED_TOL, EstimatorT, gradient_t
from .skew import skew_information, velocity_sq

logger = logging.getLogger("DensityGeom.Estimation")
audit = logging.getLogger("DensityGeomAudit")

SLACK = 1e-9
PSD_TOL = 1e-12
DECOMPOSITION_TOL = 1e-6
SKEW_FLOOR = 1e-12


def slack_for(rhs: float, slack: float = SLACK) -> float:
    """Допуск в масштабе правой части: slack·max(1, |rhs|)."""
    return slack * max(1.0, abs(rhs))


@dataclass
class BoundReport:
    var_T: float
    delta_T2: float
    var_H: float
    delta_H2: float
    skew_I: float
    velocity_sq: float
    crb_rhs: float
    luo_rhs: float
    symmetric_lhs_rhs: Tuple[float, float]
    curvature_gamma2: float
    third_order_rhs: float
    crb_skew_rhs: Optional[float] = None
    # (ΔH² − I_ρ(H) − δH²)/max(1, ‖H‖²); None, если ξ не PSD
    decomposition_residual: Optional[float] = None
    dual_lhs: float = 0.0
    mean_T: float = 0.0
    unbiasedness: float = 1.0

    @property
    def crb_lhs(self) -> float:
        return self.var_T + self.delta_T2

    @property
    def uncertainty_product(self) -> float:
        return self.var_T * self.var_H

    def checks(self) -> List[Tuple[str, float, float]]:
        """Тройки (имя, левая часть, правая часть) для неравенств вида lhs ≥ rhs."""
        lhs_sym, rhs_sym = self.symmetric_lhs_rhs
        return [
            ("crb", self.crb_lhs, self.crb_rhs),
            ("luo", self.var_T, self.luo_rhs),
            ("dual", self.dual_lhs, 0.25),
            ("symmetric", lhs_sym, rhs_sym),
            ("third_order", self.crb_lhs, self.third_order_rhs),
            ("var_T_ge_delta_T2", self.var_T, self.delta_T2),
        ]

    def gap(self, name: str) -> float:
        for n, lhs, rhs in self.checks():
            if n == name:
                return lhs - rhs
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["symmetric_lhs_rhs"] = [float(v) for v in self.symmetric_lhs_rhs]
        return data


def _tr(a: np.ndarray) -> float:
    return float(np.real(np.trace(a)))


def second_moments(xi, a) -> Tuple[float, float, float]:
    """
    (среднее, ΔA², δA²) для наблюдаемой A в точке ξ:
    ΔA² = tr(Ã²ξ²), δA² = tr(ÃξÃξ), Ã = A − tr(Aξ²)·I.
    """
    x, am = as_array(xi), as_array(a)
    if x.shape != am.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {x.shape[0]} vs {am.shape[0]}")
    mean = _tr(am @ x @ x)
    at = am - mean * np.eye(am.shape[0])
    return mean, _tr(at @ at @ x @ x), _tr(at @ x @ at @ x)


def odd_projection_terms(xi, h, estimator: EstimatorT) -> Tuple[float, float]:
    """Квадраты проекций ∇t на e_1 и e_3 (0, если e_3 отброшено)."""
    grad = gradient_t(xi, estimator.matrix)
    directions = bhattacharyya_directions(xi, h, 3)
    t1 = hs_inner(grad, directions.direction(1)) ** 2
    e3 = directions.direction(3)
    t3 = hs_inner(grad, e3) ** 2 if e3 is not None else 0.0
    return t1, t3


def verify_report(report: BoundReport, xi_positive: bool, slack: float = SLACK) -> List[str]:
    """Имена нарушенных неравенств (пустой список, если все выполнены)."""
    violated = [name for name, lhs, rhs in report.checks() if lhs < rhs - slack_for(rhs, slack)]
    if xi_positive and report.delta_T2 < -slack:
        violated.append("delta_T2_nonnegative")
    # ΔH² = I_ρ(H) + δH² имеет смысл только для ξ = √ρ
    if xi_positive and report.decomposition_residual is not None:
        if abs(report.decomposition_residual) > DECOMPOSITION_TOL:
            violated.append("variance_decomposition")
    return violated


def bound_report(xi, h, estimator: EstimatorT, slack: float = SLACK) -> BoundReport:
    """
    Вычисляет все величины отчёта и проверяет неравенства.

    Args:
        xi: Квадратный корень ξ.
        h: Гамильтониан кривой.
        estimator (EstimatorT): Локально несмещённая оценка.
        slack (float): Относительный допуск проверок.

    Returns:
        BoundReport: Отчёт; все неравенства выполнены.

    Raises:
        InvalidInputError: Оценка не является локально несмещённой.
        TheoremViolationError: Нарушено неравенство (полный дамп в исключении и аудите).
    """
    x, hm = as_array(xi), as_array(h)
    unbiased = estimator.unbiasedness(x, hm)
    if abs(unbiased - 1.0) > UNBIASED_TOL:
        raise InvalidInputError(f"Estimator is not locally unbiased: tr((T~xi + xi T~)xi') = {unbiased:.12g}")

    v = velocity_sq(x, hm)
    mean_t, var_t, delta_t2 = second_moments(x, estimator.matrix)
    _, var_h, delta_h2 = second_moments(x, hm)
    # I_ρ(H) через главный корень ρ = ξ², независимо от знаков собственных значений ξ
    skew_i = skew_information(x @ x, hm)
    xi_positive = bool(eigh(x)[0][0] >= -PSD_TOL)
    # для вырожденного ξ главный корень ξ² точен лишь до O(√eps)·‖H‖²
    h_scale = max(1.0, float(np.real(np.vdot(hm, hm))))
    _, gamma2 = acceleration_curvature(x, hm)
    t1, t3 = odd_projection_terms(x, hm, estimator)

    report = BoundReport(
        var_T=var_t,
        delta_T2=delta_t2,
        var_H=var_h,
        delta_H2=delta_h2,
        skew_I=skew_i,
        velocity_sq=v,
        crb_rhs=1.0 / (2.0 * v),
        luo_rhs=1.0 / (4.0 * v),
        symmetric_lhs_rhs=(var_t * var_h, 0.25 + delta_t2 * delta_h2),
        curvature_gamma2=gamma2,
        third_order_rhs=0.5 * (t1 + t3),
        crb_skew_rhs=1.0 / (4.0 * skew_i) if skew_i > SKEW_FLOOR else None,
        decomposition_residual=(var_h - skew_i - delta_h2) / h_scale if xi_positive else None,
        dual_lhs=(var_t - delta_t2) * (var_h + delta_h2),
        mean_T=mean_t,
        unbiasedness=unbiased,
    )

    violated = verify_report(report, xi_positive, slack)
    if violated:
        dump = report.to_dict()
        dump.update({"violated": violated, "xi": dump_matrix(x), "h": dump_matrix(hm)})
        audit.critical("Theorem violation in bound report", extra=dump)
        raise TheoremViolationError(f"Inequalities violated: {', '.join(violated)}", dump=dump)

    logger.debug(
        f"Bound report: dT2+deltaT2={report.crb_lhs:.6g} >= {report.crb_rhs:.6g}, "
        f"dT2*dH2={report.uncertainty_product:.6g}"
    )
    return report
