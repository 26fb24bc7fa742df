"""
Монте-Карло на пространстве чистых состояний Γ и на пространстве матриц
плотности D: плотность p(x|ρ), дуальные формулы средних, метрика Фишера-Рао.

Схема батчей: выборка делится на ``n_batches`` батчей, у каждого батча своё
зерно, выведенное из переданного ГПСЧ. Поэтому результат при фиксированном
зерне не зависит от числа потоков. Ошибка считается по методу средних батчей.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from ..core.algebra import DensityMatrix, PureState, as_array, is_traceless
from ..core.ensembles import density_batch_hs, pure_batch
from ..core.errors import (
    DimensionMismatchError,
    InvalidInputError,
    MonteCarloRejectionError,
    NotTracelessError,
)
from .families import ParamFamily

logger = logging.getLogger("DensityGeom.Geometry")
audit = logging.getLogger("DensityGeomAudit")

N_BATCHES = 100
MIN_SAMPLES = 1000
REJECTION_THRESHOLD = 0.01
DEGENERATE_P = 1e-12

# kernel(size, rng) -> (сумма значений по батчу, число отброшенных выборок)
Kernel = Callable[[int, np.random.Generator], Tuple[np.ndarray, int]]


@dataclass
class BatchResult:
    """Итог батчевого Монте-Карло: среднее, ошибка по средним батчей, счётчики."""

    estimate: np.ndarray
    stderr: np.ndarray
    samples: int
    rejected: int = 0
    batch_means: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class MetricEstimate:
    """
    Компоненты метрики G_ab с ошибками Монте-Карло.

    Для аналитического режима ``stderr`` нулевая, ``sample_count`` = 0.
    """

    components: np.ndarray
    stderr: np.ndarray
    sample_count: int = 0
    rejected: int = 0
    trace_stderr: float = 0.0
    seed: Optional[int] = None
    wall_ms: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "components": self.components.tolist(),
            "stderr": self.stderr.tolist(),
            "samples": self.sample_count,
            "rejected": self.rejected,
            "seed": self.seed,
            "wall_ms": self.wall_ms,
        }


def batch_sizes(n_samples: int, n_batches: int) -> List[int]:
    base, extra = divmod(n_samples, n_batches)
    return [base + (1 if b < extra else 0) for b in range(n_batches)]


def run_batches(
    kernel: Kernel,
    n_samples: int,
    rng: np.random.Generator,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> BatchResult:
    """
    Выполняет ядро по батчам и сводит результаты детерминированно.

    Args:
        kernel (Kernel): Вычисляет сумму значений по ``size`` выборкам.
        n_samples (int): Общее число выборок.
        rng (np.random.Generator): Источник зёрен батчей.
        n_batches (int): Число батчей (≥ 2).
        n_jobs (int): Потоки joblib.

    Returns:
        BatchResult: Оценка, ошибка, счётчики.
    """
    if n_samples < n_batches:
        raise InvalidInputError(f"Need at least {n_batches} samples for batch means (got {n_samples})")
    sizes = batch_sizes(n_samples, n_batches)
    seeds = rng.integers(0, 2 ** 63 - 1, size=n_batches)

    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(kernel)(size, np.random.default_rng(int(seed))) for size, seed in zip(sizes, seeds)
    )

    sums = np.array([np.asarray(p[0], dtype=float) for p in parts])
    rejected = int(sum(p[1] for p in parts))
    sizes_arr = np.array(sizes, dtype=float).reshape((-1,) + (1,) * (sums.ndim - 1))
    means = sums / sizes_arr
    # np.sum: попарное суммирование по фиксированному порядку батчей
    estimate = np.sum(sums, axis=0) / n_samples
    stderr = np.std(means, axis=0, ddof=1) / np.sqrt(n_batches)
    return BatchResult(estimate, stderr, n_samples, rejected, means)


def _check_dim(n: int, other: int) -> None:
    if n != other:
        raise DimensionMismatchError(f"Dimension mismatch: {n} vs {other}")


def _densities(xs: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """n·⟨x|ρ|x⟩ для пачки векторов (size, n)."""
    n = rho.shape[0]
    return n * np.real(np.einsum("si,ij,sj->s", xs.conj(), rho, xs))


def _expectations(xs: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("si,ij,sj->s", xs.conj(), a, xs))


def density_on_pure(x: PureState, rho: DensityMatrix) -> float:
    """
    p(x|ρ) = n·⟨x|ρ|x⟩, плотность относительно нормированной меры Хаара на Γ.
    """
    r = as_array(rho)
    _check_dim(x.dim, r.shape[0])
    return float(r.shape[0] * x.expectation(r))


def _require_traceless(a: np.ndarray) -> None:
    if not is_traceless(a):
        raise NotTracelessError(f"Observable must be traceless (|tr A| = {abs(np.trace(a)):.3e})")


def _require_samples(n_samples: int) -> None:
    if n_samples < MIN_SAMPLES:
        raise InvalidInputError(f"Monte-Carlo needs at least {MIN_SAMPLES} samples (got {n_samples})")


def gibbons_expectation(
    a,
    rho,
    n_samples: int,
    rng: np.random.Generator,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> Tuple[float, float]:
    """
    tr(Aρ) как интеграл по Γ: (n+1)·E_Haar[⟨x|A|x⟩·p(x|ρ)].

    Константа (n+1) следует из моментной формулы
    E_Haar[⟨x|A|x⟩⟨x|B|x⟩] = (trA·trB + tr(AB))/(n(n+1)).

    Returns:
        Tuple[float, float]: (оценка, стандартная ошибка).
    """
    am, r = as_array(a), as_array(rho)
    _check_dim(am.shape[0], r.shape[0])
    _require_traceless(am)
    _require_samples(n_samples)
    n = r.shape[0]

    def kernel(size: int, gen: np.random.Generator) -> Tuple[np.ndarray, int]:
        xs = pure_batch(n, size, gen)
        return np.sum((n + 1) * _expectations(xs, am) * _densities(xs, r)), 0

    res = run_batches(kernel, n_samples, rng, n_batches, n_jobs)
    logger.debug(f"Gibbons expectation: n={n}, N={n_samples}, estimate={float(res.estimate):.6f}")
    return float(res.estimate), float(res.stderr)


def moment_oracle_mc(
    a,
    b,
    n_samples: int,
    rng: np.random.Generator,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> Tuple[float, float, float]:
    """
    E_Haar[⟨x|A|x⟩⟨x|B|x⟩] методом Монте-Карло и его точное значение.

    Returns:
        Tuple[float, float, float]: (оценка, ошибка, (trA·trB + tr(AB))/(n(n+1))).
    """
    am, bm = as_array(a), as_array(b)
    _check_dim(am.shape[0], bm.shape[0])
    _require_samples(n_samples)
    n = am.shape[0]

    def kernel(size: int, gen: np.random.Generator) -> Tuple[np.ndarray, int]:
        xs = pure_batch(n, size, gen)
        return np.sum(_expectations(xs, am) * _expectations(xs, bm)), 0

    res = run_batches(kernel, n_samples, rng, n_batches, n_jobs)
    exact = float(np.real(np.trace(am) * np.trace(bm) + np.trace(am @ bm)) / (n * (n + 1)))
    return float(res.estimate), float(res.stderr), exact


def dual_expectation_raw(
    a,
    x: PureState,
    n_samples: int,
    rng: np.random.Generator,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> Tuple[float, float]:
    """E_HS[tr(Aρ)·P(ρ|x)] без калибровочной константы, P(ρ|x) = n·⟨x|ρ|x⟩."""
    am = as_array(a)
    _check_dim(am.shape[0], x.dim)
    _require_traceless(am)
    _require_samples(n_samples)
    n = x.dim
    vec = np.asarray(x.amplitudes)

    def kernel(size: int, gen: np.random.Generator) -> Tuple[np.ndarray, int]:
        rhos = density_batch_hs(n, size, gen)
        tr_a = np.real(np.einsum("ij,sji->s", am, rhos))
        p = n * np.real(np.einsum("i,sij,j->s", vec.conj(), rhos, vec))
        return np.sum(tr_a * p), 0

    res = run_batches(kernel, n_samples, rng, n_batches, n_jobs)
    return float(res.estimate), float(res.stderr)


def dual_expectation(
    a,
    x: PureState,
    n_samples: int,
    rng: np.random.Generator,
    constant: Optional[float] = None,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
) -> Tuple[float, float]:
    """
    ⟨x|A|x⟩ как интеграл по D с мерой Гильберта-Шмидта: c·E_HS[tr(Aρ)·P(ρ|x)].

    Args:
        constant (Optional[float]): Константа c; по умолчанию берётся
                                    откалиброванная для размерности n.
    """
    if constant is None:
        from .calibration import default_dual_constant
        constant = default_dual_constant(x.dim)
    est, err = dual_expectation_raw(a, x, n_samples, rng, n_batches, n_jobs)
    return constant * est, abs(constant) * err


def fisher_rao_mc(
    family: ParamFamily,
    theta,
    n_samples: int,
    rng: np.random.Generator,
    n_batches: int = N_BATCHES,
    n_jobs: int = 1,
    rejection_threshold: float = REJECTION_THRESHOLD,
    seed: Optional[int] = None,
) -> MetricEstimate:
    """
    G_ab = E_p[∂_a log p · ∂_b log p] = E_Haar[∂_a p ∂_b p / p], p = p(x|ξ(θ)²).

    Скоры считаются центральными разностями по θ. Выборки с p ≤ 1e-12 при ∂p ≠ 0
    отбрасываются (вклад 0) и считаются.

    Raises:
        MonteCarloRejectionError: Доля отброшенных выборок больше порога.
    """
    started = time.perf_counter()
    th = np.asarray(theta, dtype=float).reshape(-1)
    d = family.param_dim
    h = family.steps(th)

    rho0 = family(th).density().data
    n = rho0.shape[0]
    shifted = []
    for a in range(d):
        e = np.zeros(d)
        e[a] = h[a]
        shifted.append((family(th + e).density().data, family(th - e).density().data))

    def kernel(size: int, gen: np.random.Generator) -> Tuple[np.ndarray, int]:
        xs = pure_batch(n, size, gen)
        p0 = _densities(xs, rho0)
        dp = np.stack(
            [(_densities(xs, plus) - _densities(xs, minus)) / (2 * h[a]) for a, (plus, minus) in enumerate(shifted)],
            axis=1,
        )
        degenerate = p0 <= DEGENERATE_P
        rejected = degenerate & np.any(np.abs(dp) > DEGENERATE_P, axis=1)
        weights = np.where(degenerate, 0.0, 1.0 / np.where(degenerate, 1.0, p0))
        outer = np.einsum("s,sa,sb->ab", weights, dp, dp)
        return np.concatenate([outer.ravel(), [np.trace(outer)]]), int(np.sum(rejected))

    _require_samples(n_samples)
    res = run_batches(kernel, n_samples, rng, n_batches, n_jobs)

    fraction = res.rejected / n_samples
    if fraction > rejection_threshold:
        audit.error(
            "Monte-Carlo rejection threshold exceeded",
            extra={"family": family.name, "theta": th.tolist(), "rejected": res.rejected, "samples": n_samples},
        )
        raise MonteCarloRejectionError(
            f"Rejected {res.rejected}/{n_samples} samples ({fraction:.2%}) at degenerate density, "
            f"threshold {rejection_threshold:.2%}",
            rejected=res.rejected,
            total=n_samples,
        )
    if res.rejected:
        logger.warning(f"Fisher-Rao MC rejected {res.rejected}/{n_samples} degenerate samples")

    comps = res.estimate[:-1].reshape(d, d)
    errs = res.stderr[:-1].reshape(d, d)
    est = MetricEstimate(
        components=(comps + comps.T) / 2,
        stderr=errs,
        sample_count=n_samples,
        rejected=res.rejected,
        trace_stderr=float(res.stderr[-1]),
        seed=seed,
        wall_ms=(time.perf_counter() - started) * 1000.0,
    )
    logger.debug(f"Fisher-Rao MC [{family.name}] at {th.tolist()}: diag={np.diag(est.components).tolist()}")
    return est
