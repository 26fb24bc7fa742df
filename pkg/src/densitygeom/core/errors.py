"""
Иерархия исключений densitygeom.

Две ветви соответствуют кодам выхода CLI:
    InvalidInputError -> 2 (входные данные нарушают инвариант),
    NumericalError    -> 1 (внутренний или численный сбой).
"""

from typing import Any, Dict, Optional


class DensityGeomError(Exception):
    """Базовое исключение пакета."""

    exit_code = 1


# --- Некорректный ввод (exit 2) ---

class InvalidInputError(DensityGeomError):
    """Входные данные нарушают контракт операции."""

    exit_code = 2


class DimensionMismatchError(InvalidInputError):
    pass


class NotHermitianError(InvalidInputError):
    pass


class NotPositiveSemidefiniteError(InvalidInputError):
    pass


class TraceError(InvalidInputError):
    pass


class NotTracelessError(InvalidInputError):
    pass


class InvalidOrderError(InvalidInputError):
    pass


class InvalidDensityError(InvalidInputError):
    """Параметры кубита вне шара Блоха (R > 1/2)."""


class ConfigError(InvalidInputError):
    pass


# --- Численные сбои (exit 1) ---

class NumericalError(DensityGeomError):
    """Численная процедура не может выдать надёжный результат."""


class EigensolverError(NumericalError):
    pass


class RankDeficientError(NumericalError):
    pass


class ZeroVelocityError(NumericalError):
    pass


class StepUnderflowError(NumericalError):
    pass


class MonteCarloRejectionError(NumericalError):
    def __init__(self, message: str, rejected: int = 0, total: int = 0):
        super().__init__(message)
        self.rejected = rejected
        self.total = total


class TheoremViolationError(NumericalError):
    """
    Нарушено неравенство, которое является теоремой.

    Всегда означает ошибку реализации, поэтому несёт полный дамп величин.
    """

    def __init__(self, message: str, dump: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.dump = dump or {}
