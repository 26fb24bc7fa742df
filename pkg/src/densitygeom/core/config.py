"""
Загрузка конфигурации экспериментов.

Конфиг читается через ``yaml.safe_load``; так как YAML является надмножеством
JSON, одним и тем же загрузчиком читаются и ``.yaml``, и ``.json`` файлы.
Порядок слияния: встроенные значения по умолчанию -> файл -> флаги CLI.
"""

import copy
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigError

logger = logging.getLogger("DensityGeom.Core")

COMMANDS = ("sqrt", "metric", "preimages", "bounds", "calibrate")
STOCHASTIC_COMMANDS = ("metric", "bounds", "calibrate")

DEFAULT_CONFIG: Dict[str, Any] = {
    "paths": {
        "output": "out",
    },
    "numerics": {
        "hermitian_tol": 1e-12,
        "psd_clamp": 1e-10,
        "trace_tol": 1e-10,
        "slack": 1e-9,
        "fd_step": 1e-5,
        "classify_eps": 1e-9,
    },
    "montecarlo": {
        "samples": 100000,
        "batches": 100,
        "threads": 1,
        "rejection_threshold": 0.01,
    },
    "metric": {
        "family": "qubit-pure",
        "theta": None,
        "hamiltonian": None,
        "xi0": None,
        "finite_difference": False,
    },
    "bounds": {
        "max_order": 3,
        "kappa_points": 0,
        "spread_trials": 8,
        "ensembles": [
            {"id": "full-rank", "dim": None, "count": 1000, "kind": "full_rank", "perturb": True},
            {"id": "pure", "dim": None, "count": 100, "kind": "pure", "perturb": False},
        ],
    },
    "calibrate": {
        "points": 20,
        "dual_validation": 16,
    },
    "mesh": {
        "resolution": 8,
    },
}


@dataclass
class Tolerances:
    """Численные допуски; переопределяются секцией ``numerics`` конфига."""

    hermitian_tol: float = 1e-12
    psd_clamp: float = 1e-10
    trace_tol: float = 1e-10
    slack: float = 1e-9
    fd_step: float = 1e-5
    classify_eps: float = 1e-9

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "Tolerances":
        values = {}
        for name in cls.__dataclass_fields__:
            if name not in data or data[name] is None:
                continue
            try:
                value = float(data[name])
            except (TypeError, ValueError):
                raise ConfigError(f"Tolerance '{name}' must be a number, got {data[name]!r}")
            if not value > 0:
                raise ConfigError(f"Tolerance '{name}' must be positive, got {value}")
            values[name] = value
        return cls(**values)


@dataclass
class ExperimentConfig:
    """
    Полное описание одного запуска CLI.

    Attributes:
        command: Одна из команд ``COMMANDS``.
        dim: Размерность гильбертова пространства.
        seed: 64-битное зерно ГПСЧ; обязательно для стохастических команд.
        samples: Число выборок Монте-Карло.
        threads: Число потоков для батчей Монте-Карло и наборов теорем.
        input_path / output_path: Пути ввода и вывода.
        tolerances: Численные допуски.
        sections: Остальные секции конфига (metric, bounds, mesh, ...).
    """

    command: str
    dim: int = 2
    seed: Optional[int] = None
    samples: int = 100000
    batches: int = 100
    threads: int = 1
    rejection_threshold: float = 0.01
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    sections: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'. Expected one of {COMMANDS}")
        if self.command in STOCHASTIC_COMMANDS and self.seed is None:
            raise ConfigError(f"Command '{self.command}' is stochastic: a seed is mandatory (--seed or config 'seed')")
        if self.seed is not None and not (0 <= self.seed < 2 ** 64):
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.dim < 2:
            raise ConfigError(f"Dimension must be >= 2, got {self.dim}")
        if self.samples < 1:
            raise ConfigError(f"Sample count must be positive, got {self.samples}")
        if self.batches < 2:
            raise ConfigError(f"Batch count must be >= 2, got {self.batches}")
        if self.threads < 1:
            raise ConfigError(f"Thread count must be positive, got {self.threads}")
        return self

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections.get(name, {})


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Загружает конфигурацию и накладывает её на значения по умолчанию.

    Args:
        path (Optional[str]): Путь к YAML/JSON файлу. ``None``: только значения
                              по умолчанию.

    Returns:
        Dict[str, Any]: Слитый словарь конфигурации.

    Raises:
        FileNotFoundError: Файл не существует.
        ConfigError: Файл не разбирается или корень не является словарём.
    """
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)

    if not os.path.exists(path):
        raise FileNotFoundError(path)

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse config {path}: {e}")

    if not isinstance(data, dict):
        raise ConfigError(f"Config root in {path} must be a mapping, got {type(data).__name__}")

    logger.debug(f"Config loaded from {path}: sections={sorted(data)}")
    return _deep_merge(DEFAULT_CONFIG, data)


def build_experiment_config(command: str, config: Dict[str, Any], overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Собирает ``ExperimentConfig`` из словаря конфига и флагов CLI.

    Флаги (``overrides``) со значением ``None`` считаются неуказанными.
    """
    mc = config.get("montecarlo", {})
    flat: Dict[str, Any] = {
        "dim": config.get("dim", 2),
        "seed": config.get("seed"),
        "samples": mc.get("samples", 100000),
        "batches": mc.get("batches", 100),
        "threads": mc.get("threads", 1),
        "rejection_threshold": mc.get("rejection_threshold", 0.01),
        "input_path": config.get("input"),
        "output_path": config.get("output"),
    }
    for key, value in overrides.items():
        if value is not None:
            flat[key] = value

    try:
        exp = ExperimentConfig(
            command=command,
            dim=int(flat["dim"]),
            seed=None if flat["seed"] is None else int(flat["seed"]),
            samples=int(flat["samples"]),
            batches=int(flat["batches"]),
            threads=int(flat["threads"]),
            rejection_threshold=float(flat["rejection_threshold"]),
            input_path=flat["input_path"],
            output_path=flat["output_path"],
            tolerances=Tolerances.from_mapping(config.get("numerics", {})),
            sections={k: v for k, v in config.items() if isinstance(v, (dict, list))},
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid config value: {e}")
    return exp.validate()


def ensemble_specs(config: ExperimentConfig) -> List[Dict[str, Any]]:
    """Список ансамблей для набора теорем; ``dim: null`` наследует ``config.dim``."""
    specs = []
    for raw in config.section("bounds").get("ensembles", []):
        spec = dict(raw)
        if spec.get("dim") is None:
            spec["dim"] = config.dim
        specs.append(spec)
    return specs
