"""
Облако точек S³ с данными отождествления прообразов (для внешнего рисования).

Широты ψ_i = i·π/(2q), i = 0..2q, задают t = cos ψ/√2 и радиус r = sin ψ/√2
сферы (x, y, z). Сетка замкнута относительно ψ -> π/2 − ψ (перестановка t и r,
вторая пара прообразов) и ψ -> π − ψ с d -> −d (антиподы), поэтому все
партнёры каждой точки лежат в той же сетке.
"""

import csv
import logging
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from ..core.errors import InvalidInputError
from .s3 import CLASSIFY_EPS, S3Point, classify, rho_from_s3

logger = logging.getLogger("DensityGeom.Bloch")

CSV_HEADER = ["t", "x", "y", "z", "R", "case", "partners"]
GRID = 1e-9


@dataclass
class MeshRow:
    index: int
    point: S3Point
    radius: float
    case: str
    key: Tuple[int, int, int]
    partners: Tuple[int, ...] = ()


def _directions(q: int) -> np.ndarray:
    """Направления на S²: два полюса и сетка (θ_j, φ_l), замкнутая относительно d -> −d."""
    dirs = [(0.0, 0.0, 1.0)]
    for j in range(1, q):
        theta = j * np.pi / q
        for l in range(2 * q):
            phi = l * np.pi / q
            dirs.append((np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)))
    dirs.append((0.0, 0.0, -1.0))
    return np.array(dirs)


def _grid_key(values: Tuple[float, float, float]) -> Tuple[int, int, int]:
    return tuple(int(np.round(v / GRID)) for v in values)


def _band(i: int, q: int, directions: np.ndarray, eps: float) -> List[Tuple[S3Point, float, str, Tuple[int, int, int]]]:
    psi = i * np.pi / (2 * q)
    t = np.cos(psi) / np.sqrt(2)
    r = np.sin(psi) / np.sqrt(2)
    dirs = directions[:1] if i in (0, 2 * q) else directions
    rows = []
    for d in dirs:
        # Точку ставим на сферу явно: t² + r² = 1/2 до округления
        p = S3Point(float(t), float(r * d[0]), float(r * d[1]), float(r * d[2]))
        params = rho_from_s3(p)
        rows.append((p, params.radius, classify(params, eps).value, _grid_key(params.as_tuple())))
    return rows


def s3_mesh(
    resolution: int,
    path: Optional[str] = None,
    n_jobs: int = 1,
    eps: float = CLASSIFY_EPS,
) -> List[MeshRow]:
    """
    Строит сетку S³ с тегами случаев и индексами партнёров.

    Args:
        resolution (int): Число шагов по широте на четверть дуги (≥ 8; нечётное
                          округляется вверх до чётного, чтобы попасть в t = ±1/2).
        path (Optional[str]): Если задан, сетка записывается в CSV.
        n_jobs (int): Потоки для генерации широтных полос; порядок строк
                      детерминирован.
        eps (float): Ширина полосы классификации.

    Returns:
        List[MeshRow]: Строки сетки в порядке широт.
    """
    if resolution < 8:
        raise InvalidInputError(f"Mesh resolution must be >= 8 (got {resolution})")
    q = resolution + (resolution % 2)
    directions = _directions(q)

    bands = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_band)(i, q, directions, eps) for i in range(2 * q + 1)
    )

    rows: List[MeshRow] = []
    for band in bands:
        for p, radius, case, key in band:
            rows.append(MeshRow(index=len(rows), point=p, radius=radius, case=case, key=key))

    groups: Dict[Tuple[int, int, int], List[int]] = defaultdict(list)
    for row in rows:
        groups[row.key].append(row.index)
    for row in rows:
        row.partners = tuple(i for i in groups[row.key] if i != row.index)

    logger.info(f"S3 mesh: resolution={q}, rows={len(rows)}, identification classes={len(groups)}")
    if path is not None:
        write_mesh_csv(rows, path)
    return rows


def write_mesh_csv(rows: List[MeshRow], path: str) -> None:
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow([
                    repr(row.point.t), repr(row.point.x), repr(row.point.y), repr(row.point.z),
                    repr(row.radius), row.case, ";".join(str(i) for i in row.partners),
                ])
    except OSError as e:
        logger.error(f"Mesh write failed [{path}]: {e}")
        raise
    logger.info(f"Mesh written: {path}")
