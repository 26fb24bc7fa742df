"""
JSON-формат обмена матрицами: {"dim": n, "re": [[...]], "im": [[...]]}.

json сериализует float через repr, т.е. кратчайшей записью, которая
восстанавливает число бит-в-бит (до 17 значащих цифр).
"""

import json
import logging
from typing import Any, Dict

import numpy as np

from .algebra import as_array
from .errors import InvalidInputError

logger = logging.getLogger("DensityGeom.Core")


def dump_matrix(a: Any) -> Dict[str, Any]:
    m = as_array(a)
    return {
        "dim": int(m.shape[0]),
        "re": [[float(v) for v in row] for row in np.real(m)],
        "im": [[float(v) for v in row] for row in np.imag(m)],
    }


def parse_matrix(doc: Dict[str, Any]) -> np.ndarray:
    """
    Разбирает документ матрицы в комплексный массив.

    Поле ``im`` необязательно (вещественные матрицы).

    Raises:
        InvalidInputError: Структура документа не соответствует формату.
    """
    if not isinstance(doc, dict) or "re" not in doc:
        raise InvalidInputError("Matrix document must be an object with at least a 're' field")
    try:
        re = np.array(doc["re"], dtype=float)
        im = np.array(doc.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"Matrix entries must be numbers: {e}")

    dim = doc.get("dim", re.shape[0] if re.ndim == 2 else -1)
    if re.ndim != 2 or re.shape != (dim, dim) or im.shape != re.shape:
        raise InvalidInputError(f"Matrix arrays must be {dim}x{dim} row-major, got re{re.shape} im{im.shape}")
    return re + 1j * im


def read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"Matrix file {path} is not valid JSON: {e}")
    return parse_matrix(doc)


def write_matrix(path: str, a: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(dump_matrix(a), f)
        f.write("\n")
    logger.debug(f"Matrix written: {path}")
