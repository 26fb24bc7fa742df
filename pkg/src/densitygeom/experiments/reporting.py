"""
Запись отчётов: JSON, JSON-lines, CSV и Markdown-сводка по шаблону Jinja2.

Вывод детерминирован: порядок ключей задаётся кодом, float пишутся через
repr (json), поле ``wall_ms`` единственное, что меняется между запусками.
"""

import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Sequence

from jinja2 import Template

logger = logging.getLogger("DensityGeom.Experiments")

TEMPLATES_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "templates")
BOUNDS_TEMPLATE = "bounds_summary.md.j2"


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def write_json(path: str, doc: Dict[str, Any]) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info(f"Report written: {path}")


def write_jsonl(path: str, records: Iterable[Dict[str, Any]]) -> int:
    _ensure_parent(path)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False))
            f.write("\n")
            count += 1
    logger.info(f"JSON-lines written: {path} ({count} records)")
    return count


def write_csv(path: str, header: Sequence[str], rows: List[Dict[str, Any]]) -> None:
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(header), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})
    logger.info(f"CSV written: {path}")


def render_markdown(context: Dict[str, Any], output_path: str, template_path: str = "") -> None:
    """
    Рендерит Markdown-сводку из шаблона Jinja2.

    Args:
        context (Dict[str, Any]): Данные для подстановки.
        output_path (str): Путь сохранения.
        template_path (str): Путь к шаблону; по умолчанию встроенный
                             ``templates/bounds_summary.md.j2``.
    """
    template_path = template_path or os.path.join(TEMPLATES_DIR, BOUNDS_TEMPLATE)
    try:
        with open(template_path, "r", encoding="utf-8") as f:
            template = Template(f.read(), trim_blocks=True, lstrip_blocks=True)
        content = template.render(context)
        _ensure_parent(output_path)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(content)
        logger.debug(f"Rendered template: {os.path.basename(output_path)}")
    except OSError as exc:
        logger.error(f"Template render failed [{output_path}]: {exc}")
        raise
