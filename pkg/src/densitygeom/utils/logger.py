import json
import logging
from datetime import datetime, timezone
from typing import Any, Dict

# Стандартные атрибуты LogRecord, которые не нужно дублировать в JSON
_RESERVED = set(vars(logging.makeLogRecord({})).keys()) | {"message", "asctime"}


class JSONLineFormatter(logging.Formatter):
    """
    Форматтер в стиле ECS: одна запись лога = одна строка JSON.

    Используется логгером аудита (DensityGeomAudit). Всё, что передано
    через ``extra=...``, попадает в поле ``labels``.
    """

    def format(self, record: logging.LogRecord) -> str:
        doc: Dict[str, Any] = {
            "@timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "log.level": record.levelname,
            "log.logger": record.name,
            "message": record.getMessage(),
        }
        labels = {k: v for k, v in vars(record).items() if k not in _RESERVED}
        if labels:
            doc["labels"] = labels
        if record.exc_info:
            doc["error.stack_trace"] = self.formatException(record.exc_info)
        return json.dumps(doc, default=str, ensure_ascii=False)
