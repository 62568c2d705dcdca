"""Centralized logging configuration for mixalign.

Every record is written as one JSON object per line so that logs from long
training runs can be consumed by any line-oriented tool.
"""

import json
import logging
import sys
from typing import Optional

ROOT_LOGGER_NAME = "mixalign"


class JsonLineFormatter(logging.Formatter):
    """Render a log record as a single line of JSON.

    Structured values are attached with ``extra={"fields": {...}}`` and are
    merged into the top-level object.
    """

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": round(record.created, 6),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        fields = getattr(record, "fields", None)
        if isinstance(fields, dict):
            for key, value in fields.items():
                payload.setdefault(key, value)
        if record.exc_info:
            payload["exc"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def get_logger(name: str, level: Optional[int] = None) -> logging.Logger:
    """Create a consistently formatted logger.

    Args:
        name: Logger name, typically __name__ of the calling module.
        level: Optional level override; by default the package root decides.

    Returns:
        Configured Logger instance, a child of the ``mixalign`` root logger.
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JsonLineFormatter())
        root.addHandler(handler)
        root.setLevel(logging.INFO)
        root.propagate = False

    qualified = name if name.startswith(ROOT_LOGGER_NAME) else f"{ROOT_LOGGER_NAME}.{name}"
    logger = logging.getLogger(qualified)
    if level is not None:
        logger.setLevel(level)
    return logger


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Replace the root handlers; called once by the CLI.

    Args:
        level: Level name such as ``"INFO"`` or ``"DEBUG"``.
        log_file: Optional path that receives the same JSON lines as stderr.
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(JsonLineFormatter())
    root.addHandler(stream)
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(JsonLineFormatter())
        root.addHandler(file_handler)
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    root.propagate = False
