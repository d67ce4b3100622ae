"""
app/core/logging_config.py

One place to configure logging for the API process, the CLI and the bench.
"""

from __future__ import annotations

import logging
import sys
from typing import IO, Optional

_NOISE_LOGGERS = (
    "httpx",
    "httpcore",
    "uvicorn.access",
    "sqlalchemy.engine",
)


def configure_logging(level: str | int = logging.INFO, stream: Optional[IO[str]] = None) -> None:
    """The CLI passes stderr so its JSON output on stdout stays parseable."""
    fmt = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    handler = logging.StreamHandler(stream or sys.stdout)
    handler.setFormatter(fmt)

    for name in ("app", "apscheduler"):
        log = logging.getLogger(name)
        log.setLevel(level)
        log.propagate = True

    for name in _NOISE_LOGGERS:
        log = logging.getLogger(name)
        log.setLevel(logging.WARNING)
        log.propagate = True

    root = logging.getLogger()
    root.setLevel(level)
    root.handlers.clear()
    root.addHandler(handler)
