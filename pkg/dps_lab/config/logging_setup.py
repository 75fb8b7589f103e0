"""
Logging setup for dps_lab
structlog on top of stdlib logging, key-value events
"""

import logging
import sys
from typing import Optional

import structlog

from .settings import LabSettings


def configure_logging(settings: Optional[LabSettings] = None) -> None:
    """Configure structlog processors and the stdlib root handler"""
    settings = settings or LabSettings()
    level = getattr(logging, settings.log_level)

    logging.basicConfig(
        level=level,
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )

    renderer = (
        structlog.processors.JSONRenderer()
        if settings.log_json
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
