"""
Logging configuration using structlog

Records go to stderr: stdout carries the JSON report of every command.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

import structlog

FORMATS = ("json", "text")


def setup_logging(log_level: str = "WARNING", log_dir: Optional[str] = None, format_type: str = "text"):
    """
    Configure structured logging for the toolkit

    Args:
        log_level: DEBUG, INFO, WARNING or ERROR
        log_dir: Directory for propp_<timestamp>.log; no file when unset
        format_type: "json" (one record per line) or "text"
    """
    if format_type not in FORMATS:
        raise ValueError(f"log format must be one of {FORMATS}, got {format_type!r}")
    level = getattr(logging, log_level.upper())

    handlers: list = [logging.StreamHandler(sys.stderr)]
    log_file = None
    if log_dir:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        log_file = Path(log_dir) / f"propp_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(format="%(message)s", level=level, handlers=handlers, force=True)

    renderer = structlog.processors.JSONRenderer() if format_type == "json" else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )

    logger = structlog.get_logger(__name__)
    logger.debug("logging_initialized", log_level=log_level, log_file=str(log_file) if log_file else None)
    return logger


def bind_run_context(command: str, **fields) -> None:
    """Attach the command name (and e.g. the input file or suite) to every record of this run"""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=command, **{k: v for k, v in fields.items() if v is not None})
