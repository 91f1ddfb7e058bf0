"""
Logging for qonsensus.

Every module logs through a child of the "qonsensus" logger, which owns one
colored console handler and one rotating file handler. Experiment sweeps run
for minutes, so the file keeps DEBUG detail while the console stays at
LOG_LEVEL unless -v lowers it.
"""

import logging
import os
from logging.handlers import RotatingFileHandler

from config import LOG_DIR, LOG_LEVEL

try:
    import colorlog

    HAS_COLORLOG = True
except ImportError:
    HAS_COLORLOG = False


ROOT_NAME = "qonsensus"
LOG_FILE = os.path.join(LOG_DIR, "qonsensus.log")
MAX_BYTES = 10 * 1024 * 1024  # 10 MB per log file
BACKUP_COUNT = 5
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LEVEL_COLORS = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "red,bg_white",
}

DEFAULT_LEVEL = getattr(logging, LOG_LEVEL.upper(), logging.INFO)

_console_handler = None


def _console_formatter() -> logging.Formatter:
    if HAS_COLORLOG:
        return colorlog.ColoredFormatter(
            fmt="%(log_color)s[%(asctime)s] [%(levelname)-8s] [%(module)s]%(reset)s %(message)s",
            datefmt=DATE_FORMAT,
            log_colors=LEVEL_COLORS,
            reset=True,
        )
    return logging.Formatter(
        fmt="[%(asctime)s] [%(levelname)-8s] [%(module)s] %(message)s", datefmt=DATE_FORMAT
    )


def setup_logger(level: int = DEFAULT_LEVEL) -> logging.Logger:
    """
    Attach the console and file handlers to the "qonsensus" logger once.

    Args:
        level: Console level; the file always records DEBUG

    Returns:
        The package logger
    """
    global _console_handler
    root = logging.getLogger(ROOT_NAME)
    if _console_handler is not None:
        return root

    root.setLevel(logging.DEBUG)
    root.propagate = False

    _console_handler = logging.StreamHandler()
    _console_handler.setLevel(level)
    _console_handler.setFormatter(_console_formatter())
    root.addHandler(_console_handler)

    try:
        os.makedirs(LOG_DIR, exist_ok=True)
        file_handler = RotatingFileHandler(
            LOG_FILE, maxBytes=MAX_BYTES, backupCount=BACKUP_COUNT, encoding="utf-8"
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter(
                fmt="[%(asctime)s] [%(levelname)-8s] [%(name)s:%(lineno)d] %(message)s",
                datefmt=DATE_FORMAT,
            )
        )
        root.addHandler(file_handler)
    except OSError as e:
        root.warning(f"Log file {LOG_FILE} unavailable, console only: {e}")

    return root


def get_logger(name: str) -> logging.Logger:
    """Child logger for a module; pass __name__."""
    setup_logger()
    return logging.getLogger(f"{ROOT_NAME}.{name}")


def set_console_level(level: int) -> None:
    """Change console verbosity for every module at once."""
    setup_logger()
    _console_handler.setLevel(level)
