# utils/logger.py
"""
Logging setup for V2XSentinel.

Each command logs to <output dir>/logs/v2xsentinel.log (rotating) and prints
warnings and errors on the console. Modules only ever call get_logger.
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional

from constants import (
    APP_NAME,
    APP_VERSION,
    LOG_BACKUP_COUNT,
    LOG_DATE_FORMAT,
    LOG_FILE_NAME,
    LOG_FORMAT,
    LOG_MAX_BYTES
)


_loggers = {}  # Cache for loggers


def close_logging() -> None:
    """Detach and close every handler of the root logger."""
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        handler.close()
        root_logger.removeHandler(handler)


def setup_logging(log_dir: Optional[str] = None, level: int = logging.INFO) -> Path:
    """
    Configure the root logger for one command.

    Args:
        log_dir: Directory of the log file (default: ./output/logs)
        level: Level of the file handler; the console shows WARNING and above

    Returns:
        Path of the log file
    """
    log_dir = Path(log_dir) if log_dir is not None else Path("output") / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / LOG_FILE_NAME

    # replaces the handlers of a previous command in the same process
    close_logging()

    formatter = logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT)
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    file_handler = logging.handlers.RotatingFileHandler(
        log_file,
        maxBytes=LOG_MAX_BYTES,
        backupCount=LOG_BACKUP_COUNT,
        encoding="utf-8"
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(formatter)
    root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.WARNING)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    root_logger.info(f"{APP_NAME} {APP_VERSION} logging to {log_file}")
    return log_file


def get_logger(name: str) -> logging.Logger:
    """Logger of a module (typically called with __name__)."""
    if name not in _loggers:
        _loggers[name] = logging.getLogger(name)
    return _loggers[name]


def log_exception(logger: logging.Logger, exc: Exception, context: str = None) -> None:
    """Log exc with its traceback; context names the command or stage."""
    where = f" during {context}" if context else ""
    logger.exception(f"Unhandled {type(exc).__name__}{where}: {exc}")


def set_log_level(level: int) -> None:
    """
    Change the level of the root logger and its file handler.

    The console handler keeps its WARNING level.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in root_logger.handlers:
        if isinstance(handler, logging.handlers.RotatingFileHandler):
            handler.setLevel(level)
