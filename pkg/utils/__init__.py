# utils/__init__.py
"""
Utility modules for V2XSentinel.
"""

from .logger import get_logger, setup_logging, set_log_level, log_exception, close_logging
from .validators import validate_run_config, validate_numeric, validate_attack_windows
from .measurements import (
    planar_distance,
    distance_matrix,
    dbm_to_watts,
    watts_to_dbm,
    db_to_linear,
    linear_to_db
)

__all__ = [
    # Logger
    'get_logger',
    'setup_logging',
    'set_log_level',
    'log_exception',
    'close_logging',
    # Validators
    'validate_run_config',
    'validate_numeric',
    'validate_attack_windows',
    # Measurements
    'planar_distance',
    'distance_matrix',
    'dbm_to_watts',
    'watts_to_dbm',
    'db_to_linear',
    'linear_to_db'
]
