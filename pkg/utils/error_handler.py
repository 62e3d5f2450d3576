"""
Error handling utilities for V2XSentinel.

Provides the pipeline stage context manager and the console feedback
for errors that reach the command line.
"""

import traceback
from contextlib import contextmanager

from utils.logger import get_logger
from utils.error_messages import get_error_message, format_error_message
from core.exceptions import PipelineStageError


logger = get_logger(__name__)


@contextmanager
def stage(name: str):
    """
    Attach a pipeline stage name to any error raised inside the block.

    Errors that already carry a stage are passed through unchanged.

    Example:
        with stage("clustering"):
            nodes = gng_fit(samples, config)
    """
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as e:
        logger.error(f"Stage '{name}' failed: {type(e).__name__}: {e}")
        logger.debug(traceback.format_exc())
        raise PipelineStageError(name, e) from e


def report_error(exception: Exception, context: str = None) -> str:
    """
    Log an error and build the console text for it.

    Args:
        exception: The exception that occurred
        context: Additional context about where the error occurred

    Returns:
        Formatted message for the console
    """
    if context:
        logger.error(f"Error in {context}: {type(exception).__name__}: {str(exception)}")
    else:
        logger.error(f"{type(exception).__name__}: {str(exception)}")

    logger.debug(traceback.format_exc())

    cause = exception.cause if isinstance(exception, PipelineStageError) else None
    error_info = get_error_message(cause if cause is not None else exception)
    text = format_error_message(error_info)
    if cause is not None:
        text = f"[{exception.stage}] {text}"
    return text
