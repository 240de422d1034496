"""
Logging configuration for splitstep.

This module centralizes logging configuration and setup. Log records go to
stderr so that data written to stdout stays machine-readable.
"""

import logging
import sys
from typing import Optional, Union

from .config import config
from .errors import ConfigurationError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def setup_logging(
    level: Optional[Union[int, str]] = None,
    log_file: Optional[str] = None,
    format_string: Optional[str] = None,
) -> logging.Logger:
    """
    Set up logging configuration for the application.

    Args:
        level: Logging level (default: from config)
        log_file: Path to log file (default: from config, none if unset)
        format_string: Log format string (default: standard format)

    Returns:
        Configured logger instance

    Raises:
        ConfigurationError: If a level name is not one of LOG_LEVELS
    """
    if level is None:
        level = config.LOG_LEVEL
    if isinstance(level, str):
        if level.upper() not in LOG_LEVELS:
            raise ConfigurationError(
                f"unknown log level '{level}'; choose one of {', '.join(LOG_LEVELS)}"
            )
        level = logging.getLevelName(level.upper())

    if log_file is None:
        log_file = config.LOG_FILE

    if format_string is None:
        format_string = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    # Configure logging
    logging.basicConfig(level=level, format=format_string, handlers=handlers, force=True)

    # Get and return the logger
    logger = logging.getLogger("splitstep")
    logger.debug("Logging configured successfully")

    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance with the specified name.

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
