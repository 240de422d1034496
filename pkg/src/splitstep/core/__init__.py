"""
Core package for splitstep.

This package contains configuration, logging setup and the exception
hierarchy shared by every other package.
"""

from .config import Config, config
from .errors import (
    ConfigurationError,
    DomainError,
    FitError,
    ParameterError,
    PathError,
    SplitStepError,
    UnsupportedError,
)
from .logging import get_logger, setup_logging

__all__ = [
    "config",
    "Config",
    "setup_logging",
    "get_logger",
    "SplitStepError",
    "ConfigurationError",
    "ParameterError",
    "UnsupportedError",
    "DomainError",
    "FitError",
    "PathError",
]
