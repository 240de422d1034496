"""
Exception hierarchy for splitstep.

Configuration-class errors (exit code 2 at the CLI) are everything a user can
fix by changing inputs; the rest are runtime failures (exit code 1).
"""

from typing import Optional


class SplitStepError(Exception):
    """Base class for all splitstep errors."""


class ConfigurationError(SplitStepError):
    """Invalid run configuration."""


class ParameterError(ConfigurationError):
    """Distribution or model parameters outside their admissible regime."""


class UnsupportedError(ConfigurationError):
    """The requested operation needs data the model does not provide."""


class DomainError(SplitStepError):
    """A state lies outside the domain of a transition sampler."""


class FitError(SplitStepError):
    """Order regression preconditions are violated."""


class PathError(SplitStepError):
    """A sub-step failed while advancing a path."""

    def __init__(
        self,
        message: str,
        step: int,
        t: float,
        path: Optional[int] = None,
    ):
        self.step = step
        self.t = t
        self.path = path
        where = f"step {step} (t={t:g})"
        if path is not None:
            where = f"path {path}, {where}"
        super().__init__(f"{where}: {message}")
