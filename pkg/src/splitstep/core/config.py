"""
Configuration management for splitstep.

This module centralizes environment variable loading and the process-level
settings shared by the samplers, the ensemble engine and the CLI.
"""

from typing import Optional

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()


class Config(BaseSettings):
    """Centralized configuration management for splitstep."""

    model_config = SettingsConfigDict(env_prefix="SPLITSTEP_", extra="ignore")

    # Run overrides (take precedence over config files, not over CLI flags)
    SEED: Optional[int] = None
    THREADS: Optional[int] = Field(default=None, ge=1)

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # Ensemble partitioning; changing these changes the random streams
    PATH_BLOCK_SIZE: int = Field(default=4096, ge=1)
    RUN_BLOCK_SIZE: int = Field(default=25, ge=1)

    # Above this mean, Poisson draws switch to a rounded normal approximation
    POISSON_NORMAL_THRESHOLD: float = Field(default=1e8, gt=0)

    def resolve_seed(self, seed: int) -> int:
        """Return the environment seed override if set, else ``seed``."""
        return self.SEED if self.SEED is not None else seed

    def resolve_threads(self, threads: int) -> int:
        """Return the environment thread override if set, else ``threads``."""
        return self.THREADS if self.THREADS is not None else threads


# Create a global config instance
config = Config()
