"""
Pydantic models for lattice SPDE runs.
"""

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import ConfigurationError

# Relative slack on the stability bound so dt = dx^2/(2 dims) itself passes
_STABILITY_SLACK = 1e-12


# --- Run description ---
# kind selects the Step-2 drift: pure heat flow (sbm) or heat + theta u - u^2
# (contact). sigma scales the per-site sqrt noise for both.
class SpdeSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["sbm", "contact"] = "sbm"
    dims: Literal[1, 2] = 1
    L: int = Field(default=128, ge=1)
    dx: float = Field(default=1.0, gt=0)
    sigma: float = Field(default=1.0, ge=0)
    theta: float = 0.0
    dt: float = Field(default=0.1, gt=0)
    t_max: float = Field(default=100.0, ge=0)
    u0: float = Field(default=0.1, ge=0)
    init: Literal["uniform", "point", "block"] = "uniform"
    init_width: int = Field(default=1, ge=1)
    boundary: Literal["periodic"] = "periodic"

    @model_validator(mode="after")
    def _check_stability(self) -> "SpdeSpec":
        bound = self.stability_bound
        if self.dt > bound * (1.0 + _STABILITY_SLACK):
            raise ConfigurationError(
                f"dt={self.dt:g} exceeds the explicit Laplacian stability bound "
                f"dx^2/(2*dims)={bound:g}"
            )
        if self.init_width > self.L:
            raise ConfigurationError(
                f"init_width={self.init_width} is larger than the lattice L={self.L}"
            )
        return self

    @property
    def stability_bound(self) -> float:
        return self.dx**2 / (2.0 * self.dims)

    @property
    def r(self) -> float:
        """Diffusion number dt / dx^2."""
        return self.dt / self.dx**2

    @property
    def sigma_eff(self) -> float:
        """Per-site scale of dX = s sqrt(X) dW realising sqrt(sigma u / dx^dims) dW."""
        return math.sqrt(self.sigma / self.dx**self.dims)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9)) if self.t_max > 0 else 0

    @property
    def shape(self) -> tuple:
        return (self.L,) * self.dims
