"""
Pydantic models for sampler parameters.

Validators raise ``ParameterError`` directly (it is not a ``ValueError``), so
constructing an invalid parameter set surfaces the domain error unchanged
instead of a generic validation error.
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from ..core.errors import ParameterError

# Tolerance for recognising 1/(2(1-gamma)) as an integer. This absorbs float
# representation error only; it never snaps a genuinely non-integer value.
_INTEGER_TOL = 1e-9


class BoundaryClass(str, Enum):
    """Feller classification of the boundary at zero."""

    NATURAL = "natural"
    ABSORBING = "absorbing"
    REFLECTING = "reflecting"
    UNATTAINABLE = "unattainable"


class BoundaryChoice(str, Enum):
    REFLECTING = "reflecting"
    ABSORBING = "absorbing"


def check_ncx2(d: float, lam: float) -> None:
    """Raise ``ParameterError`` unless (d, lam) is a valid non-central chi-square."""
    if not (math.isfinite(d) and math.isfinite(lam)):
        raise ParameterError(f"non-finite ncx2 parameters d={d}, lambda={lam}")
    if lam < 0:
        raise ParameterError(f"noncentrality lambda must be >= 0, got {lam}")
    if d <= 0 and not (float(d).is_integer() and int(d) % 2 == 0):
        raise ParameterError(
            f"degrees of freedom d={d} must be > 0 or an even integer <= 0"
        )


class NcChi2Params(BaseModel):
    """Degrees of freedom and noncentrality of a non-central chi-square law."""

    model_config = ConfigDict(frozen=True)

    d: float
    lam: float

    @model_validator(mode="after")
    def _check(self) -> "NcChi2Params":
        check_ncx2(self.d, self.lam)
        return self

    @property
    def has_atom(self) -> bool:
        return self.d <= 0


class SquaredBesselParams(BaseModel):
    """dX = a dt + sigma sqrt(X) dW."""

    model_config = ConfigDict(frozen=True)

    a: float
    sigma: float

    @model_validator(mode="after")
    def _check(self) -> "SquaredBesselParams":
        if not self.a >= 0:
            raise ParameterError(f"squared Bessel drift a must be >= 0, got {self.a}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        return self

    @property
    def d(self) -> float:
        return 4.0 * self.a / self.sigma**2


class CevParams(BaseModel):
    """
    Driftless CEV diffusion dX = sigma X^gamma dW.

    The regime is fixed by gamma:

    - gamma > 1: natural boundary, d = (1 - 2 gamma)/(1 - gamma) > 2
    - 1/2 <= gamma < 1: absorbing, sampled only for gamma = 1 - 1/(2n),
      giving d = 2 - 2n
    - gamma < 1/2: regular boundary, sampled with the reflecting condition
    """

    model_config = ConfigDict(frozen=True)

    gamma: float
    sigma: float
    boundary_choice: Optional[BoundaryChoice] = None

    @model_validator(mode="after")
    def _check(self) -> "CevParams":
        g = self.gamma
        if not math.isfinite(g):
            raise ParameterError(f"gamma must be finite, got {g}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if g == 1.0:
            raise ParameterError(
                "gamma = 1 is geometric Brownian motion; use gbm_step instead"
            )
        if 0.5 <= g < 1.0:
            if self.boundary_choice == BoundaryChoice.REFLECTING:
                raise ParameterError(
                    f"gamma={g} has an exit boundary; a reflecting choice is not available"
                )
            n = 1.0 / (2.0 * (1.0 - g))
            if abs(n - round(n)) > _INTEGER_TOL:
                raise ParameterError(
                    f"absorbing CEV sampling needs gamma = 1 - 1/(2n) for integer n >= 1; "
                    f"gamma={g} gives 1/(2(1-gamma))={n:.12g}"
                )
        elif g < 0.5 and self.boundary_choice == BoundaryChoice.ABSORBING:
            raise ParameterError(
                f"absorbing boundary for gamma={g} < 1/2 is not supported; "
                "use boundary_choice=reflecting"
            )
        return self

    @property
    def boundary_class(self) -> BoundaryClass:
        if self.gamma > 1.0:
            return BoundaryClass.NATURAL
        if self.gamma >= 0.5:
            return BoundaryClass.ABSORBING
        return BoundaryClass.REFLECTING

    @property
    def n(self) -> Optional[int]:
        """Integer n with gamma = 1 - 1/(2n) in the absorbing regime."""
        if self.boundary_class != BoundaryClass.ABSORBING:
            return None
        return int(round(1.0 / (2.0 * (1.0 - self.gamma))))

    @property
    def d(self) -> float:
        n = self.n
        if n is not None:
            return float(2 - 2 * n)
        return (1.0 - 2.0 * self.gamma) / (1.0 - self.gamma)
