"""
Result records emitted by the convergence harness and the lattice studies.
"""

import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator


class OrderFit(BaseModel):
    """Least-squares fit of log(error) against log(dt)."""

    slope: float
    intercept: float
    slope_stderr: float
    half_width: float
    n_points: int

    def contains(self, low: float, high: float) -> bool:
        return low <= self.slope <= high


class WeakErrorEstimate(BaseModel):
    dt: float
    error: float
    stderr: float
    sample_mean: float
    exact_mean: float
    n_paths: int


class ErrorSeries(BaseModel):
    """
    Errors of one scheme across step sizes.

    ``k`` is None for weak (mean) errors and the moment order for strong
    errors. ``fit`` stays empty when the fit preconditions fail.
    """

    label: str
    kind: str = "weak"
    k: Optional[int] = None
    dt: List[float]
    error: List[float]
    stderr: List[float]
    fit: Optional[OrderFit] = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "ErrorSeries":
        if not len(self.dt) == len(self.error) == len(self.stderr):
            raise ValueError("dt, error and stderr must have equal length")
        if any(b >= a for a, b in zip(self.dt, self.dt[1:])):
            raise ValueError("dt values must be strictly decreasing")
        return self

    def rows(self) -> List[dict]:
        return [
            {"scheme": self.label, "dt": h, "error": e, "stderr": s}
            for h, e, s in zip(self.dt, self.error, self.stderr)
        ]


class SurvivalEstimate(BaseModel):
    """Fraction of runs alive at t_max, with its binomial standard error."""

    probability: float = Field(ge=0.0, le=1.0)
    stderr: float
    n_runs: int
    n_survived: int
    theta: Optional[float] = None
    dt: Optional[float] = None

    @property
    def score(self) -> float:
        """Signed distance from the survival-1/2 crossing; >= 0 reads as supercritical."""
        return self.probability - 0.5

    @property
    def score_stderr(self) -> float:
        # binomial s.e. at the crossing itself
        return 0.5 / math.sqrt(self.n_runs)


class DecayEstimate(BaseModel):
    """
    Ensemble-mean density at two times of runs started from a full lattice.

    At the critical point the density decays as t^-delta, so
    ``score = log(rho_late t_late^delta / (rho_early t_early^delta))`` is
    about zero there, negative below and positive above. A run ensemble
    extinct by ``t_late`` scores ``-inf``.
    """

    density_early: float = Field(ge=0.0)
    density_late: float = Field(ge=0.0)
    t_early: float
    t_late: float
    exponent: float
    score: float
    score_stderr: float
    n_runs: int
    theta: Optional[float] = None
    dt: Optional[float] = None


Indicator = Union[SurvivalEstimate, DecayEstimate]


class ThetaCriticalPoint(BaseModel):
    """Bisection result at one dt; ``stderr`` combines MC noise and bracket width."""

    dt: float
    theta_c: float
    stderr: float
    bracket: List[float]
    sweep: List[Indicator]


METHODOLOGY = {
    "decay": (
        "bisection on the theta where the ensemble-mean density from a full lattice "
        "decays as t^-delta (directed-percolation delta) between t_early and t_max, "
        "then a least-squares line in dt extrapolated to dt=0"
    ),
    "survival": (
        "bisection on the theta where survival at t_max crosses 1/2, "
        "then a least-squares line in dt extrapolated to dt=0"
    ),
}


class ThetaCriticalEstimate(BaseModel):
    """Per-dt critical points and their linear extrapolation to dt -> 0."""

    points: List[ThetaCriticalPoint]
    theta_c: float
    theta_c_stderr: float
    slope: float
    residuals: List[float]
    bisection_tol: float
    criterion: Literal["decay", "survival"] = "decay"

    @property
    def methodology(self) -> str:
        return METHODOLOGY[self.criterion]
