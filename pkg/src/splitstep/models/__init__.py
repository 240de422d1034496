"""
Models package for splitstep.

Pydantic records for sampler parameters, lattice runs, study results and
command-line configurations.
"""

from .params import (
    BoundaryChoice,
    BoundaryClass,
    CevParams,
    NcChi2Params,
    SquaredBesselParams,
    check_ncx2,
)
from .records import (
    DecayEstimate,
    ErrorSeries,
    OrderFit,
    SurvivalEstimate,
    ThetaCriticalEstimate,
    ThetaCriticalPoint,
    WeakErrorEstimate,
)
from .run_config import RunConfig
from .spde import SpdeSpec

__all__ = [
    # parameters
    "BoundaryChoice",
    "BoundaryClass",
    "CevParams",
    "NcChi2Params",
    "SquaredBesselParams",
    "check_ncx2",
    "SpdeSpec",
    # results
    "DecayEstimate",
    "ErrorSeries",
    "OrderFit",
    "SurvivalEstimate",
    "ThetaCriticalEstimate",
    "ThetaCriticalPoint",
    "WeakErrorEstimate",
    # configuration
    "RunConfig",
]
