"""
``sample-ncx2``: raw non-central chi-square draws for external validation.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from ..core.logging import get_logger
from ..models.params import NcChi2Params
from ..models.run_config import RunConfig
from ..services.rng import RngStream, ncx2, ncx2_atom_mass
from ..utils.file_utils import SAMPLES_FILE, write_csv
from .base import finish_run, output_dir

logger = get_logger(__name__)


def cmd_sample_ncx2(cfg: RunConfig) -> Path:
    section = cfg.sampler
    params = NcChi2Params(d=section.d, lam=section.lam)
    draws = np.asarray(ncx2(RngStream(cfg.run.seed, 0), params, size=section.n))
    logger.info(f"drew {section.n} ncx2(d={params.d:g}, lambda={params.lam:g}) variates")

    out = output_dir(cfg)
    write_csv(pd.DataFrame({"x": draws}), out / SAMPLES_FILE)
    finish_run(
        cfg,
        out,
        {
            "d": params.d,
            "lam": params.lam,
            "n": section.n,
            "seed": cfg.run.seed,
            "sample_mean": float(draws.mean()),
            "sample_var": float(draws.var(ddof=1)) if section.n > 1 else 0.0,
            "atom_fraction": float((draws == 0).mean()),
            "atom_mass": float(ncx2_atom_mass(params.d, params.lam)),
            "mean": params.d + params.lam if params.d > 0 else None,
            "var": 2.0 * (params.d + 2.0 * params.lam) if params.d > 0 else None,
        },
    )
    return out
