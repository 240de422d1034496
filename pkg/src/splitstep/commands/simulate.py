"""
``simulate``: ensembles of paths of one catalog model.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from ..core.logging import get_logger
from ..models.run_config import RunConfig
from ..services.catalog import SplitModel, build_model
from ..services.integrator import Scheme, simulate_ensemble, uniform_grid
from ..utils.file_utils import PATHS_FILE, SUMMARY_CSV_FILE, write_csv
from .base import finish_run, output_dir

logger = get_logger(__name__)


def select_scheme(model: SplitModel, name: str) -> Scheme:
    """``split`` for the model's splitting scheme, otherwise a baseline method name."""
    if name == "split":
        return model.scheme()
    return model.baseline(name)


def path_summary(t: np.ndarray, paths: np.ndarray) -> pd.DataFrame:
    """Per-time ensemble statistics; ``paths`` is (n_paths, n_times)."""
    return pd.DataFrame(
        {
            "t": t,
            "mean": paths.mean(axis=0),
            "std": paths.std(axis=0, ddof=1) if paths.shape[0] > 1 else np.zeros(t.size),
            "min": paths.min(axis=0),
            "max": paths.max(axis=0),
            "frac_zero": (paths == 0).mean(axis=0),
            "frac_negative": (paths < 0).mean(axis=0),
        }
    )


def cmd_simulate(cfg: RunConfig) -> Path:
    sim = cfg.simulate
    model = build_model(cfg.model.name, cfg.model.params)
    scheme = select_scheme(model, sim.scheme)
    model.check_initial(sim.x0)
    grid = uniform_grid(sim.t, sim.dt)

    logger.info(
        f"simulating {sim.n_paths} path(s) of {model.name} with {scheme.label}, "
        f"dt={sim.dt:g}, t={sim.t:g}"
    )
    paths = simulate_ensemble(
        scheme, sim.x0, grid, sim.n_paths, cfg.run.seed, threads=cfg.run.threads
    )

    out = output_dir(cfg)
    if sim.output_mode == "paths":
        columns = ["t"] + [f"path_{i}" for i in range(paths.shape[0])]
        frame = pd.DataFrame(np.column_stack([grid, paths.T]), columns=columns)
        write_csv(frame, out / PATHS_FILE)
    else:
        write_csv(path_summary(grid, paths), out / SUMMARY_CSV_FILE)

    final = paths[:, -1]
    finish_run(
        cfg,
        out,
        {
            "model": model.name,
            "boundary_class": model.boundary_class,
            "scheme": scheme.label,
            "seed": cfg.run.seed,
            "n_steps": grid.size - 1,
            "final_mean": float(final.mean()),
            "min_value": float(paths.min()),
            "n_negative": int((paths < 0).sum()),
            "frac_absorbed": float((final == 0).mean()),
        },
    )
    return out
