"""
``converge-weak`` and ``converge-strong``: error series with order fits.
"""

from pathlib import Path
from typing import Dict, List

import pandas as pd

from ..core.errors import ConfigurationError
from ..core.logging import get_logger
from ..models.records import ErrorSeries
from ..models.run_config import RunConfig
from ..services.catalog import build_model
from ..services.harness import strong_errors, weak_error_series
from ..services.integrator import Scheme
from ..utils.file_utils import ERRORS_FILE, write_csv
from .base import finish_run, output_dir
from .simulate import select_scheme

logger = get_logger(__name__)


def series_frame(series: List[ErrorSeries]) -> pd.DataFrame:
    rows = [row for s in series for row in s.rows()]
    return pd.DataFrame(rows, columns=["scheme", "dt", "error", "stderr"])


def series_summary(series: List[ErrorSeries]) -> Dict[str, dict]:
    summary = {}
    for s in series:
        entry = {"kind": s.kind, "k": s.k, "n_points": len(s.dt)}
        if s.fit is None:
            entry.update({"slope": None, "half_width": None, "fit": "refused"})
        else:
            entry.update(
                {
                    "slope": s.fit.slope,
                    "half_width": s.fit.half_width,
                    "intercept": s.fit.intercept,
                    "fit": "ok",
                }
            )
        summary[s.label] = entry
    return summary


def cmd_converge(cfg: RunConfig, mode: str) -> Path:
    """
    Run a weak or strong study over ``converge.dt_list`` and write
    ``errors.csv`` (scheme, dt, error, stderr) plus the fitted slopes.
    """
    if mode not in ("weak", "strong"):
        raise ConfigurationError(f"convergence mode must be weak or strong, got {mode}")
    conv = cfg.converge
    model = build_model(cfg.model.name, cfg.model.params)
    if not conv.schemes:
        raise ConfigurationError("converge.schemes is empty")
    schemes: Dict[str, Scheme] = {name: select_scheme(model, name) for name in conv.schemes}
    model.check_initial(conv.x0)
    seed = cfg.run.seed

    logger.info(f"{mode} convergence study of {model.name}: {', '.join(schemes)}")
    if mode == "weak":
        series = [
            weak_error_series(
                model,
                scheme,
                conv.x0,
                conv.t,
                conv.dt_list,
                conv.n_paths,
                seed,
                threads=cfg.run.threads,
                control_variate=conv.use_control_variate if name == "split" else False,
                label=name,
            )
            for name, scheme in schemes.items()
        ]
    else:
        series = strong_errors(
            model,
            schemes,
            conv.x0,
            conv.t,
            conv.dt_list,
            conv.n_paths,
            seed,
            k=conv.k,
            threads=cfg.run.threads,
            fine_factor=conv.fine_factor,
        )

    out = output_dir(cfg)
    write_csv(series_frame(series), out / ERRORS_FILE)
    meta = {
        "model": model.name,
        "mode": mode,
        "seed": seed,
        "series": series_summary(series),
    }
    if mode == "weak":
        meta["exact_mean"] = model.mean(conv.x0, conv.t)
    finish_run(cfg, out, meta)
    return out
