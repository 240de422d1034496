"""
``spde-sbm``, ``spde-contact`` and ``theta-critical``: lattice runs.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from ..core.logging import get_logger
from ..models.records import DecayEstimate, Indicator
from ..models.run_config import RunConfig
from ..services.lattice import (
    estimate_theta_c,
    simulate_spde,
    support,
    survival_probability,
    survival_sweep,
)
from ..utils.file_utils import (
    CONTOUR_FILE,
    FIELD_FILE,
    MASS_FILE,
    SNAPSHOT_TIMES_FILE,
    SUPPORT_FILE,
    SURVIVAL_FILE,
    SWEEP_FILE,
    THETA_FILE,
    write_csv,
    write_matrix,
)
from .base import finish_run, output_dir

logger = get_logger(__name__)


def _detail(estimate: Indicator) -> dict:
    if isinstance(estimate, DecayEstimate):
        return {"density_early": estimate.density_early, "density_late": estimate.density_late}
    return {"probability": estimate.probability, "stderr": estimate.stderr}


def cmd_spde(cfg: RunConfig, kind: str) -> Path:
    """
    One recorded run (snapshots, mass, support) plus survival over
    ``spde.n_runs`` runs and, for the contact process, an optional theta sweep.

    1D snapshots form one space-time matrix (row = snapshot); 2D writes one
    matrix per snapshot.
    """
    section = cfg.spde
    spec = section.to_spec(kind)
    seed = cfg.run.seed
    out = output_dir(cfg)

    run = simulate_spde(spec, seed, snapshot_every=section.snapshot_every)
    times = [t for t, _ in run.snapshots]
    write_csv(pd.DataFrame({"t": times}), out / SNAPSHOT_TIMES_FILE)
    if spec.dims == 1:
        write_matrix(np.array([u for _, u in run.snapshots]), out / FIELD_FILE)
        write_csv(
            pd.DataFrame(run.support_history, columns=["t", "min", "max"]), out / SUPPORT_FILE
        )
    else:
        for i, (_, u) in enumerate(run.snapshots):
            write_matrix(u, out / f"field_{i:05d}.txt")
        write_matrix(support(run.final).contour.reshape(-1, 2), out / CONTOUR_FILE, fmt="%d")
    write_csv(pd.DataFrame(run.mass_history, columns=["t", "mass"]), out / MASS_FILE)

    survival = survival_probability(spec, section.n_runs, seed, threads=cfg.run.threads)
    meta = {
        "kind": kind,
        "dims": spec.dims,
        "L": spec.L,
        "dx": spec.dx,
        "dt": spec.dt,
        "t_max": spec.t_max,
        "boundary": spec.boundary,
        "seed": seed,
        "extinct": not run.survived,
        "extinction_time": run.extinction_time,
        "t_final": run.t_final,
        "final_mass": float(run.final.mass),
        "survival": survival.model_dump(),
    }
    if run.extinction_time == 0.0:
        logger.info("zero initial field: reporting immediate extinction")

    if kind == "contact" and section.thetas:
        sweep = survival_sweep(spec, section.thetas, section.n_runs, seed, cfg.run.threads)
        write_csv(
            pd.DataFrame([s.model_dump() for s in sweep])[
                ["theta", "probability", "stderr", "n_runs", "n_survived"]
            ],
            out / SURVIVAL_FILE,
        )
    finish_run(cfg, out, meta)
    return out


def cmd_theta_critical(cfg: RunConfig) -> Path:
    """Critical theta per dt and its extrapolation to dt -> 0."""
    section = cfg.theta
    spec = section.to_spec()
    estimate = estimate_theta_c(
        section.dt_list,
        spec,
        section.theta_lo,
        section.theta_hi,
        section.n_runs,
        cfg.run.seed,
        tol=section.tol,
        threads=cfg.run.threads,
        criterion=section.criterion,
        t_early=section.t_early,
        exponent=section.exponent,
    )

    out = output_dir(cfg)
    write_csv(
        pd.DataFrame(
            [
                {
                    "dt": p.dt,
                    "theta_c": p.theta_c,
                    "stderr": p.stderr,
                    "bracket_lo": p.bracket[0],
                    "bracket_hi": p.bracket[1],
                    "residual": r,
                }
                for p, r in zip(estimate.points, estimate.residuals)
            ]
        ),
        out / THETA_FILE,
    )
    write_csv(
        pd.DataFrame(
            [
                {"dt": p.dt, "theta": s.theta, "score": s.score, "score_stderr": s.score_stderr, **_detail(s)}
                for p in estimate.points
                for s in p.sweep
            ]
        ),
        out / SWEEP_FILE,
    )
    finish_run(
        cfg,
        out,
        {
            "theta_c": estimate.theta_c,
            "theta_c_stderr": estimate.theta_c_stderr,
            "slope": estimate.slope,
            "bisection_tol": estimate.bisection_tol,
            "criterion": estimate.criterion,
            "methodology": estimate.methodology,
            "L": spec.L,
            "t_max": spec.t_max,
            "t_early": section.t_early or spec.t_max / 4.0,
            "seed": cfg.run.seed,
        },
    )
    return out
