"""
Weak- and strong-error studies with order regression.

Weak errors compare the ensemble mean at time t against the model's exact
conditional mean; every dt uses its own block of random streams. Strong
errors draw one fine Wiener path per Monte Carlo path and feed every scheme
and step size the sums of its fine increments, so all of them see the same
noise as the reference solution.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import linregress

from ..core.config import config
from ..core.errors import (
    ConfigurationError,
    FitError,
    PathError,
    SplitStepError,
    UnsupportedError,
)
from ..core.logging import get_logger
from ..models.records import ErrorSeries, OrderFit, WeakErrorEstimate
from .catalog import SplitModel
from .ensemble import run_blocks
from .integrator import Scheme, SplitScheme, uniform_grid
from .rng import RngStream, normal

logger = get_logger(__name__)

# Stream ids of consecutive dt values in a weak series start this far apart
DT_STREAM_STRIDE = 1 << 32
MIN_FIT_POINTS = 3
DEGENERATE_ERROR = 1e-12
DEFAULT_FINE_FACTOR = 256


def fit_order(series: ErrorSeries) -> OrderFit:
    """
    Least squares of log(error) on log(dt); the half-width is twice the
    slope's standard error.

    Raises:
        FitError: fewer than three points, a nonpositive or non-finite error,
            or errors all at the round-off floor
    """
    dt = np.asarray(series.dt, dtype=float)
    err = np.asarray(series.error, dtype=float)
    if dt.size < MIN_FIT_POINTS:
        raise FitError(f"{series.label}: order fit needs >= {MIN_FIT_POINTS} dt values, got {dt.size}")
    if np.any(~np.isfinite(err)) or np.any(err <= 0):
        raise FitError(f"{series.label}: order fit needs finite positive errors, got {err.tolist()}")
    if np.all(err <= DEGENERATE_ERROR):
        raise FitError(
            f"{series.label}: errors are at the round-off floor (<= {DEGENERATE_ERROR:g}); "
            "the slope is meaningless"
        )
    fit = linregress(np.log(dt), np.log(err))
    return OrderFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        slope_stderr=float(fit.stderr),
        half_width=2.0 * float(fit.stderr),
        n_points=int(dt.size),
    )


def _attach_fit(series: ErrorSeries) -> ErrorSeries:
    try:
        series.fit = fit_order(series)
        logger.info(
            f"{series.label}: slope {series.fit.slope:.3f} +/- {series.fit.half_width:.3f}"
        )
    except FitError as exc:
        logger.warning(f"fit refused: {exc}")
    return series


def _check_dt_list(dt_list: Sequence[float]) -> List[float]:
    dts = [float(h) for h in dt_list]
    if not dts:
        raise ConfigurationError("dt list is empty")
    if any(h <= 0 for h in dts):
        raise ConfigurationError(f"dt values must be > 0, got {dts}")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ConfigurationError(f"dt values must be strictly decreasing, got {dts}")
    return dts


# --- Weak error ---


def tangent_weights(scheme: SplitScheme, x0: float, grid: np.ndarray) -> np.ndarray:
    """
    g_n = d Y_N / d Ytilde_n along the noise-free trajectory: the product of
    Step-2 derivatives from step n to the end, by central differences.
    """
    n_steps = grid.size - 1
    derivs = np.empty(n_steps)
    z = np.array([float(x0)])
    for n in range(n_steps):
        t, dt = grid[n], grid[n + 1] - grid[n]
        h = 1e-6 * max(1.0, abs(float(z[0])))
        up = scheme.stepper.step(z + h, t, dt, scheme.drift)
        down = scheme.stepper.step(z - h, t, dt, scheme.drift)
        derivs[n] = float((up - down)[0] / (2.0 * h))
        z = scheme.stepper.step(z, t, dt, scheme.drift)
    return np.cumprod(derivs[::-1])[::-1]


def weak_error(
    model: SplitModel,
    scheme: Scheme,
    x0: float,
    t: float,
    dt: float,
    n_paths: int,
    seed: int,
    threads: Optional[int] = None,
    control_variate: Optional[bool] = None,
    base_stream: int = 0,
) -> WeakErrorEstimate:
    """
    |sample mean - exact mean| of X(t) with standard error std/sqrt(M).

    For a split scheme whose Step 1 is a martingale, the zero-mean control
    variate sum_n g_n (Ytilde_n - Y_n) is subtracted from each path (on by
    default there, ``control_variate=False`` turns it off).

    Raises:
        UnsupportedError: the model has no known conditional mean, or a
            control variate was requested for a scheme that cannot use it
    """
    exact = model.mean(x0, t)
    grid = uniform_grid(t, dt)
    usable = isinstance(scheme, SplitScheme) and scheme.step1.martingale
    if control_variate is None:
        control_variate = usable
    elif control_variate and not usable:
        raise UnsupportedError(
            f"{scheme.label}: the control variate needs a split scheme with a martingale Step 1"
        )
    weights = tangent_weights(scheme, x0, grid) if control_variate else None

    def block(b: int, start: int, stop: int) -> np.ndarray:
        stream = RngStream(seed, base_stream + b)
        y = np.full(stop - start, float(x0))
        correction = np.zeros_like(y)
        for n in range(grid.size - 1):
            tn, h = grid[n], grid[n + 1] - grid[n]
            try:
                if weights is None:
                    y = scheme.advance(y, tn, h, stream)
                else:
                    mid = scheme.intermediate(y, tn, h, stream)
                    correction += weights[n] * (mid - y)
                    y = scheme.stepper.step(mid, tn, h, scheme.drift)
            except SplitStepError as exc:
                if isinstance(exc, (PathError, ConfigurationError)):
                    raise
                raise PathError(str(exc), step=n, t=tn) from exc
        return y - correction

    values = np.concatenate(run_blocks(block, n_paths, config.PATH_BLOCK_SIZE, threads))
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return WeakErrorEstimate(
        dt=dt,
        error=abs(mean - exact),
        stderr=stderr,
        sample_mean=mean,
        exact_mean=exact,
        n_paths=n_paths,
    )


def weak_error_series(
    model: SplitModel,
    scheme: Scheme,
    x0: float,
    t: float,
    dt_list: Sequence[float],
    n_paths: int,
    seed: int,
    threads: Optional[int] = None,
    control_variate: Optional[bool] = None,
    label: Optional[str] = None,
) -> ErrorSeries:
    """Weak errors over ``dt_list``, each dt on its own streams, with an order fit."""
    dts = _check_dt_list(dt_list)
    estimates = []
    for i, dt in enumerate(dts):
        est = weak_error(
            model,
            scheme,
            x0,
            t,
            dt,
            n_paths,
            seed,
            threads,
            control_variate,
            base_stream=i * DT_STREAM_STRIDE,
        )
        logger.info(f"weak dt={dt:g}: error {est.error:.4g} +/- {est.stderr:.2g}")
        estimates.append(est)
    series = ErrorSeries(
        label=label or scheme.label,
        kind="weak",
        dt=dts,
        error=[e.error for e in estimates],
        stderr=[e.stderr for e in estimates],
    )
    return _attach_fit(series)


# --- Strong error ---


def _coarse_ratios(dts: List[float], dt_fine: float, t: float) -> List[int]:
    ratios = []
    for dt in dts + [t]:
        ratio = dt / dt_fine
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigurationError(
                f"{dt:g} is not a multiple of the fine step {dt_fine:g}"
            )
        ratios.append(int(round(ratio)))
    return ratios[:-1]


def strong_errors(
    model: SplitModel,
    schemes: Dict[str, Scheme],
    x0: float,
    t: float,
    dt_list: Sequence[float],
    n_paths: int,
    seed: int,
    k: int = 2,
    threads: Optional[int] = None,
    fine_factor: int = DEFAULT_FINE_FACTOR,
) -> List[ErrorSeries]:
    """
    (mean |X_ref(t) - X(t)|^k)^(1/k) for every scheme and dt, one series per
    scheme.

    The fine step is ``max(dt_list) / fine_factor``; each coarse increment is
    the running sum of the fine increments inside its step. The reference is
    the model's exact pathwise solution, or its split scheme on the fine grid.

    Raises:
        ConfigurationError: k not in {1, 2} or a dt that is not a multiple of
            the fine step
        UnsupportedError: a scheme (or the reference) cannot take increments
    """
    if k not in (1, 2):
        raise ConfigurationError(f"strong error order k must be 1 or 2, got {k}")
    dts = _check_dt_list(dt_list)
    dt_fine = dts[0] / fine_factor
    ratios = _coarse_ratios(dts, dt_fine, t)
    n_fine = int(round(t / dt_fine))
    for dt, ratio in zip(dts, ratios):
        if n_fine % ratio:
            raise ConfigurationError(f"horizon t={t:g} is not a multiple of dt={dt:g}")
    labels = list(schemes)
    for name, scheme in schemes.items():
        if not scheme.pathwise:
            raise UnsupportedError(f"scheme '{name}' cannot be driven by shared increments")
    model.make_reference(np.zeros(1) + x0)

    def block(b: int, start: int, stop: int) -> np.ndarray:
        stream = RngStream(seed, b)
        size = stop - start
        ref = model.make_reference(np.full(size, float(x0)))
        states = np.full((len(labels), len(dts), size), float(x0))
        sums = np.zeros((len(dts), size))
        sq = math.sqrt(dt_fine)
        for n in range(n_fine):
            dw = sq * normal(stream, size=size)
            tn = n * dt_fine
            try:
                ref.advance(tn, dt_fine, dw)
                sums += dw
                for j, ratio in enumerate(ratios):
                    if (n + 1) % ratio:
                        continue
                    h = dts[j]
                    t_coarse = ((n + 1) // ratio - 1) * h
                    for s, name in enumerate(labels):
                        states[s, j] = schemes[name].advance(states[s, j], t_coarse, h, None, sums[j])
                    sums[j] = 0.0
            except SplitStepError as exc:
                if isinstance(exc, (PathError, ConfigurationError)):
                    raise
                raise PathError(str(exc), step=n, t=tn) from exc
        return np.abs(states - ref.value[None, None, :])

    logger.info(
        f"strong study: {len(labels)} scheme(s), dt {dts}, fine step {dt_fine:g}, {n_paths} paths"
    )
    diffs = np.concatenate(run_blocks(block, n_paths, config.PATH_BLOCK_SIZE, threads), axis=2)

    out = []
    for s, name in enumerate(labels):
        errors, stderrs = [], []
        for j in range(len(dts)):
            moment = diffs[s, j] ** k
            m = float(moment.mean())
            se_m = float(moment.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
            err = m ** (1.0 / k)
            errors.append(err)
            stderrs.append(se_m / (k * m ** (1.0 - 1.0 / k)) if m > 0 else 0.0)
        series = ErrorSeries(label=name, kind="strong", k=k, dt=dts, error=errors, stderr=stderrs)
        out.append(_attach_fit(series))
    return out


def strong_error(
    model: SplitModel,
    scheme: Scheme,
    x0: float,
    t: float,
    dt_list: Sequence[float],
    k: int,
    n_paths: int,
    seed: int,
    threads: Optional[int] = None,
    fine_factor: int = DEFAULT_FINE_FACTOR,
) -> ErrorSeries:
    """Strong error series of a single scheme."""
    return strong_errors(
        model,
        {scheme.label: scheme},
        x0,
        t,
        dt_list,
        n_paths,
        seed,
        k=k,
        threads=threads,
        fine_factor=fine_factor,
    )[0]
