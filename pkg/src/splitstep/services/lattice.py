"""
Splitting-step simulation of lattice SPDEs.

Two models share one step structure on a periodic lattice of spacing dx:

- super-random walk (sbm): du_i = Delta_i u dt + sqrt(sigma u_i / dx^dims) dW_i
- contact process:         du_i = [Delta_i u + theta u_i - u_i^2] dt
                                  + sqrt(sigma u_i / dx^dims) dW_i

Step 1 samples the per-site sqrt diffusion exactly (an atom at zero, so sites
can die); Step 2 is an explicit Euler step of the remaining drift, written as
(1 - 2 dims r) u + r * sum(neighbours) so it is nonnegative whenever
r = dt/dx^2 <= 1/(2 dims).

Fields keep the spatial axes last; a leading axis indexes independent runs.
Within a step, sites are drawn from the block stream in C order of that array.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from ..core.config import config
from ..core.errors import ConfigurationError
from ..core.logging import get_logger
from ..models.records import (
    METHODOLOGY,
    DecayEstimate,
    Indicator,
    SurvivalEstimate,
    ThetaCriticalEstimate,
    ThetaCriticalPoint,
)
from ..models.spde import SpdeSpec
from .ensemble import run_blocks
from .rng import RngStream
from .transitions import SqrtDiffusionSampler

logger = get_logger(__name__)

IndicatorFn = Callable[[float, float], Indicator]

# one-dimensional directed percolation, density decay rho(t) ~ t^-delta at criticality
DP_DECAY_EXPONENT = 0.1595


@dataclass
class LatticeField:
    """Nonnegative values on a periodic lattice; spatial axes are the last ``dims``."""

    u: np.ndarray
    dims: int = 1
    dx: float = 1.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.dims not in (1, 2) or self.u.ndim < self.dims:
            raise ConfigurationError(f"field of shape {self.u.shape} is not a {self.dims}-D lattice")

    @property
    def spatial_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.u.ndim - self.dims, self.u.ndim))

    @property
    def L(self) -> int:
        return self.u.shape[-1]

    @property
    def mass(self) -> np.ndarray:
        """Total mass sum(u) dx^dims, one value per run."""
        return self.u.sum(axis=self.spatial_axes) * self.dx**self.dims

    @property
    def extinct(self) -> np.ndarray:
        return ~np.any(self.u > 0, axis=self.spatial_axes)

    def replace(self, u: np.ndarray) -> "LatticeField":
        return LatticeField(u, self.dims, self.dx)


def initial_field(spec: SpdeSpec, n_runs: Optional[int] = None) -> LatticeField:
    """
    Initial data: ``uniform`` (u0 everywhere), ``point`` (u0 at the centre) or
    ``block`` (u0 on a centred cube of ``init_width`` sites per side).
    """
    u = np.zeros(spec.shape)
    if spec.init == "uniform":
        u[...] = spec.u0
    else:
        width = 1 if spec.init == "point" else spec.init_width
        start = (spec.L - width) // 2
        u[(slice(start, start + width),) * spec.dims] = spec.u0
    if n_runs is not None:
        u = np.broadcast_to(u, (n_runs,) + u.shape).copy()
    return LatticeField(u, spec.dims, spec.dx)


def _neighbour_sum(u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    total = np.zeros_like(u)
    for ax in axes:
        total += np.roll(u, 1, axis=ax) + np.roll(u, -1, axis=ax)
    return total


def laplacian(lattice: LatticeField, i: Optional[Tuple[int, ...]] = None):
    """Periodic nearest-neighbour Laplacian; the full array, or its value at site ``i``."""
    axes = lattice.spatial_axes
    lap = (_neighbour_sum(lattice.u, axes) - 2 * lattice.dims * lattice.u) / lattice.dx**2
    if i is None:
        return lap
    return float(lap[i])


def _check_stability(lattice: LatticeField, dt: float) -> float:
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    bound = lattice.dx**2 / (2.0 * lattice.dims)
    if dt > bound * (1.0 + 1e-12):
        raise ConfigurationError(
            f"dt={dt:g} exceeds the explicit Laplacian stability bound "
            f"dx^2/(2*dims)={bound:g}"
        )
    return dt / lattice.dx**2


def _heat(u: np.ndarray, r: float, lattice: LatticeField) -> np.ndarray:
    return (1.0 - 2.0 * lattice.dims * r) * u + r * _neighbour_sum(u, lattice.spatial_axes)


def _noise(lattice: LatticeField, sigma: float, dt: float, stream: RngStream) -> np.ndarray:
    if sigma == 0:
        return lattice.u
    scale = math.sqrt(sigma / lattice.dx**lattice.dims)
    return np.asarray(SqrtDiffusionSampler(scale).step(lattice.u, 0.0, dt, stream))


def sbm_step(lattice: LatticeField, sigma: float, dt: float, stream: RngStream) -> LatticeField:
    """
    One splitting step of the super-random walk.

    Step 1 replaces each site by an exact draw of dX = sqrt(sigma / dx^dims)
    sqrt(X) dW over dt, Step 2 applies one explicit heat step. Sites draw
    from ``stream`` in C order of ``lattice.u``.

    Args:
        lattice (LatticeField): current field, one or more runs
        sigma (float): branching noise strength; 0 gives the heat equation
        dt (float): step length, at most dx^2 / (2 dims)
        stream (RngStream): block stream shared by every site and run

    Returns:
        LatticeField: a new field; ``lattice`` is left unchanged

    Raises:
        ConfigurationError: if dt breaks the stability bound
    """
    r = _check_stability(lattice, dt)
    mid = _noise(lattice, sigma, dt, stream)
    return lattice.replace(_heat(mid, r, lattice))


def contact_step(
    lattice: LatticeField,
    theta: float,
    dt: float,
    stream: RngStream,
    sigma: float = 1.0,
) -> LatticeField:
    """
    One splitting step of the contact-process SPDE.

    Raises:
        ConfigurationError: if the Euler drift step produces a negative value
    """
    r = _check_stability(lattice, dt)
    mid = _noise(lattice, sigma, dt, stream)
    out = _heat(mid, r, lattice) + dt * (theta * mid - mid * mid)
    if np.any(out < 0):
        raise ConfigurationError(
            f"dt={dt:g} is too large for theta={theta:g}: the Euler drift step "
            f"produced a negative density (max field {float(mid.max()):.4g})"
        )
    return lattice.replace(out)


def spde_step(spec: SpdeSpec, lattice: LatticeField, stream: RngStream) -> LatticeField:
    """Dispatch on ``spec.kind`` to ``sbm_step`` or ``contact_step``."""
    if spec.kind == "sbm":
        return sbm_step(lattice, spec.sigma, spec.dt, stream)
    return contact_step(lattice, spec.theta, spec.dt, stream, sigma=spec.sigma)


@dataclass
class Support:
    """Positive set of a single-run field."""

    indices: np.ndarray
    extent: Optional[Tuple[int, int]] = None
    contour: Optional[np.ndarray] = None

    @property
    def empty(self) -> bool:
        return len(self.indices) == 0


def support(lattice: LatticeField) -> Support:
    """
    Sites with u > 0. In 1D ``extent`` is the (min, max) positive index; in 2D
    ``contour`` lists positive sites with a non-positive 4-neighbour.
    """
    if lattice.u.ndim != lattice.dims:
        raise ConfigurationError("support is defined for a single run")
    positive = lattice.u > 0
    indices = np.argwhere(positive)
    if lattice.dims == 1:
        extent = None
        if len(indices):
            extent = (int(indices[:, 0].min()), int(indices[:, 0].max()))
        return Support(indices=indices, extent=extent)

    interior = positive.copy()
    for ax in (0, 1):
        interior &= np.roll(positive, 1, axis=ax) & np.roll(positive, -1, axis=ax)
    return Support(indices=indices, contour=np.argwhere(positive & ~interior))


@dataclass
class SpdeRun:
    """One simulated run with its recorded history."""

    spec: SpdeSpec
    seed: int
    stream_id: int
    final: LatticeField
    t_final: float
    extinction_time: Optional[float] = None
    snapshots: List[Tuple[float, np.ndarray]] = field(default_factory=list)
    support_history: List[Tuple[float, int, int]] = field(default_factory=list)
    mass_history: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def survived(self) -> bool:
        return self.extinction_time is None


def simulate_spde(
    spec: SpdeSpec,
    seed: int,
    stream_id: int = 0,
    snapshot_every: Optional[int] = None,
    stop_on_extinction: bool = True,
) -> SpdeRun:
    """
    Simulate one run up to ``spec.t_max``.

    Zero is absorbing for both models, so the run stops at extinction unless
    ``stop_on_extinction`` is off. Snapshots are taken at t = 0 and every
    ``snapshot_every`` steps; the 1D support extent and the mass are recorded
    every step.
    """
    stream = RngStream(seed, stream_id)
    lattice = initial_field(spec)
    run = SpdeRun(spec=spec, seed=seed, stream_id=stream_id, final=lattice, t_final=0.0)

    def record(step: int, t: float, lat: LatticeField) -> None:
        run.mass_history.append((t, float(lat.mass)))
        if spec.dims == 1:
            ext = support(lat).extent
            if ext is not None:
                run.support_history.append((t, ext[0], ext[1]))
        if snapshot_every and step % snapshot_every == 0:
            run.snapshots.append((t, lat.u.copy()))

    record(0, 0.0, lattice)
    if bool(lattice.extinct):
        run.extinction_time = 0.0
        logger.info("initial field is zero: extinct at t=0")
        return run

    t = 0.0
    for step in range(1, spec.n_steps + 1):
        lattice = spde_step(spec, lattice, stream)
        t = step * spec.dt
        record(step, t, lattice)
        if run.extinction_time is None and bool(lattice.extinct):
            run.extinction_time = t
            logger.info(f"{spec.kind} run (seed={seed}, stream={stream_id}) extinct at t={t:g}")
            if stop_on_extinction:
                break
    run.final = lattice
    run.t_final = t
    return run


def extinction_times(
    spec: SpdeSpec,
    n_runs: int,
    seed: int,
    threads: Optional[int] = None,
    base_stream: int = 0,
    block_size: Optional[int] = None,
) -> np.ndarray:
    """
    Extinction time of each run, ``inf`` for runs alive at ``t_max``.

    Runs are batched ``RUN_BLOCK_SIZE`` per stream; extinct runs leave the
    batch, which stops once every run is dead.
    """
    if n_runs < 1:
        raise ConfigurationError(f"n_runs must be >= 1, got {n_runs}")

    def block(b: int, start: int, stop: int) -> np.ndarray:
        stream = RngStream(seed, base_stream + b)
        lattice = initial_field(spec, stop - start)
        times = np.full(stop - start, np.inf)
        alive = np.flatnonzero(~lattice.extinct)
        times[lattice.extinct] = 0.0
        lattice = lattice.replace(lattice.u[alive])
        for step in range(1, spec.n_steps + 1):
            if alive.size == 0:
                break
            lattice = spde_step(spec, lattice, stream)
            died = lattice.extinct
            if np.any(died):
                times[alive[died]] = step * spec.dt
                alive = alive[~died]
                lattice = lattice.replace(lattice.u[~died])
        logger.debug(f"run block {b}: {alive.size} of {stop - start} alive at t_max")
        return times

    size = block_size or config.RUN_BLOCK_SIZE
    return np.concatenate(run_blocks(block, n_runs, size, threads))


def survival_probability(
    spec: SpdeSpec,
    n_runs: int,
    seed: int,
    threads: Optional[int] = None,
) -> SurvivalEstimate:
    """Fraction of runs with positive mass at t_max, with binomial standard error."""
    times = extinction_times(spec, n_runs, seed, threads)
    survived = int(np.sum(np.isinf(times)))
    p = survived / n_runs
    return SurvivalEstimate(
        probability=p,
        stderr=math.sqrt(p * (1.0 - p) / n_runs),
        n_runs=n_runs,
        n_survived=survived,
        theta=spec.theta if spec.kind == "contact" else None,
        dt=spec.dt,
    )


def _with(spec: SpdeSpec, **changes) -> SpdeSpec:
    return SpdeSpec(**{**spec.model_dump(), **changes})


def survival_sweep(
    spec: SpdeSpec,
    thetas: Sequence[float],
    n_runs: int,
    seed: int,
    threads: Optional[int] = None,
) -> List[SurvivalEstimate]:
    """Survival at each theta, every theta on the same seed."""
    return [
        survival_probability(_with(spec, theta=float(th)), n_runs, seed, threads)
        for th in thetas
    ]


def density_decay(
    spec: SpdeSpec,
    n_runs: int,
    seed: int,
    t_early: float,
    threads: Optional[int] = None,
    exponent: float = DP_DECAY_EXPONENT,
    block_size: Optional[int] = None,
) -> DecayEstimate:
    """
    Ensemble-mean density at ``t_early`` and ``spec.t_max`` and the critical-decay score.

    Each run's density is its mass over the lattice volume; extinct runs count
    as zero and leave the batch. ``score`` compares the decay between the two
    times with the power law t^-exponent, and its standard error comes from
    the run-to-run spread through the delta method.

    Args:
        spec: lattice run, usually ``init="uniform"``
        n_runs: independent runs, batched ``RUN_BLOCK_SIZE`` per stream
        seed: root seed
        t_early: first observation time, rounded to the step grid
        threads: worker threads for the run blocks
        exponent: density-decay exponent expected at the critical point

    Returns:
        DecayEstimate: densities, score and score standard error

    Raises:
        ConfigurationError: if ``t_early`` is not strictly inside (0, t_max)
    """
    if n_runs < 1:
        raise ConfigurationError(f"n_runs must be >= 1, got {n_runs}")
    k_early = int(round(t_early / spec.dt))
    if not 0 < k_early < spec.n_steps:
        raise ConfigurationError(
            f"t_early={t_early:g} must lie strictly between 0 and t_max={spec.t_max:g} "
            f"on the dt={spec.dt:g} grid"
        )
    volume = spec.L**spec.dims * spec.dx**spec.dims

    def block(b: int, start: int, stop: int) -> np.ndarray:
        stream = RngStream(seed, b)
        lattice = initial_field(spec, stop - start)
        rho = np.zeros((stop - start, 2))
        alive = np.flatnonzero(~lattice.extinct)
        lattice = lattice.replace(lattice.u[alive])
        for step in range(1, spec.n_steps + 1):
            if alive.size == 0:
                break
            lattice = spde_step(spec, lattice, stream)
            if step == k_early:
                rho[alive, 0] = lattice.mass / volume
            died = lattice.extinct
            if np.any(died):
                alive = alive[~died]
                lattice = lattice.replace(lattice.u[~died])
        rho[alive, 1] = lattice.mass / volume
        return rho

    size = block_size or config.RUN_BLOCK_SIZE
    rho = np.concatenate(run_blocks(block, n_runs, size, threads))
    early, late = rho.mean(axis=0)
    t1, t2 = k_early * spec.dt, spec.n_steps * spec.dt

    if late > 0:
        score = math.log(late / early) + exponent * math.log(t2 / t1)
        if n_runs > 1:
            cov = np.cov(rho, rowvar=False) / n_runs
            var = cov[0, 0] / early**2 + cov[1, 1] / late**2 - 2 * cov[0, 1] / (early * late)
            score_stderr = math.sqrt(max(float(var), 0.0))
        else:
            score_stderr = math.inf
    else:
        score, score_stderr = -math.inf, 0.0
    return DecayEstimate(
        density_early=float(early),
        density_late=float(late),
        t_early=t1,
        t_late=t2,
        exponent=exponent,
        score=score,
        score_stderr=score_stderr,
        n_runs=n_runs,
        theta=spec.theta if spec.kind == "contact" else None,
        dt=spec.dt,
    )


def _local_slope(sweep: List[Indicator], centre: float, window: float) -> float:
    near = [
        (s.theta, s.score)
        for s in sweep
        if s.theta is not None and abs(s.theta - centre) <= window and math.isfinite(s.score)
    ]
    if len({th for th, _ in near}) < 2:
        return math.nan
    thetas, scores = zip(*near)
    return float(linregress(thetas, scores).slope)


def _bisect_theta(
    indicator_fn: IndicatorFn, dt: float, lo: float, hi: float, tol: float
) -> ThetaCriticalPoint:
    at_lo, at_hi = indicator_fn(lo, dt), indicator_fn(hi, dt)
    sweep = [at_lo, at_hi]
    if not (at_lo.score < 0.0 <= at_hi.score):
        raise ConfigurationError(
            f"theta range [{lo:g}, {hi:g}] does not bracket the critical point at dt={dt:g} "
            f"(score {at_lo.score:.3f} .. {at_hi.score:.3f})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        at_mid = indicator_fn(mid, dt)
        sweep.append(at_mid)
        if at_mid.score >= 0.0:
            hi, at_hi = mid, at_mid
        else:
            lo, at_lo = mid, at_mid

    # theta uncertainty: score noise through the local slope, plus bracket width
    theta_c = 0.5 * (lo + hi)
    slope = _local_slope(sweep, theta_c, 8.0 * (hi - lo))
    noise = 0.0
    spread = [s.score_stderr for s in (at_lo, at_hi) if math.isfinite(s.score_stderr)]
    if slope > 0 and spread:
        noise = float(np.mean(spread)) / slope
    else:
        logger.warning(f"dt={dt:g}: no usable score slope near theta={theta_c:.4f}")
    stderr = math.sqrt(noise**2 + (hi - lo) ** 2 / 12.0)
    sweep.sort(key=lambda s: s.theta if s.theta is not None else 0.0)
    return ThetaCriticalPoint(dt=dt, theta_c=theta_c, stderr=stderr, bracket=[lo, hi], sweep=sweep)


def estimate_theta_c(
    dt_list: Sequence[float],
    spec: SpdeSpec,
    theta_lo: float,
    theta_hi: float,
    n_runs: int,
    seed: int,
    tol: float = 1e-3,
    threads: Optional[int] = None,
    criterion: str = "decay",
    t_early: Optional[float] = None,
    exponent: float = DP_DECAY_EXPONENT,
    indicator_fn: Optional[IndicatorFn] = None,
) -> ThetaCriticalEstimate:
    """
    Critical theta per dt by bisection, then a least-squares line in dt
    extrapolated to dt = 0.

    With ``criterion="decay"`` the bisection looks for the theta where the
    ensemble-mean density from the initial field decays as t^-exponent between
    ``t_early`` (default ``t_max / 4``) and ``spec.t_max``. With
    ``criterion="survival"`` it looks for survival 1/2 at ``spec.t_max``;
    that crossing sits below the critical point unless t_max is far beyond
    the subcritical extinction time of the lattice.

    ``indicator_fn(theta, dt)`` replaces the lattice simulation when given.

    Raises:
        ConfigurationError: fewer than two distinct dt values, an unknown
            criterion, or a theta range that does not bracket the crossing
    """
    dts = sorted({float(h) for h in dt_list}, reverse=True)
    if len(dts) < 2:
        raise ConfigurationError("theta_c extrapolation needs at least two distinct dt values")
    if not theta_lo < theta_hi:
        raise ConfigurationError(f"theta_lo={theta_lo} must be below theta_hi={theta_hi}")
    if criterion not in METHODOLOGY:
        raise ConfigurationError(f"unknown theta_c criterion {criterion!r}; expected one of {sorted(METHODOLOGY)}")

    if indicator_fn is None:
        early = spec.t_max / 4.0 if t_early is None else t_early

        def indicator_fn(theta: float, dt: float) -> Indicator:
            run = _with(spec, kind="contact", theta=theta, dt=dt)
            if criterion == "survival":
                return survival_probability(run, n_runs, seed, threads)
            return density_decay(run, n_runs, seed, early, threads, exponent=exponent)

    points = []
    for dt in dts:
        point = _bisect_theta(indicator_fn, dt, theta_lo, theta_hi, tol)
        logger.info(f"dt={dt:g}: theta_c ~ {point.theta_c:.4f} +/- {point.stderr:.4f}")
        if min(abs(point.theta_c - theta_lo), abs(theta_hi - point.theta_c)) <= tol:
            logger.warning(f"dt={dt:g}: crossing found at the edge of the theta range")
        points.append(point)

    x = np.array([p.dt for p in points])
    y = np.array([p.theta_c for p in points])
    fit = linregress(x, y)
    residuals = y - (fit.intercept + fit.slope * x)
    logger.info(f"extrapolated theta_c = {fit.intercept:.4f} +/- {fit.intercept_stderr:.4f}")
    return ThetaCriticalEstimate(
        points=points,
        theta_c=float(fit.intercept),
        theta_c_stderr=float(fit.intercept_stderr),
        slope=float(fit.slope),
        residuals=[float(r) for r in residuals],
        bisection_tol=tol,
        criterion=criterion,
    )
