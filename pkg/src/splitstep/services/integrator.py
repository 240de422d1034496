"""
Splitting-step integrator and baseline schemes.

One splitting step advances the exact stochastic sub-equation first
(Step 1, a ``TransitionSampler``) and then integrates the remaining drift
alpha deterministically over the same dt (Step 2, an ``OdeStepper``).
Baseline schemes integrate the full equation directly and exist for
comparison in the convergence studies.

Every scheme works on a vector of paths at once. Schemes that can be driven
by supplied Wiener increments (``pathwise``) accept ``dw`` so coarse and fine
grids can share one Brownian path.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..core.config import config
from ..core.errors import ConfigurationError, PathError, SplitStepError, UnsupportedError
from ..core.logging import get_logger
from .ensemble import run_blocks
from .rng import RngStream, normal
from .transitions import State, TransitionSampler

logger = get_logger(__name__)

Drift = Callable[[np.ndarray, float], np.ndarray]
Flow = Callable[[np.ndarray, float, float], np.ndarray]

ODE_METHODS = ("explicit-euler", "heun", "rk4", "gl-nonstandard", "exact")
BASELINE_METHODS = ("euler-maruyama", "abs-sqrt-euler", "split-step-backward-euler")

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 100
FIXED_POINT_DAMPING = 0.5


def gl_nonstandard_step(x: State, dt: float) -> State:
    """
    Partially implicit step for dX = -X^3 dt.

    Solves x' = x - (dt/2) x^2 (x + x') in closed form, giving
    x' = x (1 - dt x^2/2) / (1 + dt x^2/2); x' >= 0 whenever x^2 dt < 2.
    """
    arr = np.asarray(x, dtype=float)
    half = 0.5 * dt * arr * arr
    out = arr * (1.0 - half) / (1.0 + half)
    return float(out) if arr.ndim == 0 else out


class OdeStepper:
    """Deterministic one-step integrator for dx/dt = alpha(x, t)."""

    def __init__(self, method: str = "explicit-euler", flow: Optional[Flow] = None):
        if method not in ODE_METHODS:
            raise ConfigurationError(
                f"unknown ODE stepper '{method}'; choose one of {', '.join(ODE_METHODS)}"
            )
        if method == "exact" and flow is None:
            raise ConfigurationError("the exact stepper needs the drift's flow map")
        self.method = method
        self.flow = flow

    def step(self, x: np.ndarray, t: float, dt: float, drift: Drift) -> np.ndarray:
        m = self.method
        if m == "explicit-euler":
            return x + dt * drift(x, t)
        if m == "heun":
            k1 = drift(x, t)
            k2 = drift(x + dt * k1, t + dt)
            return x + 0.5 * dt * (k1 + k2)
        if m == "rk4":
            k1 = drift(x, t)
            k2 = drift(x + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = drift(x + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = drift(x + dt * k3, t + dt)
            return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if m == "gl-nonstandard":
            # the cubic sink -x^3 is built into the step; ``drift`` is not consulted
            return np.asarray(gl_nonstandard_step(x, dt))
        return self.flow(x, t, dt)

    def __repr__(self) -> str:
        return f"OdeStepper({self.method})"


class Scheme(ABC):
    """One-step scheme over a vector of paths."""

    label: str = "scheme"

    @property
    @abstractmethod
    def pathwise(self) -> bool:
        """Whether ``advance`` accepts supplied Wiener increments."""

    @abstractmethod
    def advance(
        self,
        y: np.ndarray,
        t: float,
        dt: float,
        stream: Optional[RngStream],
        dw: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Advance the states ``y`` from t to t + dt."""


@dataclass
class SplitScheme(Scheme):
    """Step 1 (exact transition) followed by Step 2 (ODE step on alpha)."""

    step1: TransitionSampler
    stepper: OdeStepper
    drift: Drift
    label: str = "split"

    @property
    def pathwise(self) -> bool:
        return self.step1.pathwise

    def intermediate(self, y, t, dt, stream, dw=None) -> np.ndarray:
        """Step 1 alone."""
        if dw is not None:
            return np.asarray(self.step1.step_with_increment(y, t, dt, dw))
        return np.asarray(self.step1.step(y, t, dt, stream))

    def advance(self, y, t, dt, stream, dw=None):
        mid = self.intermediate(y, t, dt, stream, dw)
        return self.stepper.step(mid, t, dt, self.drift)


@dataclass
class BaselineScheme(Scheme):
    """Direct discretisations of dX = f dt + g dW."""

    method: str
    f: Drift
    g: Drift
    label: str = field(default="")

    def __post_init__(self):
        if self.method not in BASELINE_METHODS:
            raise ConfigurationError(
                f"unknown baseline '{self.method}'; choose one of {', '.join(BASELINE_METHODS)}"
            )
        if not self.label:
            self.label = self.method

    @property
    def pathwise(self) -> bool:
        return True

    def advance(self, y, t, dt, stream, dw=None):
        y = np.asarray(y, dtype=float)
        if dw is None:
            if stream is None:
                raise UnsupportedError(f"{self.label} needs a stream or increments")
            dw = math.sqrt(dt) * normal(stream, size=y.shape)
        if self.method == "euler-maruyama":
            return y + self.f(y, t) * dt + self.g(y, t) * dw
        if self.method == "abs-sqrt-euler":
            return y + self.f(y, t) * dt + self.g(np.abs(y), t) * dw
        implicit = self._implicit_stage(y, t, dt)
        return implicit + self.g(implicit, t + dt) * dw

    def _implicit_stage(self, y: np.ndarray, t: float, dt: float) -> np.ndarray:
        # damped fixed point for z = y + dt f(z)
        z = y.copy()
        for _ in range(FIXED_POINT_MAX_ITER):
            update = (1.0 - FIXED_POINT_DAMPING) * z + FIXED_POINT_DAMPING * (
                y + dt * self.f(z, t + dt)
            )
            gap = np.max(np.abs(update - z) / (1.0 + np.abs(z))) if z.size else 0.0
            z = update
            if not np.isfinite(gap):
                break
            if gap <= FIXED_POINT_TOL:
                return z
        raise SplitStepError(
            f"implicit stage did not converge in {FIXED_POINT_MAX_ITER} iterations at dt={dt:g}"
        )


def advance(
    scheme: Scheme,
    y: State,
    t: float,
    dt: float,
    stream: Optional[RngStream],
    dw: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Advance ``y`` by exactly one step of ``dt``."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    return scheme.advance(np.asarray(y, dtype=float), t, dt, stream, dw)


def check_grid(t_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ConfigurationError("time grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ConfigurationError("time grid must be strictly increasing")
    return grid


def uniform_grid(t_end: float, dt: float, t0: float = 0.0) -> np.ndarray:
    """Grid t0, t0+dt, ..., t_end; ``t_end - t0`` must be a multiple of dt."""
    n = int(round((t_end - t0) / dt))
    if n < 1 or not math.isclose(n * dt, t_end - t0, rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigurationError(
            f"horizon {t_end - t0:g} is not a positive multiple of dt={dt:g}"
        )
    return t0 + dt * np.arange(n + 1)


def simulate_path(
    scheme: Scheme,
    x0: State,
    t_grid: Sequence[float],
    stream: Optional[RngStream],
    increments: Optional[np.ndarray] = None,
    record: bool = True,
    path_offset: int = 0,
) -> np.ndarray:
    """
    Run ``scheme`` along ``t_grid`` from ``x0``.

    ``x0`` may hold several paths; ``increments`` (shape ``(n_steps,) +
    x0.shape``) drives pathwise schemes instead of the stream. With ``record``
    the result has one row per grid time, otherwise only the final state is
    returned. Any sub-step failure is re-raised as ``PathError`` carrying the
    step index and time.
    """
    grid = check_grid(t_grid)
    y = np.array(x0, dtype=float)
    if increments is not None:
        if not scheme.pathwise:
            raise UnsupportedError(f"{scheme.label} cannot take supplied increments")
        increments = np.asarray(increments, dtype=float)
        if increments.shape[0] != grid.size - 1:
            raise ConfigurationError(
                f"{increments.shape[0]} increments for {grid.size - 1} steps"
            )

    out = np.empty((grid.size,) + y.shape) if record else None
    if record:
        out[0] = y
    for n in range(grid.size - 1):
        t, dt = grid[n], grid[n + 1] - grid[n]
        dw = None if increments is None else increments[n]
        try:
            y = scheme.advance(y, t, dt, stream, dw)
        except (PathError, ConfigurationError):
            raise
        except SplitStepError as exc:
            raise PathError(str(exc), step=n, t=t) from exc
        bad = ~np.isfinite(y)
        if np.any(bad):
            first = int(np.flatnonzero(bad)[0]) if y.ndim else None
            raise PathError(
                "state became non-finite",
                step=n,
                t=t,
                path=None if first is None else path_offset + first,
            )
        if record:
            out[n + 1] = y
    return out if record else y


def simulate_ensemble(
    scheme: Scheme,
    x0: float,
    t_grid: Sequence[float],
    n_paths: int,
    seed: int,
    threads: Optional[int] = None,
    record: bool = True,
    base_stream: int = 0,
    block_size: Optional[int] = None,
) -> np.ndarray:
    """
    Simulate ``n_paths`` independent paths, block b on stream ``base_stream + b``.

    Returns an ``(n_paths, n_times)`` array when recording, else the
    ``(n_paths,)`` final states.
    """
    if n_paths < 1:
        raise ConfigurationError(f"n_paths must be >= 1, got {n_paths}")
    grid = check_grid(t_grid)
    size = block_size or config.PATH_BLOCK_SIZE

    def block(b: int, start: int, stop: int) -> np.ndarray:
        stream = RngStream(seed, base_stream + b)
        x = np.full(stop - start, float(x0))
        values = simulate_path(scheme, x, grid, stream, record=record, path_offset=start)
        return values.T if record else values

    logger.debug(f"{scheme.label}: {n_paths} paths over {grid.size - 1} steps")
    return np.concatenate(run_blocks(block, n_paths, size, threads), axis=0)


class PathwiseReference(ABC):
    """
    Reference solution driven by the same fine Wiener increments as the
    schemes under test, consumed one fine step at a time.
    """

    @abstractmethod
    def advance(self, t: float, dt: float, dw: np.ndarray) -> None:
        """Consume the increment over [t, t + dt]."""

    @property
    @abstractmethod
    def value(self) -> np.ndarray:
        """Reference state at the current time."""


class SchemeReference(PathwiseReference):
    """A pathwise scheme run on the fine grid, used when no closed form exists."""

    def __init__(self, scheme: Scheme, x0: np.ndarray):
        if not scheme.pathwise:
            raise UnsupportedError(
                f"{scheme.label} cannot be driven by increments, so it cannot serve "
                "as a fine-grid reference"
            )
        self.scheme = scheme
        self._y = np.array(x0, dtype=float)

    def advance(self, t, dt, dw):
        self._y = self.scheme.advance(self._y, t, dt, None, dw)

    @property
    def value(self):
        return self._y
