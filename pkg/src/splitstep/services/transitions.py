"""
Exact one-step transition samplers.

Each sampler advances the solvable sub-equation dX = beta dt + sigma dW of a
split model over one step, exactly in law. Samplers are immutable and can be
shared between threads; all mutable state lives in the caller's RngStream.
States are scalars or numpy arrays (one entry per path) and results keep the
input's shape.

Samplers that are deterministic functions of the Wiener increment
(``pathwise = True``) also accept an externally supplied increment, which is
what strong-error studies need for coupling coarse and fine paths.
"""

import math
from abc import ABC, abstractmethod
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import gammaincc

from ..core.errors import DomainError, ParameterError, UnsupportedError
from ..core.logging import get_logger
from ..models.params import BoundaryClass, CevParams, SquaredBesselParams
from .rng import POSITIVE_FLOOR, RngStream, ncx2_atom_mass, normal, sample_ncx2

logger = get_logger(__name__)

State = Union[float, np.ndarray]
ScalarMap = Callable[[np.ndarray], np.ndarray]


def _as_state(x: State) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _restore(values: np.ndarray, scalar: bool) -> State:
    return float(values) if scalar else values


def _check_dt(dt: float) -> None:
    if not (dt > 0 and math.isfinite(dt)):
        raise ParameterError(f"time step dt must be > 0, got {dt}")


def _check_nonnegative(x: np.ndarray, sampler: str) -> None:
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        bad = x[~(np.isfinite(x) & (x >= 0))] if x.ndim else x
        raise DomainError(f"{sampler}: state must be finite and >= 0, got {bad!r}")


class TransitionSampler(ABC):
    """Exact map X(t) -> X(t+dt) of a solvable sub-equation."""

    name: str = "transition"
    boundary_class: BoundaryClass = BoundaryClass.NATURAL
    lower: float = 0.0
    martingale: bool = False
    pathwise: bool = False

    @abstractmethod
    def step(self, x: State, t: float, dt: float, stream: RngStream) -> State:
        """Sample X(t+dt) given X(t) = x."""

    def step_with_increment(self, x: State, t: float, dt: float, dw: State) -> State:
        """Advance with a given Wiener increment; only pathwise samplers can."""
        raise UnsupportedError(
            f"{self.name} is sampled from its transition law and cannot be "
            "driven by supplied Wiener increments"
        )

    def drift(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Drift beta of the sub-equation."""
        return np.zeros_like(np.asarray(x, dtype=float))

    @abstractmethod
    def diffusion(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Diffusion coefficient sigma of the sub-equation."""

    def check_initial(self, x0: float) -> None:
        """Raise ``ParameterError`` if ``x0`` lies outside the state space."""
        if not math.isfinite(x0) or x0 < self.lower:
            raise ParameterError(
                f"{self.name}: initial state {x0:g} is outside [{self.lower:g}, inf)"
            )

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class IdentitySampler(TransitionSampler):
    """Step 1 of a model without noise: the state is left unchanged."""

    name = "identity"
    lower = -math.inf
    martingale = True
    pathwise = True

    def step(self, x, t, dt, stream):
        _check_dt(dt)
        arr, scalar = _as_state(x)
        return _restore(arr.copy(), scalar)

    def step_with_increment(self, x, t, dt, dw):
        arr, scalar = _as_state(x)
        return _restore(arr.copy(), scalar)

    def diffusion(self, x, t=0.0):
        return np.zeros_like(np.asarray(x, dtype=float))


class SquaredBesselSampler(TransitionSampler):
    """
    dX = a dt + sigma sqrt(X) dW, sampled as (sigma^2 dt/4) * ncx2(d, lam)
    with d = 4a/sigma^2 and lam = 4x/(sigma^2 dt).
    """

    def __init__(self, params: SquaredBesselParams):
        self.params = params
        self.name = f"squared-bessel(a={params.a:g}, sigma={params.sigma:g})"
        self.martingale = params.a == 0
        if params.a == 0:
            self.boundary_class = BoundaryClass.ABSORBING
        elif params.a >= params.sigma**2 / 2:
            self.boundary_class = BoundaryClass.UNATTAINABLE
        else:
            self.boundary_class = BoundaryClass.REFLECTING

    def noncentrality(self, x: np.ndarray, dt: float) -> np.ndarray:
        return 4.0 * x / (self.params.sigma**2 * dt)

    def step(self, x, t, dt, stream):
        _check_dt(dt)
        arr, scalar = _as_state(x)
        _check_nonnegative(arr, self.name)
        scale = self.params.sigma**2 * dt / 4.0
        draws = sample_ncx2(stream, self.params.d, self.noncentrality(arr, dt))
        return _restore(scale * np.asarray(draws), scalar)

    def absorption_probability(self, x: State, dt: float) -> State:
        """One-step probability of landing exactly on 0."""
        arr, scalar = _as_state(x)
        return _restore(
            np.asarray(ncx2_atom_mass(self.params.d, self.noncentrality(arr, dt))),
            scalar,
        )

    def drift(self, x, t=0.0):
        return np.full_like(np.asarray(x, dtype=float), self.params.a)

    def diffusion(self, x, t=0.0):
        return self.params.sigma * np.sqrt(np.abs(np.asarray(x, dtype=float)))


class SqrtDiffusionSampler(SquaredBesselSampler):
    """Driftless dX = sigma sqrt(X) dW; zero is absorbing."""

    def __init__(self, sigma: float):
        super().__init__(SquaredBesselParams(a=0.0, sigma=sigma))
        self.name = f"sqrt-diffusion(sigma={sigma:g})"


class GbmSampler(TransitionSampler):
    """
    dX = mu X dt + sigma X dW, X(t+dt) = x exp((mu - sigma^2/2) dt + sigma dW).

    The map preserves the sign of x, so any finite state is accepted: zero is
    a fixed point and negative states stay negative. Models that are odd in x
    (Ginzburg-Landau) rely on this once Step 2 overshoots zero. The strict
    ``gbm_step`` entry point requires x > 0.
    """

    pathwise = True
    lower = -math.inf

    def __init__(self, drift: float, sigma: float):
        if not (math.isfinite(drift) and math.isfinite(sigma)):
            raise ParameterError(f"GBM parameters must be finite: mu={drift}, sigma={sigma}")
        self.mu = float(drift)
        self.sigma = float(sigma)
        self.name = f"gbm(mu={drift:g}, sigma={sigma:g})"
        self.martingale = self.mu == 0

    def step(self, x, t, dt, stream):
        _check_dt(dt)
        arr, _ = _as_state(x)
        dw = math.sqrt(dt) * normal(stream, size=arr.shape)
        return self.step_with_increment(x, t, dt, dw)

    def step_with_increment(self, x, t, dt, dw):
        arr, scalar = _as_state(x)
        if np.any(~np.isfinite(arr)):
            raise DomainError(f"{self.name}: state must be finite, got {x!r}")
        growth = (self.mu - 0.5 * self.sigma**2) * dt + self.sigma * np.asarray(dw)
        return _restore(arr * np.exp(growth), scalar)

    def drift(self, x, t=0.0):
        return self.mu * np.asarray(x, dtype=float)

    def diffusion(self, x, t=0.0):
        return self.sigma * np.asarray(x, dtype=float)


class CevSampler(TransitionSampler):
    """
    Driftless CEV dX = sigma X^gamma dW through its squared Bessel time change:

        X(t+dt) = [(gamma-1)^2 sigma^2 dt * ncx2(d, lam)]^(1/(2(1-gamma)))
        lam = x^(2(1-gamma)) / (sigma^2 (gamma-1)^2 dt)
    """

    def __init__(self, params: CevParams):
        self.params = params
        self.boundary_class = params.boundary_class
        self.name = f"cev(gamma={params.gamma:g}, sigma={params.sigma:g}, {self.boundary_class.value})"
        self.martingale = self.boundary_class == BoundaryClass.ABSORBING
        self._power = 2.0 * (1.0 - params.gamma)

    def noncentrality(self, x: np.ndarray, dt: float) -> np.ndarray:
        p = self.params
        with np.errstate(divide="ignore"):
            return x**self._power / (p.sigma**2 * (p.gamma - 1.0) ** 2 * dt)

    def step(self, x, t, dt, stream):
        _check_dt(dt)
        arr, scalar = _as_state(x)
        _check_nonnegative(arr, self.name)
        if self.boundary_class == BoundaryClass.NATURAL and np.any(arr == 0):
            raise DomainError(
                f"{self.name}: zero is unattainable for gamma > 1 and lambda is "
                "undefined there"
            )
        p = self.params
        scale = (p.gamma - 1.0) ** 2 * p.sigma**2 * dt
        draws = np.asarray(sample_ncx2(stream, p.d, self.noncentrality(arr, dt)))
        out = np.zeros_like(draws)
        alive = draws > 0
        out[alive] = np.exp((math.log(scale) + np.log(draws[alive])) / self._power)
        if p.d > 0:
            # zero is only reached through the atom, which d > 0 does not have
            out = np.maximum(out, POSITIVE_FLOOR)
        return _restore(out, scalar)

    def absorption_probability(self, x: State, dt: float) -> State:
        """
        One-step absorption probability from the Poisson-mixture atom:
        sum over j <= |d|/2 of the Poisson(lam/2) weights.
        """
        arr, scalar = _as_state(x)
        lam = self.noncentrality(arr, dt)
        mass = np.asarray(ncx2_atom_mass(self.params.d, lam))
        if self.boundary_class == BoundaryClass.ABSORBING:
            literal = self._complementary_gamma_formula(arr, dt)
            gap = float(np.max(np.abs(literal - mass))) if mass.size else 0.0
            if gap > 1e-9:
                logger.debug(
                    f"{self.name}: complementary-gamma absorption formula differs "
                    f"from the mixture atom by up to {gap:.3g}; using the mixture"
                )
        return _restore(mass, scalar)

    def _complementary_gamma_formula(self, x: np.ndarray, dt: float) -> np.ndarray:
        # G(nu, x^(-2(1-gamma)) / (2 sigma^2 (1-gamma)^2 dt)), taken literally
        p = self.params
        nu = 1.0 / self._power
        with np.errstate(divide="ignore"):
            arg = x ** (-self._power) / (2.0 * p.sigma**2 * (1.0 - p.gamma) ** 2 * dt)
        return gammaincc(nu, arg)

    def check_initial(self, x0: float) -> None:
        super().check_initial(x0)
        if self.boundary_class == BoundaryClass.NATURAL and x0 == 0:
            raise ParameterError(
                f"{self.name}: zero is unattainable for gamma > 1, start from x0 > 0"
            )

    def diffusion(self, x, t=0.0):
        return self.params.sigma * np.abs(np.asarray(x, dtype=float)) ** self.params.gamma


class HTransformSampler(TransitionSampler):
    """
    dX = (1/2) sigma sigma' dt + sigma(X) dW solved through the Lamperti map
    H(z) = integral of 1/sigma: X(t+dt) = H^{-1}(dW + H(x)).
    """

    pathwise = True

    def __init__(
        self,
        h: ScalarMap,
        h_inv: ScalarMap,
        name: str = "h-transform",
        lower: float = -math.inf,
        sigma: Optional[ScalarMap] = None,
        beta: Optional[ScalarMap] = None,
    ):
        self.h = h
        self.h_inv = h_inv
        self.name = name
        self.lower = lower
        self._sigma = sigma
        self._beta = beta

    def step(self, x, t, dt, stream):
        _check_dt(dt)
        arr, _ = _as_state(x)
        dw = math.sqrt(dt) * normal(stream, size=arr.shape)
        return self.step_with_increment(x, t, dt, dw)

    def step_with_increment(self, x, t, dt, dw):
        arr, scalar = _as_state(x)
        with np.errstate(all="ignore"):
            hx = np.asarray(self.h(arr), dtype=float)
        if np.any(~np.isfinite(hx)):
            raise DomainError(f"{self.name}: H(x) is not finite for some states")
        return _restore(np.asarray(self.h_inv(np.asarray(dw) + hx), dtype=float), scalar)

    def drift(self, x, t=0.0):
        if self._beta is None:
            return super().drift(x, t)
        return np.asarray(self._beta(np.asarray(x, dtype=float)), dtype=float)

    def diffusion(self, x, t=0.0):
        if self._sigma is None:
            raise UnsupportedError(f"{self.name} was built without its sigma")
        return np.asarray(self._sigma(np.asarray(x, dtype=float)), dtype=float)


def bessel_flow_sampler() -> HTransformSampler:
    """dX = dt + 2 sqrt(X) dW via the flow (sqrt(x) + dW)^2."""
    return HTransformSampler(
        h=np.sqrt,
        h_inv=np.square,
        name="bessel-flow",
        lower=0.0,
        sigma=lambda x: 2.0 * np.sqrt(np.abs(x)),
        beta=lambda x: np.ones_like(x),
    )


class OrnsteinUhlenbeckSampler(TransitionSampler):
    """dX = -kappa (X - theta) dt + sigma dW, exact Gaussian transition."""

    lower = -math.inf

    def __init__(self, kappa: float, theta: float, sigma: float):
        if not sigma >= 0:
            raise ParameterError(f"sigma must be >= 0, got {sigma}")
        if not kappa >= 0:
            raise ParameterError(f"kappa must be >= 0, got {kappa}")
        self.kappa = float(kappa)
        self.theta = float(theta)
        self.sigma = float(sigma)
        self.name = f"ornstein-uhlenbeck(kappa={kappa:g}, theta={theta:g}, sigma={sigma:g})"
        self.martingale = self.kappa == 0

    def step(self, x, t, dt, stream):
        _check_dt(dt)
        arr, scalar = _as_state(x)
        decay = math.exp(-self.kappa * dt)
        if self.kappa > 0:
            var = self.sigma**2 * (1.0 - decay**2) / (2.0 * self.kappa)
        else:
            var = self.sigma**2 * dt
        z = normal(stream, size=arr.shape)
        return _restore(self.theta + (arr - self.theta) * decay + math.sqrt(var) * z, scalar)

    def drift(self, x, t=0.0):
        return -self.kappa * (np.asarray(x, dtype=float) - self.theta)

    def diffusion(self, x, t=0.0):
        return np.full_like(np.asarray(x, dtype=float), self.sigma)


# Function entry points


def squared_bessel_step(p: SquaredBesselParams, x: State, dt: float, stream: RngStream) -> State:
    """
    Exact step of the squared Bessel / CIR diffusion dX = a dt + sigma sqrt(X) dW.

    The transition is a scaled non-central chi-square,
    X(t+dt) = (sigma^2 dt / 4) * ncx2(d = 4a/sigma^2, lam = 4x/(sigma^2 dt)).
    With a = 0 the law has an atom at zero and the path can be absorbed there.

    Args:
        p (SquaredBesselParams): drift ``a >= 0`` and ``sigma > 0``
        x (State): current value(s), finite and >= 0; scalar or array
        dt (float): step length, > 0
        stream (RngStream): source of the ncx2 draws

    Returns:
        State: the next value(s), same shape as ``x``, always >= 0

    Raises:
        ParameterError: if ``dt`` is not positive and finite
        DomainError: if any state is negative or not finite

    Example:
        >>> p = SquaredBesselParams(a=1.0, sigma=1.0)
        >>> squared_bessel_step(p, 0.5, 0.01, RngStream(7, 0)) >= 0
        True
    """
    return SquaredBesselSampler(p).step(x, 0.0, dt, stream)


def sqrt_diffusion_step(x: State, dt: float, sigma: float, stream: RngStream) -> State:
    """Exact step of dX = sigma sqrt(X) dW; zero is absorbing."""
    return SqrtDiffusionSampler(sigma).step(x, 0.0, dt, stream)


def gbm_step(x: State, dt: float, drift: float, sigma: float, stream: RngStream) -> State:
    """
    Exact step of dX = drift X dt + sigma X dW on the positive half-line.

    Raises:
        DomainError: unless every state is > 0. ``GbmSampler`` itself also
            maps zero and negative states, which split schemes rely on.
    """
    arr, _ = _as_state(x)
    if np.any(~(arr > 0)):
        raise DomainError(f"gbm_step needs x > 0, got {x!r}")
    return GbmSampler(drift, sigma).step(x, 0.0, dt, stream)


def cev_step(p: CevParams, x: State, dt: float, stream: RngStream) -> State:
    """
    Exact step of the driftless CEV diffusion dX = sigma X^gamma dW.

    The regime follows ``p.gamma``: natural for gamma > 1, absorbing for
    gamma = 1 - 1/(2n), reflecting below 1/2. All three are sampled as a
    power of a scaled ncx2 draw.

    Args:
        p (CevParams): gamma, sigma and the optional boundary choice
        x (State): current value(s), >= 0 (> 0 in the natural regime)
        dt (float): step length, > 0
        stream (RngStream): source of the ncx2 draws

    Returns:
        State: the next value(s); exactly 0 once absorbed

    Note:
        For absorbing gamma the one-step chance of hitting zero is
        ``CevSampler(p).absorption_probability(x, dt)``.
    """
    return CevSampler(p).step(x, 0.0, dt, stream)


def h_transform_step(
    h: ScalarMap, h_inv: ScalarMap, x: State, dt: float, stream: RngStream
) -> State:
    """H^{-1}(sqrt(dt) z + H(x)) for a monotone H with inverse H^{-1}."""
    return HTransformSampler(h, h_inv).step(x, 0.0, dt, stream)


def ou_step(
    x: State, dt: float, kappa: float, theta: float, sigma: float, stream: RngStream
) -> State:
    """
    Exact Gaussian step of dX = -kappa (X - theta) dt + sigma dW.

    Args:
        x (State): current value(s), any real
        dt (float): step length, > 0
        kappa (float): mean-reversion rate, >= 0 (0 gives Brownian motion)
        theta (float): long-run mean
        sigma (float): noise scale, >= 0
        stream (RngStream): source of the normal draws

    Returns:
        State: theta + (x - theta) e^{-kappa dt} plus a centred normal of
        variance sigma^2 (1 - e^{-2 kappa dt}) / (2 kappa)

    Raises:
        ParameterError: for negative kappa or sigma, or a bad dt
    """
    return OrnsteinUhlenbeckSampler(kappa, theta, sigma).step(x, 0.0, dt, stream)
