"""
Ready-made split models.

A ``SplitModel`` bundles the Step-1 sampler, the Step-2 drift alpha and the
full coefficients f and sigma of the same SDE, together with whatever exact
statistics are known (conditional mean, pathwise reference solution, boundary
class). Construction checks on a grid that alpha + beta = f and that the
Step-1 diffusion equals sigma, so a split and its baselines always describe
the same equation.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from ..core.errors import ConfigurationError, UnsupportedError
from ..core.logging import get_logger
from ..models.params import BoundaryChoice, BoundaryClass, CevParams, SquaredBesselParams
from .integrator import (
    BaselineScheme,
    Drift,
    OdeStepper,
    PathwiseReference,
    SchemeReference,
    SplitScheme,
)
from .transitions import (
    CevSampler,
    GbmSampler,
    HTransformSampler,
    OrnsteinUhlenbeckSampler,
    SqrtDiffusionSampler,
    SquaredBesselSampler,
    TransitionSampler,
    bessel_flow_sampler,
)

logger = get_logger(__name__)

KnownMean = Callable[[float, float], float]
ReferenceFactory = Callable[[np.ndarray], PathwiseReference]

CONSISTENCY_TOL = 1e-12
_CHECK_TIMES = (0.0, 0.7)


@dataclass(frozen=True)
class SplitModel:
    """An SDE dX = (alpha + beta) dt + sigma dW with its splitting."""

    name: str
    step1: TransitionSampler
    alpha: Drift
    f: Drift
    sigma: Drift
    stepper: OdeStepper = field(default_factory=OdeStepper)
    domain: Tuple[float, float] = (0.0, math.inf)
    known_mean: Optional[KnownMean] = None
    reference: Optional[ReferenceFactory] = None
    boundary_class: BoundaryClass = BoundaryClass.NATURAL
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.check_consistency()

    def beta(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.step1.drift(x, t)

    def check_grid_points(self) -> np.ndarray:
        lo, hi = self.domain
        start = lo + 0.05 if math.isfinite(lo) else -3.0
        stop = hi - 0.05 if math.isfinite(hi) else start + 3.0
        return np.linspace(start, stop, 13)

    def check_consistency(self) -> None:
        """Raise ``ConfigurationError`` unless the split reproduces f and sigma."""
        x = self.check_grid_points()
        for t in _CHECK_TIMES:
            full = np.asarray(self.f(x, t), dtype=float)
            split = np.asarray(self.alpha(x, t), dtype=float) + self.beta(x, t)
            if np.any(np.abs(split - full) > CONSISTENCY_TOL * (1.0 + np.abs(full))):
                raise ConfigurationError(
                    f"model {self.name}: alpha + beta does not reproduce the drift f"
                )
            sig = np.asarray(self.sigma(x, t), dtype=float)
            step1_sig = self.step1.diffusion(x, t)
            if np.any(np.abs(step1_sig - sig) > CONSISTENCY_TOL * (1.0 + np.abs(sig))):
                raise ConfigurationError(
                    f"model {self.name}: Step-1 diffusion differs from sigma"
                )

    def check_initial(self, x0: float) -> None:
        """Reject a starting value outside the Step-1 state space before any run."""
        self.step1.check_initial(float(x0))

    def scheme(self, stepper: Optional[OdeStepper] = None) -> SplitScheme:
        return SplitScheme(self.step1, stepper or self.stepper, self.alpha, label="split")

    def baseline(self, method: str) -> BaselineScheme:
        return BaselineScheme(method, self.f, self.sigma)

    def make_reference(self, x0: np.ndarray) -> PathwiseReference:
        """Exact pathwise solution if known, else the split scheme on the fine grid."""
        if self.reference is not None:
            return self.reference(x0)
        return SchemeReference(self.scheme(), x0)

    def mean(self, x0: float, t: float) -> float:
        if self.known_mean is None:
            raise UnsupportedError(f"model {self.name} has no known conditional mean")
        return self.known_mean(x0, t)


def _const(value: float) -> Drift:
    return lambda x, t: np.full_like(np.asarray(x, dtype=float), value)


def _linear(slope: float, offset: float = 0.0) -> Drift:
    return lambda x, t: offset + slope * np.asarray(x, dtype=float)


def _step2_stepper(step2: str, rate: float, offset: float = 0.0) -> OdeStepper:
    """Euler (default), the exact flow of alpha = offset + rate x, or any named stepper."""
    if step2 == "exact":
        if rate == 0:
            return OdeStepper("exact", flow=lambda x, t, dt: x + offset * dt)
        shift = offset / rate
        return OdeStepper(
            "exact", flow=lambda x, t, dt: (x + shift) * math.exp(rate * dt) - shift
        )
    if step2 == "euler":
        return OdeStepper("explicit-euler")
    return OdeStepper(step2)


def linear_growth_mean(x0: float, t: float) -> float:
    return (x0 + 1.0) * math.exp(t) - 1.0


def model_test_eq(variant: str = "transition", step2: str = "euler") -> SplitModel:
    """
    dX = (1 + X) dt + 2 sqrt(X) dW.

    ``transition`` splits alpha = 1 + X with the exact sqrt-diffusion law
    (sigma = 2) as Step 1. ``bessel-flow`` splits alpha = X, beta = 1 and uses
    the flow (sqrt(x) + W)^2 as Step 1, which is pathwise.
    """
    f = _linear(1.0, 1.0)
    sigma = lambda x, t: 2.0 * np.sqrt(np.abs(x))  # noqa: E731
    if variant == "transition":
        step1: TransitionSampler = SqrtDiffusionSampler(2.0)
        alpha = _linear(1.0, 1.0)
    elif variant == "bessel-flow":
        step1 = bessel_flow_sampler()
        alpha = _linear(1.0)
    else:
        raise ConfigurationError(
            f"unknown test-equation variant '{variant}'; use transition or bessel-flow"
        )
    return SplitModel(
        name=f"test-equation[{variant}]",
        step1=step1,
        alpha=alpha,
        f=f,
        sigma=sigma,
        stepper=_step2_stepper(step2, 1.0, 0.0 if variant == "bessel-flow" else 1.0),
        known_mean=linear_growth_mean,
        boundary_class=BoundaryClass.REFLECTING,
        params={"variant": variant, "step2": step2},
    )


class GinzburgLandauReference(PathwiseReference):
    """
    Pathwise solution of dX = (X - X^3) dt + X dW:

        X(t) = x0 e^{t/2 + W(t)} / sqrt(1 + 2 x0^2 int_0^t e^{s + 2 W(s)} ds)

    with the integral accumulated by the trapezoid rule on the fine grid.
    """

    def __init__(self, x0: np.ndarray):
        self.x0 = np.array(x0, dtype=float)
        self.t = 0.0
        self.w = np.zeros_like(self.x0)
        self.integral = np.zeros_like(self.x0)
        self._integrand = np.ones_like(self.x0)

    def advance(self, t, dt, dw):
        self.w = self.w + dw
        self.t = t + dt
        integrand = np.exp(self.t + 2.0 * self.w)
        self.integral = self.integral + 0.5 * dt * (self._integrand + integrand)
        self._integrand = integrand

    @property
    def value(self):
        x0 = self.x0
        return x0 * np.exp(0.5 * self.t + self.w) / np.sqrt(1.0 + 2.0 * x0**2 * self.integral)


def gl_exact_solution(x0: np.ndarray, dt: float, dw: np.ndarray) -> np.ndarray:
    """``GinzburgLandauReference`` at the end of a uniform grid, rows of ``dw`` per step."""
    ref = GinzburgLandauReference(np.asarray(x0, dtype=float) * np.ones(np.shape(dw)[1:]))
    for n, inc in enumerate(np.asarray(dw, dtype=float)):
        ref.advance(n * dt, dt, inc)
    return ref.value


class GbmReference(PathwiseReference):
    """x0 exp((mu - sigma^2/2) t + sigma W(t))."""

    def __init__(self, x0: np.ndarray, mu: float, sigma: float):
        self.x0 = np.array(x0, dtype=float)
        self.mu = mu
        self.sigma = sigma
        self.t = 0.0
        self.w = np.zeros_like(self.x0)

    def advance(self, t, dt, dw):
        self.w = self.w + dw
        self.t = t + dt

    @property
    def value(self):
        return self.x0 * np.exp((self.mu - 0.5 * self.sigma**2) * self.t + self.sigma * self.w)


def model_ginzburg_landau(step2: str = "gl-nonstandard") -> SplitModel:
    """dX = (X - X^3) dt + X dW; Step 1 is GBM(1, 1), Step 2 the sink -X^3."""
    return SplitModel(
        name="ginzburg-landau",
        step1=GbmSampler(1.0, 1.0),
        alpha=lambda x, t: -np.asarray(x, dtype=float) ** 3,
        f=lambda x, t: x - x**3,
        sigma=lambda x, t: np.asarray(x, dtype=float),
        stepper=OdeStepper("explicit-euler" if step2 == "euler" else step2),
        reference=GinzburgLandauReference,
        boundary_class=BoundaryClass.NATURAL,
        params={"step2": step2},
    )


def model_cir(a: float, b: float, sigma: float, step2: str = "euler") -> SplitModel:
    """
    Cox-Ingersoll-Ross model dX = (a + b X) dt + sigma sqrt(X) dW.

    Step 1 is the exact squared Bessel law of dX = a dt + sigma sqrt(X) dW,
    Step 2 integrates the remaining linear drift dX = b X dt.

    Args:
        a (float): constant drift, >= 0; ``a >= sigma^2/2`` keeps paths off zero
        b (float): linear rate
        sigma (float): noise scale, > 0
        step2 (str, optional): ``euler`` (default), ``exact`` or a named stepper

    Returns:
        SplitModel: with the exact mean (x0 + a/b) e^{bt} - a/b, or x0 + a t at b = 0

    Raises:
        ParameterError: if ``a < 0`` or ``sigma <= 0``

    Example:
        >>> model = model_cir(a=1.0, b=1.0, sigma=1.0)
        >>> round(model.mean(1.0, 1.0), 6)  # 2e - 1
        4.436564
    """
    step1 = SquaredBesselSampler(SquaredBesselParams(a=a, sigma=sigma))

    def mean(x0: float, t: float) -> float:
        if b == 0:
            return x0 + a * t
        return (x0 + a / b) * math.exp(b * t) - a / b

    return SplitModel(
        name="cir",
        step1=step1,
        alpha=_linear(b),
        f=_linear(b, a),
        sigma=lambda x, t: sigma * np.sqrt(np.abs(x)),
        stepper=_step2_stepper(step2, b),
        known_mean=mean,
        boundary_class=step1.boundary_class,
        params={"a": a, "b": b, "sigma": sigma, "step2": step2},
    )


def model_cev(
    mu: float,
    sigma: float,
    gamma: float,
    boundary_choice: Optional[str] = None,
    step2: str = "euler",
) -> SplitModel:
    """
    dX = mu X dt + sigma X^gamma dW; Step 1 is the driftless CEV law.

    The mean x0 e^{mu t} is exact only in the absorbing regime, where the
    driftless part is a true martingale.
    """
    choice = BoundaryChoice(boundary_choice) if boundary_choice else None
    step1 = CevSampler(CevParams(gamma=gamma, sigma=sigma, boundary_choice=choice))
    known = None
    if step1.boundary_class == BoundaryClass.ABSORBING:
        known = lambda x0, t: x0 * math.exp(mu * t)  # noqa: E731
    return SplitModel(
        name="cev",
        step1=step1,
        alpha=_linear(mu),
        f=_linear(mu),
        sigma=lambda x, t: sigma * np.abs(x) ** gamma,
        stepper=_step2_stepper(step2, mu),
        known_mean=known,
        boundary_class=step1.boundary_class,
        params={
            "mu": mu,
            "sigma": sigma,
            "gamma": gamma,
            "boundary_choice": boundary_choice,
            "step2": step2,
        },
    )


NAMED_DRIFTS: Dict[str, Drift] = {
    "zero": _const(0.0),
    "cubic": lambda x, t: -np.asarray(x, dtype=float) ** 3,
    "logistic": lambda x, t: -np.asarray(x, dtype=float) ** 2,
}


def model_linear_plus_drift(
    alpha_fn: Any = "zero",
    lam: float = 0.0,
    sigma: float = 1.0,
    stepper: str = "explicit-euler",
) -> SplitModel:
    """
    dX = (alpha(X) + lam X) dt + sigma X dW with GBM(lam, sigma) as Step 1.

    ``alpha_fn`` is a drift callable ``(x, t)`` or one of the names in
    ``NAMED_DRIFTS``.
    """
    label = alpha_fn if isinstance(alpha_fn, str) else getattr(alpha_fn, "__name__", "custom")
    if isinstance(alpha_fn, str):
        if alpha_fn not in NAMED_DRIFTS:
            raise ConfigurationError(
                f"unknown drift '{alpha_fn}'; choose one of {', '.join(NAMED_DRIFTS)}"
            )
        alpha = NAMED_DRIFTS[alpha_fn]
    else:
        alpha = alpha_fn

    known = None
    reference = None
    if label == "zero":
        known = lambda x0, t: x0 * math.exp(lam * t)  # noqa: E731

        def reference(x0: np.ndarray) -> PathwiseReference:
            return GbmReference(x0, lam, sigma)

    return SplitModel(
        name=f"linear-plus-drift[{label}]",
        step1=GbmSampler(lam, sigma),
        alpha=alpha,
        f=lambda x, t: alpha(x, t) + lam * np.asarray(x, dtype=float),
        sigma=lambda x, t: sigma * np.asarray(x, dtype=float),
        stepper=OdeStepper(stepper),
        known_mean=known,
        reference=reference,
        boundary_class=BoundaryClass.NATURAL,
        params={"alpha_fn": label, "lam": lam, "sigma": sigma, "stepper": stepper},
    )


def model_ornstein_uhlenbeck(kappa: float, theta: float, sigma: float) -> SplitModel:
    """dX = -kappa (X - theta) dt + sigma dW, sampled exactly; alpha = 0."""
    step1 = OrnsteinUhlenbeckSampler(kappa, theta, sigma)
    return SplitModel(
        name="ornstein-uhlenbeck",
        step1=step1,
        alpha=_const(0.0),
        f=lambda x, t: -kappa * (np.asarray(x, dtype=float) - theta),
        sigma=lambda x, t: np.full_like(np.asarray(x, dtype=float), sigma),
        domain=(-math.inf, math.inf),
        known_mean=lambda x0, t: theta + (x0 - theta) * math.exp(-kappa * t),
        params={"kappa": kappa, "theta": theta, "sigma": sigma},
    )


def rewrite_sigma_split(
    f: Drift,
    sigma: Drift,
    sigma_prime: Optional[Drift] = None,
    h: float = 1e-6,
) -> Tuple[Drift, Drift]:
    """
    Split the drift as beta = sigma sigma'/2, alpha = f - beta.

    Without ``sigma_prime`` the derivative is a central difference with step
    ``h * max(1, |x|)``.
    """

    def derivative(x, t):
        x = np.asarray(x, dtype=float)
        if sigma_prime is not None:
            return np.asarray(sigma_prime(x, t), dtype=float)
        step = h * np.maximum(1.0, np.abs(x))
        return (np.asarray(sigma(x + step, t)) - np.asarray(sigma(x - step, t))) / (2.0 * step)

    def beta(x, t):
        return 0.5 * np.asarray(sigma(x, t), dtype=float) * derivative(x, t)

    def alpha(x, t):
        return np.asarray(f(x, t), dtype=float) - beta(x, t)

    return alpha, beta


def model_sigma_rewrite(
    f: Drift,
    sigma: Drift,
    h_map: Callable[[np.ndarray], np.ndarray],
    h_inv: Callable[[np.ndarray], np.ndarray],
    sigma_prime: Optional[Drift] = None,
    name: str = "sigma-rewrite",
    domain: Tuple[float, float] = (0.0, math.inf),
    stepper: str = "explicit-euler",
    known_mean: Optional[KnownMean] = None,
) -> SplitModel:
    """
    Any dX = f dt + sigma dW split through the sigma sigma'/2 rewrite, with
    Step 1 solved by the Lamperti map ``h_map`` (dH/dx = 1/sigma).
    """
    alpha, beta = rewrite_sigma_split(f, sigma, sigma_prime)
    step1 = HTransformSampler(
        h_map,
        h_inv,
        name=f"{name}:h-transform",
        lower=domain[0],
        sigma=lambda x: sigma(x, 0.0),
        beta=lambda x: beta(x, 0.0),
    )
    return SplitModel(
        name=name,
        step1=step1,
        alpha=alpha,
        f=f,
        sigma=sigma,
        stepper=OdeStepper(stepper),
        domain=domain,
        known_mean=known_mean,
    )


MODEL_CATALOG: Dict[str, Callable[..., SplitModel]] = {
    "test-equation": model_test_eq,
    "ginzburg-landau": model_ginzburg_landau,
    "cir": model_cir,
    "cev": model_cev,
    "linear-plus-drift": model_linear_plus_drift,
    "ornstein-uhlenbeck": model_ornstein_uhlenbeck,
}


def build_model(name: str, params: Optional[Dict[str, Any]] = None) -> SplitModel:
    """
    Build a catalog model by name.

    Raises:
        ConfigurationError: unknown name or parameters the builder rejects
    """
    builder = MODEL_CATALOG.get(name)
    if builder is None:
        raise ConfigurationError(
            f"unknown model '{name}'; available models: {', '.join(sorted(MODEL_CATALOG))}"
        )
    try:
        model = builder(**(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for model '{name}': {exc}") from exc
    logger.debug(f"built model {model.name} with {model.params}")
    return model
