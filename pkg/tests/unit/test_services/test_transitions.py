"""
Unit tests for exact transition samplers
"""
import math

import numpy as np
import pytest

from splitstep.core.errors import DomainError, ParameterError, UnsupportedError
from splitstep.models.params import BoundaryClass, CevParams, SquaredBesselParams
from splitstep.services.rng import RngStream, normal
from splitstep.services.transitions import (
    CevSampler,
    GbmSampler,
    HTransformSampler,
    IdentitySampler,
    OrnsteinUhlenbeckSampler,
    SqrtDiffusionSampler,
    SquaredBesselSampler,
    bessel_flow_sampler,
    cev_step,
    gbm_step,
    h_transform_step,
    ou_step,
    sqrt_diffusion_step,
    squared_bessel_step,
)

N = 200_000


def assert_mean(draws: np.ndarray, expected: float, n_se: float = 4.0) -> None:
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - expected) < n_se * se + 1e-12


@pytest.mark.unit
class TestSquaredBessel:
    """Test the squared Bessel and sqrt-diffusion samplers"""

    def test_boundary_classes(self):
        """Test the boundary class follows a against sigma^2/2"""
        assert SquaredBesselSampler(SquaredBesselParams(a=0.0, sigma=1.0)).boundary_class == BoundaryClass.ABSORBING
        assert SquaredBesselSampler(SquaredBesselParams(a=0.2, sigma=1.0)).boundary_class == BoundaryClass.REFLECTING
        assert SquaredBesselSampler(SquaredBesselParams(a=0.5, sigma=1.0)).boundary_class == BoundaryClass.UNATTAINABLE

    def test_martingale_only_without_drift(self):
        """Test only the driftless case is a martingale"""
        assert SqrtDiffusionSampler(2.0).martingale
        assert not SquaredBesselSampler(SquaredBesselParams(a=1.0, sigma=2.0)).martingale

    def test_scalar_in_scalar_out(self, stream):
        """Test a scalar state gives a float"""
        value = squared_bessel_step(SquaredBesselParams(a=1.0, sigma=1.0), 1.0, 0.1, stream)
        assert isinstance(value, float)
        assert value >= 0

    def test_mean(self, stream):
        """Test E X(dt) = x + a dt"""
        p = SquaredBesselParams(a=1.0, sigma=2.0)
        draws = squared_bessel_step(p, np.full(N, 1.0), 0.5, stream)
        assert_mean(draws, 1.5)

    def test_sqrt_diffusion_is_martingale(self, stream):
        """Test E X(dt) = x and an atom at zero"""
        draws = sqrt_diffusion_step(np.full(N, 1.0), 0.5, 2.0, stream)
        assert_mean(draws, 1.0)
        assert np.any(draws == 0.0)
        assert draws.min() >= 0.0

    def test_zero_is_absorbing(self, stream):
        """Test a dead site stays dead"""
        assert sqrt_diffusion_step(0.0, 0.3, 1.0, stream) == 0.0

    def test_unattainable_stays_positive(self, stream):
        """Test d >= 2 never hits zero"""
        draws = squared_bessel_step(SquaredBesselParams(a=1.0, sigma=1.0), np.full(10_000, 0.01), 1.0, stream)
        assert draws.min() > 0.0

    def test_absorption_probability(self):
        """Test the one-step atom for a = 0 is exp(-lam/2)"""
        sampler = SqrtDiffusionSampler(2.0)
        lam = 4.0 * 1.0 / (4.0 * 0.5)
        assert sampler.absorption_probability(1.0, 0.5) == pytest.approx(math.exp(-lam / 2))

    def test_negative_state(self, stream):
        """Test negative states are outside the domain"""
        with pytest.raises(DomainError):
            sqrt_diffusion_step(np.array([1.0, -0.5]), 0.1, 1.0, stream)

    @pytest.mark.parametrize("dt", [0.0, -0.1, math.nan])
    def test_bad_dt(self, stream, dt):
        """Test nonpositive and non-finite steps"""
        with pytest.raises(ParameterError):
            sqrt_diffusion_step(1.0, dt, 1.0, stream)

    def test_not_pathwise(self):
        """Test law-sampled transitions refuse supplied increments"""
        with pytest.raises(UnsupportedError):
            SqrtDiffusionSampler(1.0).step_with_increment(1.0, 0.0, 0.1, 0.2)


@pytest.mark.unit
class TestCev:
    """Test the CEV sampler in all regimes"""

    def test_absorbing_atom_frequency(self, stream):
        """Test the absorbed fraction matches the Poisson-mixture atom"""
        p = CevParams(gamma=0.75, sigma=1.0)
        sampler = CevSampler(p)
        n = 100_000
        draws = cev_step(p, np.full(n, 0.1), 1.0, stream)
        expected = sampler.absorption_probability(0.1, 1.0)
        se = math.sqrt(expected * (1 - expected) / n)
        assert abs((draws == 0).mean() - expected) < 4 * se

    def test_absorption_closed_form(self):
        """Test d = -2 gives exp(-lam/2)(1 + lam/2)"""
        sampler = CevSampler(CevParams(gamma=0.75, sigma=1.0))
        lam = float(sampler.noncentrality(np.array(0.1), 1.0))
        expected = math.exp(-lam / 2) * (1 + lam / 2)
        assert sampler.absorption_probability(0.1, 1.0) == pytest.approx(expected)

    def test_absorbing_martingale(self, stream):
        """Test E X(dt) = x when zero is an exit"""
        p = CevParams(gamma=0.75, sigma=1.0)
        assert_mean(cev_step(p, np.full(N, 0.1), 1.0, stream), 0.1)

    def test_reflecting_nonnegative(self, stream):
        """Test gamma < 1/2 draws stay on [0, inf)"""
        p = CevParams(gamma=-1.0, sigma=1.0)
        draws = cev_step(p, np.full(10_000, 0.5), 0.5, stream)
        assert draws.min() >= 0.0
        assert np.all(np.isfinite(draws))

    def test_reflecting_near_half_stays_positive(self, stream):
        """Test tiny positive d never produces spurious absorption"""
        p = CevParams(gamma=0.499, sigma=1.0)
        assert CevSampler(p).boundary_class == BoundaryClass.REFLECTING
        draws = cev_step(p, np.full(100_000, 0.01), 1.0, stream)
        assert draws.min() > 0.0

    def test_natural_rejects_zero(self, stream):
        """Test gamma > 1 has no transition from zero"""
        with pytest.raises(DomainError):
            cev_step(CevParams(gamma=2.0, sigma=0.5), 0.0, 0.1, stream)

    def test_natural_initial_state(self):
        """Test a natural-regime start at zero is a parameter error"""
        sampler = CevSampler(CevParams(gamma=2.0, sigma=0.5))
        sampler.check_initial(0.5)
        with pytest.raises(ParameterError):
            sampler.check_initial(0.0)

    def test_absorbing_initial_state(self):
        """Test an absorbing-regime start may sit on zero but not below"""
        sampler = CevSampler(CevParams(gamma=0.75, sigma=1.0))
        sampler.check_initial(0.0)
        with pytest.raises(ParameterError):
            sampler.check_initial(-0.1)

    def test_natural_positive(self, stream):
        """Test gamma > 1 draws are positive"""
        draws = cev_step(CevParams(gamma=2.0, sigma=0.5), np.full(10_000, 1.0), 0.1, stream)
        assert draws.min() > 0.0

    def test_negative_state(self, stream):
        """Test negative states are rejected"""
        with pytest.raises(DomainError):
            cev_step(CevParams(gamma=0.75, sigma=1.0), -1.0, 0.1, stream)


@pytest.mark.unit
class TestGbm:
    """Test the geometric Brownian motion sampler"""

    def test_mean(self, stream):
        """Test E X(dt) = x exp(mu dt)"""
        draws = gbm_step(np.full(N, 2.0), 0.5, 0.3, 0.4, stream)
        assert_mean(draws, 2.0 * math.exp(0.15))

    def test_increment_formula(self):
        """Test the closed form with a given increment"""
        value = GbmSampler(0.3, 0.4).step_with_increment(2.0, 0.0, 0.5, 0.1)
        assert value == pytest.approx(2.0 * math.exp((0.3 - 0.08) * 0.5 + 0.04))

    def test_strict_entry_point(self, stream):
        """Test gbm_step needs x > 0"""
        with pytest.raises(DomainError):
            gbm_step(0.0, 0.1, 0.0, 1.0, stream)

    def test_sampler_keeps_zero(self, stream):
        """Test zero is a fixed point of the sampler"""
        assert GbmSampler(0.0, 1.0).step(0.0, 0.0, 0.1, stream) == 0.0

    def test_sampler_keeps_sign(self):
        """Test negative states map to negative states"""
        value = GbmSampler(1.0, 1.0).step_with_increment(-2.0, 0.0, 0.125, 0.3)
        assert value == pytest.approx(-2.0 * math.exp(0.5 * 0.125 + 0.3))

    def test_sampler_rejects_non_finite(self):
        """Test non-finite states are outside the domain"""
        with pytest.raises(DomainError):
            GbmSampler(1.0, 1.0).step_with_increment(np.array([1.0, np.nan]), 0.0, 0.1, 0.0)

    def test_initial_state_anywhere(self):
        """Test any finite start is accepted and infinity is not"""
        GbmSampler(1.0, 1.0).check_initial(-3.0)
        with pytest.raises(ParameterError):
            GbmSampler(1.0, 1.0).check_initial(math.inf)


@pytest.mark.unit
class TestHTransform:
    """Test Lamperti-map transitions"""

    def test_identity_map_is_brownian(self, stream):
        """Test H = id gives x + sqrt(dt) z"""
        draws = h_transform_step(lambda x: x, lambda y: y, np.full(N, 1.0), 0.25, stream)
        assert_mean(draws, 1.0)
        assert draws.var() == pytest.approx(0.25, rel=0.03)

    def test_log_map(self):
        """Test H = log gives x exp(dW)"""
        sampler = HTransformSampler(np.log, np.exp)
        assert sampler.step_with_increment(2.0, 0.0, 0.1, 0.3) == pytest.approx(2.0 * math.exp(0.3))

    def test_non_finite_h(self, stream):
        """Test states outside the map's domain"""
        with pytest.raises(DomainError):
            h_transform_step(np.sqrt, np.square, -1.0, 0.1, stream)

    def test_bessel_flow_increment(self):
        """Test (sqrt(x) + dW)^2"""
        sampler = bessel_flow_sampler()
        assert sampler.pathwise
        assert sampler.step_with_increment(4.0, 0.0, 0.1, 0.5) == pytest.approx(6.25)

    def test_bessel_flow_mean_square_increment(self, stream):
        """Test E|Phi(t) - Phi(s)|^2 = 4 x0 h + 4 s h + 3 h^2 with h = t - s"""
        sampler = bessel_flow_sampler()
        x0, s, h = 1.0, 0.2, 0.05
        w_s = math.sqrt(s) * normal(stream, size=N)
        w_t = w_s + math.sqrt(h) * normal(stream, size=N)
        phi_s = sampler.step_with_increment(np.full(N, x0), 0.0, s, w_s)
        phi_t = sampler.step_with_increment(np.full(N, x0), 0.0, s + h, w_t)
        sq = (phi_t - phi_s) ** 2
        assert_mean(sq, 4 * x0 * h + 4 * s * h + 3 * h**2)

    def test_missing_sigma(self):
        """Test a map built without sigma cannot report its diffusion"""
        with pytest.raises(UnsupportedError):
            HTransformSampler(np.log, np.exp).diffusion(np.ones(2))


@pytest.mark.unit
class TestOtherSamplers:
    """Test Ornstein-Uhlenbeck and identity samplers"""

    def test_ou_moments(self, stream):
        """Test the Gaussian transition of dX = -kappa (X - theta) dt + sigma dW"""
        kappa, theta, sigma, dt = 2.0, 1.0, 0.5, 0.3
        draws = ou_step(np.full(N, 3.0), dt, kappa, theta, sigma, stream)
        decay = math.exp(-kappa * dt)
        assert_mean(draws, theta + 2.0 * decay)
        assert draws.var() == pytest.approx(sigma**2 * (1 - decay**2) / (2 * kappa), rel=0.03)

    def test_ou_zero_kappa(self, stream):
        """Test kappa = 0 reduces to scaled Brownian motion"""
        sampler = OrnsteinUhlenbeckSampler(0.0, 0.0, 1.0)
        assert sampler.martingale
        draws = sampler.step(np.zeros(N), 0.0, 0.5, stream)
        assert draws.var() == pytest.approx(0.5, rel=0.03)

    def test_identity(self, stream):
        """Test the identity sampler leaves states alone"""
        x = np.array([1.0, -2.0])
        out = IdentitySampler().step(x, 0.0, 0.1, stream)
        np.testing.assert_array_equal(out, x)
        assert out is not x

    def test_same_stream_same_draws(self):
        """Test the sampler output is determined by the stream"""
        x = np.full(5, 1.0)
        a = SqrtDiffusionSampler(1.0).step(x, 0.0, 0.1, RngStream(3, 1))
        b = SqrtDiffusionSampler(1.0).step(x, 0.0, 0.1, RngStream(3, 1))
        np.testing.assert_array_equal(a, b)
