"""
End-to-end acceptance tests

Statistical checks use 3 standard errors. The lattice survival and
critical-point studies take minutes and are marked slow.
"""
import math
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from splitstep.core.config import config
from splitstep.main import EXIT_OK, main
from splitstep.models.params import CevParams, NcChi2Params
from splitstep.models.spde import SpdeSpec
from splitstep.services.catalog import model_cev, model_cir, model_ginzburg_landau, model_test_eq
from splitstep.services.harness import strong_errors, weak_error_series
from splitstep.services.integrator import simulate_ensemble, uniform_grid
from splitstep.services.lattice import (
    estimate_theta_c,
    extinction_times,
    simulate_spde,
    survival_sweep,
)
from splitstep.services.rng import RngStream, ncx2
from splitstep.services.transitions import CevSampler

N_DRAWS = 1_000_000


def poisson_head(lam: float, j_max: int) -> float:
    """P[K <= j_max] for K ~ Poisson(lam/2), summed term by term."""
    half = lam / 2.0
    return sum(math.exp(-half) * half**j / math.factorial(j) for j in range(j_max + 1))


@pytest.mark.e2e
class TestNcChi2Sampling:
    """Test the extended non-central chi-square sampler"""

    @pytest.mark.parametrize("d, lam", [(0.0, 2.0), (-2.0, 4.0), (-4.0, 1.0)])
    def test_atom_mass(self, d, lam):
        """Test P[X = 0] against the Poisson head for d in {0, -2, -4}"""
        draws = ncx2(RngStream(101, 0), NcChi2Params(d=d, lam=lam), size=N_DRAWS)
        expected = poisson_head(lam, int(-d) // 2)
        observed = float(np.mean(draws == 0.0))
        se = math.sqrt(expected * (1.0 - expected) / N_DRAWS)
        assert abs(observed - expected) < 3 * se
        assert draws.min() >= 0.0

    @pytest.mark.parametrize("d, lam", [(4.0, 3.0), (0.5, 1.0), (7.0, 0.0)])
    def test_moments(self, d, lam):
        """Test mean d + lam and variance 2 (d + 2 lam)"""
        draws = ncx2(RngStream(102, 0), NcChi2Params(d=d, lam=lam), size=N_DRAWS)
        mean, var = draws.mean(), draws.var(ddof=1)
        se_mean = math.sqrt(var / N_DRAWS)
        m4 = np.mean((draws - mean) ** 4)
        se_var = math.sqrt((m4 - var**2) / N_DRAWS)
        assert abs(mean - (d + lam)) < 3 * se_mean
        assert abs(var - 2.0 * (d + 2.0 * lam)) < 3 * se_var
        assert np.all(draws > 0.0)


@pytest.mark.e2e
class TestConvergenceOrders:
    """Test the weak and strong orders of the splitting schemes"""

    @pytest.mark.slow
    def test_weak_order_test_equation(self):
        """Test weak order one for dX = (1 + X) dt + 2 sqrt(X) dW"""
        model = model_test_eq()
        assert model.mean(1.0, 1.0) == pytest.approx(2.0 * math.e - 1.0)
        series = weak_error_series(
            model, model.scheme(), 1.0, 1.0, [2.0**-k for k in range(3, 9)], 100_000, seed=31
        )
        assert series.fit is not None
        assert 0.85 <= series.fit.slope <= 1.15

    def test_strong_orders_ginzburg_landau(self):
        """Test strong order one for the split scheme and one half for Euler"""
        model = model_ginzburg_landau()
        schemes = {"split": model.scheme(), "euler-maruyama": model.baseline("euler-maruyama")}
        # Euler only settles into order one half below dt = 2^-5
        dts = [2.0**-k for k in range(6, 11)]
        split, euler = strong_errors(model, schemes, 1.0, 5.0, dts, 1000, seed=32, k=2, fine_factor=64)
        assert 0.85 <= split.fit.slope <= 1.15
        assert 0.35 <= euler.fit.slope <= 0.65
        assert all(s < e for s, e in zip(split.error, euler.error))

    def test_strong_moment_ordering(self):
        """Test the k = 2 error dominates the k = 1 error at every dt"""
        model = model_ginzburg_landau()
        dts = [0.125, 0.0625, 0.03125]
        args = (model, {"split": model.scheme()}, 1.0, 1.0, dts, 400, 33)
        (first,) = strong_errors(*args, k=1, fine_factor=16)
        (second,) = strong_errors(*args, k=2, fine_factor=16)
        assert all(e2 >= e1 for e1, e2 in zip(first.error, second.error))

    def test_bessel_flow_split_strong_order(self):
        """Test the alpha = X, beta = 1 split with the Bessel flow converges at order one"""
        model = model_test_eq("bessel-flow")
        dts = [2.0**-k for k in range(2, 7)]
        # x0 = 16 keeps sqrt(X) + W away from zero over t = 1
        (series,) = strong_errors(model, {"split": model.scheme()}, 16.0, 1.0, dts, 1000, seed=34, k=2, fine_factor=1024)
        assert 0.85 <= series.fit.slope <= 1.15


@pytest.mark.e2e
class TestBoundaryBehaviour:
    """Test boundary classes of the exact transitions"""

    N_PATHS = 1000
    GRID = uniform_grid(10.0, 0.01)

    def test_cir_unattainable_zero(self):
        """Test a >= sigma^2/2 keeps every value strictly positive"""
        model = model_cir(a=1.0, b=-0.5, sigma=1.0)
        paths = simulate_ensemble(model.scheme(), 0.5, self.GRID, self.N_PATHS, seed=41)
        assert paths.shape == (self.N_PATHS, 1001)
        assert np.all(paths > 0.0)

    def test_cir_absorbing_zero(self):
        """Test a = 0 absorbs paths at exactly zero without going negative"""
        model = model_cir(a=0.0, b=0.0, sigma=1.0)
        paths = simulate_ensemble(model.scheme(), 0.5, self.GRID, self.N_PATHS, seed=42)
        assert paths.min() >= 0.0
        assert np.mean(paths[:, -1] == 0.0) > 0.0

    def test_abs_sqrt_euler_goes_negative(self):
        """Test the baseline leaves the domain where the split scheme cannot"""
        model = model_cir(a=0.0, b=0.0, sigma=2.0)
        paths = simulate_ensemble(model.baseline("abs-sqrt-euler"), 0.5, self.GRID, self.N_PATHS, seed=43)
        assert np.any(paths < 0.0)
        split = simulate_ensemble(model.scheme(), 0.5, self.GRID, self.N_PATHS, seed=43)
        assert split.min() >= 0.0

    def test_cev_one_step_absorption(self):
        """Test the absorbed fraction matches e^(-lam/2) (1 + lam/2)"""
        sampler = CevSampler(CevParams(gamma=0.75, sigma=1.0))
        n, x, dt = 200_000, 0.25, 1.0
        lam = float(sampler.noncentrality(np.array(x), dt))
        expected = math.exp(-lam / 2.0) * (1.0 + lam / 2.0)
        out = sampler.step(np.full(n, x), 0.0, dt, RngStream(44, 0))
        se = math.sqrt(expected * (1.0 - expected) / n)
        assert abs(np.mean(out == 0.0) - expected) < 3 * se

    def test_cev_martingale_with_growing_absorption(self):
        """Test the mean stays at x0 while more paths sit at zero"""
        model = model_cev(mu=0.0, sigma=1.0, gamma=0.75)
        grid = uniform_grid(4.0, 0.25)
        paths = simulate_ensemble(model.scheme(), 1.0, grid, 20_000, seed=45)
        absorbed = []
        for t in (1.0, 2.0, 4.0):
            col = paths[:, int(round(t / 0.25))]
            se = col.std(ddof=1) / math.sqrt(col.size)
            assert abs(col.mean() - 1.0) < 3 * se
            absorbed.append(float(np.mean(col == 0.0)))
        assert absorbed[0] < absorbed[1] < absorbed[2]
        # Steps compose exactly, so t = 4 has the one-step atom with dt = 4
        lam = 16.0 / 4.0
        expected = math.exp(-lam / 2.0) * (1.0 + lam / 2.0)
        assert abs(absorbed[2] - expected) < 3 * math.sqrt(expected * (1.0 - expected) / 20_000)


@pytest.mark.e2e
class TestSuperBrownianMotion:
    """Test extinction, compact support and the noise-free control"""

    SPEC = dict(kind="sbm", L=128, dx=1.0, dt=0.1, sigma=1.0)

    @pytest.mark.slow
    def test_every_run_dies(self):
        """Test all 50 runs from mass 12.8 reach exactly zero mass"""
        # P(alive at t) = 1 - exp(-2 M0 / t), so t_max = 1e6 leaves ~0.1% for 50 runs
        spec = SpdeSpec(**self.SPEC, u0=0.1, t_max=1e6)
        times = extinction_times(spec, 50, seed=51)
        assert np.all(np.isfinite(times))
        assert np.all(times > 0.0)

    def test_support_stays_compact(self):
        """Test the support of a block never covers the lattice"""
        spec = SpdeSpec(**self.SPEC, u0=1.6, init="block", init_width=8, t_max=20.0)
        for seed in range(3):
            run = simulate_spde(spec, seed=seed)
            assert run.support_history
            for _, lo, hi in run.support_history:
                assert 0 <= lo <= hi < spec.L
                assert hi - lo + 1 < spec.L
            assert run.final.u.min() >= 0.0

    def test_noise_free_mass_conservation(self):
        """Test sigma = 0 conserves mass step by step"""
        spec = SpdeSpec(**{**self.SPEC, "sigma": 0.0}, u0=0.1, t_max=10.0)
        run = simulate_spde(spec, seed=52, stop_on_extinction=False)
        masses = np.array([m for _, m in run.mass_history])
        assert masses.size == spec.n_steps + 1
        assert np.max(np.abs(np.diff(masses))) <= 1e-12 * masses[0]


@pytest.mark.e2e
@pytest.mark.slow
class TestContactCriticalPoint:
    """Test the desk-scale critical theta of the contact SPDE"""

    def test_theta_c_at_desk_scale(self):
        """Test theta_c in [0.72, 0.84] with monotone survival and a linear dt fit"""
        spec = SpdeSpec(kind="contact", L=1024, dt=0.025, t_max=400.0, u0=1.0)
        short = spec.model_copy(update={"dt": 0.1, "t_max": 200.0})
        sweep = survival_sweep(short, [0.5, 0.8, 1.1], 20, seed=61)
        probabilities = [s.probability for s in sweep]
        assert probabilities == sorted(probabilities)

        # density from a full lattice against t^-0.1595 between t = 100 and 400
        est = estimate_theta_c([0.1, 0.05, 0.025], spec, 0.5, 1.2, 8, seed=61, tol=0.01, t_early=100.0)
        assert 0.72 <= est.theta_c <= 0.84
        for point, residual in zip(est.points, est.residuals):
            assert abs(residual) < 2 * point.stderr
        assert "bisection" in est.methodology


COMMAND_CASES = {
    "simulate": ["simulate.n_paths=40", "simulate.dt=0.05"],
    "converge-weak": ["converge.n_paths=300", "converge.dt_list=0.25, 0.125, 0.0625", "converge.control_variate=off"],
    "converge-strong": [
        "model.name=ginzburg-landau",
        "converge.schemes=split, euler-maruyama",
        "converge.t=0.5",
        "converge.dt_list=0.125, 0.0625, 0.03125",
        "converge.fine_factor=4",
        "converge.n_paths=100",
    ],
    "spde-sbm": ["spde.L=16", "spde.t_max=3", "spde.u0=0.5", "spde.n_runs=10"],
    "spde-contact": ["spde.L=16", "spde.t_max=2", "spde.u0=1", "spde.n_runs=10", "spde.thetas=0.5, 2.0"],
    "theta-critical": [
        "theta.L=16",
        "theta.t_max=2",
        "theta.n_runs=4",
        "theta.dt_list=0.1, 0.05",
        "theta.theta_lo=-5",
        "theta.theta_hi=5",
        "theta.tol=1.0",
    ],
    "sample-ncx2": ["sampler.d=-2", "sampler.lam=4", "sampler.n=2000"],
}


def run_command(command: str, out: Path, threads: int) -> int:
    argv = [command, "--output", str(out), "--seed", "71", "--threads", str(threads), "--log-level", "WARNING"]
    for item in COMMAND_CASES[command]:
        argv += ["--set", item]
    return main(argv)


@pytest.mark.e2e
class TestDeterminism:
    """Test every command reproduces its files byte for byte"""

    @pytest.mark.parametrize("command", list(COMMAND_CASES))
    def test_rerun_is_byte_identical(self, command, temp_data_dir):
        """Test identical config and seed give identical files on 1 and 4 workers"""
        outputs = []
        with patch.object(config, "PATH_BLOCK_SIZE", 16), patch.object(config, "RUN_BLOCK_SIZE", 3):
            for i, threads in enumerate((1, 4, 1)):
                out = temp_data_dir / f"run{i}"
                assert run_command(command, out, threads) == EXIT_OK
                outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outputs[0]
        assert outputs[0] == outputs[1] == outputs[2]
