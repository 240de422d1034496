"""
Stream-addressable random variates.

An ``RngStream`` is a numpy ``Generator`` driven by the counter-based Philox
bit generator, keyed by ``SeedSequence(entropy=seed, spawn_key=(stream_id,))``.
The same (seed, stream_id) pair yields the same sequence on every platform,
and distinct stream ids share no state.

All draws accept a ``size`` or array parameters and are vectorised; a single
stream must not be used from two threads at once.
"""

from typing import List, Optional, Union

import numpy as np
from scipy.stats import poisson as poisson_law

from ..core.config import config
from ..core.errors import ParameterError
from ..models.params import NcChi2Params, check_ncx2

ArrayLike = Union[float, np.ndarray]
Size = Optional[Union[int, tuple]]

# smallest normal double; the d > 0 law has no mass at zero
POSITIVE_FLOOR = float(np.finfo(float).tiny)

MASK64 = (1 << 64) - 1


class RngStream:
    """Reproducible pseudorandom stream addressed by (seed, stream_id)."""

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id,)
        )
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream with the same seed and another id."""
        return RngStream(self.seed, stream_id)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def block_streams(seed: int, n_blocks: int, base: int = 0) -> List[RngStream]:
    """Streams ``base, base+1, ...`` for ``n_blocks`` independent work blocks."""
    return [RngStream(seed, base + b) for b in range(n_blocks)]


def _scalar_or_array(values: np.ndarray, scalar: bool):
    return np.asarray(values).item() if scalar else values


def uniform(stream: RngStream, size: Size = None) -> ArrayLike:
    """
    Uniform variate(s) on [0, 1).

    Args:
        stream (RngStream): the (seed, stream_id) generator to draw from
        size (Size, optional): output shape; ``None`` gives a single float

    Returns:
        ArrayLike: float or array of the requested shape

    Example:
        >>> u = uniform(RngStream(1, 0), size=3)
        >>> u.shape
        (3,)
    """
    return stream.generator.random(size)


def normal(stream: RngStream, size: Size = None) -> ArrayLike:
    """Standard normal variate(s), mean 0 and variance 1."""
    return stream.generator.standard_normal(size)


def poisson(
    stream: RngStream,
    mean: ArrayLike,
    size: Size = None,
    normal_threshold: Optional[float] = None,
) -> ArrayLike:
    """
    Poisson variate(s) with the given mean.

    numpy's sampler uses inversion below mean 10 and the PTRS rejection method
    above it. Means beyond ``normal_threshold`` (default
    ``config.POISSON_NORMAL_THRESHOLD``) are drawn as a normal with matching
    moments, rounded to the nearest nonnegative integer.
    """
    means = np.asarray(mean, dtype=float)
    if np.any(~np.isfinite(means)) or np.any(means < 0):
        raise ParameterError(f"Poisson mean must be finite and >= 0, got {mean!r}")
    scalar = means.ndim == 0 and size is None
    if size is not None:
        means = np.broadcast_to(means, size)

    if normal_threshold is None:
        normal_threshold = config.POISSON_NORMAL_THRESHOLD

    gen = stream.generator
    large = means > normal_threshold
    if not np.any(large):
        return _scalar_or_array(gen.poisson(means), scalar)

    counts = np.empty(means.shape, dtype=np.int64)
    small = ~large
    if np.any(small):
        counts[small] = gen.poisson(means[small])
    big = means[large]
    counts[large] = np.maximum(np.rint(gen.normal(big, np.sqrt(big))), 0)
    return _scalar_or_array(counts, scalar)


def chi2(stream: RngStream, d: ArrayLike, size: Size = None) -> ArrayLike:
    """Central chi-square variate(s), drawn as gamma(shape=d/2, scale=2)."""
    dof = np.asarray(d, dtype=float)
    if np.any(~np.isfinite(dof)) or np.any(dof <= 0):
        raise ParameterError(f"chi2 degrees of freedom must be > 0, got {d!r}")
    return 2.0 * stream.generator.standard_gamma(dof / 2.0, size)


def sample_ncx2(
    stream: RngStream,
    d: float,
    lam: ArrayLike,
    size: Size = None,
) -> ArrayLike:
    """
    Non-central chi-square variate(s) with scalar ``d`` and scalar or array ``lam``.

    K ~ Poisson(lam/2); the result is chi2 with d + 2K degrees of freedom, and
    exactly 0 when d + 2K <= 0 (possible only for d in {0, -2, -4, ...}). For
    d > 0 every draw is at least ``POSITIVE_FLOOR``.
    """
    check_ncx2(float(d), 0.0)
    lams = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lams)) or np.any(lams < 0):
        raise ParameterError(f"noncentrality lambda must be >= 0, got {lam!r}")
    scalar = lams.ndim == 0 and size is None
    if size is not None:
        lams = np.broadcast_to(lams, size)

    k = poisson(stream, lams / 2.0)
    dof = d + 2.0 * np.asarray(k, dtype=float)
    gen = stream.generator
    if d > 0:
        # tiny shapes underflow to 0.0, which would read as an atom d > 0 does not have
        draws = np.maximum(2.0 * gen.standard_gamma(dof / 2.0), POSITIVE_FLOOR)
        return _scalar_or_array(draws, scalar)

    out = np.zeros(lams.shape, dtype=float)
    alive = dof > 0
    if np.any(alive):
        out[alive] = 2.0 * gen.standard_gamma(dof[alive] / 2.0)
    return _scalar_or_array(out, scalar)


def ncx2(stream: RngStream, p: NcChi2Params, size: Size = None) -> ArrayLike:
    """Non-central chi-square variate(s) for a validated parameter record."""
    return sample_ncx2(stream, p.d, p.lam, size)


def ncx2_atom_mass(d: float, lam: ArrayLike) -> ArrayLike:
    """
    Probability of an exact zero for d in {0, -2, ...}: the Poisson(lam/2)
    mass on j <= |d|/2. Zero for d > 0.
    """
    check_ncx2(float(d), 0.0)
    if d > 0:
        return np.zeros_like(np.asarray(lam, dtype=float))
    return poisson_law.cdf(int(-d) // 2, np.asarray(lam, dtype=float) / 2.0)
