"""Seeded random streams and empirical-distribution utilities.

Everything stochastic in this package draws from a :class:`RandomStream`,
a counter-based generator that can be forked into independent child
streams.  Forking is deterministic in ``(seed, fork index)`` and does not
depend on how many variates the parent has produced, which is what makes
scan-style experiments (one child stream per grid node, per gamma, per
seed) reproducible regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri


class RandomStream:
    """A Philox-backed random stream with deterministic forking.

    Parameters
    ----------
    seed:
        Base seed, an integer in ``[0, 2**64)``.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an integer in [0, 2**64)")
        self.seed = seed
        self._path = tuple(int(p) for p in _path)
        ss = np.random.SeedSequence(seed, spawn_key=self._path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def fork(self, k: int) -> "RandomStream":
        """Return an independent child stream, deterministic in ``(seed, k)``.

        Children with distinct indices are mutually independent, and a
        child's output never depends on the parent's draw position.
        """
        k = int(k)
        if k < 0:
            raise ValueError("fork index must be nonnegative")
        return RandomStream(self.seed, self._path + (k,))

    def uniform(self) -> float:
        """One uniform variate on [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """Array of ``n`` uniform variates on [0, 1)."""
        n = int(n)
        if n < 0:
            raise ValueError("n must be nonnegative")
        return self._gen.random(n)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomStream(seed={self.seed}, path={self._path})"


def make_stream(seed: int) -> RandomStream:
    """Create the root :class:`RandomStream` for a run."""
    return RandomStream(seed)


def sample_gaussian(stream: RandomStream, mean: float, stddev: float, size: int | None = None):
    """Gaussian variates via the inverse CDF of the stream's uniforms.

    ``stddev == 0`` returns ``mean`` exactly.  The uniform is clipped away
    from 0 so the inverse CDF stays finite; the clip is at 1e-300, far
    below anything a 64-bit uniform can resolve in practice.
    """
    if stddev < 0:
        raise ValueError("stddev must be nonnegative")
    if size is None:
        if stddev == 0.0:
            return float(mean)
        u = max(stream.uniform(), 1e-300)
        return float(mean + stddev * ndtri(u))
    u = stream.uniforms(size)
    if stddev == 0.0:
        return np.full(u.shape, float(mean))
    return mean + stddev * ndtri(np.maximum(u, 1e-300))


def sample_cosine_direction(stream: RandomStream, k: int) -> np.ndarray:
    """Unit vector in the half-space ``x[-1] > 0`` with density prop. to cos(theta).

    ``theta`` is the angle to the inward normal (the last axis) and ``k``
    is the number of tangential dimensions; ``k = 1`` gives the planar
    cosine law, ``k = 2`` the usual 3-d effusion law with E[cos(theta)] = 2/3.
    """
    if k == 1:
        theta = np.arcsin(2.0 * stream.uniform() - 1.0)
        return np.array([np.sin(theta), np.cos(theta)])
    if k == 2:
        # sin^2(theta) is uniform for the cos-weighted area density.
        sin_t = np.sqrt(stream.uniform())
        cos_t = np.sqrt(max(1.0 - sin_t * sin_t, 0.0))
        psi = 2.0 * np.pi * stream.uniform()
        return np.array([sin_t * np.cos(psi), sin_t * np.sin(psi), cos_t])
    raise ValueError("k must be 1 or 2")


@dataclass
class EmpiricalDistribution:
    """A normalized histogram: bin ``edges`` (length n+1) and ``masses`` (length n)."""

    edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.edges.ndim != 1 or self.edges.size < 2:
            raise ValueError("edges must be a 1-d array with at least two entries")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if self.masses.shape != (self.edges.size - 1,):
            raise ValueError("masses must have one entry per bin")
        if np.any(self.masses < 0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("masses must be finite and nonnegative")
        total = self.masses.sum()
        if total <= 0:
            raise ValueError("total mass must be positive")
        self.masses = self.masses / total

    @classmethod
    def from_samples(cls, samples, edges) -> "EmpiricalDistribution":
        """Histogram of ``samples``; values outside the edges fall in the end bins."""
        samples = np.asarray(samples, dtype=float)
        edges = np.asarray(edges, dtype=float)
        counts, _ = np.histogram(np.clip(samples, edges[0], edges[-1]), bins=edges)
        return cls(edges, counts.astype(float))

    @classmethod
    def from_density(cls, density, edges) -> "EmpiricalDistribution":
        """Midpoint-rule discretization of a density callable."""
        edges = np.asarray(edges, dtype=float)
        mid = 0.5 * (edges[:-1] + edges[1:])
        masses = np.asarray(density(mid), dtype=float) * np.diff(edges)
        return cls(edges, masses)


def tv_distance(p: EmpiricalDistribution, q: EmpiricalDistribution) -> float:
    """Total variation distance between two histograms on identical edges."""
    if not np.array_equal(p.edges, q.edges):
        raise ValueError("tv_distance requires identical bin edges")
    return float(0.5 * np.abs(p.masses - q.masses).sum())


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov statistic of ``samples`` against a CDF callable."""
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.size
    if n == 0:
        raise ValueError("samples must be nonempty")
    f = np.asarray(cdf(samples), dtype=float)
    if np.any(np.diff(f) < -1e-12):
        raise ValueError("cdf must be nondecreasing")
    if np.any(f < -1e-9) or np.any(f > 1 + 1e-9):
        raise ValueError("cdf values must lie in [0, 1]")
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - f), np.max(f - (grid - 1 / n))))
