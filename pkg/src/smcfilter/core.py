"""Particle-set primitives: log-domain weight arithmetic, seeded randomness,
and the basic Monte Carlo estimators.

States are plain 1-D float arrays; a particle set stacks N of them into an
(N, n) array with aligned log-weights. All weight handling stays in the log
domain until a normalized linear view is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


class AllWeightsCollapsed(Exception):
    """Raised when every log-weight is -inf and no normalization exists."""


class RngStream:
    """Seeded random stream backed by numpy's PCG64 generator.

    Two streams built from the same seed produce identical draw sequences.
    Array draws fill in C order and are bit-identical to the same number of
    scalar draws, so vectorized sampling consumes the stream exactly as a
    per-particle loop would. Supported draw kinds: standard normal and
    uniform on [0, 1).
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    @property
    def seed(self) -> int:
        return self._seed

    def standard_normal(self, shape=None):
        """Standard-normal draw; scalar when shape is None."""
        if shape is None:
            return float(self._gen.standard_normal())
        return self._gen.standard_normal(shape)

    def uniform(self, shape=None):
        """Uniform draw on [0, 1); scalar when shape is None."""
        if shape is None:
            return float(self._gen.random())
        return self._gen.random(shape)

    def __repr__(self) -> str:
        return f"RngStream(seed={self._seed})"


def as_state(x) -> np.ndarray:
    """Coerce a scalar or sequence to a 1-D float state vector."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"state must be 1-D, got shape {arr.shape}")
    return arr


@dataclass
class ParticleSet:
    """N state hypotheses with aligned log-weights; the empirical posterior.

    ``particles`` has shape (N, n); a 1-D input of length N is treated as N
    scalar states. ``generation`` counts completed filter steps. Linear
    weights are exact once the log-weights are normalized (the maintained
    state between filter steps).
    """

    particles: np.ndarray
    log_weights: np.ndarray
    generation: int = 0

    def __post_init__(self):
        arr = np.asarray(self.particles, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, np.newaxis]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"particles must be a non-empty (N, n) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("particles must be finite")
        lw = np.asarray(self.log_weights, dtype=float)
        if lw.shape != (arr.shape[0],):
            raise ValueError(
                f"log_weights shape {lw.shape} does not match {arr.shape[0]} particles"
            )
        self.particles = arr
        self.log_weights = lw

    @property
    def n_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]

    @property
    def weights(self) -> np.ndarray:
        """Linear weights, exp(log_weights)."""
        return np.exp(self.log_weights)

    @classmethod
    def uniform(cls, particles, generation: int = 0) -> "ParticleSet":
        """Build a set with equal weights 1/N."""
        arr = np.asarray(particles, dtype=float)
        n = arr.shape[0]
        return cls(arr, np.full(n, -np.log(n)), generation)


def normalize_weights(log_weights) -> np.ndarray:
    """Turn log-weights into normalized linear weights.

    The maximum log-weight is subtracted before exponentiation, so the
    largest term is exp(0) and underflow can never zero out the whole
    vector; the result always sums to 1 up to float rounding.
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.size < 1:
        raise ValueError("need at least one log-weight")
    m = np.max(lw)
    if m == -np.inf:
        raise AllWeightsCollapsed("all log-weights are -inf")
    shifted = np.exp(lw - m)
    return shifted / shifted.sum()


def normalized_log_weights(log_weights) -> np.ndarray:
    """Normalize in the log domain: lw - log(sum(exp(lw))), max-shifted.

    Keeps tiny weights at their true log values instead of flushing them
    to zero through a linear round trip.
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.size < 1:
        raise ValueError("need at least one log-weight")
    m = np.max(lw)
    if m == -np.inf:
        raise AllWeightsCollapsed("all log-weights are -inf")
    return lw - (m + np.log(np.sum(np.exp(lw - m))))


def weighted_mean(particle_set: ParticleSet) -> np.ndarray:
    """Posterior-mean point estimate, sum_i w_i * x_i componentwise.

    Expects normalized weights.
    """
    w = particle_set.weights
    return w @ particle_set.particles


def map_estimate(particle_set: ParticleSet) -> np.ndarray:
    """Particle with the largest weight; ties go to the lowest index."""
    idx = int(np.argmax(particle_set.log_weights))
    return particle_set.particles[idx].copy()


def monte_carlo_expectation(
    g: Callable[[np.ndarray], float], samples: Iterable[Sequence[float]]
) -> float:
    """Arithmetic mean of g over the samples, (1/N) sum g(x_i)."""
    values = [float(g(as_state(x))) for x in samples]
    if not values:
        raise ValueError("need at least one sample")
    return float(np.mean(values))
