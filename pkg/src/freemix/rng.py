"""Reproducible random streams.

Every sampler in the package takes an explicit ``rng`` argument. Anything
accepted by :func:`as_generator` works: an :class:`RngSeed`, an integer seed,
an existing :class:`numpy.random.Generator`, or ``None`` for fresh entropy.

The bit generator is Philox (counter based). A ``(seed, stream)`` pair maps to
``SeedSequence(seed, spawn_key=(stream,))``, so workers that use distinct
stream ids draw from statistically independent streams and the same pair
always reproduces the same draws.
"""
from dataclasses import dataclass

import numpy as np

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MAX_SEED:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if int(self.stream) < 0:
            raise ValueError("stream id must be non-negative")

    def generator(self):
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream):
        """Same seed, different stream."""
        return RngSeed(self.seed, stream)


def as_generator(rng=None):
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSeed):
        return rng.generator()
    if rng is None:
        return np.random.Generator(np.random.Philox())
    if isinstance(rng, (int, np.integer)) and not isinstance(rng, bool):
        return RngSeed(int(rng)).generator()
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")
