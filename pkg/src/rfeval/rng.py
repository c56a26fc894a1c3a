"""Deterministic seeded random number generation.

Streams are built on the counter-based Philox 4x64 generator, which produces
identical output on every platform for a given key. A stream is keyed by
(seed, tag); ``child`` derives independent sub-streams from the same seed so
parallel work cannot depend on scheduling order.
"""

from __future__ import annotations

import numpy as np


class Rng:
    """A seeded, splittable random stream.

    Not safe to share across threads; derive one child per unit of parallel
    work instead.
    """

    def __init__(self, seed: int, tag: int = 0):
        self.seed = int(seed)
        self.tag = int(tag)
        bits = np.random.Philox(key=[self.seed & 0xFFFFFFFFFFFFFFFF, self.tag & 0xFFFFFFFFFFFFFFFF])
        self._gen = np.random.Generator(bits)

    def child(self, tag: int) -> "Rng":
        """Independent stream derived from the same seed."""
        return Rng(self.seed, tag)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape).astype(np.float32)

    def normal(self, mean: float, std: float, shape) -> np.ndarray:
        return self._gen.normal(mean, std, size=shape).astype(np.float32)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)
