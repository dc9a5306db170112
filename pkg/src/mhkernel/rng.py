"""Reproducible counter-based random streams.

Every stochastic operation in this package draws from a Philox
(counter-based) generator keyed by ``(seed, path)``, where ``path`` is a
tuple of small integers naming the substream.  Distinct paths give
statistically independent streams, and because the key fully determines
the stream, a worker pool can evaluate substreams in any order while the
merged result stays bitwise identical.

Variate algorithms are numpy's: ziggurat for ``standard_normal`` and
inversion for ``geometric``.  numpy's stream-compatibility policy fixes
both, which is what makes the golden-value tests portable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Address of a random substream: a root seed plus a derivation path."""

    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if any(i < 0 for i in self.path):
            raise ValueError("path components must be nonnegative integers")

    def child(self, *ids: int) -> "RngStream":
        """Derive a named substream; distinct paths never collide."""
        return RngStream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        """Instantiate the Philox generator addressed by this stream."""
        key = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(key))
