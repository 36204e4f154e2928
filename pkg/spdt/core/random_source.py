"""
Deterministic random streams.

Every consumer (a node, a SIR run, lambda assignment ...) owns its own
stream derived from ``(seed, domain, stream)`` through numpy's SeedSequence,
so results never depend on how work is split across workers.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Optional

import numpy as np


class StreamDomain(IntEnum):
    """Namespaces for stream ids so node 7 and run 7 never share draws."""
    DEFAULT = 0
    LAMBDA = 1
    NODE = 2
    BADN = 3
    DENSIFY = 4
    SIR_RUN = 5


class RandomSource:
    """Seeded PCG64 stream with a draw counter."""

    def __init__(self, seed: int, stream: int = 0, domain: StreamDomain = StreamDomain.DEFAULT):
        if seed is None:
            raise ValueError("seed is required")
        self.seed = int(seed)
        self.stream_id = int(stream)
        self.domain = StreamDomain(domain)
        sequence = np.random.SeedSequence(
            entropy=self.seed & ((1 << 64) - 1),
            spawn_key=(int(self.domain), self.stream_id),
        )
        self._generator = np.random.Generator(np.random.PCG64(sequence))
        self.draws = 0

    def stream(self, domain: StreamDomain, stream: int) -> "RandomSource":
        """Independent sibling stream with the same seed."""
        return RandomSource(self.seed, stream, domain)

    def uniform(self) -> float:
        """One uniform on [0, 1)."""
        self.draws += 1
        return float(self._generator.random())

    def uniforms(self, size: int) -> np.ndarray:
        self.draws += int(size)
        return self._generator.random(int(size))

    def integers(self, low: int, high: int, size: Optional[int] = None):
        """Uniform integers on [low, high]; inclusive, as used for infectious periods."""
        count = 1 if size is None else int(size)
        self.draws += count
        values = self._generator.integers(low, high, size=size, endpoint=True)
        return int(values) if size is None else values

    def choice(self, population: int, size: int) -> np.ndarray:
        """``size`` distinct integers from range(population)."""
        self.draws += int(size)
        return self._generator.choice(population, size=size, replace=False)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, domain={self.domain.name}, stream={self.stream_id})"
