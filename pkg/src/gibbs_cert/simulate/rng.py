from __future__ import annotations

from typing import NamedTuple

import numpy as np
from gibbs_cert.errors import ConfigError

CHUNK_SIZE = 8192


class RngSpec(NamedTuple):
    """
    Root seed and stream id of a counter-based generator.

    Draws depend only on ``(seed, stream, chunk)``: work split into fixed-size chunks gives
    bitwise-identical results whatever the number of workers.
    """

    seed: int
    stream: int = 0

    def generator(self, chunk: int = 0) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream, chunk))
        return np.random.Generator(np.random.Philox(sequence))

    def substream(self, stream: int) -> RngSpec:
        return self._replace(stream=stream)


def rng_spec(seed: int | None, stream: int = 0) -> RngSpec:
    if seed is None:
        msg = "stochastic tasks need an explicit seed (--seed or GIBBS_CERT_SEED)"
        raise ConfigError(msg)
    if not 0 <= seed < 2**64:
        msg = f"seed must be a 64-bit unsigned integer, got {seed}"
        raise ConfigError(msg)
    if stream < 0:
        msg = f"stream ids are non-negative, got {stream}"
        raise ConfigError(msg)
    return RngSpec(seed=int(seed), stream=int(stream))


def chunk_sizes(total: int, chunk: int = CHUNK_SIZE) -> list[int]:
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])
