"""Keyed random streams.

Every stochastic draw in the package comes from a stream addressed by
``(master_seed, purpose, episode, epoch, call)``.  Two streams with the same
address produce the same draws no matter what else has been generated, which
is what keeps results identical across worker counts.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace

import numpy as np


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    purpose: str = "default"
    episode: int = 0
    epoch: int = 0
    call: int = 0

    def __post_init__(self):
        if min(self.episode, self.epoch, self.call) < 0:
            raise ValueError("stream indices must be non-negative")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def stream_id(self) -> tuple[str, int, int, int]:
        return (self.purpose, self.episode, self.epoch, self.call)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed,
            spawn_key=(_tag_key(self.purpose), self.episode, self.epoch, self.call),
        )
        return np.random.Generator(np.random.PCG64(seq))

    def derive(self, **changes) -> "RngStream":
        return replace(self, **changes)
