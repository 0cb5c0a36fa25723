"""Reproducible random streams.

A stream is identified by ``(seed, stream_id)``.  Generators are built on
Philox (counter based), keyed through :class:`numpy.random.SeedSequence`, so
the same pair always yields the same sequence no matter which thread or
process draws from it.  Parallel work derives child streams by index with
:meth:`RngStream.substream`; the child id depends only on the parent id and the
keys, never on scheduling order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError("substream keys must be non-negative")
    return int(key) & _MASK64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, *keys: int | str) -> "RngStream":
        sid = self.stream_id
        for key in keys:
            sid = _splitmix64(sid ^ _splitmix64(_key_to_int(key) + 1))
        return RngStream(self.seed, sid)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id}

    @classmethod
    def from_dict(cls, data: dict) -> "RngStream":
        return cls(int(data["seed"]), int(data.get("stream_id", 0)))


def as_generator(rng: RngStream | np.random.Generator | int) -> np.random.Generator:
    """Accept a stream, a live generator, or a bare seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()
