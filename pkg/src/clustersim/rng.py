"""Counter-based random streams.

Every draw is a pure function of ``(key, id, draw)`` where the key is derived
from the run seed and a tuple of purpose tags (day number, ``"move"``, ...).
Nothing is consumed sequentially, so the values a cluster sees do not depend
on evaluation order, chunking, or thread count.

The mixing function is the SplitMix64 finalizer applied twice: once to fold
the id into the key, once to fold in the draw index.
"""
from __future__ import annotations

import zlib

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _part_value(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8")) | (1 << 40)
    return int(part) & _MASK64


def _absorb(key: int, part) -> int:
    z = np.array([(key + _part_value(part) * 0x9E3779B97F4A7C15 + 1) & _MASK64],
                 dtype=np.uint64)
    return int(_mix(_mix(z))[0])


class Stream:
    """A keyed family of independent uniform sequences, one per integer id."""

    __slots__ = ("key",)

    def __init__(self, key: int):
        self.key = int(key) & _MASK64

    @classmethod
    def derive(cls, seed: int, *parts) -> "Stream":
        key = _absorb(0x243F6A8885A308D3, int(seed) & _MASK64)
        for p in parts:
            key = _absorb(key, p)
        return cls(key)

    def child(self, *parts) -> "Stream":
        key = self.key
        for p in parts:
            key = _absorb(key, p)
        return Stream(key)

    def bits(self, ids, draw: int = 0) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            z = _mix(np.uint64(self.key) ^ _mix((ids + np.uint64(1)) * _GAMMA))
            z = _mix(z + np.uint64((int(draw) + 1) & _MASK64) * _GAMMA)
        return z

    def uniform(self, ids, draw: int = 0) -> np.ndarray:
        """Uniform doubles in the open interval (0, 1)."""
        z = self.bits(ids, draw) >> np.uint64(11)
        return (z.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)

    def normal(self, ids, draw: int = 0) -> np.ndarray:
        return ndtri(self.uniform(ids, draw))

    def __repr__(self) -> str:
        return f"Stream(key=0x{self.key:016x})"
