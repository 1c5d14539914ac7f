"""Deterministic seed derivation and a tiny serializable PRNG.

Every stochastic component of a run (match setup, evolution operators,
opponent sampling) draws from a stream derived from one master seed, so the
whole campaign replays bit-for-bit from the seed alone.
"""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, *path: int | str) -> int:
    """Mix a master seed with a path of labels into a new 64-bit seed.

    Strings are folded in bytewise so stream names ("match", "mutate", ...)
    give unrelated streams without relying on Python's salted hash().
    """
    state = _splitmix64(master & _MASK64)
    for part in path:
        if isinstance(part, str):
            for b in part.encode("utf-8"):
                state = _splitmix64(state ^ b)
        else:
            state = _splitmix64(state ^ (part & _MASK64))
    return state


def rng_from(master: int, *path: int | str) -> random.Random:
    """A `random.Random` seeded from a derived stream."""
    return random.Random(derive_seed(master, *path))


class TickRandom:
    """Minimal splitmix64 generator with a one-integer state.

    Used inside GameState so the full simulation state stays cheap to
    snapshot and compare; `random.Random` state is a 625-word tuple.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = _splitmix64(self.state)
        return self.state

    def next_float(self) -> float:
        """Uniform in [0, 1)."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def copy(self) -> "TickRandom":
        out = TickRandom(0)
        out.state = self.state
        return out
