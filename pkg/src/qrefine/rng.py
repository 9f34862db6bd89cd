"""Reproducible randomness for dataset construction.

The generator contract is fixed so that identical inputs, config, and seed
produce byte-identical datasets regardless of platform or language:

* Stream generator: SplitMix64 (Steele, Lea & Flood 2014), 64-bit state,
  output scrambled with the usual 0xBF58.../0x94D0... constants.
* Per-query streams: the stream key is ``seed XOR (FNV-1a 64 of the label)``
  mixed once through the SplitMix64 step, so each query gets an independent
  substream from a single dataset seed.
* Subset draws: Knuth selection sampling (Algorithm S) over the canonically
  ordered candidate pool, which preserves pool order in the sample.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


class SplitMix64:
    """SplitMix64 pseudo-random generator; identical output on every platform."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randrange(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = _MASK64 - (_MASK64 + 1) % bound
        while True:
            value = self.next_u64()
            if value <= limit:
                return value % bound


def stream_for(seed: int, label: str) -> SplitMix64:
    """Independent substream keyed by a dataset seed and a text label."""
    gen = SplitMix64((seed ^ fnv1a64(label)) & _MASK64)
    gen.next_u64()  # discard one output so nearby seeds decorrelate
    return gen


def sample_without_replacement(items: Sequence[T], k: int, gen: SplitMix64) -> list[T]:
    """Selection sampling: k distinct items, preserving input order."""
    if k < 0 or k > len(items):
        raise ValueError(f"cannot sample {k} of {len(items)} items")
    chosen: list[T] = []
    needed = k
    remaining = len(items)
    for item in items:
        if needed == 0:
            break
        if gen.random() * remaining < needed:
            chosen.append(item)
            needed -= 1
        remaining -= 1
    return chosen
