"""Deterministic random primitives used for splits, augmentation, and training.

Every algorithm here is pinned exactly so that runs reproduce bit-for-bit
across machines and can be reimplemented in another language from this
docstring alone:

* ``fnv1a64``: 64-bit FNV-1a over bytes, offset basis ``0xcbf29ce484222325``,
  prime ``0x100000001b3``.
* ``Splitmix64``: the splitmix64 stream. State advances by
  ``0x9e3779b97f4a7c15`` per draw; the output is finalized with xor-shifts by
  30/27/31 and multiplications by ``0xbf58476d1ce4e5b9`` and
  ``0x94d049bb133111eb``.
* ``Splitmix64.uniform``: the top 53 bits of a draw scaled by ``2**-53``.
* ``Splitmix64.randbelow``: rejection sampling on 64-bit draws (no modulo
  bias).
* ``Splitmix64.shuffle``: backward Fisher-Yates using ``randbelow``.
* ``Splitmix64.gauss``: Box-Muller from two fresh uniforms, where the first
  is shifted into ``(0, 1]`` so the logarithm is always defined.
* ``derive_seed(root, name)``: first splitmix64 output of
  ``root XOR fnv1a64(name)``, giving every named component its own stream.
"""

from __future__ import annotations

import math
from typing import MutableSequence

_MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MULT1 = 0xBF58476D1CE4E5B9
_SM_MULT2 = 0x94D049BB133111EB


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of ``data``."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mix64(value: int) -> int:
    """The splitmix64 output finalizer applied to a single 64-bit value."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * _SM_MULT1) & _MASK64
    z = ((z ^ (z >> 27)) * _SM_MULT2) & _MASK64
    return z ^ (z >> 31)


class Splitmix64:
    """Deterministic 64-bit random stream seeded by an integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _SM_GAMMA) & _MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """A float in ``[0, 1)`` with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, bound: int) -> int:
        """A uniform integer in ``[0, bound)`` via rejection sampling."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        zone = ((1 << 64) // bound) * bound
        while True:
            draw = self.next_u64()
            if draw < zone:
                return draw % bound

    def shuffle(self, items: MutableSequence) -> None:
        """Backward Fisher-Yates shuffle, in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def gauss(self) -> float:
        """One standard normal draw (Box-Muller, two uniforms per call)."""
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def derive_seed(root_seed: int, component: str) -> int:
    """Per-component seed derived from a root seed and a component name."""
    return Splitmix64((root_seed & _MASK64) ^ fnv1a64(component.encode("utf-8"))).next_u64()
