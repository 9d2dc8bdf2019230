"""Seed handling: a published 64-bit mixing function plus counter-based generators.

Per-replication seeds are derived as ``derive_seed(base_seed, index)`` so that
replications are independent and individually reproducible regardless of
execution order or thread count.  The mixer is SplitMix64 (Steele, Lea &
Flood 2014): the stream state advances by the golden-ratio increment and each
output passes through the standard avalanche finalizer.  Generators are built
on Philox, which is counter-based and therefore bit-reproducible for a given
key on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """Avalanche finalizer of SplitMix64 applied to ``state`` (mod 2^64)."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(base_seed: int, index: int) -> int:
    """Return output number ``index`` of the SplitMix64 stream keyed by ``base_seed``."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    return splitmix64((base_seed + index * _GOLDEN) & _MASK64)


def make_generator(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
