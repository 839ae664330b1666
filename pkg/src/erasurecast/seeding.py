"""Seed derivation.

Every derived seed comes from the SplitMix64 output function applied to
``base + (index + 1) * GOLDEN`` (mod 2**64), i.e. the ``index``-th output of a
SplitMix64 stream started at ``base``. Trial seeds, per-trial substreams and
coefficient-schedule seeds all use this one function.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, index: int) -> int:
    return splitmix64((base + (index + 1) * GOLDEN) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & MASK64)
