"""Deterministic per-trajectory seed derivation.

Trajectory i of an ensemble draws its RNG stream from
splitmix64(master_seed + (i + 1) * GOLDEN), the standard SplitMix64 mixing
function on 64-bit words. The derived value seeds numpy's default generator,
so results are reproducible from (master_seed, index) alone and independent
of scheduling order.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    x &= MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & MASK64
    return (x ^ (x >> 31)) & MASK64


def derive_seed(master_seed, index):
    """64-bit seed for trajectory `index` of an ensemble."""
    if index < 0:
        raise ValueError("trajectory index must be non-negative")
    return splitmix64((int(master_seed) + (index + 1) * GOLDEN) & MASK64)


def rng_for(master_seed, index):
    """numpy Generator for trajectory `index`."""
    return np.random.default_rng(derive_seed(master_seed, index))
