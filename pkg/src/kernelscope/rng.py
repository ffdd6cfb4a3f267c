"""Portable seeded random data for validation runs.

The generator is SplitMix64 evaluated in counter mode: draw ``i`` (0-based) of
a stream seeded with ``seed`` is ``mix(seed + (i + 1) * GOLDEN)`` modulo 2**64,
where ``mix`` is the standard SplitMix64 finalizer.  Floats are built from the
top 24 bits ``u`` of each draw as ``u * 2**-23 - 1``, which lands on the grid
``[-1, 1 - 2**-23]`` and is exactly representable in float32.  Any language
with 64-bit unsigned arithmetic can regenerate the same tensors bit for bit.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed, count, offset=0):
    """Return ``count`` consecutive SplitMix64 outputs starting at draw ``offset``."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + idx * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform_pm1(seed, count, offset=0):
    """Float32 values uniform on [-1, 1) (24-bit grid)."""
    top = (splitmix64(seed, count, offset) >> np.uint64(40)).astype(np.float64)
    return (top * 2.0**-23 - 1.0).astype(np.float32)


class Stream:
    """Sequential draws from one seeded SplitMix64 stream."""

    def __init__(self, seed):
        self.seed = int(seed)
        self.position = 0

    def uniform(self, shape):
        shape = tuple(shape)
        n = int(np.prod(shape, dtype=np.int64))
        out = uniform_pm1(self.seed, n, self.position).reshape(shape)
        self.position += n
        return out
