"""Order-controlled floating-point reductions of product terms.

Every reduction here sums ``n`` terms ``a[i] * b[i]`` (elementwise over any
trailing shape) in an order fixed by an accumulation scheme, so results are
bitwise reproducible.  Arithmetic happens in the dtype of the operands; in the
default mode each multiply and each add is a separately rounded IEEE operation.
With ``fused=True`` (float32 only) multiply-add pairs are contracted into one
correctly rounded operation, emulated exactly in float64.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_CHUNK = 1024
_BLOCK_ROWS = 4096  # power of two: pairwise blocks must stay aligned


@dataclass(frozen=True)
class Sequential:
    """Left-to-right accumulation in ascending index order."""

    def __str__(self):
        return "sequential"


@dataclass(frozen=True)
class PairwiseTree:
    """Balanced binary tree: each level adds neighbours ``(2i, 2i+1)``.

    A trailing unpaired element is carried unchanged to the next level.
    """

    def __str__(self):
        return "pairwise"


@dataclass(frozen=True)
class ChunkedTwoStage:
    """Sequential sums over consecutive chunks, then a sequential sum of the partials."""

    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if not isinstance(self.chunk_size, (int, np.integer)) or self.chunk_size < 1:
            raise ValueError(f"chunk_size must be a positive integer, got {self.chunk_size!r}")

    def __str__(self):
        return f"chunked:{self.chunk_size}"


SCHEMES = (Sequential, PairwiseTree, ChunkedTwoStage)


def parse_scheme(text):
    """Parse ``sequential``, ``pairwise``, ``chunked`` or ``chunked:<size>``."""
    name, _, arg = text.strip().lower().partition(":")
    if name in ("sequential", "seq"):
        scheme = Sequential()
    elif name in ("pairwise", "tree"):
        scheme = PairwiseTree()
    elif name in ("chunked", "two-stage", "twostage"):
        return ChunkedTwoStage(int(arg)) if arg else ChunkedTwoStage()
    else:
        raise ValueError(f"unknown accumulation scheme {text!r}")
    if arg:
        raise ValueError(f"scheme {name!r} takes no argument")
    return scheme


def fma32(a, b, c):
    """Correctly rounded float32 ``a * b + c``.

    The float64 product of two float32 values is exact.  The float64 sum is
    rounded, so its error term is recovered with TwoSum and folded back in by
    rounding to odd before the final narrowing to float32; 53 >= 24 + 2 bits
    makes that second rounding innocuous.
    """
    p = np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    p, c = np.broadcast_arrays(p, c)
    s = p + c
    bb = s - p
    err = (p - (s - bb)) + (c - bb)
    inexact = err != 0
    if np.any(inexact):
        s = np.array(s, copy=True)
        # truncate toward zero, then force the last bit on (round to odd)
        toward_zero = inexact & (np.signbit(err) != np.signbit(s))
        s[toward_zero] = np.nextafter(s[toward_zero], 0.0)
        bits = s.view(np.uint64)
        bits[inexact] |= np.uint64(1)
    return s.astype(np.float32)


def _check_fused(dtype, fused):
    if fused and dtype != np.float32:
        raise ValueError("fused multiply-add emulation is only defined for float32")


def sequential_dot(terms, n, fused=False, start=0, block=_BLOCK_ROWS):
    """Sum terms ``start..n-1`` strictly left to right.

    ``terms(lo, hi)`` returns a pair ``(a, b)`` whose leading axis indexes the
    terms ``lo..hi-1`` (broadcastable against each other).
    """
    if n <= start:
        raise ValueError("empty reduction")
    acc = None
    for lo in range(start, n, block):
        hi = min(lo + block, n)
        a, b = terms(lo, hi)
        a, b = np.broadcast_arrays(a, b)
        _check_fused(a.dtype, fused)
        if fused:
            for i in range(hi - lo):
                acc = a[i] * b[i] if acc is None else fma32(a[i], b[i], acc)
        else:
            prod = a * b
            first = 0
            if acc is None:
                acc = prod[0].copy()
                first = 1
            for i in range(first, hi - lo):
                acc = acc + prod[i]
    return acc


def sequential_sum(rows):
    """Left-to-right sum of the rows of ``rows``."""
    acc = rows[0].copy()
    for i in range(1, len(rows)):
        acc = acc + rows[i]
    return acc


def _tree_levels(level):
    while len(level) > 1:
        paired = level[0 : len(level) - 1 : 2] + level[1::2]
        if len(level) % 2:
            paired = np.concatenate([paired, level[-1:]])
        level = paired
    return level[0]


def _tree_leaves(a, b, fused):
    """First tree level; with ``fused`` each pair becomes ``fma(a1, b1, a0*b0)``."""
    if not fused:
        return a * b
    _check_fused(a.dtype, fused)
    even = a[0::2] * b[0::2]
    m = len(a) // 2
    pairs = fma32(a[1::2], b[1::2], even[:m])
    if len(a) % 2:
        pairs = np.concatenate([pairs, even[m:]])
    return pairs


def pairwise_dot(terms, n, fused=False, block=_BLOCK_ROWS):
    """Balanced-tree sum of ``n`` product terms.

    Works on aligned power-of-two blocks, which yields the same tree as a
    single level-by-level pass over all ``n`` terms while bounding memory.
    """
    if n <= 0:
        raise ValueError("empty reduction")
    sums = []
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        a, b = np.broadcast_arrays(*terms(lo, hi))
        level = _tree_leaves(a, b, fused)
        # fused leaves already consumed one level
        sums.append(_tree_levels(level))
    return _tree_levels(np.stack(sums))


def chunked_dot(terms, n, chunk_size, fused=False):
    """Two-stage sum: sequential per chunk, then sequential over chunk partials."""
    if n <= 0:
        raise ValueError("empty reduction")
    partials = []
    for lo in range(0, n, chunk_size):
        hi = min(lo + chunk_size, n)
        partials.append(sequential_dot(terms, hi, fused=fused, start=lo))
    return sequential_sum(partials)


def reduce_dot(terms, n, scheme, fused=False):
    """Dispatch to the reduction selected by ``scheme``."""
    if isinstance(scheme, Sequential):
        return sequential_dot(terms, n, fused)
    if isinstance(scheme, PairwiseTree):
        return pairwise_dot(terms, n, fused)
    if isinstance(scheme, ChunkedTwoStage):
        return chunked_dot(terms, n, scheme.chunk_size, fused)
    raise TypeError(f"not an accumulation scheme: {scheme!r}")
