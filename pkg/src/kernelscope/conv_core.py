"""Reference depthwise 1D convolution: forward, input gradient, weight gradient.

Tensors are plain C-ordered numpy arrays: activations and gradients have shape
``(B, H, L)`` with ``t`` as the stride-1 axis, kernels have shape ``(H, K)``.
Arithmetic runs in the dtype of the inputs (float32 for the reference path,
float64 for oracles) and every summation order is fixed, so repeated calls are
bitwise identical.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .accumulate import ChunkedTwoStage, Sequential, reduce_dot, sequential_dot
from .rng import Stream

REL_EPS = 1e-12
_TEMP_ELEMENTS = 1 << 24


class DimensionError(ValueError):
    """An input tensor disagrees with the problem shape along a named axis."""


def pad_width(K):
    """Zero padding on the left of the window: ``floor(K / 2)``."""
    if K < 1:
        raise ValueError(f"kernel length must be >= 1, got {K}")
    return K // 2


@dataclass(frozen=True)
class ConvShape:
    B: int
    H: int
    L: int
    K: int

    def __post_init__(self):
        for axis in "BHLK":
            v = getattr(self, axis)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{axis} must be a positive integer, got {v!r}")

    @property
    def p(self):
        return pad_width(self.K)

    @property
    def reduction_length(self):
        """Number of terms in each weight-gradient sum (B*L)."""
        return self.B * self.L

    def as_tuple(self):
        return (self.B, self.H, self.L, self.K)

    def __str__(self):
        return f"B={self.B} H={self.H} L={self.L} K={self.K}"


def _check(name, arr, expected, axes):
    arr = np.asarray(arr)
    if arr.ndim != len(expected):
        raise DimensionError(f"{name} must have {len(expected)} dims {axes}, got shape {arr.shape}")
    for axis, got, want in zip(axes, arr.shape, expected):
        if got != want:
            raise DimensionError(f"{name}: axis {axis} has size {got}, expected {want}")
    if not np.issubdtype(arr.dtype, np.floating):
        raise TypeError(f"{name} must be a floating-point array, got {arr.dtype}")
    return np.ascontiguousarray(arr)


def _check_activation(name, arr, shape):
    return _check(name, arr, (shape.B, shape.H, shape.L), "BHL")


def _check_kernel(k, shape):
    return _check("k", k, (shape.H, shape.K), "HK")


def _common_dtype(*arrays):
    dt = np.result_type(*arrays)
    return [a.astype(dt, copy=False) for a in arrays]


def _pad_time(arr, left, right):
    B, H, L = arr.shape
    out = np.zeros((B, H, L + left + right), dtype=arr.dtype)
    out[:, :, left : left + L] = arr
    return out


def _window_conv(padded, weights, L, fused):
    """``out[b,h,t] = sum_j padded[b,h,t+j] * weights[h,j]``, left to right in j."""
    K = weights.shape[1]
    windows = sliding_window_view(padded, L, axis=-1)  # [b, h, j, t]
    wt = np.ascontiguousarray(weights.T)  # [j, h]

    def terms(lo, hi):
        return np.moveaxis(windows[:, :, lo:hi, :], 2, 0), wt[lo:hi, None, :, None]

    rows = max(1, min(K, _TEMP_ELEMENTS // max(1, windows.shape[0] * windows.shape[1] * L)))
    return sequential_dot(terms, K, fused=fused, block=rows)


def forward(x, k, shape, fused=False):
    """``y[b,h,t] = sum_j xpad[b,h,t+j-p] * k[h,j]`` with zero padding, j ascending."""
    x = _check_activation("x", x, shape)
    k = _check_kernel(k, shape)
    x, k = _common_dtype(x, k)
    p = shape.p
    return _window_conv(_pad_time(x, p, shape.K - 1 - p), k, shape.L, fused)


def backward_input(gy, k, shape, fused=False):
    """Gradient of ``forward`` with respect to ``x``.

    ``dx[b,h,t] = sum_j gypad[b,h,t+j-q] * k[h,K-1-j]`` with ``q = K-1-p``.
    For odd ``K`` the offset ``q`` equals ``p``; for even ``K`` it is ``p-1``,
    which keeps this the exact adjoint of ``forward``.
    """
    gy = _check_activation("gy", gy, shape)
    k = _check_kernel(k, shape)
    gy, k = _common_dtype(gy, k)
    p = shape.p
    q = shape.K - 1 - p
    return _window_conv(_pad_time(gy, q, p), k[:, ::-1], shape.L, fused)


def backward_weight(gy, x, shape, scheme=None, fused=False):
    """``dk[h,j] = sum_{b,t} gy[b,h,t] * xpad[b,h,t+j-p]``.

    The B*L terms of each sum are indexed by the flat position ``n = b*L + t``
    and combined in the order dictated by ``scheme`` (default two-stage with
    1024-element chunks).
    """
    if scheme is None:
        scheme = ChunkedTwoStage()
    gy = _check_activation("gy", gy, shape)
    x = _check_activation("x", x, shape)
    gy, x = _common_dtype(gy, x)
    B, H, L, K = shape.as_tuple()
    p = shape.p
    xwin = sliding_window_view(_pad_time(x, p, K - 1 - p), K, axis=-1)  # [b, h, t, j]

    def terms(lo, hi):
        b0, b1 = lo // L, -(-hi // L)
        off = lo - b0 * L
        xs = xwin[b0:b1].transpose(0, 2, 1, 3).reshape(-1, H, K)[off : off + hi - lo]
        gs = gy[b0:b1].transpose(0, 2, 1).reshape(-1, H)[off : off + hi - lo]
        return gs[:, :, None], xs

    return reduce_dot(terms, B * L, scheme, fused)


# -- validation ---------------------------------------------------------------


def max_abs_error(approx, reference):
    return float(np.max(np.abs(np.asarray(approx, np.float64) - np.asarray(reference, np.float64))))


def max_rel_error(approx, reference, eps=REL_EPS):
    """Largest absolute deviation scaled by the reference magnitude.

    The denominator is ``max(max|reference|, eps)``: a normwise error, so
    near-zero entries of a cancellation-heavy gradient do not dominate.
    """
    ref = np.asarray(reference, np.float64)
    return max_abs_error(approx, ref) / max(float(np.max(np.abs(ref))), eps)


def make_inputs(shape, seed):
    """Seeded float32 ``x``, ``k``, ``gy`` drawn in that order from one stream."""
    stream = Stream(seed)
    x = stream.uniform((shape.B, shape.H, shape.L))
    k = stream.uniform((shape.H, shape.K))
    gy = stream.uniform((shape.B, shape.H, shape.L))
    return x, k, gy


@dataclass
class PathError:
    path: str
    max_abs: float
    max_rel: float
    scheme: str = ""


@dataclass
class ValidationReport:
    shape: ConvShape
    seed: int
    schemes: list
    fused: bool = False
    errors: list = field(default_factory=list)
    dk_spread_abs: float = 0.0
    dk_spread_rel: float = 0.0

    def error(self, path, scheme=""):
        for e in self.errors:
            if e.path == path and e.scheme == scheme:
                return e
        raise KeyError((path, scheme))

    def dk_errors(self):
        return [e for e in self.errors if e.path == "bwd_k"]

    def rows(self):
        for e in self.errors:
            yield {
                "B": self.shape.B,
                "H": self.shape.H,
                "L": self.shape.L,
                "K": self.shape.K,
                "path": e.path,
                "scheme": e.scheme,
                "max_abs": e.max_abs,
                "max_rel": e.max_rel,
            }


def validate(shape, seed, schemes, fused=False):
    """Compare the float32 paths against a float64 sequential oracle.

    The oracle is rounded to float32 before comparing, so a result that is
    the correctly rounded exact value scores zero.  Reports the worst absolute
    and relative error of forward, input gradient and (per scheme) weight
    gradient, plus the largest pairwise difference between the weight
    gradients of the different schemes.
    """
    schemes = list(schemes)
    if not schemes:
        raise ValueError("at least one accumulation scheme is required")
    x, k, gy = make_inputs(shape, seed)
    x64, k64, gy64 = (a.astype(np.float64) for a in (x, k, gy))

    report = ValidationReport(shape=shape, seed=seed, schemes=[str(s) for s in schemes], fused=fused)

    y_ref = forward(x64, k64, shape).astype(np.float32)
    y = forward(x, k, shape, fused=fused)
    report.errors.append(PathError("fwd", max_abs_error(y, y_ref), max_rel_error(y, y_ref)))

    dx_ref = backward_input(gy64, k64, shape).astype(np.float32)
    dx = backward_input(gy, k, shape, fused=fused)
    report.errors.append(PathError("bwd_in", max_abs_error(dx, dx_ref), max_rel_error(dx, dx_ref)))

    dk_ref = backward_weight(gy64, x64, shape, Sequential()).astype(np.float32)
    dks = []
    for s in schemes:
        dk = backward_weight(gy, x, shape, s, fused=fused)
        dks.append(dk)
        report.errors.append(
            PathError("bwd_k", max_abs_error(dk, dk_ref), max_rel_error(dk, dk_ref), scheme=str(s))
        )
    for i in range(len(dks)):
        for j in range(i + 1, len(dks)):
            report.dk_spread_abs = max(report.dk_spread_abs, max_abs_error(dks[i], dks[j]))
            report.dk_spread_rel = max(report.dk_spread_rel, max_rel_error(dks[i], dks[j]))
    return report


def geometric_sweep(H=16, L=48, K=48, B0=16, steps=4, factor=4):
    """Shapes whose reduction length B*L grows by ``factor`` per step."""
    return [ConvShape(B0 * factor**i, H, L, K) for i in range(steps + 1)]


def sweep(shapes, seed, schemes, fused=False):
    return [validate(s, seed, schemes, fused=fused) for s in shapes]


def count_nondecreasing(values):
    """Number of consecutive steps ``values[i] <= values[i+1]``."""
    return sum(1 for a, b in zip(values, values[1:]) if b >= a)
