"""Independent reference computations used by the tests.

None of these share code with the package: the loop oracles index the
mathematical definitions directly, the gather oracle builds the full index
matrix of the zero-padded window and contracts it with einsum.
"""

import numpy as np


def loop_forward(x, k):
    B, H, L = x.shape
    K = k.shape[1]
    p = K // 2
    y = np.zeros((B, H, L))
    for b in range(B):
        for h in range(H):
            for t in range(L):
                s = 0.0
                for j in range(K):
                    i = t + j - p
                    if 0 <= i < L:
                        s += float(x[b, h, i]) * float(k[h, j])
                y[b, h, t] = s
    return y


def loop_backward_weight(gy, x, K):
    B, H, L = x.shape
    p = K // 2
    dk = np.zeros((H, K))
    for h in range(H):
        for j in range(K):
            s = 0.0
            for b in range(B):
                for t in range(L):
                    i = t + j - p
                    if 0 <= i < L:
                        s += float(gy[b, h, t]) * float(x[b, h, i])
            dk[h, j] = s
    return dk


def jacobian_backward_input(gy, k):
    """dx via the transpose of the explicit per-channel forward matrix."""
    B, H, L = gy.shape
    K = k.shape[1]
    p = K // 2
    dx = np.zeros((B, H, L))
    for h in range(H):
        M = np.zeros((L, L))
        for t in range(L):
            for j in range(K):
                i = t + j - p
                if 0 <= i < L:
                    M[t, i] += float(k[h, j])
        dx[:, h, :] = np.asarray(gy[:, h, :], np.float64) @ M
    return dx


def _gather(a, K):
    B, H, L = a.shape
    p = K // 2
    idx = np.arange(L)[:, None] + np.arange(K)[None, :] - p
    valid = (idx >= 0) & (idx < L)
    g = np.asarray(a, np.float64)[:, :, np.clip(idx, 0, L - 1)]
    return np.where(valid, g, 0.0)  # [b, h, t, j]


def gather_forward(x, k):
    return np.einsum("bhtj,hj->bht", _gather(x, k.shape[1]), np.asarray(k, np.float64))


def gather_backward_input(gy, k):
    """Scatter-add form of the adjoint: dx[t+j-p] += gy[t] * k[j]."""
    B, H, L = gy.shape
    K = k.shape[1]
    p = K // 2
    g = np.asarray(gy, np.float64)
    kk = np.asarray(k, np.float64)
    dx = np.zeros((B, H, L))
    for j in range(K):
        lo, hi = max(0, p - j), min(L, L + p - j)
        if lo < hi:
            dx[:, :, lo + j - p : hi + j - p] += g[:, :, lo:hi] * kk[None, :, j, None]
    return dx


def gather_backward_weight(gy, x, K):
    return np.einsum("bht,bhtj->hj", np.asarray(gy, np.float64), _gather(x, K))
