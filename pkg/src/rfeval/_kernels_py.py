"""Pure-numpy fallback for the compiled kernels in ``_kernels``.

Same signatures and semantics; used when the extension is unavailable or when
``RFEVAL_FORCE_PYTHON=1`` is set.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col_nhwc(x: np.ndarray, k: int, stride: int, pad: int) -> np.ndarray:
    """Gather k*k patches of a BHWC batch into a (B*OH*OW, k*k*C) matrix."""
    b, h, w, c = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    # (B, OH, OW, C, kh, kw) -> (B, OH, OW, kh, kw, C)
    cols = win.transpose(0, 1, 2, 4, 5, 3)
    oh, ow = cols.shape[1], cols.shape[2]
    return np.ascontiguousarray(cols, dtype=np.float32).reshape(b * oh * ow, k * k * c)


def maxpool2d_nhwc(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Max over k*k spatial windows of a BHWC batch; no padding."""
    win = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    return np.ascontiguousarray(win.max(axis=(4, 5)))


def correlate1d_reflect(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Correlate each row with ``taps`` under symmetric-reflect padding."""
    r = len(taps) // 2
    n = x.shape[1]
    padded = np.pad(x, ((0, 0), (r, r)), mode="symmetric").astype(np.float64)
    acc = np.zeros_like(x, dtype=np.float64)
    for k in range(len(taps)):
        acc += taps[k] * padded[:, k:k + n]
    return acc.astype(np.float32)


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between the rows of a and b."""
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    d = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    return d
