# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: NHWC im2col gather, NHWC max pooling, reflect-padded
1-D correlation, and pairwise squared distances.

A numpy fallback with the same signatures lives in ``_kernels_py``; the
active implementation is chosen in ``backend``. The NHWC layout makes every
patch copy a contiguous channel span, which keeps im2col memory-bound rather
than branch-bound.
"""

from libc.string cimport memcpy

import numpy as np

cimport numpy as cnp


def im2col_nhwc(const cnp.float32_t[:, :, :, ::1] x, int k, int stride, int pad):
    """Gather k*k patches of a BHWC batch into a (B*OH*OW, k*k*C) matrix.

    Out-of-bounds taps (zero padding) contribute zeros. Row order is
    (b, oh, ow); column order is (kh, kw, c).
    """
    cdef Py_ssize_t bsz = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t oh_n = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t ow_n = (w + 2 * pad - k) // stride + 1
    cdef cnp.ndarray[cnp.float32_t, ndim=2] out = np.zeros(
        (bsz * oh_n * ow_n, k * k * c), dtype=np.float32
    )
    cdef cnp.float32_t[:, ::1] o = out
    cdef Py_ssize_t b_, oh, ow, kh, kw, ih, iw, row0, colbase
    for b_ in range(bsz):
        for oh in range(oh_n):
            row0 = (b_ * oh_n + oh) * ow_n
            for kh in range(k):
                ih = oh * stride + kh - pad
                if ih < 0 or ih >= h:
                    continue
                for kw in range(k):
                    colbase = (kh * k + kw) * c
                    for ow in range(ow_n):
                        iw = ow * stride + kw - pad
                        if iw < 0 or iw >= w:
                            continue
                        memcpy(&o[row0 + ow, colbase], &x[b_, ih, iw, 0],
                               c * sizeof(cnp.float32_t))
    return out


def maxpool2d_nhwc(const cnp.float32_t[:, :, :, ::1] x, int k, int stride):
    """Max over k*k spatial windows of a BHWC batch; no padding."""
    cdef Py_ssize_t bsz = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t oh_n = (h - k) // stride + 1
    cdef Py_ssize_t ow_n = (w - k) // stride + 1
    cdef cnp.ndarray[cnp.float32_t, ndim=4] out = np.empty(
        (bsz, oh_n, ow_n, c), dtype=np.float32
    )
    cdef cnp.float32_t[:, :, :, ::1] o = out
    cdef Py_ssize_t b_, oh, ow, kh, kw, ci
    cdef cnp.float32_t v
    for b_ in range(bsz):
        for oh in range(oh_n):
            for ow in range(ow_n):
                memcpy(&o[b_, oh, ow, 0], &x[b_, oh * stride, ow * stride, 0],
                       c * sizeof(cnp.float32_t))
                for kh in range(k):
                    for kw in range(k):
                        if kh == 0 and kw == 0:
                            continue
                        for ci in range(c):
                            v = x[b_, oh * stride + kh, ow * stride + kw, ci]
                            if v > o[b_, oh, ow, ci]:
                                o[b_, oh, ow, ci] = v
    return out


def correlate1d_reflect(const cnp.float32_t[:, ::1] x,
                        const cnp.float64_t[::1] taps):
    """Correlate each row with ``taps`` under symmetric-reflect padding.

    The tap count must be odd. Accumulation is float64, taps in ascending
    index order, matching the fallback.
    """
    cdef Py_ssize_t rows = x.shape[0], n = x.shape[1], kn = taps.shape[0]
    cdef Py_ssize_t r = kn // 2
    cdef cnp.ndarray[cnp.float32_t, ndim=2] out = np.empty((rows, n), dtype=np.float32)
    cdef cnp.float32_t[:, ::1] o = out
    cdef Py_ssize_t i, j, k, idx
    cdef cnp.float64_t acc
    for i in range(rows):
        for j in range(n):
            acc = 0.0
            for k in range(kn):
                idx = j + k - r
                # symmetric reflection: ...cba|abc...|cba...
                while idx < 0 or idx >= n:
                    if idx < 0:
                        idx = -idx - 1
                    else:
                        idx = 2 * n - idx - 1
                acc += taps[k] * x[i, idx]
            o[i, j] = <cnp.float32_t> acc
    return out


def pairwise_sqdist(const cnp.float64_t[:, ::1] a,
                    const cnp.float64_t[:, ::1] b):
    """Squared Euclidean distances between the rows of a and b."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef cnp.float64_t acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            o[i, j] = acc
    return out
