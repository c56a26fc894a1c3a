"""The compiled kernel core and the numpy fallback must agree."""

import numpy as np
import pytest

from rfeval import _kernels_py as kpy
from rfeval import backend
from conftest import random_f32

try:
    from rfeval import _kernels as kc
except ImportError:
    kc = None

needs_ext = pytest.mark.skipif(kc is None, reason="compiled extension not built")


@needs_ext
@pytest.mark.parametrize("shape,k,stride,pad", [
    ((2, 8, 8, 3), 3, 1, 1),
    ((1, 7, 5, 4), 3, 2, 0),
    ((3, 16, 16, 8), 5, 1, 2),
    ((2, 16, 16, 3), 16, 16, 0),
])
def test_im2col_matches_fallback(shape, k, stride, pad):
    x = random_f32(0, shape)
    a = kc.im2col_nhwc(x, k, stride, pad)
    b = kpy.im2col_nhwc(x, k, stride, pad)
    assert a.shape == b.shape
    np.testing.assert_array_equal(a, b)


@needs_ext
@pytest.mark.parametrize("shape,k,stride", [
    ((2, 8, 8, 3), 2, 2),
    ((1, 9, 9, 4), 3, 2),
    ((2, 4, 4, 16), 4, 4),
])
def test_maxpool_matches_fallback(shape, k, stride):
    x = random_f32(1, shape)
    np.testing.assert_array_equal(kc.maxpool2d_nhwc(x, k, stride),
                                  kpy.maxpool2d_nhwc(x, k, stride))


@needs_ext
@pytest.mark.parametrize("n,taps", [(16, 3), (7, 5), (32, 13), (5, 19)])
def test_correlate_matches_fallback(n, taps):
    x = random_f32(2, (6, n))
    t = np.abs(np.random.default_rng(0).normal(size=taps))
    t /= t.sum()
    a = kc.correlate1d_reflect(x, t)
    b = kpy.correlate1d_reflect(x, t)
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-7)


@needs_ext
def test_pairwise_matches_fallback():
    a = random_f32(3, (20, 7)).astype(np.float64)
    b = random_f32(4, (15, 7)).astype(np.float64)
    np.testing.assert_allclose(kc.pairwise_sqdist(a, b), kpy.pairwise_sqdist(a, b),
                               rtol=1e-9, atol=1e-12)


def test_backend_selected():
    assert backend.BACKEND in ("compiled", "python")


def test_im2col_zero_padding_rows():
    # a corner output position must see zeros for out-of-bounds taps
    x = np.ones((1, 4, 4, 1), dtype=np.float32)
    cols = backend.im2col_nhwc(x, 3, 1, 1)
    corner = cols[0].reshape(3, 3)
    assert corner[0, 0] == 0.0 and corner[1, 1] == 1.0


def test_pairwise_sqdist_values():
    a = np.array([[0.0, 0.0], [1.0, 1.0]])
    b = np.array([[3.0, 4.0]])
    np.testing.assert_allclose(backend.pairwise_sqdist(a, b), [[25.0], [13.0]])
