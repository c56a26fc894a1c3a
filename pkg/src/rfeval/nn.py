"""Forward-only neural network kernels.

All kernels are pure functions over float32 numpy arrays in BCHW (images) or
trailing-feature layouts. Matrix products accumulate in float32 (BLAS);
reductions (pooling means, layer-norm statistics) accumulate in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rfeval import backend
from rfeval.rng import Rng


def kaiming_uniform_init(rng: Rng, shape, fan_in: int) -> np.ndarray:
    """Sample a tensor uniformly on [-b, b] with b = sqrt(6 / fan_in).

    The bound is the Kaiming-uniform bound with ReLU gain sqrt(2), applied
    uniformly to every layer type.
    """
    if fan_in <= 0:
        raise ValueError(f"fan_in must be positive, got {fan_in}")
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, shape)


def conv2d_nhwc(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                stride: int = 1, padding: int = 0) -> np.ndarray:
    """Cross-correlate a BHWC batch with OIKK filters; returns BHWC.

    Internal fast path: im2col keeps channel spans contiguous and the output
    needs no layout change.
    """
    b, h, w, c = x.shape
    o, ci, k, k2 = weight.shape
    if k != k2:
        raise ValueError(f"only square kernels supported, got {k}x{k2}")
    if ci != c:
        raise ValueError(f"input has {c} channels but weight expects {ci}")
    oh = (h + 2 * padding - k) // stride + 1
    ow = (w + 2 * padding - k) // stride + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"kernel {k} too large for input {h}x{w} with padding {padding}")
    cols = backend.im2col_nhwc(np.ascontiguousarray(x, dtype=np.float32), k, stride, padding)
    # (O, I, kh, kw) -> (kh, kw, I) columns to match im2col ordering
    wmat = np.ascontiguousarray(weight.transpose(2, 3, 1, 0).reshape(k * k * c, o))
    out = cols @ wmat
    out += bias
    return out.reshape(b, oh, ow, o)


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
           stride: int = 1, padding: int = 0) -> np.ndarray:
    """Cross-correlate a BCHW batch with OIKK filters.

    Output spatial size is floor((H + 2p - K) / s) + 1 per axis.
    """
    xn = np.ascontiguousarray(np.asarray(x, dtype=np.float32).transpose(0, 2, 3, 1))
    out = conv2d_nhwc(xn, weight, bias, stride, padding)
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """x @ weight + bias over the trailing axis; weight is (D, E)."""
    if x.shape[-1] != weight.shape[0]:
        raise ValueError(f"input dim {x.shape[-1]} != weight dim {weight.shape[0]}")
    lead = x.shape[:-1]
    # one large GEMM instead of a batched loop over leading axes
    out = np.ascontiguousarray(x).reshape(-1, x.shape[-1]) @ weight
    out += bias
    return out.reshape(*lead, weight.shape[1])


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def gelu(x: np.ndarray) -> np.ndarray:
    """Tanh-approximate GELU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))."""
    c1 = np.float32(math.sqrt(2.0 / math.pi))
    c2 = np.float32(math.sqrt(2.0 / math.pi) * 0.044715)
    out = np.tanh(x * (c1 + c2 * x * x))
    out += np.float32(1.0)
    out *= x
    out *= np.float32(0.5)
    return out


def max_pool2d_nhwc(x: np.ndarray, k: int, stride: int | None = None) -> np.ndarray:
    """Max over k*k windows of a BHWC batch; stride defaults to k."""
    if stride is None:
        stride = k
    if k > x.shape[1] or k > x.shape[2]:
        raise ValueError(f"pool window {k} larger than input {x.shape[1]}x{x.shape[2]}")
    return backend.maxpool2d_nhwc(np.ascontiguousarray(x, dtype=np.float32), k, stride)


def max_pool2d(x: np.ndarray, k: int, stride: int | None = None) -> np.ndarray:
    """Max over k*k windows of a BCHW batch; stride defaults to k."""
    xn = np.ascontiguousarray(np.asarray(x, dtype=np.float32).transpose(0, 2, 3, 1))
    return np.ascontiguousarray(max_pool2d_nhwc(xn, k, stride).transpose(0, 3, 1, 2))


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Mean over all spatial positions per channel; BCHW -> (B, C)."""
    return x.mean(axis=(2, 3), dtype=np.float64).astype(np.float32)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = 1e-5) -> np.ndarray:
    """Standardize the trailing axis, then apply the affine (gamma, beta)."""
    mean = x.mean(axis=-1, keepdims=True, dtype=np.float64)
    var = x.var(axis=-1, keepdims=True, dtype=np.float64)
    scale = (gamma / np.sqrt(var + eps)).astype(np.float32)
    shift = (beta - mean * gamma / np.sqrt(var + eps)).astype(np.float32)
    return x * scale + shift


def softmax(x: np.ndarray) -> np.ndarray:
    """Softmax over the trailing axis, stabilized by max subtraction."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class AttentionWeights:
    """Projection parameters for multi-head attention; all matrices (D, D)."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    bq: np.ndarray
    bk: np.ndarray
    bv: np.ndarray
    bo: np.ndarray


def multi_head_attention(tokens: np.ndarray, weights: AttentionWeights,
                         heads: int) -> np.ndarray:
    """Scaled dot-product attention over (N, T, D) token batches."""
    n, t, d = tokens.shape
    if d % heads != 0:
        raise ValueError(f"model dim {d} not divisible by {heads} heads")
    dh = d // heads

    def split(x):
        return x.reshape(n, t, heads, dh).transpose(0, 2, 1, 3)

    q = split(linear(tokens, weights.wq, weights.bq))
    k = split(linear(tokens, weights.wk, weights.bk))
    v = split(linear(tokens, weights.wv, weights.bv))
    scores = (q @ k.transpose(0, 1, 3, 2)) * np.float32(1.0 / math.sqrt(dh))
    att = softmax(scores)
    out = (att @ v).transpose(0, 2, 1, 3).reshape(n, t, d)
    return linear(out, weights.wo, weights.bo)
