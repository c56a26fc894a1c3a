"""Two-space outlier analysis: k-NN distances, the high/low split, the
progressive replacement sweep, and nearest-neighbor retrieval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rfeval import backend
from rfeval.extractors import FeatureMatrix
from rfeval.rng import Rng


@dataclass
class OutlierSplit:
    high_indices: np.ndarray
    low_indices: np.ndarray
    d_high: np.ndarray
    d_low: np.ndarray


def knn_distance(features: FeatureMatrix | np.ndarray, k: int,
                 chunk: int = 512) -> np.ndarray:
    """Euclidean distance from each sample to its k-th nearest other sample."""
    x = (features.data if isinstance(features, FeatureMatrix) else np.asarray(features))
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if n <= k:
        raise ValueError(f"need more than k={k} samples, got {n}")
    out = np.empty(n)
    for start in range(0, n, chunk):
        block = x[start:start + chunk]
        d2 = backend.pairwise_sqdist(block, x)
        rows = np.arange(start, min(start + chunk, n))
        d2[rows - start, rows] = np.inf
        out[start:start + chunk] = np.sqrt(np.partition(d2, k - 1, axis=1)[:, k - 1])
    return out


def _top_indices(d: np.ndarray, m: int) -> np.ndarray:
    # descending by distance, ties broken by sample index (stable)
    order = np.lexsort((np.arange(len(d)), -d))
    return order[:m]


def split_outliers(d_high: np.ndarray, d_low: np.ndarray, alpha: float) -> OutlierSplit:
    """Split samples into high-level and low-level outliers.

    High-level outliers rank in the top alpha% by d_high and the bottom
    (100 - alpha)% by d_low; low-level outliers are symmetric. Samples in the
    top alpha% of both rankings are discarded, so the two sets are disjoint.
    The top-alpha% cut uses the nearest-rank count ceil(alpha/100 * N).
    """
    d_high = np.asarray(d_high, dtype=np.float64)
    d_low = np.asarray(d_low, dtype=np.float64)
    if d_high.shape != d_low.shape or d_high.ndim != 1:
        raise ValueError(f"distance lists must match, got {d_high.shape} and {d_low.shape}")
    if not 0 < alpha < 100:
        raise ValueError(f"alpha must be in (0, 100), got {alpha}")
    n = len(d_high)
    m = math.ceil(alpha / 100.0 * n)
    top_high = set(_top_indices(d_high, m).tolist())
    top_low = set(_top_indices(d_low, m).tolist())
    high = np.array(sorted(top_high - top_low), dtype=np.int64)
    low = np.array(sorted(top_low - top_high), dtype=np.int64)
    return OutlierSplit(high_indices=high, low_indices=low, d_high=d_high, d_low=d_low)


def replacement_sweep(real: np.ndarray, outliers: np.ndarray, step: int,
                      extractor, metric, num_steps: int | None = None,
                      seed: int = 0) -> list[tuple[float, float]]:
    """Progressively replace real samples with outliers and track a metric.

    At sweep step t, t * step real samples (a seeded random subset, fixed
    across steps so earlier replacements persist) are replaced with the first
    t * step outliers; the metric is evaluated against the original set.
    ``extractor`` maps a sample batch to a FeatureMatrix and ``metric`` maps
    (reference, candidate) feature pairs to a float. Per-sample extraction is
    pure, so replaced rows are spliced instead of re-embedding the whole set.
    """
    if step < 1:
        raise ValueError("step must be at least 1")
    n = len(real)
    if num_steps is None:
        num_steps = len(outliers) // step
    if num_steps * step > len(outliers):
        raise ValueError(f"outlier pool ({len(outliers)}) exhausted before {num_steps} steps of {step}")
    if num_steps * step > n:
        raise ValueError(f"cannot replace {num_steps * step} of {n} samples")
    ref = extractor(real)
    pool = extractor(outliers[:num_steps * step])
    order = Rng(seed).permutation(n)
    curve = [(0.0, float(metric(ref, ref)))]
    current = ref.data.copy()
    for t in range(1, num_steps + 1):
        lo, hi = (t - 1) * step, t * step
        current[order[lo:hi]] = pool.data[lo:hi]
        fm = FeatureMatrix(current.copy(), dict(ref.meta))
        curve.append((hi / n, float(metric(ref, fm))))
    return curve


def retrieve_nearest(query: np.ndarray, corpus: np.ndarray, extractor,
                     top: int = 5) -> list[tuple[int, float]]:
    """Rank corpus samples by feature distance to a single query sample."""
    if top < 1 or top > len(corpus):
        raise ValueError(f"top must be in [1, {len(corpus)}], got {top}")
    qf = extractor(query[None] if query.ndim == 3 else query)
    cf = extractor(corpus)
    d2 = backend.pairwise_sqdist(qf.data.astype(np.float64), cf.data.astype(np.float64))[0]
    order = np.lexsort((np.arange(len(d2)), d2))[:top]
    return [(int(i), float(math.sqrt(d2[i]))) for i in order]
