"""Distribution distances and rank statistics over feature matrices.

FID follows the Gaussian-fit Fréchet distance with the cross term computed in
the symmetric form trace((S_r Sigma_g S_r)^(1/2)) with S_r = Sigma_r^(1/2),
which keeps the matrix square roots on symmetric PSD inputs. KID is the full
unbiased MMD^2 estimator under the cubic polynomial kernel. Precision/recall
are the k-NN-radius manifold estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.stats

from rfeval import backend
from rfeval.extractors import FeatureMatrix


@dataclass
class GaussianStats:
    """Sample mean and unbiased covariance of a feature matrix."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int


@dataclass
class MetricReport:
    """Per-seed metric values with their aggregate statistics."""

    metric: str
    seeds: list
    per_seed: list
    mean: float
    std: float
    min: float
    max: float
    meta: dict = field(default_factory=dict)


def fit_gaussian(features: FeatureMatrix | np.ndarray) -> GaussianStats:
    x = features.data if isinstance(features, FeatureMatrix) else np.asarray(features)
    x = x.astype(np.float64)
    if x.shape[0] < 2:
        raise ValueError(f"need at least 2 samples to fit a Gaussian, got {x.shape[0]}")
    mu = x.mean(axis=0)
    centered = x - mu
    sigma = centered.T @ centered / (x.shape[0] - 1)
    sigma = (sigma + sigma.T) / 2.0
    return GaussianStats(mu=mu, sigma=sigma, n=x.shape[0])


def matrix_sqrt_psd(a: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix via eigendecomposition.

    Slightly negative eigenvalues (numerical noise) are clamped to zero.
    """
    a = np.asarray(a, dtype=np.float64)
    asym = np.abs(a - a.T).max() if a.size else 0.0
    if asym > 1e-6 * max(1.0, np.abs(a).max()):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    w, v = scipy.linalg.eigh((a + a.T) / 2.0)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def fid(g: GaussianStats, r: GaussianStats) -> float:
    """Fréchet distance between two Gaussian fits.

    ||mu_g - mu_r||^2 + tr(Sigma_g + Sigma_r - 2 (Sigma_g Sigma_r)^(1/2)),
    clamped to zero when float noise drives it slightly negative.
    """
    if g.mu.shape != r.mu.shape:
        raise ValueError(f"dimension mismatch: {g.mu.shape} vs {r.mu.shape}")
    sr = matrix_sqrt_psd(r.sigma)
    inner = sr @ g.sigma @ sr
    w = scipy.linalg.eigvalsh((inner + inner.T) / 2.0)
    tr_cross = np.sqrt(np.clip(w, 0.0, None)).sum()
    diff = g.mu - r.mu
    value = diff @ diff + np.trace(g.sigma) + np.trace(r.sigma) - 2.0 * tr_cross
    return float(max(value, 0.0))


def _poly3(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return (x @ y.T / d + 1.0) ** 3


def kid(x: FeatureMatrix | np.ndarray, y: FeatureMatrix | np.ndarray) -> float:
    """Unbiased MMD^2 under the cubic polynomial kernel (x.y / D + 1)^3."""
    xa = (x.data if isinstance(x, FeatureMatrix) else np.asarray(x)).astype(np.float64)
    ya = (y.data if isinstance(y, FeatureMatrix) else np.asarray(y)).astype(np.float64)
    if xa.shape[1] != ya.shape[1]:
        raise ValueError(f"dimension mismatch: {xa.shape[1]} vs {ya.shape[1]}")
    n, m = xa.shape[0], ya.shape[0]
    if n < 2 or m < 2:
        raise ValueError("KID needs at least 2 rows on each side")
    kxx = _poly3(xa, xa)
    kyy = _poly3(ya, ya)
    kxy = _poly3(xa, ya)
    term_x = (kxx.sum() - np.trace(kxx)) / (n * (n - 1))
    term_y = (kyy.sum() - np.trace(kyy)) / (m * (m - 1))
    return float(term_x + term_y - 2.0 * kxy.mean())


def _knn_radii(x: np.ndarray, k: int) -> np.ndarray:
    d2 = backend.pairwise_sqdist(x, x)
    np.fill_diagonal(d2, np.inf)
    kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
    return np.sqrt(kth)


def precision_recall(real: FeatureMatrix | np.ndarray, gen: FeatureMatrix | np.ndarray,
                     k: int = 3) -> tuple[float, float]:
    """Improved precision/recall from k-NN-radius hyperspheres.

    Precision: fraction of generated points within the union of real
    hyperspheres; recall symmetric with the roles swapped.
    """
    ra = (real.data if isinstance(real, FeatureMatrix) else np.asarray(real)).astype(np.float64)
    ga = (gen.data if isinstance(gen, FeatureMatrix) else np.asarray(gen)).astype(np.float64)
    if k >= ra.shape[0] or k >= ga.shape[0]:
        raise ValueError(f"k={k} must be smaller than both set sizes ({ra.shape[0]}, {ga.shape[0]})")
    r_radii = _knn_radii(ra, k)
    g_radii = _knn_radii(ga, k)
    cross = backend.pairwise_sqdist(ra, ga)  # (N_real, N_gen)
    precision = float((cross <= r_radii[:, None] ** 2).any(axis=0).mean())
    recall = float((cross <= g_radii[None, :] ** 2).any(axis=1).mean())
    return precision, recall


def spearman(a, b) -> float:
    """Spearman rank correlation with average ranks on ties."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"inputs must be equal-length 1-D sequences, got {a.shape} and {b.shape}")
    if len(a) < 2:
        raise ValueError("need at least 2 values")
    ra = scipy.stats.rankdata(a)
    rb = scipy.stats.rankdata(b)
    if np.ptp(ra) == 0 or np.ptp(rb) == 0:
        raise ValueError("rank variance is zero; correlation undefined")
    return float(np.corrcoef(ra, rb)[0, 1])


def aggregate_seeds(metric: str, seeds, values, meta: dict | None = None) -> MetricReport:
    """Summarize per-seed metric values (sample std; 0 for a single seed)."""
    values = [float(v) for v in values]
    if len(values) != len(seeds) or not values:
        raise ValueError("need one value per seed")
    arr = np.asarray(values)
    std = float(arr.std(ddof=1)) if len(values) > 1 else 0.0
    return MetricReport(metric=metric, seeds=list(seeds), per_seed=values,
                        mean=float(arr.mean()), std=std,
                        min=float(arr.min()), max=float(arr.max()),
                        meta=meta or {})
