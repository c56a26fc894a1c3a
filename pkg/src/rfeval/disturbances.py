"""Deterministic image-set disturbances: blur, noise, color jitter, and
class contamination.

Images are float32 BCHW in [0, 1] and all outputs stay in that range.
Per-image randomness is derived from (seed, image index), so results do not
depend on processing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rfeval import backend
from rfeval.rng import Rng

# Level -> parameter tables for the three-level protocol.
LEVELS = {
    "gaussian_blur": {1: 1.0, 2: 2.0, 3: 3.0},
    "gaussian_noise": {1: 0.05, 2: 0.10, 3: 0.15},
    "color_jitter": {1: 0.1, 2: 0.2, 3: 0.3},
    "class_contamination": {1: 0.25, 2: 0.5, 3: 0.75},
}


@dataclass
class DisturbanceSpec:
    kind: str
    param: float
    seed: int = 0
    contaminant: str | None = None

    def __post_init__(self):
        if self.kind not in LEVELS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind == "gaussian_blur" and self.param <= 0:
            raise ValueError("blur sigma must be positive")
        if self.kind == "gaussian_noise" and self.param < 0:
            raise ValueError("noise variance must be non-negative")
        if self.kind == "color_jitter" and not 0 <= self.param < 1:
            raise ValueError("jitter ratio must be in [0, 1)")
        if self.kind == "class_contamination" and not 0 <= self.param <= 1:
            raise ValueError("replacement ratio must be in [0, 1]")

    @staticmethod
    def at_level(kind: str, level: int, seed: int = 0,
                 contaminant: str | None = None) -> "DisturbanceSpec":
        if level not in (1, 2, 3):
            raise ValueError(f"level must be 1, 2 or 3, got {level}")
        return DisturbanceSpec(kind, LEVELS[kind][level], seed=seed, contaminant=contaminant)


def gaussian_kernel_taps(sigma: float) -> np.ndarray:
    """1-D Gaussian taps with radius ceil(3 sigma), normalized to sum 1."""
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (offsets / sigma) ** 2)
    return taps / taps.sum()


def gaussian_blur(images: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with symmetric-reflect boundary handling."""
    if sigma <= 0:
        raise ValueError("blur sigma must be positive")
    taps = gaussian_kernel_taps(sigma)
    b, c, h, w = images.shape
    x = np.ascontiguousarray(images, dtype=np.float32)
    x = backend.correlate1d_reflect(x.reshape(b * c * h, w), taps).reshape(b, c, h, w)
    x = np.ascontiguousarray(x.transpose(0, 1, 3, 2))
    x = backend.correlate1d_reflect(x.reshape(b * c * w, h), taps).reshape(b, c, w, h)
    return np.ascontiguousarray(x.transpose(0, 1, 3, 2))


def gaussian_noise(images: np.ndarray, variance: float, seed: int = 0) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise per pixel, then clip to [0, 1]."""
    if variance < 0:
        raise ValueError("noise variance must be non-negative")
    if variance == 0:
        return images.copy()
    std = math.sqrt(variance)
    root = Rng(seed)
    out = np.empty_like(images)
    for i in range(len(images)):
        noise = root.child(i).normal(0.0, std, images.shape[1:])
        out[i] = np.clip(images[i] + noise, 0.0, 1.0)
    return out


_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float32)


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    # channels-first (3, H, W), values in [0, 1]
    r, g, b = rgb[0], rgb[1], rgb[2]
    maxc = rgb.max(axis=0)
    minc = rgb.min(axis=0)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.maximum(maxc, 1e-12), 0.0)
    safe = np.maximum(delta, 1e-12)
    h = np.where(maxc == r, (g - b) / safe,
                 np.where(maxc == g, 2.0 + (b - r) / safe, 4.0 + (r - g) / safe))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v])


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[0], hsv[1], hsv[2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b])


def apply_color_jitter(image: np.ndarray, brightness: float, contrast: float,
                       saturation: float, hue_shift: float) -> np.ndarray:
    """Apply the four jitter components to one CHW image, in the fixed order
    brightness -> contrast -> saturation -> hue, then clip to [0, 1].

    Contrast pivots on the mean luminance of the image; saturation
    interpolates toward the per-pixel gray value; hue_shift is a fraction of
    the hue circle.
    """
    x = image.astype(np.float32)
    x = x * np.float32(brightness)
    mean_lum = np.float32(np.tensordot(_LUMA, x, axes=([0], [0])).mean())
    x = (x - mean_lum) * np.float32(contrast) + mean_lum
    gray = np.tensordot(_LUMA, x, axes=([0], [0]))[None]
    x = gray + (x - gray) * np.float32(saturation)
    if hue_shift != 0.0:
        x = np.clip(x, 0.0, 1.0)
        hsv = _rgb_to_hsv(x)
        hsv[0] = (hsv[0] + hue_shift) % 1.0
        x = _hsv_to_rgb(hsv)
    return np.clip(x, 0.0, 1.0).astype(np.float32)


def color_jitter(images: np.ndarray, ratio: float, seed: int = 0) -> np.ndarray:
    """Jitter brightness, contrast, saturation and hue per image.

    Factors are drawn uniformly from [1-ratio, 1+ratio] and the hue shift
    from [-ratio, ratio] (fraction of the hue circle), per image.
    """
    if not 0 <= ratio < 1:
        raise ValueError("jitter ratio must be in [0, 1)")
    if ratio == 0:
        return images.copy()
    root = Rng(seed)
    out = np.empty_like(images)
    for i in range(len(images)):
        draws = root.child(i).uniform(-ratio, ratio, 4)
        out[i] = apply_color_jitter(
            images[i],
            brightness=1.0 + float(draws[0]),
            contrast=1.0 + float(draws[1]),
            saturation=1.0 + float(draws[2]),
            hue_shift=float(draws[3]),
        )
    return out


def class_contamination(images: np.ndarray, contaminants: np.ndarray,
                        ratio: float, seed: int = 0) -> np.ndarray:
    """Replace round(ratio * N) uniformly chosen images with contaminants."""
    if not 0 <= ratio <= 1:
        raise ValueError("replacement ratio must be in [0, 1]")
    n = len(images)
    n_replace = int(math.floor(ratio * n + 0.5))
    if n_replace == 0:
        return images.copy()
    if len(contaminants) < n_replace:
        raise ValueError(f"need {n_replace} contaminants, have {len(contaminants)}")
    idx = Rng(seed).choice(n, n_replace, replace=False)
    out = images.copy()
    out[np.sort(idx)] = contaminants[:n_replace]
    return out


def apply(spec: DisturbanceSpec, images: np.ndarray,
          contaminants: np.ndarray | None = None) -> np.ndarray:
    if spec.kind == "gaussian_blur":
        return gaussian_blur(images, spec.param)
    if spec.kind == "gaussian_noise":
        return gaussian_noise(images, spec.param, spec.seed)
    if spec.kind == "color_jitter":
        return color_jitter(images, spec.param, spec.seed)
    if contaminants is None:
        raise ValueError("class_contamination requires a contaminant set")
    return class_contamination(images, contaminants, spec.param, spec.seed)
