"""Randomly initialized feature extractors.

Two families are provided: a VGG-style CNN (3x3 conv stages with max-pooling,
global average pooling to a 512-d feature) and a ViT (patch embedding,
pre-norm Transformer blocks, mean-pooled tokens). Weights are fully
determined by (config, seed); no training anywhere.

The "stem" tap returns globally average-pooled activations of the first
convolution (the patch embedding, for the ViT) and serves as a low-level
feature space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rfeval import nn
from rfeval.rng import Rng

# Conv widths per stage; max-pool between stages, GAP after the last.
CNN_STAGES = ((64,), (128,), (256, 256), (512, 512))

_FAMILIES = ("cnn-vgg", "vit")


@dataclass
class NetworkConfig:
    family: str
    feature_dim: int
    input_size: int = 224
    patch_size: int = 16
    heads: int = 3
    depth: int = 12
    tap: str = "final"
    name: str = ""

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.feature_dim <= 0:
            raise ValueError("feature_dim must be positive")
        if self.family == "vit":
            if self.feature_dim % self.heads != 0:
                raise ValueError(f"feature_dim {self.feature_dim} not divisible by {self.heads} heads")
            if self.input_size % self.patch_size != 0:
                raise ValueError(f"input_size {self.input_size} not divisible by patch {self.patch_size}")
        if not self.name:
            self.name = self.family

    @staticmethod
    def cnn_vgg(input_size: int = 224) -> "NetworkConfig":
        return NetworkConfig("cnn-vgg", feature_dim=CNN_STAGES[-1][-1],
                             input_size=input_size, name="cnn-vgg")

    @staticmethod
    def vit_t(input_size: int = 224) -> "NetworkConfig":
        return NetworkConfig("vit", feature_dim=192, input_size=input_size,
                             patch_size=16, heads=3, depth=12, name="vit-t")

    @staticmethod
    def vit_b(input_size: int = 224) -> "NetworkConfig":
        return NetworkConfig("vit", feature_dim=768, input_size=input_size,
                             patch_size=16, heads=12, depth=12, name="vit-b")

    @staticmethod
    def by_name(name: str, input_size: int | None = None) -> "NetworkConfig":
        factories = {"cnn-vgg": NetworkConfig.cnn_vgg,
                     "vit-t": NetworkConfig.vit_t,
                     "vit-b": NetworkConfig.vit_b}
        if name not in factories:
            raise ValueError(f"unknown extractor {name!r}; expected one of {sorted(factories)}")
        if input_size is None:
            return factories[name]()
        return factories[name](input_size)


@dataclass
class NetworkWeights:
    config: NetworkConfig
    seed: int
    params: dict = field(repr=False, default_factory=dict)

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())


@dataclass
class FeatureMatrix:
    """N x D embedding matrix with provenance metadata."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] < 1:
            raise ValueError(f"expected a non-empty N x D matrix, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("feature matrix contains non-finite values")


def build_network(config: NetworkConfig, seed: int) -> NetworkWeights:
    """Generate all weights for a config from a single seeded stream.

    Weight tensors use Kaiming-uniform initialization; biases, layer-norm
    offsets start at zero and layer-norm scales at one.
    """
    rng = Rng(seed)
    p: dict[str, np.ndarray] = {}
    if config.family == "cnn-vgg":
        in_c = 3
        i = 0
        for stage in CNN_STAGES:
            for width in stage:
                p[f"conv{i}_w"] = nn.kaiming_uniform_init(rng, (width, in_c, 3, 3), in_c * 9)
                p[f"conv{i}_b"] = np.zeros(width, dtype=np.float32)
                in_c = width
                i += 1
    else:
        d = config.feature_dim
        ps = config.patch_size
        tokens = (config.input_size // ps) ** 2
        p["patch_w"] = nn.kaiming_uniform_init(rng, (d, 3, ps, ps), 3 * ps * ps)
        p["patch_b"] = np.zeros(d, dtype=np.float32)
        p["pos"] = nn.kaiming_uniform_init(rng, (tokens, d), d)
        for i in range(config.depth):
            p[f"blk{i}_ln1_g"] = np.ones(d, dtype=np.float32)
            p[f"blk{i}_ln1_b"] = np.zeros(d, dtype=np.float32)
            for proj in ("wq", "wk", "wv", "wo"):
                p[f"blk{i}_{proj}"] = nn.kaiming_uniform_init(rng, (d, d), d)
                p[f"blk{i}_{proj[1]}b"] = np.zeros(d, dtype=np.float32)
            p[f"blk{i}_ln2_g"] = np.ones(d, dtype=np.float32)
            p[f"blk{i}_ln2_b"] = np.zeros(d, dtype=np.float32)
            p[f"blk{i}_mlp1_w"] = nn.kaiming_uniform_init(rng, (d, 4 * d), d)
            p[f"blk{i}_mlp1_b"] = np.zeros(4 * d, dtype=np.float32)
            p[f"blk{i}_mlp2_w"] = nn.kaiming_uniform_init(rng, (4 * d, d), 4 * d)
            p[f"blk{i}_mlp2_b"] = np.zeros(d, dtype=np.float32)
        p["ln_g"] = np.ones(d, dtype=np.float32)
        p["ln_b"] = np.zeros(d, dtype=np.float32)
    return NetworkWeights(config=config, seed=seed, params=p)


def _resize_weights(src: int, dst: int):
    # half-pixel center mapping, edge clamped
    pos = (np.arange(dst, dtype=np.float64) + 0.5) * (src / dst) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    return np.clip(lo, 0, src - 1), np.clip(lo + 1, 0, src - 1), frac


def bilinear_resize(images: np.ndarray, size: int) -> np.ndarray:
    """Separable bilinear resize of a BCHW batch to size x size."""
    h, w = images.shape[2], images.shape[3]
    x = images.astype(np.float64)
    if h != size:
        lo, hi, f = _resize_weights(h, size)
        x = x[:, :, lo, :] * (1.0 - f)[None, None, :, None] + x[:, :, hi, :] * f[None, None, :, None]
    if w != size:
        lo, hi, f = _resize_weights(w, size)
        x = x[:, :, :, lo] * (1.0 - f)[None, None, None, :] + x[:, :, :, hi] * f[None, None, None, :]
    return x.astype(np.float32)


def preprocess(images, config: NetworkConfig) -> np.ndarray:
    """Resize [0,1] images to the network input size and map to [-1, 1].

    Accepts a BCHW array or a list of CHW arrays of varying sizes.
    """
    size = config.input_size
    if isinstance(images, np.ndarray):
        resized = bilinear_resize(images, size)
    else:
        resized = np.concatenate(
            [bilinear_resize(img[None], size) for img in images], axis=0
        )
    return (resized - np.float32(0.5)) / np.float32(0.5)


def _gap_nhwc(x: np.ndarray) -> np.ndarray:
    return x.mean(axis=(1, 2), dtype=np.float64).astype(np.float32)


def _forward_cnn(weights: NetworkWeights, x: np.ndarray, tap: str) -> np.ndarray:
    p = weights.params
    x = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    i = 0
    for stage in CNN_STAGES:
        for _ in stage:
            x = nn.conv2d_nhwc(x, p[f"conv{i}_w"], p[f"conv{i}_b"], stride=1, padding=1)
            if tap == "stem" and i == 0:
                return _gap_nhwc(x)
            x = nn.relu(x)
            i += 1
        x = nn.max_pool2d_nhwc(x, 2)
    return _gap_nhwc(x)


def _forward_vit(weights: NetworkWeights, x: np.ndarray, tap: str) -> np.ndarray:
    p = weights.params
    cfg = weights.config
    xn = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    patches = nn.conv2d_nhwc(xn, p["patch_w"], p["patch_b"],
                             stride=cfg.patch_size, padding=0)
    if tap == "stem":
        return _gap_nhwc(patches)
    n, gh, gw, d = patches.shape
    tokens = patches.reshape(n, gh * gw, d) + p["pos"]
    tokens = np.ascontiguousarray(tokens, dtype=np.float32)
    for i in range(cfg.depth):
        att_in = nn.layer_norm(tokens, p[f"blk{i}_ln1_g"], p[f"blk{i}_ln1_b"])
        att_w = nn.AttentionWeights(
            p[f"blk{i}_wq"], p[f"blk{i}_wk"], p[f"blk{i}_wv"], p[f"blk{i}_wo"],
            p[f"blk{i}_qb"], p[f"blk{i}_kb"], p[f"blk{i}_vb"], p[f"blk{i}_ob"],
        )
        tokens = tokens + nn.multi_head_attention(att_in, att_w, cfg.heads)
        mlp_in = nn.layer_norm(tokens, p[f"blk{i}_ln2_g"], p[f"blk{i}_ln2_b"])
        hidden = nn.gelu(nn.linear(mlp_in, p[f"blk{i}_mlp1_w"], p[f"blk{i}_mlp1_b"]))
        tokens = tokens + nn.linear(hidden, p[f"blk{i}_mlp2_w"], p[f"blk{i}_mlp2_b"])
    tokens = nn.layer_norm(tokens, p["ln_g"], p["ln_b"])
    return tokens.mean(axis=1, dtype=np.float64).astype(np.float32)


def extract(weights: NetworkWeights, images: np.ndarray, tap: str = "final",
            batch_size: int = 32) -> FeatureMatrix:
    """Embed preprocessed images; the result is independent of batch_size."""
    if tap not in ("final", "stem"):
        raise ValueError(f"unknown tap {tap!r}")
    if len(images) == 0:
        raise ValueError("empty image set")
    forward = _forward_cnn if weights.config.family == "cnn-vgg" else _forward_vit
    rows = []
    for start in range(0, len(images), batch_size):
        batch = np.ascontiguousarray(images[start:start + batch_size], dtype=np.float32)
        rows.append(forward(weights, batch, tap))
    meta = {
        "extractor": weights.config.name,
        "seed": weights.seed,
        "tap": tap,
        "preprocess": f"bilinear-{weights.config.input_size}-norm0.5",
    }
    return FeatureMatrix(np.concatenate(rows, axis=0), meta)


def seed_sweep_extract(config: NetworkConfig, seeds, images, tap: str = "final",
                       batch_size: int = 32) -> list[FeatureMatrix]:
    """One FeatureMatrix per seed, each from a freshly built network."""
    out = []
    for seed in seeds:
        weights = build_network(config, seed)
        out.append(extract(weights, images, tap=tap, batch_size=batch_size))
    return out
