"""Image ingestion: deterministic directory scans and decoding to [0, 1]
float32 CHW arrays.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass
class DatasetManifest:
    root: str
    files: list
    sizes: list
    dataset_id: str


def _manifest_id(files) -> str:
    h = hashlib.sha256()
    for name in files:
        h.update(name.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()[:16]


def decode_image(path) -> np.ndarray:
    """Decode one image file to (3, H, W) float32 in [0, 1]; grayscale is
    promoted to 3 channels."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def ingest_images(path, limit: int | None = None, on_error: str = "abort"):
    """Load a directory of PNG/JPEG files in lexicographic filename order.

    Returns (manifest, images): images is a BCHW array when all files share
    one size, otherwise a list of CHW arrays. ``on_error`` is "abort" or
    "skip" for unreadable files.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {root}")
    names = sorted(p.name for p in root.iterdir()
                   if p.suffix.lower() in IMAGE_EXTENSIONS)
    if limit is not None:
        names = names[:limit]
    if not names:
        raise ValueError(f"no images found in {root}")
    images, kept, sizes = [], [], []
    for name in names:
        try:
            arr = decode_image(root / name)
        except OSError as exc:
            if on_error == "abort":
                raise ValueError(f"failed to decode {root / name}: {exc}") from exc
            continue
        images.append(arr)
        kept.append(name)
        sizes.append((arr.shape[2], arr.shape[1]))
    if not images:
        raise ValueError(f"no decodable images in {root}")
    manifest = DatasetManifest(root=str(root), files=kept, sizes=sizes,
                               dataset_id=_manifest_id(kept))
    if len({img.shape for img in images}) == 1:
        return manifest, np.stack(images)
    return manifest, images


def save_images(images, path, prefix: str = "img") -> list:
    """Write a batch of [0, 1] CHW float arrays as PNG files."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(images))))
    names = []
    for i, img in enumerate(images):
        arr = np.clip(np.asarray(img) * 255.0 + 0.5, 0, 255).astype(np.uint8)
        name = f"{prefix}_{i:0{width}d}.png"
        Image.fromarray(arr.transpose(1, 2, 0)).save(out / name)
        names.append(name)
    return names
