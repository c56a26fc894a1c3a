"""Binary feature cache files.

Layout (all integers little-endian):

    offset 0   magic   4 bytes  b"RFEV"
    offset 4   version u16      currently 1
    offset 6   D       u32      feature dimension
    offset 10  N       u64      row count
    offset 18  data    N*D*4    float32, row-major
    then       mlen    u32      metadata byte length
    then       meta    mlen     UTF-8 JSON object

The format is deliberately minimal so any language can read it; externally
computed features (e.g. trained-network embeddings) are ingested by writing
the same layout. See README for a converter recipe from .npy files.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from rfeval.extractors import FeatureMatrix

MAGIC = b"RFEV"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


class CacheFormatError(ValueError):
    """Raised when a feature cache file is malformed."""


def save_features(features: FeatureMatrix, path) -> None:
    """Write a feature cache file atomically (temp file + rename)."""
    path = Path(path)
    data = np.ascontiguousarray(features.data, dtype="<f4")
    n, d = data.shape
    meta = json.dumps(features.meta, sort_keys=True).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, d, n))
        f.write(data.tobytes())
        f.write(struct.pack("<I", len(meta)))
        f.write(meta)
    os.replace(tmp, path)


def load_features(path) -> FeatureMatrix:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise CacheFormatError(f"{path}: truncated header at offset {len(blob)}")
    magic, version, d, n = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheFormatError(f"{path}: bad magic {magic!r} at offset 0")
    if version != VERSION:
        raise CacheFormatError(f"{path}: unsupported version {version} at offset 4")
    data_end = _HEADER.size + n * d * 4
    if len(blob) < data_end + 4:
        raise CacheFormatError(f"{path}: truncated at offset {len(blob)}, need {data_end + 4}")
    data = np.frombuffer(blob, dtype="<f4", count=n * d, offset=_HEADER.size)
    (mlen,) = struct.unpack_from("<I", blob, data_end)
    if len(blob) != data_end + 4 + mlen:
        raise CacheFormatError(
            f"{path}: metadata length {mlen} at offset {data_end} does not match "
            f"file size {len(blob)}")
    meta = json.loads(blob[data_end + 4:].decode("utf-8"))
    return FeatureMatrix(data.reshape(n, d).copy(), meta)
