"""Keyed float32 vector container, byte-compatible with the consumer side.

Layout (little-endian): magic ``CLSV`` | u32 version (1) | u32 dim |
u64 count | per record a u16 key length, the UTF-8 key, and dim float32
values. Records are sorted by key.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ExportError

MAGIC = b"CLSV"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def write_clsv(path: str | Path, keys: Sequence[str], vectors: np.ndarray) -> None:
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2:
        raise ExportError(f"vectors must be 2-D, got shape {vectors.shape}")
    if len(keys) != vectors.shape[0]:
        raise ExportError(f"{len(keys)} keys for {vectors.shape[0]} vectors")
    if len(set(keys)) != len(keys):
        raise ExportError("duplicate keys")
    if not np.isfinite(vectors).all():
        raise ExportError("non-finite vector values")
    dim = int(vectors.shape[1])
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    with Path(path).open("wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, dim, len(keys)))
        for i in order:
            encoded = keys[i].encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(vectors[i].astype("<f4", copy=False).tobytes())


def read_clsv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Round-trip reader used for self-checks; returns (keys, vectors)."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ExportError("truncated header")
    magic, version, dim, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ExportError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ExportError(f"unsupported version {version}")
    keys: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    offset = _HEADER.size
    for i in range(count):
        (key_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        keys.append(data[offset:offset + key_len].decode("utf-8"))
        offset += key_len
        vectors[i] = np.frombuffer(data, "<f4", dim, offset)
        offset += 4 * dim
    if offset != len(data):
        raise ExportError("trailing bytes after the last record")
    return keys, vectors
