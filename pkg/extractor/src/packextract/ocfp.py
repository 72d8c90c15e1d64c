"""Writer (and sanity reader) for the feature-pack binary format.

This is an independent implementation of the downstream consumer's on-disk
contract; conformance is proven by running its ``validate`` CLI against the
files we emit, not by sharing code with it.

Layout, all little-endian: magic "OCFP", version u32 (1), dim u32, count u32,
flags u32 (bit 0: rows unit-L2), count float64 timestamps, count*dim float32
features row-major, then a u64 FNV-1a checksum over all preceding bytes.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

MAGIC = b"OCFP"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
CHECKSUM = struct.Struct("<Q")
FLAG_NORMALIZED = 0x1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes, value: int = FNV_OFFSET) -> int:
    h = value
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _U64
    return h


def pack_bytes(timestamps: np.ndarray, features: np.ndarray, normalized: bool) -> bytes:
    ts = np.ascontiguousarray(timestamps, dtype="<f8")
    feats = np.ascontiguousarray(features, dtype="<f4")
    if feats.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {feats.shape}")
    count, dim = feats.shape
    if count < 1 or dim < 1:
        raise ValueError(f"need at least one frame and one dimension, got {feats.shape}")
    if ts.shape != (count,):
        raise ValueError(f"timestamps shape {ts.shape} does not match {count} rows")
    if not np.all(np.diff(ts) > 0) and count > 1:
        raise ValueError("timestamps must be strictly increasing")
    body = HEADER.pack(MAGIC, VERSION, dim, count, FLAG_NORMALIZED if normalized else 0)
    body += ts.tobytes() + feats.tobytes()
    return body + CHECKSUM.pack(fnv1a_64(body))


def write_pack_atomic(
    path: Union[str, Path],
    timestamps: np.ndarray,
    features: np.ndarray,
    normalized: bool,
) -> int:
    """Write a pack via temp-file-plus-rename; returns bytes written."""
    path = Path(path)
    data = pack_bytes(timestamps, features, normalized)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    return len(data)


def read_pack(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray, bool]:
    """Self-check reader: (timestamps, features, normalized)."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError("not a feature pack")
    _, version, dim, count, flags = HEADER.unpack_from(data)
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    expected = HEADER.size + 8 * count + 4 * count * dim + CHECKSUM.size
    if len(data) != expected:
        raise ValueError(f"file is {len(data)} bytes, layout requires {expected}")
    if CHECKSUM.unpack_from(data, expected - 8)[0] != fnv1a_64(data[:-8]):
        raise ValueError("corrupt pack")
    ts = np.frombuffer(data, dtype="<f8", count=count, offset=HEADER.size).astype(np.float64)
    feats = np.frombuffer(data, dtype="<f4", count=count * dim, offset=HEADER.size + 8 * count)
    return ts, feats.reshape(count, dim).astype(np.float32), bool(flags & FLAG_NORMALIZED)
