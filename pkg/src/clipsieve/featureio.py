"""Bit-exact readers and writers for the on-disk formats.

Feature packs use a fixed little-endian binary layout ("OCFP"):

    offset  size            field
    0       4               magic b"OCFP"
    4       4               version, u32 (currently 1)
    8       4               dim, u32
    12      4               count, u32
    16      4               flags, u32 (bit 0: rows are unit-L2)
    20      8 * count       timestamps, float64
    ...     4 * count*dim   features, float32 row-major
    end-8   8               FNV-1a 64 checksum of all preceding bytes, u64

Timestamps are stored at float64 because hour-long videos at dense sampling
exceed float32 second precision; features stay at float32 (encoder output
precision). The checksum detects corruption only; it is not cryptographic.

Queries travel as JSONL; all JSON documents are written pretty-printed with
sorted keys so byte diffs are stable.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .model import (
    FeaturePack,
    MinedPair,
    QueryRecord,
    RetrievalResult,
    Segmentation,
    SynthesisManifest,
    validate_pack,
)

MAGIC = b"OCFP"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
CHECKSUM = struct.Struct("<Q")
FLAG_NORMALIZED = 0x1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


class PackFormatError(Exception):
    """A feature pack file is malformed; the message names the first bad field."""


def fnv1a_64(data: bytes, value: int = FNV_OFFSET) -> int:
    """64-bit FNV-1a over a byte string; ``value`` allows incremental hashing."""
    h = value
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _U64
    return h


def pack_file_size(count: int, dim: int) -> int:
    """Exact byte length of an OCFP file with the given shape."""
    return HEADER.size + 8 * count + 4 * count * dim + CHECKSUM.size


def pack_to_bytes(pack: FeaturePack) -> bytes:
    """Serialize a validated pack to its exact byte layout."""
    violations = validate_pack(pack)
    if violations:
        raise ValueError("refusing to write invalid pack: " + "; ".join(violations))
    flags = FLAG_NORMALIZED if pack.normalized else 0
    body = HEADER.pack(MAGIC, VERSION, pack.dim, pack.count, flags)
    body += pack.timestamps.astype("<f8", copy=False).tobytes()
    body += pack.features.astype("<f4", copy=False).tobytes()
    return body + CHECKSUM.pack(fnv1a_64(body))


def write_pack(pack: FeaturePack, destination: Union[str, Path]) -> int:
    """Write a pack to ``destination``; returns the byte count written."""
    payload = pack_to_bytes(pack)
    Path(destination).write_bytes(payload)
    return len(payload)


def pack_from_bytes(data: bytes, video_id: str = "") -> FeaturePack:
    """Parse OCFP bytes into a validated FeaturePack.

    Raises PackFormatError naming the first malformed field: bad magic reads
    "not a feature pack", a checksum mismatch "corrupt pack", a short file
    "unexpected end".
    """
    if len(data) < len(MAGIC):
        raise PackFormatError("unexpected end of file inside header")
    if data[: len(MAGIC)] != MAGIC:
        raise PackFormatError("not a feature pack (bad magic)")
    if len(data) < HEADER.size:
        raise PackFormatError("unexpected end of file inside header")
    _, version, dim, count, flags = HEADER.unpack_from(data)
    if version != VERSION:
        raise PackFormatError(f"unsupported feature pack version {version}")
    if count < 1:
        raise PackFormatError("count must be positive")
    if dim < 1:
        raise PackFormatError("dim must be positive")
    expected = pack_file_size(count, dim)
    if len(data) < expected:
        raise PackFormatError(
            f"unexpected end of file: {len(data)} bytes, layout requires {expected}"
        )
    if len(data) > expected:
        raise PackFormatError(
            f"trailing data: {len(data)} bytes, layout requires exactly {expected}"
        )
    stored = CHECKSUM.unpack_from(data, expected - CHECKSUM.size)[0]
    if fnv1a_64(data[: expected - CHECKSUM.size]) != stored:
        raise PackFormatError("corrupt pack (checksum mismatch)")
    ts_end = HEADER.size + 8 * count
    timestamps = np.frombuffer(data, dtype="<f8", count=count, offset=HEADER.size)
    features = np.frombuffer(data, dtype="<f4", count=count * dim, offset=ts_end)
    pack = FeaturePack(
        video_id=video_id,
        timestamps=timestamps.astype(np.float64),
        features=features.reshape(count, dim).astype(np.float32),
        normalized=bool(flags & FLAG_NORMALIZED),
    )
    violations = validate_pack(pack)
    if violations:
        raise PackFormatError("invalid pack: " + violations[0])
    return pack


def read_pack(source: Union[str, Path], video_id: str = "") -> FeaturePack:
    """Read and validate a pack file."""
    path = Path(source)
    data = path.read_bytes()
    return pack_from_bytes(data, video_id=video_id or path.stem)


# --- query JSONL ---------------------------------------------------------


def read_queries(source: Union[str, Path]) -> list[QueryRecord]:
    """Read a JSONL query file; embedding lengths must be homogeneous."""
    records: list[QueryRecord] = []
    dim: int | None = None
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{source}:{lineno}: invalid JSON: {exc}") from exc
            if "query_id" not in obj or "text" not in obj:
                raise ValueError(f"{source}:{lineno}: missing query_id or text")
            emb = obj.get("embedding")
            if emb is not None:
                if dim is None:
                    dim = len(emb)
                elif len(emb) != dim:
                    raise ValueError(
                        f"{source}:{lineno}: embedding length {len(emb)} differs from {dim}"
                    )
            records.append(
                QueryRecord(
                    query_id=str(obj["query_id"]),
                    text=str(obj["text"]),
                    embedding=None if emb is None else np.asarray(emb, dtype=np.float64),
                )
            )
    return records


def write_queries(records: Iterable[QueryRecord], destination: Union[str, Path]) -> None:
    with open(destination, "w", encoding="utf-8") as fh:
        for rec in records:
            obj: dict = {"query_id": rec.query_id, "text": rec.text}
            if rec.embedding is not None:
                obj["embedding"] = [float(x) for x in rec.embedding]
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


# --- JSON documents ------------------------------------------------------


def dump_json(obj: object, destination: Union[str, Path]) -> None:
    Path(destination).write_text(json_text(obj), encoding="utf-8")


def json_text(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def segmentation_to_dict(seg: Segmentation, video_id: str) -> dict:
    return {
        "video_id": video_id,
        "method": seg.method.value,
        "n": seg.n,
        "clips": [[start, end] for start, end in seg.clips],
        "centers": list(seg.centers),
    }


def segmentation_from_dict(obj: dict) -> Segmentation:
    return Segmentation(
        clips=tuple((int(a), int(b)) for a, b in obj["clips"]),
        method=obj["method"],
        centers=tuple(int(c) for c in obj.get("centers", ())),
    )


def result_to_dict(result: RetrievalResult, video_id: str, query_id: str) -> dict:
    return {
        "video_id": video_id,
        "query_id": query_id,
        "ranked_clips": [{"clip": i, "r": r} for i, r in result.ranked_clips],
        "frames": list(result.selected_frames),
        "budget": result.budget,
    }


def manifest_to_dict(manifest: SynthesisManifest) -> dict:
    return {
        "anchor_id": manifest.anchor_id,
        "anchor_position": manifest.anchor_position,
        "components": list(manifest.components),
        "instruction_pool": [[q, v] for q, v in manifest.instruction_pool],
        "seed": manifest.seed,
    }


def write_mined_pairs(pairs: Sequence[MinedPair], destination: Union[str, Path]) -> None:
    """Export mined pairs as one compact sorted-keys JSON object per line."""
    with open(destination, "w", encoding="utf-8") as fh:
        for pair in pairs:
            obj = {
                "query_id": pair.query_id,
                "mode": pair.mode.value,
                "pos": {"video": pair.positive[0], "clip": list(pair.positive[1])},
                "neg": [{"video": v, "clip": list(rng)} for v, rng in pair.negatives],
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
