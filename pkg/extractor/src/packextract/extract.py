"""Dense frame sampling and query embedding into feature-pack files.

A video is decoded sequentially and sampled on the fixed schedule k/rate
(default 1 frame per second, much denser than what a downstream model
ingests); each emitted pack carries the schedule as its timestamps, unit-L2
rows, and a sidecar JSON recording the choices that produced it. Writes are
atomic (temp file, rename).

Frame directories are accepted in place of a video: image files in sorted
name order are treated as already sampled at the requested rate.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import cv2
import numpy as np

from .encoders import load_encoder
from .ocfp import write_pack_atomic

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")
ENCODE_BATCH = 64


@dataclass(frozen=True)
class ExtractionJob:
    """One video (or frame directory) to turn into a feature pack."""

    source: Union[str, Path]
    output: Union[str, Path]
    sampling_rate: float = 1.0
    encoder: str = "hash"
    device: str = "cpu"
    video_id: str = ""

    def __post_init__(self) -> None:
        if self.sampling_rate <= 0:
            raise ValueError(f"sampling rate must be positive, got {self.sampling_rate}")


class DecodeError(RuntimeError):
    """The source video could not be opened or yielded no frames."""


def _iter_video_samples(path: Path, rate: float) -> Iterator[tuple[float, np.ndarray]]:
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DecodeError(f"cannot open video {path} (unknown or unsupported codec)")
    native_fps = capture.get(cv2.CAP_PROP_FPS)
    if not native_fps or native_fps <= 0:
        capture.release()
        raise DecodeError(f"video {path} reports no frame rate")
    next_sample = 0
    frame_index = 0
    try:
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            frame_time = frame_index / native_fps
            while frame_time >= next_sample / rate - 1e-9:
                yield next_sample / rate, cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
                next_sample += 1
            frame_index += 1
    finally:
        capture.release()
    if frame_index == 0:
        raise DecodeError(f"video {path} contains no decodable frames")


def _iter_directory_samples(path: Path, rate: float) -> Iterator[tuple[float, np.ndarray]]:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DecodeError(f"no image files in {path}")
    for k, file in enumerate(files):
        image = cv2.imread(str(file), cv2.IMREAD_COLOR)
        if image is None:
            raise DecodeError(f"cannot decode image {file}")
        yield k / rate, cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def extract_video(job: ExtractionJob) -> dict:
    """Decode, embed, and write one feature pack; returns the sidecar metadata.

    The sidecar is written next to the pack as ``<output>.meta.json``.
    """
    source = Path(job.source)
    encoder = load_encoder(job.encoder)
    samples = (
        _iter_directory_samples(source, job.sampling_rate)
        if source.is_dir()
        else _iter_video_samples(source, job.sampling_rate)
    )
    timestamps: list[float] = []
    embedded: list[np.ndarray] = []
    batch: list[np.ndarray] = []
    for stamp, frame in samples:
        timestamps.append(stamp)
        batch.append(frame)
        if len(batch) >= ENCODE_BATCH:
            embedded.append(encoder.encode_frames(batch))
            batch = []
    if batch:
        embedded.append(encoder.encode_frames(batch))
    if not timestamps:
        raise DecodeError(f"{source} produced no samples at {job.sampling_rate} fps")
    features = np.concatenate(embedded)
    n_bytes = write_pack_atomic(
        job.output, np.asarray(timestamps, dtype=np.float64), features, normalized=True
    )
    meta = {
        "source": str(source),
        "video_id": job.video_id or Path(job.output).stem,
        "frames": len(timestamps),
        "dim": int(features.shape[1]),
        "sampling_rate": job.sampling_rate,
        "encoder": encoder.info.name,
        "preprocessing": encoder.info.preprocessing,
        "bytes": n_bytes,
    }
    meta_path = Path(job.output).with_name(Path(job.output).name + ".meta.json")
    tmp = meta_path.with_name(f".{meta_path.name}.tmp-{os.getpid()}")
    tmp.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, meta_path)
    logger.info("wrote %s (%d frames, dim %d)", job.output, meta["frames"], meta["dim"])
    return meta


def extract_queries(
    source: Union[str, Path],
    output: Union[str, Path],
    encoder_name: str = "hash",
) -> int:
    """Embed every query in a JSONL file; returns the record count.

    Lines must carry ``query_id`` and non-empty ``text``; existing embeddings
    are replaced.
    """
    encoder = load_encoder(encoder_name)
    records: list[dict] = []
    texts: list[str] = []
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "query_id" not in obj or "text" not in obj:
                raise ValueError(f"{source}:{lineno}: missing query_id or text")
            if not str(obj["text"]).strip():
                raise ValueError(f"{source}:{lineno}: empty text")
            records.append(obj)
            texts.append(str(obj["text"]))
    embeddings = encoder.encode_texts(texts)
    out_path = Path(output)
    tmp = out_path.with_name(f".{out_path.name}.tmp-{os.getpid()}")
    with open(tmp, "w", encoding="utf-8") as fh:
        for obj, emb in zip(records, embeddings):
            payload = {
                "query_id": str(obj["query_id"]),
                "text": str(obj["text"]),
                "embedding": [float(x) for x in emb],
            }
            fh.write(json.dumps(payload, sort_keys=True) + "\n")
    os.replace(tmp, out_path)
    logger.info("wrote %s (%d queries, dim %d)", output, len(records), encoder.dim)
    return len(records)
