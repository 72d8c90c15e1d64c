"""Frame and text encoders behind a common interface.

Two families:

* ``hash`` (default): a fully deterministic, dependency-light stand-in. Frames
  are downscaled to a fixed thumbnail and pushed through a seeded random
  projection; text becomes hashed character trigram counts through a second
  seeded projection. It runs anywhere, needs no weights, and its cosine
  geometry is good enough for fixtures and probes: identical inputs embed
  identically, and texts sharing vocabulary land closer than unrelated ones.
  It is NOT a semantic model; use it for plumbing, testing, and CI.

* ``clip`` / ``siglip``: real dual encoders via transformers, activated when
  torch, transformers, and the model weights are available. Inference runs in
  eval mode with no grad, so repeated embeddings of the same input are
  identical on a given device.

All encoders emit unit-L2 float32 rows.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import cv2
import numpy as np

from .ocfp import fnv1a_64

logger = logging.getLogger(__name__)

HASH_DIM = 512
HASH_THUMB = 16            # thumbnail side; 16*16*3 = 768 raw pixel features
HASH_TEXT_BUCKETS = 4096
HASH_MAX_TEXT_CHARS = 512
_HASH_SEED = 0x0C_F1_9A


@dataclass(frozen=True)
class EncoderInfo:
    name: str
    dim: int
    preprocessing: str


class HashEncoder:
    """Deterministic offline encoder: pixel projection + hashed n-grams."""

    name = "hash"

    def __init__(self, dim: int = HASH_DIM):
        self.dim = dim
        rng = np.random.default_rng(_HASH_SEED)
        raw = HASH_THUMB * HASH_THUMB * 3
        self._frame_proj = rng.standard_normal((raw, dim)).astype(np.float64) / np.sqrt(raw)
        self._text_proj = rng.standard_normal((HASH_TEXT_BUCKETS, dim)).astype(np.float64) / np.sqrt(
            HASH_TEXT_BUCKETS
        )

    @property
    def info(self) -> EncoderInfo:
        return EncoderInfo(
            name=self.name,
            dim=self.dim,
            preprocessing=f"resize to {HASH_THUMB}x{HASH_THUMB} RGB, scale to [0,1], seeded projection",
        )

    def encode_frames(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        if not frames:
            return np.zeros((0, self.dim), np.float32)
        thumbs = np.stack(
            [
                cv2.resize(frame, (HASH_THUMB, HASH_THUMB), interpolation=cv2.INTER_AREA)
                for frame in frames
            ]
        ).astype(np.float64) / 255.0
        flat = thumbs.reshape(len(frames), -1)
        flat -= flat.mean(axis=1, keepdims=True)  # drop global brightness
        flat += 1e-3  # keep all-flat frames off the zero vector
        return _unit_rows(flat @ self._frame_proj)

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), np.float32)
        counts = np.zeros((len(texts), HASH_TEXT_BUCKETS), np.float64)
        for row, text in enumerate(texts):
            if not text.strip():
                raise ValueError(f"text {row} is empty")
            if len(text) > HASH_MAX_TEXT_CHARS:
                warnings.warn(
                    f"text {row} truncated to {HASH_MAX_TEXT_CHARS} characters", stacklevel=2
                )
                text = text[:HASH_MAX_TEXT_CHARS]
            padded = f" {text.lower()} "
            for i in range(len(padded) - 2):
                bucket = fnv1a_64(padded[i : i + 3].encode("utf-8")) % HASH_TEXT_BUCKETS
                counts[row, bucket] += 1.0
        return _unit_rows(counts @ self._text_proj)


class TransformersEncoder:
    """CLIP-style dual encoder loaded through transformers."""

    def __init__(self, name: str, model_id: str):
        try:
            import torch
            from transformers import AutoModel, AutoProcessor
        except ImportError as exc:
            raise RuntimeError(
                f"encoder {name!r} needs the [clip] extra (torch + transformers)"
            ) from exc
        try:
            self._processor = AutoProcessor.from_pretrained(model_id)
            self._model = AutoModel.from_pretrained(model_id)
        except OSError as exc:
            raise RuntimeError(
                f"encoder {name!r} could not load weights for {model_id!r}: {exc}"
            ) from exc
        self._torch = torch
        self._model.eval()
        self.name = name
        self.model_id = model_id
        self.dim = int(self._model.config.projection_dim)

    @property
    def info(self) -> EncoderInfo:
        return EncoderInfo(
            name=self.name,
            dim=self.dim,
            preprocessing=f"{self.model_id} default processor (resize/center-crop/normalize)",
        )

    def encode_frames(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        if not frames:
            return np.zeros((0, self.dim), np.float32)
        inputs = self._processor(images=list(frames), return_tensors="pt")
        with self._torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return _unit_rows(feats.cpu().numpy().astype(np.float64))

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), np.float32)
        for row, text in enumerate(texts):
            if not text.strip():
                raise ValueError(f"text {row} is empty")
        inputs = self._processor(
            text=list(texts), return_tensors="pt", padding=True, truncation=True
        )
        with self._torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return _unit_rows(feats.cpu().numpy().astype(np.float64))


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms.reshape(-1) == 0.0)[0])
        raise ValueError(f"embedding row {bad} has zero norm")
    return (rows / norms).astype(np.float32)


_TRANSFORMER_MODELS = {
    "clip": "openai/clip-vit-base-patch32",
    "siglip": "google/siglip-base-patch16-224",
}


def available_encoders() -> list[str]:
    return ["hash", *sorted(_TRANSFORMER_MODELS)]


def load_encoder(name: str):
    """Instantiate an encoder by registry name."""
    if name == "hash":
        return HashEncoder()
    if name in _TRANSFORMER_MODELS:
        return TransformersEncoder(name, _TRANSFORMER_MODELS[name])
    raise ValueError(f"unknown encoder {name!r}; choose from {', '.join(available_encoders())}")
