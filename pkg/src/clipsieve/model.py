"""Shared domain types for the clip retrieval pipeline.

All types are immutable value objects: construction does cheap structural
coercion (shapes, dtypes), while semantic invariants on feature packs are
checked by the report-style :func:`validate_pack` so batch tooling can
inspect broken inputs without exception handling.

Storage convention: features are 32-bit floats, every similarity or score
computation accumulates in 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

# Tolerance for unit-norm rows when the normalized flag is set.
ROW_NORM_TOL = 1e-4
# Cosine values may overshoot [-1, 1] by float error; anything worse is a bug.
SIMILARITY_SLACK = 1e-6


class ChunkMethod(str, Enum):
    """How a video was partitioned into clips."""

    UNIFORM = "uniform"
    SCENE = "scene"
    QUERY_GUIDED = "query_guided"


class PairMode(str, Enum):
    """Negative-sampling regime for contrastive batches and mined pairs."""

    COARSE = "coarse"  # negatives come from other videos
    FINE = "fine"      # negatives come from other clips of the same video


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeaturePack:
    """Dense per-frame embeddings with timestamps: a video's retrieval representation.

    Attributes:
        video_id: Identifier of the source video.
        timestamps: Seconds per sampled frame, shape (count,), float64.
        features: Frame embeddings, shape (count, dim), float32 row-major.
        normalized: True if every row is unit-L2 (within ``ROW_NORM_TOL``).
    """

    video_id: str
    timestamps: NDArray[np.float64]
    features: NDArray[np.float32]
    normalized: bool = False

    def __post_init__(self) -> None:
        feats = np.asarray(self.features)
        if feats.ndim != 2:
            raise ValueError(f"features must be a 2-D matrix, got shape {feats.shape}")
        ts = np.asarray(self.timestamps, dtype=np.float64)
        if ts.ndim != 1 or ts.shape[0] != feats.shape[0]:
            raise ValueError(
                f"timestamps length {ts.shape} does not match {feats.shape[0]} feature rows"
            )
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "features", _frozen(feats.astype(np.float32, copy=False)))

    @property
    def count(self) -> int:
        """Number of sampled frames (t)."""
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        """Embedding width (d)."""
        return self.features.shape[1]


def validate_pack(pack: FeaturePack) -> list[str]:
    """Report every violated FeaturePack invariant.

    Returns an empty list iff the pack is valid. Never raises: validation is
    a pure report so corpora can be batch-checked.
    """
    report: list[str] = []
    if pack.count < 1:
        report.append("count must be positive")
    if pack.dim < 1:
        report.append("dim must be positive")
    ts = pack.timestamps
    if ts.size and not np.all(np.isfinite(ts)):
        report.append("timestamps must be finite")
    elif ts.size:
        if ts[0] < 0.0:
            report.append("timestamps must be non-negative")
        if ts.size > 1 and not np.all(np.diff(ts) > 0.0):
            report.append("timestamps not strictly increasing")
    feats = pack.features
    if feats.size and not np.all(np.isfinite(feats)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(feats), axis=1))[0])
        report.append(f"non-finite feature value in row {bad}")
    elif pack.normalized and feats.size:
        norms = np.linalg.norm(feats.astype(np.float64), axis=1)
        off = np.abs(norms - 1.0) > ROW_NORM_TOL
        if np.any(off):
            bad = int(np.flatnonzero(off)[0])
            report.append(f"row norm violation at row {bad} (norm={norms[bad]:.6g})")
    return report


@dataclass(frozen=True)
class QueryRecord:
    """A text query, optionally with a precomputed embedding."""

    query_id: str
    text: str
    embedding: Optional[NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            if emb.ndim != 1:
                raise ValueError(f"query embedding must be 1-D, got shape {emb.shape}")
            object.__setattr__(self, "embedding", _frozen(emb))


@dataclass(frozen=True)
class SimilaritySeries:
    """Per-frame query-frame cosine scores, the signal shared by chunking and retrieval."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError(f"similarity series must be 1-D, got shape {vals.shape}")
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("similarity series contains non-finite values")
        if vals.size and (vals.min() < -1.0 - SIMILARITY_SLACK or vals.max() > 1.0 + SIMILARITY_SLACK):
            raise ValueError("similarity values outside [-1, 1]")
        object.__setattr__(self, "values", _frozen(vals))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class PeakScores:
    """Per-frame peak scores; high values mark query-relevant local maxima."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("peak scores must be a non-empty 1-D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("peak scores must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class Segmentation:
    """Ordered partition of frame indices [0, t) into contiguous half-open clips.

    ``centers`` carries the cluster-center frame indices when the method is
    query-guided; it is empty for the uniform and scene baselines.
    """

    clips: tuple[tuple[int, int], ...]
    method: ChunkMethod
    centers: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        clips = tuple((int(a), int(b)) for a, b in self.clips)
        if not clips:
            raise ValueError("segmentation must contain at least one clip")
        if clips[0][0] != 0:
            raise ValueError(f"first clip must start at 0, got {clips[0][0]}")
        for i, (start, end) in enumerate(clips):
            if end <= start:
                raise ValueError(f"clip {i} is empty: [{start}, {end})")
            if i and start != clips[i - 1][1]:
                raise ValueError(
                    f"clips not contiguous at index {i}: previous end {clips[i - 1][1]}, start {start}"
                )
        object.__setattr__(self, "clips", clips)
        object.__setattr__(self, "method", ChunkMethod(self.method))
        object.__setattr__(self, "centers", tuple(int(c) for c in self.centers))

    @property
    def n(self) -> int:
        """Number of clips."""
        return len(self.clips)

    @property
    def total_frames(self) -> int:
        return self.clips[-1][1]

    def clip_of_frame(self, frame: int) -> int:
        """Index of the clip containing a global frame index."""
        if not 0 <= frame < self.total_frames:
            raise ValueError(f"frame {frame} outside [0, {self.total_frames})")
        ends = np.fromiter((end for _, end in self.clips), dtype=np.int64)
        return int(np.searchsorted(ends, frame, side="right"))


@dataclass(frozen=True)
class RetrievalResult:
    """Top-K clips with relevance scores and the frame selection under a budget."""

    ranked_clips: tuple[tuple[int, float], ...]
    selected_frames: tuple[int, ...]
    budget: int

    def __post_init__(self) -> None:
        ranked = tuple((int(i), float(r)) for i, r in self.ranked_clips)
        frames = tuple(int(f) for f in self.selected_frames)
        if self.budget < 1:
            raise ValueError("frame budget must be positive")
        if len(frames) > self.budget:
            raise ValueError(f"{len(frames)} frames selected, budget is {self.budget}")
        rel = [r for _, r in ranked]
        if any(b > a for a, b in zip(rel, rel[1:])):
            raise ValueError("ranked clip relevances must be non-increasing")
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("selected frames must be strictly increasing")
        object.__setattr__(self, "ranked_clips", ranked)
        object.__setattr__(self, "selected_frames", frames)
        object.__setattr__(self, "budget", int(self.budget))


@dataclass(frozen=True)
class ContrastiveBatch:
    """Similarity inputs for one contrastive loss evaluation.

    ``positive_similarities`` holds one value per frame of the positive clip;
    ``negative_similarities`` one per negative frame. In normal operation the
    values are cosine scores in [-1, 1], but the kernels remain stable for any
    finite logits.
    """

    positive_similarities: NDArray[np.float64]
    negative_similarities: NDArray[np.float64]
    temperature: float = 0.07
    mode: PairMode = PairMode.COARSE

    def __post_init__(self) -> None:
        pos = np.asarray(self.positive_similarities, dtype=np.float64).reshape(-1)
        neg = np.asarray(self.negative_similarities, dtype=np.float64).reshape(-1)
        if pos.size < 1:
            raise ValueError("batch needs at least one positive similarity")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
            raise ValueError("similarities must be finite")
        if not self.temperature > 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        object.__setattr__(self, "positive_similarities", _frozen(pos))
        object.__setattr__(self, "negative_similarities", _frozen(neg))
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "mode", PairMode(self.mode))

    @property
    def m(self) -> int:
        """Number of positive-clip frames."""
        return int(self.positive_similarities.shape[0])


@dataclass(frozen=True)
class MinedPair:
    """One exported training pair: a positive clip and its negative clips."""

    query_id: str
    positive: tuple[str, tuple[int, int]]
    negatives: tuple[tuple[str, tuple[int, int]], ...]
    mode: PairMode

    def __post_init__(self) -> None:
        mode = PairMode(self.mode)
        pos_video, (ps, pe) = self.positive
        positive = (str(pos_video), (int(ps), int(pe)))
        negatives = tuple((str(v), (int(a), int(b))) for v, (a, b) in self.negatives)
        for video, (a, b) in negatives:
            if mode is PairMode.COARSE and video == positive[0]:
                raise ValueError(f"coarse negative from the positive's video {video!r}")
            if mode is PairMode.FINE:
                if video != positive[0]:
                    raise ValueError(f"fine negative from another video {video!r}")
                if a < positive[1][1] and positive[1][0] < b:
                    raise ValueError(f"fine negative [{a}, {b}) overlaps the positive clip")
        object.__setattr__(self, "positive", positive)
        object.__setattr__(self, "negatives", negatives)
        object.__setattr__(self, "mode", mode)


@dataclass(frozen=True)
class SynthesisManifest:
    """Recipe concatenating one anchor short video with its retained negatives."""

    anchor_id: str
    components: tuple[str, ...]
    instruction_pool: tuple[tuple[str, str], ...]
    seed: int

    def __post_init__(self) -> None:
        components = tuple(str(c) for c in self.components)
        if components.count(self.anchor_id) != 1:
            raise ValueError(f"anchor {self.anchor_id!r} must appear exactly once in components")
        if len(set(components)) != len(components):
            raise ValueError("duplicate component ids in manifest")
        object.__setattr__(self, "components", components)
        object.__setattr__(
            self, "instruction_pool", tuple((str(q), str(v)) for q, v in self.instruction_pool)
        )
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def anchor_position(self) -> int:
        return self.components.index(self.anchor_id)


@dataclass(frozen=True)
class ShortVideoEntry:
    """Sampled representation of one short video for synthesis planning.

    Exactly five sampled frame features and five sampled instruction features
    per video.
    """

    SAMPLE_ROWS = 5

    video_id: str
    sampled_frame_features: NDArray[np.float32]
    instruction_features: NDArray[np.float32]
    instruction_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        frames = np.asarray(self.sampled_frame_features, dtype=np.float32)
        instr = np.asarray(self.instruction_features, dtype=np.float32)
        ids = tuple(str(i) for i in self.instruction_ids)
        for name, mat in (("sampled_frame_features", frames), ("instruction_features", instr)):
            if mat.ndim != 2 or mat.shape[0] != self.SAMPLE_ROWS:
                raise ValueError(f"{name} must have exactly {self.SAMPLE_ROWS} rows, got {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite values")
        if frames.shape[1] != instr.shape[1]:
            raise ValueError(
                f"frame dim {frames.shape[1]} does not match instruction dim {instr.shape[1]}"
            )
        if len(ids) != self.SAMPLE_ROWS:
            raise ValueError(f"need exactly {self.SAMPLE_ROWS} instruction ids, got {len(ids)}")
        object.__setattr__(self, "sampled_frame_features", _frozen(frames))
        object.__setattr__(self, "instruction_features", _frozen(instr))
        object.__setattr__(self, "instruction_ids", ids)

    @property
    def dim(self) -> int:
        return self.sampled_frame_features.shape[1]


@dataclass(frozen=True)
class ChunkConfig:
    """Chunking parameters. Ties always break to the lowest index."""

    num_clips: int = 32

    def __post_init__(self) -> None:
        if self.num_clips < 1:
            raise ValueError(f"num_clips must be positive, got {self.num_clips}")


@dataclass(frozen=True)
class RetrievalConfig:
    """Retrieval parameters; retrieved clips are re-ordered chronologically."""

    top_k: int = 8
    frame_budget: int = 16

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValueError(f"top_k must be positive, got {self.top_k}")
        if self.frame_budget < 1:
            raise ValueError(f"frame_budget must be positive, got {self.frame_budget}")
