"""Long-video synthesis planning over a corpus of short videos.

For every anchor video the planner retrieves the most visually similar other
videos as candidates, keeps the candidates whose instruction pools diverge
most from the anchor's (visually similar but textually distinct), and emits a
manifest describing one synthesized long video: the anchor plus its retained
negatives in a seeded shuffle, with the anchor's position recorded so ground
truth clip labels survive. Manifests are a recipe; no media is touched.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .featureio import fnv1a_64
from .model import ShortVideoEntry, SynthesisManifest

CANDIDATES_PER_VIDEO = 16
RETAINED_NEGATIVES = 8


def _pooled(matrix: np.ndarray, what: str, video_id: str) -> np.ndarray:
    pooled = matrix.astype(np.float64).mean(axis=0)
    norm = float(np.linalg.norm(pooled))
    if norm == 0.0:
        raise ValueError(f"pooled {what} of video {video_id!r} has zero norm")
    return pooled


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float((a @ b) / np.sqrt((a @ a) * (b @ b)))


def visual_relevance(a: ShortVideoEntry, b: ShortVideoEntry) -> float:
    """Cosine of the average-pooled frame features of two videos."""
    if a.dim != b.dim:
        raise ValueError(f"dim mismatch: {a.dim} vs {b.dim}")
    return _cosine(
        _pooled(a.sampled_frame_features, "frame features", a.video_id),
        _pooled(b.sampled_frame_features, "frame features", b.video_id),
    )


def instruction_divergence(a: ShortVideoEntry, b: ShortVideoEntry) -> float:
    """1 - cosine of the average-pooled instruction features; in [0, 2]."""
    if a.dim != b.dim:
        raise ValueError(f"dim mismatch: {a.dim} vs {b.dim}")
    return 1.0 - _cosine(
        _pooled(a.instruction_features, "instruction features", a.video_id),
        _pooled(b.instruction_features, "instruction features", b.video_id),
    )


def build_candidates(
    corpus: Sequence[ShortVideoEntry],
    per_video_count: int = CANDIDATES_PER_VIDEO,
) -> dict[str, list[str]]:
    """For each video, the most visually relevant other videos, ranked.

    Ties break to the lexicographically lower video id; a video never appears
    in its own candidate list.
    """
    if len(corpus) <= per_video_count:
        raise ValueError(
            f"corpus has {len(corpus)} videos; candidate retrieval needs at least {per_video_count + 1}"
        )
    ids = [entry.video_id for entry in corpus]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate video ids in corpus")
    pooled = np.stack(
        [_pooled(entry.sampled_frame_features, "frame features", entry.video_id) for entry in corpus]
    )
    row_sq = np.einsum("ij,ij->i", pooled, pooled)
    relevance = (pooled @ pooled.T) / np.sqrt(np.outer(row_sq, row_sq))
    by_id = sorted(range(len(corpus)), key=lambda i: ids[i])
    candidates: dict[str, list[str]] = {}
    for i in by_id:
        others = [j for j in by_id if j != i]
        others.sort(key=lambda j: (-relevance[i, j], ids[j]))
        candidates[ids[i]] = [ids[j] for j in others[:per_video_count]]
    return candidates


def _anchor_rng(seed: int, anchor_id: str) -> np.random.Generator:
    return np.random.default_rng((seed & 0xFFFFFFFF, fnv1a_64(anchor_id.encode("utf-8"))))


def plan_synthesis(
    corpus: Sequence[ShortVideoEntry],
    seed: int,
    *,
    candidates: Mapping[str, Sequence[str]] | None = None,
    retained_negatives: int = RETAINED_NEGATIVES,
) -> list[SynthesisManifest]:
    """Emit one manifest per anchor: the anchor plus its retained negatives.

    Candidates are ranked by instruction divergence, descending (ties to the
    lower id); the top ``retained_negatives`` survive. Component order is a
    seeded shuffle, deterministic in (corpus, seed). Manifests come back
    sorted by anchor id.
    """
    entries = {entry.video_id: entry for entry in corpus}
    if candidates is None:
        candidates = build_candidates(corpus)
    manifests: list[SynthesisManifest] = []
    for anchor_id in sorted(candidates):
        anchor = entries[anchor_id]
        ranked = sorted(
            candidates[anchor_id],
            key=lambda vid: (-instruction_divergence(anchor, entries[vid]), vid),
        )
        retained = ranked[:retained_negatives]
        components = [anchor_id, *retained]
        rng = _anchor_rng(seed, anchor_id)
        order = rng.permutation(len(components))
        shuffled = tuple(components[i] for i in order)
        pool = tuple(
            (query_id, vid)
            for vid in shuffled
            for query_id in entries[vid].instruction_ids
        )
        manifests.append(
            SynthesisManifest(
                anchor_id=anchor_id,
                components=shuffled,
                instruction_pool=pool,
                seed=seed,
            )
        )
    return manifests
