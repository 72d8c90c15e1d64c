"""Clip relevance, top-K selection, frame-budget allocation, and the pipeline.

Relevance is max-pooled similarity per clip. Retrieved clips are re-ordered
chronologically before the frame budget is spread across them (the consumer
sees a temporal sequence, not rank order), proportionally to clip length with
a one-frame floor per clip while the budget allows.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .chunking import chunk, similarity_series
from .model import (
    ChunkConfig,
    FeaturePack,
    RetrievalConfig,
    RetrievalResult,
    Segmentation,
    SimilaritySeries,
)


def clip_relevance(series: SimilaritySeries, seg: Segmentation) -> np.ndarray:
    """Max-pooled similarity per clip."""
    if seg.total_frames != len(series):
        raise ValueError(
            f"segmentation covers {seg.total_frames} frames, series has {len(series)}"
        )
    starts = np.fromiter((start for start, _ in seg.clips), dtype=np.int64)
    return np.maximum.reduceat(series.values, starts)


def top_k_clips(relevances: Sequence[float] | np.ndarray, k: int) -> np.ndarray:
    """Indices of the K most relevant clips, descending by relevance.

    Ties break toward the lower clip index.
    """
    r = np.asarray(relevances, dtype=np.float64).reshape(-1)
    n = r.shape[0]
    if k > n:
        raise ValueError(f"cannot retrieve K={k} clips from n={n}")
    if k < 1:
        raise ValueError(f"need at least one clip, got K={k}")
    order = np.lexsort((np.arange(n), -r))
    return order[:k]


def _stride_sample(start: int, end: int, quota: int) -> list[int]:
    # floor(j * size / quota) gives an exact uniform stride when quota divides size
    size = end - start
    return [start + (j * size) // quota for j in range(quota)]


def allocate_frames(
    selected_clips: Sequence[int] | np.ndarray,
    seg: Segmentation,
    budget: int,
) -> tuple[int, ...]:
    """Spread the frame budget over the selected clips, chronologically.

    ``selected_clips`` is in rank order; when the budget is smaller than the
    number of clips only the top-ranked ones receive a frame. Quotas are
    proportional to clip length (floor, then largest fractional remainder,
    ties to the earlier clip) with a one-frame floor per kept clip. Within a
    clip, frames are sampled at a uniform stride. Output indices are strictly
    increasing and number exactly min(budget, total frames in the selection).
    """
    if budget < 1:
        raise ValueError(f"frame budget must be positive, got {budget}")
    ranked = [int(c) for c in selected_clips]
    if not ranked:
        raise ValueError("no clips selected")
    if len(set(ranked)) != len(ranked):
        raise ValueError("duplicate clip indices in selection")
    if budget < len(ranked):
        ranked = ranked[:budget]
    clips = sorted(seg.clips[c] for c in ranked)
    sizes = np.array([end - start for start, end in clips], dtype=np.int64)
    total = int(sizes.sum())
    if total <= budget:
        return tuple(f for start, end in clips for f in range(start, end))
    exact = budget * sizes / total
    quotas = np.floor(exact).astype(np.int64)
    np.maximum(quotas, 1, out=quotas)
    # Trim overshoot from the largest quotas (latest clip first on ties),
    # then spend any remainder by the largest fractional part (earliest first).
    while quotas.sum() > budget:
        eligible = np.flatnonzero(quotas > 1)
        pick = eligible[np.lexsort((-eligible, -quotas[eligible]))[0]]
        quotas[pick] -= 1
    if quotas.sum() < budget:
        remainder = exact - np.floor(exact)
        order = np.lexsort((np.arange(len(clips)), -remainder))
        i = 0
        while quotas.sum() < budget:
            idx = order[i % len(order)]
            if quotas[idx] < sizes[idx]:
                quotas[idx] += 1
            i += 1
    frames: list[int] = []
    for (start, end), quota in zip(clips, quotas):
        frames.extend(_stride_sample(start, end, int(quota)))
    return tuple(frames)


def run_pipeline(
    pack: FeaturePack,
    query_embedding: Sequence[float] | np.ndarray,
    chunk_cfg: ChunkConfig,
    retrieval_cfg: RetrievalConfig,
) -> tuple[RetrievalResult, Segmentation]:
    """Chunk and retrieve from one similarity computation.

    The similarity series is computed exactly once per (video, query) pair;
    chunking and retrieval both reuse it.
    """
    series = similarity_series(pack, query_embedding)
    seg = chunk(series, chunk_cfg)
    relevances = clip_relevance(series, seg)
    ranked = top_k_clips(relevances, retrieval_cfg.top_k)
    frames = allocate_frames(ranked, seg, retrieval_cfg.frame_budget)
    result = RetrievalResult(
        ranked_clips=tuple((int(c), float(relevances[c])) for c in ranked),
        selected_frames=frames,
        budget=retrieval_cfg.frame_budget,
    )
    return result, seg
