"""Contrastive loss kernels, analytic gradients, and training-pair mining.

The coarse and fine objectives share one functional form; they differ only in
where the miner draws negatives from (other videos vs. other clips of the
same video). Losses are computed with max-shifted log-sum-exp so extreme
logits neither overflow nor lose the tiny-loss regime to rounding.

No optimizer lives here: the miner exports pairs as JSONL for any external
trainer, and the kernels expose gradients with respect to the similarity
inputs for verification and downstream use.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .featureio import fnv1a_64
from .model import ContrastiveBatch, MinedPair, PairMode, Segmentation

logger = logging.getLogger(__name__)

DEFAULT_COARSE_NEGATIVES = 8


def _nce_loss(pos: np.ndarray, neg: np.ndarray, tau: float) -> float:
    if neg.size == 0:
        return 0.0
    # Per positive i: L_i = log(1 + sum_j exp((q_j - p_i)/tau))
    diffs = (neg[None, :] - pos[:, None]) / tau
    row_max = diffs.max(axis=1)
    out = np.empty(pos.shape[0])
    small = row_max <= 0.0
    if np.any(small):
        out[small] = np.log1p(np.exp(diffs[small]).sum(axis=1))
    large = ~small
    if np.any(large):
        mx = row_max[large]
        out[large] = mx + np.log(np.exp(-mx) + np.exp(diffs[large] - mx[:, None]).sum(axis=1))
    return float(out.mean())


def coarse_loss(batch: ContrastiveBatch) -> float:
    """Mean softmax-contrast loss over positive frames vs. other-video negatives."""
    if batch.mode is not PairMode.COARSE:
        raise ValueError(f"expected a coarse batch, got mode {batch.mode.value!r}")
    return _nce_loss(batch.positive_similarities, batch.negative_similarities, batch.temperature)


def fine_loss(batch: ContrastiveBatch) -> float:
    """Same functional form as the coarse loss, over same-video negatives."""
    if batch.mode is not PairMode.FINE:
        raise ValueError(f"expected a fine batch, got mode {batch.mode.value!r}")
    return _nce_loss(batch.positive_similarities, batch.negative_similarities, batch.temperature)


def loss_gradient(batch: ContrastiveBatch) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the loss w.r.t. every similarity input.

    Returns (d_positives, d_negatives). With a single positive the gradient
    components sum to zero (softmax rows live on the probability simplex).
    """
    pos = batch.positive_similarities
    neg = batch.negative_similarities
    tau = batch.temperature
    m = pos.shape[0]
    if neg.size == 0:
        return np.zeros(m), np.zeros(0)
    logits = np.concatenate((pos[:, None], np.broadcast_to(neg, (m, neg.shape[0]))), axis=1) / tau
    logits = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    d_pos = -(1.0 - weights[:, 0]) / (m * tau)
    d_neg = weights[:, 1:].sum(axis=0) / (m * tau)
    return d_pos, d_neg


@dataclass(frozen=True)
class MiningVideo:
    """One segmented video with its query annotations.

    ``queries`` maps each query id to the index of its positive clip in the
    segmentation (ground truth from synthesis manifests or native labels).
    """

    video_id: str
    segmentation: Segmentation
    queries: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        queries = tuple((str(q), int(c)) for q, c in self.queries)
        for query_id, clip_idx in queries:
            if not 0 <= clip_idx < self.segmentation.n:
                raise ValueError(
                    f"query {query_id!r}: positive clip {clip_idx} outside 0..{self.segmentation.n - 1}"
                )
        object.__setattr__(self, "queries", queries)


def _query_rng(seed: int, query_id: str) -> np.random.Generator:
    # Seed derived from the query id so mining order never changes sampling.
    return np.random.default_rng((seed & 0xFFFFFFFF, fnv1a_64(query_id.encode("utf-8"))))


def mine_pairs(
    corpus: Sequence[MiningVideo],
    mode: PairMode | str,
    *,
    negatives_per_pair: int = DEFAULT_COARSE_NEGATIVES,
    seed: int = 0,
) -> list[MinedPair]:
    """Export one training pair per annotated query.

    Coarse mode samples ``negatives_per_pair`` clips from other videos with a
    per-query deterministic generator; fine mode takes every other clip of
    the same video and skips (with a warning) videos that have only one clip.
    """
    mode = PairMode(mode)
    pairs: list[MinedPair] = []
    # Sorted pool keeps sampling independent of corpus order.
    all_clips = sorted(
        (video.video_id, clip) for video in corpus for clip in video.segmentation.clips
    )
    for video in corpus:
        for query_id, clip_idx in video.queries:
            positive = (video.video_id, video.segmentation.clips[clip_idx])
            if mode is PairMode.COARSE:
                pool = [entry for entry in all_clips if entry[0] != video.video_id]
                rng = _query_rng(seed, query_id)
                take = min(negatives_per_pair, len(pool))
                chosen = rng.choice(len(pool), size=take, replace=False)
                negatives = tuple(pool[i] for i in sorted(chosen))
            else:
                if video.segmentation.n < 2:
                    logger.warning(
                        "skipping fine pair for query %r: video %r has a single clip",
                        query_id,
                        video.video_id,
                    )
                    continue
                negatives = tuple(
                    (video.video_id, clip)
                    for i, clip in enumerate(video.segmentation.clips)
                    if i != clip_idx
                )
            pairs.append(
                MinedPair(query_id=query_id, positive=positive, negatives=negatives, mode=mode)
            )
    return pairs
