"""Query-guided chunking: similarity series, peak scores, centers, boundaries.

The whole pipeline consumes one per-frame cosine series. Peak scores mark
frames whose neighbours dip below them; the highest-scoring frames become
cluster centers, and each gap between adjacent centers is split at the
boundary that maximizes the coherence of the two resulting runs. Uniform and
scene-based segmentations are provided as query-independent baselines.

Conventions (all deliberate, all tested):

* Peak-score fallback: when a side has no value <= s_i, that side's term is
  s_i itself, so edge frames score 0 instead of spuriously high.
* Boundary domain is b in 1..t_j-1; b = t_j would divide by zero and adds no
  expressiveness over t_j-1.
* Degenerate gaps (fewer than two interior frames) place the cut directly
  before the right center, so a lone gap frame stays with the left clip;
  frames before the first center join clip 1, frames after the last center
  join clip n.
* Every tie breaks toward the lower index.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import ChunkConfig, ChunkMethod, FeaturePack, PeakScores, Segmentation, SimilaritySeries


class DegenerateGapError(ValueError):
    """Raised when a gap has no interior boundary choice (t_j < 2)."""


def _as_query(query_embedding: Sequence[float] | np.ndarray) -> np.ndarray:
    q = np.asarray(query_embedding, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(q)):
        raise ValueError("query embedding contains non-finite values")
    return q


def similarity_series(pack: FeaturePack, query_embedding: Sequence[float] | np.ndarray) -> SimilaritySeries:
    """Cosine similarity of every frame against the query, accumulated in float64.

    Raises ValueError on dimension mismatch (naming both dims) or on a
    zero-norm row or query (naming the offending index).
    """
    q = _as_query(query_embedding)
    if q.shape[0] != pack.dim:
        raise ValueError(f"query dim {q.shape[0]} does not match pack dim {pack.dim}")
    feats = pack.features.astype(np.float64)
    q_sq = float(q @ q)
    if q_sq == 0.0:
        raise ValueError("query embedding has zero norm")
    row_sq = np.einsum("ij,ij->i", feats, feats)
    if np.any(row_sq == 0.0):
        bad = int(np.flatnonzero(row_sq == 0.0)[0])
        raise ValueError(f"feature row {bad} has zero norm")
    # sqrt of the product keeps cos(v, v) == 1.0 exactly.
    values = (feats @ q) / np.sqrt(row_sq * q_sq)
    return SimilaritySeries(np.clip(values, -1.0, 1.0))


def peak_scores(series: SimilaritySeries) -> PeakScores:
    """Peak score per frame: 2*s_i minus the smallest eligible value on each side.

    Eligible values are those <= s_i strictly left / strictly right of i; an
    empty side contributes s_i (zero net contribution).

    Computed in O(t): the smallest eligible value on a side equals
    min(side minimum, s_i), because the side minimum is itself eligible
    whenever any eligible value exists.
    """
    s = series.values
    t = s.shape[0]
    if t < 1:
        raise ValueError("similarity series is empty")
    left_min = np.empty(t)
    left_min[0] = np.inf
    if t > 1:
        np.minimum.accumulate(s[:-1], out=left_min[1:])
    right_min = np.empty(t)
    right_min[-1] = np.inf
    if t > 1:
        right_min[:-1] = np.minimum.accumulate(s[::-1][:-1])[::-1]
    left_term = np.minimum(left_min, s)
    right_term = np.minimum(right_min, s)
    return PeakScores(2.0 * s - left_term - right_term)


def select_centers(scores: PeakScores, n: int) -> np.ndarray:
    """The n frame indices with the highest peak score, sorted ascending.

    Ties break toward the lower index.
    """
    t = len(scores)
    if n > t:
        raise ValueError(f"cannot select {n} centers from {t} frames")
    if n < 1:
        raise ValueError(f"need at least one center, got n={n}")
    order = np.argsort(-scores.values, kind="stable")
    return np.sort(order[:n])


def optimal_boundary(segment_similarities: Sequence[float] | np.ndarray) -> int:
    """Best split of the frames between two adjacent centers.

    The input holds the t_j similarities of the frames strictly between the
    centers plus, as its last element, the similarity at the right center
    (required by the final term of the objective). Returns the 1-based local
    index b* in 1..t_j-1 maximizing

        sum_{k=1..b} (s_k - s_{k+1})  +  (1/(t_j - b)) * sum_{l=b+1..t_j} (s_{l+1} - s_l)

    via prefix sums in O(t_j); ties break to the lower b. Raises
    DegenerateGapError when t_j < 2 (the caller then cuts directly before the
    right center).
    """
    v = np.asarray(segment_similarities, dtype=np.float64).reshape(-1)
    t_j = v.shape[0] - 1
    if t_j < 2:
        raise DegenerateGapError(f"degenerate gap: t_j={t_j} has no interior boundary")
    drops = v[:-1] - v[1:]            # drops[k-1] = s_k - s_{k+1}
    left = np.cumsum(drops)           # left[b-1]  = sum_{k<=b} (s_k - s_{k+1})
    rises = -drops                    # rises[l-1] = s_{l+1} - s_l
    suffix = np.zeros(t_j + 1)
    suffix[:-1] = np.cumsum(rises[::-1])[::-1]  # suffix[b] = sum_{l>=b+1} rises
    b_candidates = np.arange(1, t_j)
    objective = left[:-1] + suffix[1:-1] / (t_j - b_candidates)
    return int(b_candidates[np.argmax(objective)])


def chunk(series: SimilaritySeries, cfg: ChunkConfig) -> Segmentation:
    """Query-guided segmentation: peak scores -> centers -> per-gap boundaries.

    The first clip starts at 0 and the last ends at t; every center lies
    inside its own clip.
    """
    t = len(series)
    n = cfg.num_clips
    if n > t:
        raise ValueError(f"cannot cut {t} frames into {n} clips")
    centers = select_centers(peak_scores(series), n)
    s = series.values
    cuts: list[int] = []
    for c_left, c_right in zip(centers[:-1], centers[1:]):
        t_j = int(c_right - c_left - 1)
        if t_j < 2:
            # Degenerate gap: cut directly before the right center.
            cuts.append(int(c_right))
        else:
            b = optimal_boundary(s[c_left + 1 : c_right + 1])
            cuts.append(int(c_left) + b + 1)
    edges = [0, *cuts, t]
    clips = tuple((edges[i], edges[i + 1]) for i in range(len(edges) - 1))
    return Segmentation(clips=clips, method=ChunkMethod.QUERY_GUIDED, centers=tuple(int(c) for c in centers))


def uniform_chunk(t: int, n: int) -> Segmentation:
    """n contiguous clips of size ceil(t/n) or floor(t/n), larger clips first."""
    if n > t:
        raise ValueError(f"cannot cut {t} frames into {n} clips")
    if n < 1:
        raise ValueError(f"need at least one clip, got n={n}")
    base, extra = divmod(t, n)
    clips = []
    start = 0
    for i in range(n):
        end = start + base + (1 if i < extra else 0)
        clips.append((start, end))
        start = end
    return Segmentation(clips=tuple(clips), method=ChunkMethod.UNIFORM)


def scene_chunk(pack: FeaturePack, n: int) -> Segmentation:
    """Query-independent baseline: cut at the n-1 lowest adjacent-frame similarities.

    Adjacent similarity a_i = cos(f_i, f_{i+1}); valley ties break to the
    lower index.
    """
    t = pack.count
    if n > t:
        raise ValueError(f"cannot cut {t} frames into {n} clips")
    if n < 1:
        raise ValueError(f"need at least one clip, got n={n}")
    if n == 1:
        return Segmentation(clips=((0, t),), method=ChunkMethod.SCENE)
    feats = pack.features.astype(np.float64)
    row_sq = np.einsum("ij,ij->i", feats, feats)
    if np.any(row_sq == 0.0):
        bad = int(np.flatnonzero(row_sq == 0.0)[0])
        raise ValueError(f"feature row {bad} has zero norm")
    dots = np.einsum("ij,ij->i", feats[:-1], feats[1:])
    adjacency = dots / np.sqrt(row_sq[:-1] * row_sq[1:])
    valleys = np.lexsort((np.arange(adjacency.shape[0]), adjacency))[: n - 1]
    edges = [0, *sorted(int(v) + 1 for v in valleys), t]
    clips = tuple((edges[i], edges[i + 1]) for i in range(len(edges) - 1))
    return Segmentation(clips=clips, method=ChunkMethod.SCENE)
