"""Synthetic retrieval benchmark and stage timing.

The generator plants query-aligned segments into an otherwise random unit
pack, giving ground truth the real benchmarks cannot: retrieval-side recall
is then measurable without any downstream model. Strategy comparison mirrors
the classic ablation ladder (uniform sampling baseline, key frames, uniform
clips, scene clips, query-guided clips); timing reports the three pipeline
stages separately on a monotonic clock.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .chunking import chunk, scene_chunk, similarity_series, uniform_chunk
from .model import (
    ChunkConfig,
    ChunkMethod,
    FeaturePack,
    RetrievalConfig,
    RetrievalResult,
    Segmentation,
    SimilaritySeries,
)
from .retrieval import allocate_frames, clip_relevance, run_pipeline, top_k_clips


class Strategy(str, Enum):
    """Retrieval strategies under comparison; uniform sampling is the baseline."""

    UNIFORM_SAMPLING = "uniform_sampling"
    KEY_FRAMES = "key_frames"
    UNIFORM_CLIPS = "uniform_clips"
    SCENE_CLIPS = "scene_clips"
    QUERY_GUIDED = "query_guided"


BASELINE = Strategy.UNIFORM_SAMPLING
ALL_STRATEGIES = tuple(Strategy)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic pack with planted query-aligned segments."""

    t: int
    d: int
    planted_segments: tuple[tuple[int, int, float], ...] = ()
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.t < 1 or self.d < 1:
            raise ValueError(f"t and d must be positive, got t={self.t}, d={self.d}")
        if self.noise_std < 0.0:
            raise ValueError(f"noise_std must be non-negative, got {self.noise_std}")
        segs = tuple((int(a), int(b), float(mu)) for a, b, mu in self.planted_segments)
        last_end = 0
        for start, end, mu in sorted(segs):
            if not (0 <= start < end <= self.t):
                raise ValueError(f"segment [{start}, {end}) outside [0, {self.t})")
            if start < last_end:
                raise ValueError("planted segments overlap")
            if mu <= 0.0:
                raise ValueError(f"signal strength must be positive, got {mu}")
            last_end = end
        object.__setattr__(self, "planted_segments", segs)


def generate(spec: SyntheticSpec) -> tuple[FeaturePack, np.ndarray, np.ndarray]:
    """Build (pack, query embedding, ground-truth frame indices) from a spec.

    The query is a fixed unit vector drawn from the seed. Planted frames
    point along the query direction (scaled by the segment strength, blurred
    by Gaussian noise, then renormalized); background frames are independent
    random unit vectors. Deterministic in the seed.
    """
    rng = np.random.default_rng(spec.seed)
    q = rng.standard_normal(spec.d)
    q /= np.linalg.norm(q)
    q32 = q.astype(np.float32)
    query = q32.astype(np.float64)
    planted = np.zeros(spec.t, dtype=bool)
    strength = np.zeros(spec.t)
    for start, end, mu in spec.planted_segments:
        planted[start:end] = True
        strength[start:end] = mu
    rows = np.empty((spec.t, spec.d), dtype=np.float32)
    for i in range(spec.t):
        if planted[i]:
            if spec.noise_std == 0.0:
                rows[i] = q32  # exact copy keeps in-segment cosine at exactly 1.0
                continue
            v = strength[i] * query + spec.noise_std * rng.standard_normal(spec.d)
        else:
            v = rng.standard_normal(spec.d)
        rows[i] = (v / np.linalg.norm(v)).astype(np.float32)
    timestamps = np.arange(spec.t, dtype=np.float64)
    pack = FeaturePack(
        video_id=f"synthetic-{spec.seed}", timestamps=timestamps, features=rows, normalized=True
    )
    truth = np.flatnonzero(planted)
    return pack, query, truth


def recall_at_budget(result: RetrievalResult, truth: Sequence[int] | np.ndarray) -> float:
    """Frame-level recall of the selection; 1.0 by convention when truth is empty."""
    truth_set = set(int(f) for f in np.asarray(truth).reshape(-1))
    if not truth_set:
        return 1.0
    hits = sum(1 for f in result.selected_frames if f in truth_set)
    return hits / len(truth_set)


def clip_hit_rate(
    retrieved_ranges: Sequence[tuple[int, int]],
    truth_segments: Sequence[tuple[int, int]],
) -> float:
    """Fraction of planted segments intersected by any retrieved range; 1.0 when none planted."""
    if not truth_segments:
        return 1.0
    hits = 0
    for seg_start, seg_end in truth_segments:
        if any(start < seg_end and seg_start < end for start, end in retrieved_ranges):
            hits += 1
    return hits / len(truth_segments)


def _evenly_spaced(t: int, budget: int) -> tuple[int, ...]:
    count = min(budget, t)
    return tuple((j * t) // count for j in range(count))


def run_strategy(
    strategy: Strategy,
    pack: FeaturePack,
    query: np.ndarray,
    truth: np.ndarray,
    truth_segments: Sequence[tuple[int, int]],
    chunk_cfg: ChunkConfig,
    retrieval_cfg: RetrievalConfig,
) -> tuple[float, float]:
    """(frame recall, clip-hit rate) of one strategy on one generated pack.

    Frame-based strategies score clip hits by their selected frames; clip
    strategies by the retrieved clip ranges.
    """
    t = pack.count
    budget = retrieval_cfg.frame_budget
    if strategy is Strategy.UNIFORM_SAMPLING:
        frames = _evenly_spaced(t, budget)
        ranges = [(f, f + 1) for f in frames]
    elif strategy is Strategy.KEY_FRAMES:
        series = similarity_series(pack, query)
        count = min(budget, t)
        order = np.lexsort((np.arange(t), -series.values))[:count]
        frames = tuple(int(f) for f in np.sort(order))
        ranges = [(f, f + 1) for f in frames]
    else:
        series = similarity_series(pack, query)
        if strategy is Strategy.UNIFORM_CLIPS:
            seg = uniform_chunk(t, chunk_cfg.num_clips)
        elif strategy is Strategy.SCENE_CLIPS:
            seg = scene_chunk(pack, chunk_cfg.num_clips)
        else:
            seg = chunk(series, chunk_cfg)
        relevances = clip_relevance(series, seg)
        ranked = top_k_clips(relevances, min(retrieval_cfg.top_k, seg.n))
        frames = allocate_frames(ranked, seg, budget)
        ranges = [seg.clips[c] for c in ranked]
    truth_set = set(int(f) for f in truth)
    recall = 1.0 if not truth_set else sum(1 for f in frames if f in truth_set) / len(truth_set)
    return recall, clip_hit_rate(ranges, truth_segments)


@dataclass(frozen=True)
class StrategyStats:
    strategy: Strategy
    mean_recall: float
    std_recall: float
    mean_clip_hit: float
    std_clip_hit: float
    trials: int


@dataclass(frozen=True)
class ComparisonTable:
    """Per-strategy recall statistics; the baseline row is always present."""

    rows: tuple[StrategyStats, ...]

    def to_text(self) -> str:
        header = f"{'strategy':<18} {'recall':>8} {'±':>8} {'clip_hit':>9} {'±':>8} {'trials':>7}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(
                f"{row.strategy.value:<18} {row.mean_recall:>8.4f} {row.std_recall:>8.4f} "
                f"{row.mean_clip_hit:>9.4f} {row.std_clip_hit:>8.4f} {row.trials:>7d}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["strategy", "mean_recall", "std_recall", "mean_clip_hit", "std_clip_hit", "trials"])
        for row in self.rows:
            writer.writerow(
                [
                    row.strategy.value,
                    f"{row.mean_recall:.6f}",
                    f"{row.std_recall:.6f}",
                    f"{row.mean_clip_hit:.6f}",
                    f"{row.std_clip_hit:.6f}",
                    row.trials,
                ]
            )
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            row.strategy.value: {
                "mean_recall": row.mean_recall,
                "std_recall": row.std_recall,
                "mean_clip_hit": row.mean_clip_hit,
                "std_clip_hit": row.std_clip_hit,
                "trials": row.trials,
            }
            for row in self.rows
        }


def compare_strategies(
    spec: SyntheticSpec,
    strategies: Sequence[Strategy | str],
    chunk_cfg: ChunkConfig,
    retrieval_cfg: RetrievalConfig,
    trials: int,
) -> ComparisonTable:
    """Mean recall and clip-hit per strategy over seeded trials.

    Trial i regenerates the spec with seed ``spec.seed + i`` (segment
    placement and noise vary per trial, shapes stay fixed). The baseline row
    is always included so regressions stay visible.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    wanted = [Strategy(s) for s in strategies]
    ordered = [s for s in ALL_STRATEGIES if s is BASELINE or s in wanted]
    results: dict[Strategy, list[tuple[float, float]]] = {s: [] for s in ordered}
    for trial in range(trials):
        trial_spec = SyntheticSpec(
            t=spec.t,
            d=spec.d,
            planted_segments=_placed_segments(spec, trial),
            noise_std=spec.noise_std,
            seed=spec.seed + trial,
        )
        pack, query, truth = generate(trial_spec)
        truth_segments = [(a, b) for a, b, _ in trial_spec.planted_segments]
        for strategy in ordered:
            results[strategy].append(
                run_strategy(strategy, pack, query, truth, truth_segments, chunk_cfg, retrieval_cfg)
            )
    rows = []
    for strategy in ordered:
        recalls = [r for r, _ in results[strategy]]
        hits = [h for _, h in results[strategy]]
        rows.append(
            StrategyStats(
                strategy=strategy,
                mean_recall=statistics.fmean(recalls),
                std_recall=statistics.pstdev(recalls) if len(recalls) > 1 else 0.0,
                mean_clip_hit=statistics.fmean(hits),
                std_clip_hit=statistics.pstdev(hits) if len(hits) > 1 else 0.0,
                trials=trials,
            )
        )
    return ComparisonTable(rows=tuple(rows))


def _placed_segments(spec: SyntheticSpec, trial: int) -> tuple[tuple[int, int, float], ...]:
    """Re-place the spec's segments uniformly at random for one trial."""
    if not spec.planted_segments:
        return ()
    rng = np.random.default_rng((spec.seed + trial, 0x5E67))
    placed: list[tuple[int, int, float]] = []
    taken: list[tuple[int, int]] = []
    for start, end, mu in spec.planted_segments:
        length = end - start
        for _ in range(1000):
            new_start = int(rng.integers(0, spec.t - length + 1))
            candidate = (new_start, new_start + length)
            if all(candidate[0] >= b or candidate[1] <= a for a, b in taken):
                taken.append(candidate)
                placed.append((candidate[0], candidate[1], mu))
                break
        else:
            raise ValueError("could not place planted segments without overlap")
    return tuple(sorted(placed))


@dataclass(frozen=True)
class StageTiming:
    median_ms: float
    runs_ms: tuple[float, ...]


@dataclass(frozen=True)
class StageReport:
    similarity: StageTiming
    chunking: StageTiming
    retrieval: StageTiming

    def to_text(self) -> str:
        lines = ["stage            median_ms"]
        for name in ("similarity", "chunking", "retrieval"):
            timing: StageTiming = getattr(self, name)
            lines.append(f"{name:<16} {timing.median_ms:>9.3f}")
        return "\n".join(lines) + "\n"


def _time_callable(fn: Callable[[], object], repeats: int, warmup: int) -> StageTiming:
    for _ in range(warmup):
        fn()
    runs = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        runs.append((time.perf_counter() - start) * 1e3)
    return StageTiming(median_ms=statistics.median(runs), runs_ms=tuple(runs))


def time_stages(
    pack: FeaturePack,
    query: np.ndarray,
    chunk_cfg: ChunkConfig,
    retrieval_cfg: RetrievalConfig,
    *,
    repeats: int = 5,
    warmup: int = 1,
) -> StageReport:
    """Wall-clock medians for the similarity, chunking, and retrieval stages.

    Median of ``repeats`` runs after ``warmup`` warm-up calls, monotonic
    clock. Feature extraction and video loading are out of scope here.
    """
    series = similarity_series(pack, query)
    seg = chunk(series, chunk_cfg)

    def retrieval_stage() -> None:
        relevances = clip_relevance(series, seg)
        ranked = top_k_clips(relevances, retrieval_cfg.top_k)
        allocate_frames(ranked, seg, retrieval_cfg.frame_budget)

    return StageReport(
        similarity=_time_callable(lambda: similarity_series(pack, query), repeats, warmup),
        chunking=_time_callable(lambda: chunk(series, chunk_cfg), repeats, warmup),
        retrieval=_time_callable(retrieval_stage, repeats, warmup),
    )
