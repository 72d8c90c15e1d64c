"""Query-guided video chunking and cross-modal clip retrieval over feature packs."""

from .model import (
    ChunkConfig,
    ChunkMethod,
    ContrastiveBatch,
    FeaturePack,
    MinedPair,
    PairMode,
    PeakScores,
    QueryRecord,
    RetrievalConfig,
    RetrievalResult,
    Segmentation,
    ShortVideoEntry,
    SimilaritySeries,
    SynthesisManifest,
    validate_pack,
)
from .featureio import PackFormatError, read_pack, read_queries, write_pack, write_queries
from .chunking import (
    DegenerateGapError,
    chunk,
    optimal_boundary,
    peak_scores,
    scene_chunk,
    select_centers,
    similarity_series,
    uniform_chunk,
)
from .retrieval import allocate_frames, clip_relevance, run_pipeline, top_k_clips
from .contrastive import MiningVideo, coarse_loss, fine_loss, loss_gradient, mine_pairs
from .synthesis import build_candidates, instruction_divergence, plan_synthesis, visual_relevance
from .bench import (
    ComparisonTable,
    Strategy,
    SyntheticSpec,
    compare_strategies,
    generate,
    recall_at_budget,
    time_stages,
)

__version__ = "0.1.0"

__all__ = [
    "ChunkConfig",
    "ChunkMethod",
    "ComparisonTable",
    "ContrastiveBatch",
    "DegenerateGapError",
    "FeaturePack",
    "MinedPair",
    "MiningVideo",
    "PackFormatError",
    "PairMode",
    "PeakScores",
    "QueryRecord",
    "RetrievalConfig",
    "RetrievalResult",
    "Segmentation",
    "ShortVideoEntry",
    "SimilaritySeries",
    "Strategy",
    "SynthesisManifest",
    "SyntheticSpec",
    "allocate_frames",
    "build_candidates",
    "chunk",
    "clip_relevance",
    "coarse_loss",
    "compare_strategies",
    "fine_loss",
    "generate",
    "instruction_divergence",
    "loss_gradient",
    "mine_pairs",
    "optimal_boundary",
    "peak_scores",
    "plan_synthesis",
    "read_pack",
    "read_queries",
    "recall_at_budget",
    "run_pipeline",
    "scene_chunk",
    "select_centers",
    "similarity_series",
    "time_stages",
    "top_k_clips",
    "uniform_chunk",
    "validate_pack",
    "visual_relevance",
    "write_pack",
    "write_queries",
]
