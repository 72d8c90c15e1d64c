"""Multi-subcommand executable for scripting and CI.

Exit codes: 0 success, 1 I/O failure (unreadable, corrupt, unwritable),
2 validation or configuration failure. Logs go to standard error only; all
randomness flows through --seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bench as benchmod
from . import featureio
from .contrastive import DEFAULT_COARSE_NEGATIVES, MiningVideo, mine_pairs
from .featureio import PackFormatError
from .model import ChunkConfig, ChunkMethod, FeaturePack, RetrievalConfig, ShortVideoEntry, validate_pack
from .retrieval import run_pipeline
from .chunking import chunk, scene_chunk, similarity_series, uniform_chunk
from .synthesis import plan_synthesis

logger = logging.getLogger("clipsieve")

CONFIG_KEYS = {"num_clips", "top_k", "frame_budget", "temperature", "seed", "strategy"}


class ConfigError(ValueError):
    """Bad configuration file or flag combination."""


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(obj) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return obj


def resolve(flag_value, config: dict, key: str, default):
    """Flags override the config file, which overrides the default."""
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return default


def _load_query_embedding(args, pack: FeaturePack) -> np.ndarray:
    if args.query_emb is None and args.query_id is None:
        raise ConfigError("one of --query-emb or --query-id is required")
    if args.query_emb is not None:
        text = Path(args.query_emb).read_text(encoding="utf-8").strip()
        if text.startswith("["):
            emb = np.asarray(json.loads(text), dtype=np.float64)
        else:
            records = featureio.read_queries(args.query_emb)
            with_emb = [r for r in records if r.embedding is not None]
            if len(with_emb) != 1:
                raise ConfigError(
                    f"--query-emb file must hold exactly one embedded query, found {len(with_emb)}"
                )
            emb = with_emb[0].embedding
    else:
        if args.queries is None:
            raise ConfigError("--query-id requires --queries FILE")
        records = {r.query_id: r for r in featureio.read_queries(args.queries)}
        if args.query_id not in records:
            raise ConfigError(f"query id {args.query_id!r} not found in {args.queries}")
        rec = records[args.query_id]
        if rec.embedding is None:
            raise ConfigError(f"query {args.query_id!r} carries no embedding")
        emb = rec.embedding
    if emb.shape[0] != pack.dim:
        raise ConfigError(f"query dim {emb.shape[0]} does not match pack dim {pack.dim}")
    return emb


def _query_label(args) -> str:
    if args.query_id is not None:
        return args.query_id
    return Path(args.query_emb).stem


def cmd_chunk(args) -> int:
    config = load_config(args.config)
    n = int(resolve(args.n, config, "num_clips", ChunkConfig().num_clips))
    pack = featureio.read_pack(args.features)
    method = ChunkMethod(args.method)
    if method is ChunkMethod.UNIFORM:
        seg = uniform_chunk(pack.count, n)
    elif method is ChunkMethod.SCENE:
        seg = scene_chunk(pack, n)
    else:
        emb = _load_query_embedding(args, pack)
        seg = chunk(similarity_series(pack, emb), ChunkConfig(num_clips=n))
    featureio.dump_json(featureio.segmentation_to_dict(seg, pack.video_id), args.out)
    logger.info("wrote %s (%d clips)", args.out, seg.n)
    return 0


def cmd_retrieve(args) -> int:
    config = load_config(args.config)
    n = int(resolve(args.n, config, "num_clips", ChunkConfig().num_clips))
    k = int(resolve(args.k, config, "top_k", RetrievalConfig().top_k))
    budget = int(resolve(args.budget, config, "frame_budget", RetrievalConfig().frame_budget))
    pack = featureio.read_pack(args.features)
    emb = _load_query_embedding(args, pack)
    result, _ = run_pipeline(pack, emb, ChunkConfig(num_clips=n), RetrievalConfig(top_k=k, frame_budget=budget))
    featureio.dump_json(featureio.result_to_dict(result, pack.video_id, _query_label(args)), args.out)
    logger.info("wrote %s (%d frames)", args.out, len(result.selected_frames))
    return 0


def _load_short_video_corpus(index_path: str) -> list[ShortVideoEntry]:
    base = Path(index_path).parent
    entries: list[ShortVideoEntry] = []
    with open(index_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                frames = featureio.read_pack(base / obj["frames"])
                instructions = featureio.read_pack(base / obj["instructions"])
                entries.append(
                    ShortVideoEntry(
                        video_id=str(obj["video_id"]),
                        sampled_frame_features=frames.features,
                        instruction_features=instructions.features,
                        instruction_ids=tuple(obj["instruction_ids"]),
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"{index_path}:{lineno}: missing field {exc}") from exc
    return entries


def cmd_synth(args) -> int:
    config = load_config(args.config)
    seed = int(resolve(args.seed, config, "seed", 0))
    corpus = _load_short_video_corpus(args.corpus)
    manifests = plan_synthesis(corpus, seed)
    featureio.dump_json([featureio.manifest_to_dict(m) for m in manifests], args.out)
    logger.info("wrote %s (%d manifests)", args.out, len(manifests))
    return 0


def _load_mining_corpus(index_path: str) -> list[MiningVideo]:
    base = Path(index_path).parent
    videos: list[MiningVideo] = []
    with open(index_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                seg_doc = json.loads((base / obj["segmentation"]).read_text(encoding="utf-8"))
                videos.append(
                    MiningVideo(
                        video_id=str(obj["video_id"]),
                        segmentation=featureio.segmentation_from_dict(seg_doc),
                        queries=tuple((q["query_id"], q["clip"]) for q in obj["queries"]),
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"{index_path}:{lineno}: missing field {exc}") from exc
    return videos


def cmd_mine(args) -> int:
    config = load_config(args.config)
    seed = int(resolve(args.seed, config, "seed", 0))
    corpus = _load_mining_corpus(args.corpus)
    pairs = mine_pairs(corpus, args.mode, negatives_per_pair=args.negatives, seed=seed)
    featureio.write_mined_pairs(pairs, args.out)
    logger.info("wrote %s (%d pairs)", args.out, len(pairs))
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    seed = int(resolve(args.seed, config, "seed", 0))
    strategy = resolve(args.strategy, config, "strategy", "all")
    n = int(resolve(args.n, config, "num_clips", ChunkConfig().num_clips))
    k = int(resolve(args.k, config, "top_k", RetrievalConfig().top_k))
    budget = int(resolve(args.budget, config, "frame_budget", RetrievalConfig().frame_budget))
    if strategy == "all":
        strategies = list(benchmod.ALL_STRATEGIES)
    else:
        strategies = [benchmod.Strategy(strategy)]
    spec = benchmod.SyntheticSpec(
        t=args.t,
        d=args.d,
        planted_segments=((0, args.segment, 1.0),),
        noise_std=args.noise,
        seed=seed,
    )
    chunk_cfg = ChunkConfig(num_clips=n)
    retrieval_cfg = RetrievalConfig(top_k=k, frame_budget=budget)
    table = benchmod.compare_strategies(spec, strategies, chunk_cfg, retrieval_cfg, args.trials)
    if args.format == "csv":
        rendered = table.to_csv()
    elif args.format == "json":
        rendered = featureio.json_text(table.to_json_dict())
    else:
        rendered = table.to_text()
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    sys.stdout.write(rendered)
    if args.time:
        pack, query, _ = benchmod.generate(spec)
        report = benchmod.time_stages(pack, query, chunk_cfg, retrieval_cfg)
        sys.stderr.write(report.to_text())
    return 0


def cmd_validate(args) -> int:
    worst = 0
    for path in args.features:
        try:
            pack = featureio.read_pack(path)
        except PackFormatError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            worst = max(worst, 1)
            continue
        violations = validate_pack(pack)
        if violations:
            for violation in violations:
                print(f"{path}: {violation}", file=sys.stderr)
            worst = max(worst, 2)
        else:
            print(f"{path}: ok ({pack.count} frames, dim {pack.dim})")
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clipsieve",
        description="Query-guided video chunking and clip retrieval over feature packs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")

    def add_query_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--query-emb", help="file with a JSON float array or a single embedded query line")
        p.add_argument("--query-id", help="query id to look up in --queries")
        p.add_argument("--queries", help="query JSONL file used with --query-id")

    p = sub.add_parser("chunk", help="segment a video into clips")
    p.add_argument("--features", required=True, help="feature pack file")
    add_query_flags(p)
    p.add_argument("--n", type=int, help="number of clips (default 32)")
    p.add_argument(
        "--method",
        default=ChunkMethod.QUERY_GUIDED.value,
        choices=[m.value for m in ChunkMethod],
        help="segmentation method",
    )
    p.add_argument("--out", required=True, help="output segmentation JSON")
    add_common(p)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("retrieve", help="chunk, rank clips, and select frames under a budget")
    p.add_argument("--features", required=True, help="feature pack file")
    add_query_flags(p)
    p.add_argument("--n", type=int, help="number of clips (default 32)")
    p.add_argument("--k", type=int, help="number of retrieved clips (default 8)")
    p.add_argument("--budget", type=int, help="frame budget (default 16)")
    p.add_argument("--out", required=True, help="output retrieval JSON")
    add_common(p)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("synth", help="plan synthetic long videos from a short-video corpus")
    p.add_argument("--corpus", required=True, help="JSONL index of short-video entries")
    p.add_argument("--seed", type=int, help="shuffle seed (default 0)")
    p.add_argument("--out", required=True, help="output manifests JSON")
    add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mine", help="export contrastive training pairs")
    p.add_argument("--corpus", required=True, help="JSONL index of segmented, annotated videos")
    p.add_argument("--mode", required=True, choices=["coarse", "fine"], help="negative sampling regime")
    p.add_argument(
        "--negatives",
        type=int,
        default=DEFAULT_COARSE_NEGATIVES,
        help="negatives per coarse pair (default 8)",
    )
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--out", required=True, help="output pairs JSONL")
    add_common(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("bench", help="synthetic strategy comparison and stage timing")
    p.add_argument("--strategy", help="strategy name or 'all' (default all)")
    p.add_argument("--t", type=int, default=1000, help="frames per synthetic video (default 1000)")
    p.add_argument("--d", type=int, default=512, help="embedding dim (default 512)")
    p.add_argument("--segment", type=int, default=50, help="planted segment length (default 50)")
    p.add_argument("--noise", type=float, default=0.1, help="planting noise std (default 0.1)")
    p.add_argument("--trials", type=int, default=20, help="trials per strategy (default 20)")
    p.add_argument("--n", type=int, help="number of clips (default 32)")
    p.add_argument("--k", type=int, help="retrieved clips (default 8)")
    p.add_argument("--budget", type=int, help="frame budget (default 16)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--format", default="table", choices=["table", "csv", "json"], help="output format")
    p.add_argument("--out", help="also write the table to this file")
    p.add_argument("--time", action="store_true", help="report stage timings on stderr")
    add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check feature pack files")
    p.add_argument("features", nargs="+", help="feature pack files")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PackFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
