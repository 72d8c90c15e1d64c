"""CLI for the extractor: videos and query text in, feature packs out.

Exit codes match the downstream tool: 0 success, 1 I/O or decode failure,
2 validation/configuration failure. Logs go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .encoders import available_encoders, load_encoder
from .extract import DecodeError, ExtractionJob, extract_queries, extract_video


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="packextract",
        description="Embed video frames and query text into feature packs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("video", help="sample a video (or frame directory) into a feature pack")
    p.add_argument("--video", required=True, help="video file or directory of frames")
    p.add_argument("--fps", type=float, default=1.0, help="dense sampling rate (default 1.0)")
    p.add_argument("--encoder", default="hash", choices=available_encoders(), help="encoder name")
    p.add_argument("--device", default="cpu", help="inference device for model encoders")
    p.add_argument("--video-id", default="", help="id recorded in the sidecar (default: output stem)")
    p.add_argument("--out", required=True, help="output .ocfp path")
    p.set_defaults(func=cmd_video)

    p = sub.add_parser("queries", help="embed a query JSONL file")
    p.add_argument("--in", dest="source", required=True, help="input query JSONL")
    p.add_argument("--encoder", default="hash", choices=available_encoders(), help="encoder name")
    p.add_argument("--out", required=True, help="output JSONL with embeddings")
    p.set_defaults(func=cmd_queries)

    p = sub.add_parser("encoders", help="list encoders and their availability")
    p.set_defaults(func=cmd_encoders)

    return parser


def cmd_video(args) -> int:
    job = ExtractionJob(
        source=args.video,
        output=args.out,
        sampling_rate=args.fps,
        encoder=args.encoder,
        device=args.device,
        video_id=args.video_id,
    )
    meta = extract_video(job)
    print(f"{args.out}: {meta['frames']} frames, dim {meta['dim']}")
    return 0


def cmd_queries(args) -> int:
    count = extract_queries(args.source, args.out, args.encoder)
    print(f"{args.out}: {count} queries embedded")
    return 0


def cmd_encoders(args) -> int:
    # Probe local availability only; listing must not trigger downloads.
    import os

    saved = {k: os.environ.get(k) for k in ("HF_HUB_OFFLINE", "TRANSFORMERS_OFFLINE")}
    os.environ["HF_HUB_OFFLINE"] = "1"
    os.environ["TRANSFORMERS_OFFLINE"] = "1"
    try:
        for name in available_encoders():
            try:
                encoder = load_encoder(name)
                print(f"{name}: available (dim {encoder.dim})")
            except (RuntimeError, ValueError) as exc:
                print(f"{name}: unavailable ({exc})")
    finally:
        for key, value in saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
