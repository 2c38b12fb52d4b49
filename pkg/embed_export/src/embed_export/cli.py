"""CLI: embed-export --model M --input corpus.jsonl --output vectors.mdre"""

from __future__ import annotations

import argparse
import sys

from .exporter import (
    PASSAGE_MAX_TOKENS,
    QUERY_MAX_TOKENS,
    ExportJob,
    MalformedCorpus,
    ModelLoadError,
    export_embeddings,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="export sentence-encoder embeddings to an MDRE file",
    )
    parser.add_argument("--model", required=True,
                        help="sentence-transformers model id or local path")
    parser.add_argument("--input", required=True, help="corpus JSONL ({id,text})")
    parser.add_argument("--output", required=True, help="MDRE file to write")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--kind", choices=("passage", "query"), default="passage",
                        help="token-truncation preset (passage 300 / query 70)")
    parser.add_argument("--max-tokens", type=int, default=None,
                        help="override the --kind truncation length")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    max_tokens = args.max_tokens if args.max_tokens is not None else (
        QUERY_MAX_TOKENS if args.kind == "query" else PASSAGE_MAX_TOKENS)
    job = ExportJob(
        model=args.model,
        input_path=args.input,
        output_path=args.output,
        batch_size=args.batch_size,
        max_tokens=max_tokens,
    )
    try:
        count, dim = export_embeddings(job)
    except (ModelLoadError, MalformedCorpus) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} x {dim} embeddings to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
