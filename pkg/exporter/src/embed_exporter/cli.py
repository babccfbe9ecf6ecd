"""CLI for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from embed_exporter.exporter import (
    DEFAULT_DIM,
    DEFAULT_MODEL,
    ExportError,
    ExportManifest,
    export_embeddings,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relevbench-export",
        description="Export sentence embeddings for a relevance dataset "
                    "into the EMB1 interchange format.",
    )
    parser.add_argument("dataset", help="JSONL instance dataset")
    parser.add_argument("out", help="output interchange file path")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="sentence-transformer model id")
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--no-normalize", action="store_true",
                        help="skip L2 normalization of the emitted vectors")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = ExportManifest(
        dataset_path=args.dataset,
        output_path=args.out,
        model_id=args.model,
        dim=args.dim,
        batch_size=args.batch_size,
        normalize=not args.no_normalize,
    )
    try:
        keys = export_embeddings(manifest)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(keys)} rows (dim {manifest.dim}) to {manifest.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
