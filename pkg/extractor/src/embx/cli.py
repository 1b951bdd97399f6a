"""Command-line mirror of the extraction spec."""

import argparse
import sys

from . import __version__
from .batch import compute_batch_size
from .errors import ConfigError, EmbxError
from .extract import (
    DEFAULT_LAYER,
    DEFAULT_MAX_TOKENS,
    DEFAULT_MEMORY_BUDGET,
    ExtractionSpec,
    extract,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embx",
        description="Per-message transformer embeddings in UEB1 format.",
    )
    parser.add_argument(
        "--version", action="version", version=f"embx {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="embed every message in a TSV file")
    ex.add_argument("--model", required=True, help="checkpoint path or identifier")
    ex.add_argument("--input", required=True, help="TSV: user id, tab, message text")
    ex.add_argument("--out", required=True, help="output table path")
    ex.add_argument("--layer", type=int, default=DEFAULT_LAYER,
                    help="hidden state index, negative counts from the end")
    ex.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS,
                    dest="max_tokens", help="per-sequence token cap")
    ex.add_argument("--memory-bytes", type=float, default=DEFAULT_MEMORY_BUDGET,
                    dest="memory_bytes", help="device memory budget in bytes")
    ex.add_argument("--exclude-special", action="store_true",
                    help="drop begin/end marker tokens from the mean")

    bs = sub.add_parser("batch-size", help="sequences per batch for a budget")
    bs.add_argument("--memory-bytes", type=float, required=True, dest="memory_bytes")
    bs.add_argument("--model-bytes", type=float, required=True, dest="model_bytes")
    bs.add_argument("--precision-bits", type=int, default=32, dest="precision_bits")
    bs.add_argument("--layers", type=int, default=1)
    bs.add_argument("--hidden-size", type=int, required=True, dest="hidden_size")
    bs.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS,
                    dest="max_tokens")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            spec = ExtractionSpec(
                model=args.model,
                input_path=args.input,
                output_path=args.out,
                layer=args.layer,
                max_tokens=args.max_tokens,
                memory_budget_bytes=args.memory_bytes,
                include_special_tokens=not args.exclude_special,
            )
            report = extract(spec)
            print(
                f"extracted {report.rows} messages x {report.cols} dims "
                f"(batch {report.batch_size}, {report.empty_messages} empty) "
                f"-> {report.output_path}"
            )
        else:
            size = compute_batch_size(
                args.memory_bytes,
                args.model_bytes,
                args.precision_bits,
                args.layers,
                args.hidden_size,
                args.max_tokens,
            )
            print(size)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EmbxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())
