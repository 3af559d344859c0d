"""Command-line entry point: encode a corpus file to embeddings.

Exit codes mirror the downstream toolkit: 0 success, 1 usage error,
2 data error, 3 unexpected internal failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from .encode import BridgeConfig, BridgeDataError, BridgeUsageError, encode_corpus


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BridgeUsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="neardup-bridge",
        description="Encode a corpus JSONL file into an EMBD embedding file.",
    )
    parser.add_argument("input", help="corpus JSONL with id and text fields")
    parser.add_argument("output", help="embedding file to write")
    parser.add_argument(
        "--model",
        required=True,
        help="sentence-transformers model name or path; recorded as the model tag",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--max-tokens", type=int, default=512)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = BridgeConfig(
            model=args.model,
            max_tokens=args.max_tokens,
            batch_size=args.batch_size,
        )
        n, dim = encode_corpus(args.input, args.output, cfg)
    except BridgeUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BridgeDataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 3
    print(f"wrote {n} x {dim} embeddings to {args.output}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
