"""Command line for the one-shot dataset conversion."""

from __future__ import annotations

import argparse
import sys

from .convert import ConvertError, convert


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="planetoid-convert",
        description="Convert a serialized citation-network dataset to the "
        "plain-text container format.",
    )
    parser.add_argument("--input", required=True, help="directory with the ind.* files")
    parser.add_argument("--name", required=True, choices=("cora", "citeseer", "pubmed"))
    parser.add_argument("--output", required=True, help="container directory to write")
    args = parser.parse_args(argv)
    try:
        stats = convert(args.input, args.name, args.output)
    except ConvertError as exc:
        print(f"planetoid-convert: {exc}", file=sys.stderr)
        return 2
    print(
        f"{args.name}: n={stats['n']} edges={stats['edges']} "
        f"D={stats['features']} O={stats['classes']} "
        f"split {stats['train']}:{stats['valid']}:{stats['test']}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
