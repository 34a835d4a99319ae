"""Command-line interface: svwplot <kind> --in <dir> --out <file.png>."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svwplot",
                                     description="render figures from svw outputs")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="input directory with run/preset outputs")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        record = render(FigureSpec(kind=args.kind, in_dir=args.in_dir,
                                   out_path=args.out_path))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {record['out_path']} (config {record['config_hash']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
