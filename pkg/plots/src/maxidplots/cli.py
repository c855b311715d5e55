"""Command line entry point: plot <kind> --in DIR --out FILE."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from simulation artifact CSVs.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="artifact directory holding the CSVs")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="image file to write (extension picks format)")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    spec = FigureSpec(kind=args.kind, in_dir=args.in_dir,
                      out_path=args.out_path, dpi=args.dpi, title=args.title)
    try:
        path = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
