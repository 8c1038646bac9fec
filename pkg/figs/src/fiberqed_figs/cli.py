"""Command line: render paper-style panels from fiberqed CSV sweep outputs."""

from __future__ import annotations

import argparse
import sys

from .panels import SchemaError, render_targets


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="fiberqed-figs")
    p.add_argument("targets", nargs="+",
                   help="panel names (fig1b .. supp4) or 'all'")
    p.add_argument("--data-dir", default="results",
                   help="directory holding the fiberqed CSV outputs")
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--format", default="png", choices=["png", "svg"])
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        for path in render_targets(args.targets, args.data_dir, args.out_dir,
                                   fmt=args.format):
            print(path)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
