"""Command line: `plot convergence|diversity --out <path> <csv>...`.

Convergence takes summary CSVs (one curve each, labeled by file stem or an
explicit `label=path` prefix).  Diversity takes per-run CSVs and groups them
by their inferred batch size.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import (CurveSpec, SchemaError, plot_convergence, plot_diversity,
                   run_batch_size)


def _labeled(arg, default_stem=True):
    if "=" in arg:
        label, path = arg.split("=", 1)
        return label, path
    return (Path(arg).stem if default_stem else arg), arg


def main(argv=None):
    parser = argparse.ArgumentParser(prog="plot",
                                     description="figures from experiment CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    p_conv = sub.add_parser("convergence",
                            help="mean best-so-far with 2-stderr bands")
    p_conv.add_argument("--out", required=True)
    p_conv.add_argument("csvs", nargs="+",
                        help="summary CSVs, optionally label=path")
    p_div = sub.add_parser("diversity",
                           help="batch-diversity bars grouped by batch size")
    p_div.add_argument("--out", required=True)
    p_div.add_argument("csvs", nargs="+", help="per-run CSVs")
    args = parser.parse_args(argv)

    try:
        if args.command == "convergence":
            curves = [CurveSpec(label=lab, path=path, color_index=i)
                      for i, (lab, path) in enumerate(map(_labeled, args.csvs))]
            plot_convergence(curves, args.out)
        else:
            groups = {}
            for path in args.csvs:
                groups.setdefault(f"B={run_batch_size(path)}", []).append(path)
            plot_diversity(groups, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
