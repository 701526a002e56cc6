"""Command line: ``plot sweep|convergence --in PATH [--dpmm PATH] --out PATH``."""

import argparse
import sys

from .figures import plot_convergence, plot_sweep
from .trace import SchemaError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="plot", description="Render figures from fedclust trace files.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="metric-vs-K curves from a sweep CSV")
    p_sweep.add_argument("--in", dest="infile", required=True,
                         help="combined sweep CSV (K,seed,round,...)")
    p_sweep.add_argument("--dpmm", required=True,
                         help="summary.json of the adaptive run")
    p_sweep.add_argument("--out", required=True, help="output image (.svg/.png)")

    p_conv = sub.add_parser("convergence",
                            help="per-round metric and K curves from a run CSV")
    p_conv.add_argument("--in", dest="infile", required=True, help="run CSV")
    p_conv.add_argument("--out", required=True, help="output image (.svg/.png)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            plot_sweep(args.infile, args.dpmm, args.out)
        else:
            plot_convergence(args.infile, args.out)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
