"""Command line entry point.

::

    rpchaos run CONFIG.toml
    rpchaos compare A.csv B.csv --order J [--row K]
    rpchaos selftest

``compare`` prints the truncated moment metric between the two files, row
by row on their common time grid (or only row ``K``). The thread count of
the Monte Carlo engine can be overridden with ``RPCHAOS_THREADS``.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .diagnostics import moment_metric
from .errors import ConfigError
from .io import fmt, read_moments_csv
from .runner import EXIT_CONFIG, EXIT_OK, run_experiment
from .selftest import run_selftest


def compare_files(a, b, order, row=None):
    """``[(t, metric)]`` for the rows of ``a`` and ``b`` with matching times."""
    sa, sb = read_moments_csv(a), read_moments_csv(b)
    if sa.d != sb.d:
        raise ConfigError(f"dimension mismatch: {sa.d} vs {sb.d}")
    common = np.intersect1d(sa.times, sb.times)
    if row is not None:
        if row >= len(sa):
            raise ConfigError(f"{a} has only {len(sa)} rows")
        common = common[np.isin(common, sa.times[row])]
    if not len(common):
        raise ConfigError("the two files share no recorded times")
    out = []
    for t in common:
        ta = sa.table(int(np.flatnonzero(sa.times == t)[0]))
        tb = sb.table(int(np.flatnonzero(sb.times == t)[0]))
        out.append((float(t), moment_metric(ta, tb, order)))
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="rpchaos", description="Recursive polynomial chaos for polynomial SDEs")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment described by a TOML file")
    p_run.add_argument("config")
    p_cmp = sub.add_parser("compare", help="moment metric between two moments.csv files")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--order", type=int, required=True, help="highest moment order J")
    p_cmp.add_argument("--row", type=int, default=None, help="compare only this row of A")
    sub.add_parser("selftest", help="check the algebraic invariants")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        return run_experiment(args.config)
    if args.command == "compare":
        try:
            rows = compare_files(args.a, args.b, args.order, args.row)
        except (ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print("t,metric")
        for t, v in rows:
            print(f"{fmt(t)},{fmt(v)}")
        return EXIT_OK
    return EXIT_OK if run_selftest() else 1


if __name__ == "__main__":
    sys.exit(main())
