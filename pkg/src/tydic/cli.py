"""Command line: ``tydic build`` and ``tydic loc``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import driver
from .metrics import LocReport, MetricsError, loc_metrics

EXIT_OK, EXIT_DIAG, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tydic", description="Tydi-lang compiler")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="compile to IR and/or VHDL")
    b.add_argument("inputs", nargs="*", help=".td files or directories")
    b.add_argument("--top", help="top-level implementation (must not be a template)")
    b.add_argument("--no-sugar", dest="sugar", action="store_false", default=None,
                   help="disable duplicator/voider insertion")
    b.add_argument("--drc", choices=("strict", "hierarchy"), default=None)
    b.add_argument("--emit", choices=driver.EMIT_CHOICES, default=None)
    b.add_argument("--outdir")
    b.add_argument("--config", help="key=value file; command-line flags win")
    b.add_argument("--verbose", "-v", action="store_true", help="log pipeline stages")

    loc = sub.add_parser("loc", help="line-of-code report")
    loc.add_argument("--query", nargs="+", default=[], metavar="PATH")
    loc.add_argument("--fletcher", nargs="+", default=[], metavar="PATH")
    loc.add_argument("--stdlib", nargs="+", default=[], metavar="PATH")
    loc.add_argument("--vhdl", nargs="+", default=[], metavar="PATH")
    loc.add_argument("--counts", nargs=4, type=int, metavar=("Q", "F", "S", "VHDL"),
                     help="use these line counts instead of counting files")
    loc.add_argument("--name", default="design", help="label for the figure")
    loc.add_argument("--figure", help="write a bar chart to this file")
    return p


def _build(args) -> int:
    values = {}
    if args.config:
        values.update(driver.read_config(args.config))
    if "depth_limit" not in values:
        values["depth_limit"] = driver.default_depth_limit()
    if args.inputs:
        values["inputs"] = args.inputs
    for key in ("top", "sugar", "drc", "emit", "outdir"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    config = driver.BuildConfig(**values)
    if config.outdir is None:
        raise driver.ConfigError("no output directory given (--outdir)")
    result = driver.compile(config)
    sys.stderr.write(driver.render(result.diagnostics))
    if result.status == 0 and args.verbose:
        for rel in result.outputs:
            logging.getLogger("tydic").info("wrote %s", rel)
    return EXIT_OK if result.status == 0 else EXIT_DIAG


def _loc(args) -> int:
    if args.counts:
        report = LocReport(*args.counts)
    else:
        missing = [k for k in ("query", "vhdl") if not getattr(args, k)]
        if missing:
            raise driver.ConfigError("loc needs --" + " and --".join(missing) + " (or --counts)")
        report = loc_metrics(args.query, args.fletcher, args.stdlib, args.vhdl)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["metric", "value"])
    writer.writerows(report.rows())
    if args.figure:
        from .plotting import plot_loc
        plot_loc({args.name: report}, args.figure)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="tydic: %(message)s", stream=sys.stderr)
    try:
        if args.command == "build":
            return _build(args)
        return _loc(args)
    except (driver.ConfigError, MetricsError, OSError) as exc:
        sys.stderr.write(f"tydic: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
