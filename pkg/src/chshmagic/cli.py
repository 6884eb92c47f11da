"""Command-line runner: ``chshmagic <subcommand> [options]``.

Exit status is 0 on success, 2 when an embedded check or theorem verification
fails and 64 for usage errors (bad flags, unknown cores, unwritable output).
"""
import argparse
import csv
import io
import json
import math
import sys

from . import __version__, experiments, twirling
from .errors import VerificationError

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_USAGE = 64

SUBCOMMANDS = ("fig1", "fig2", "fig3", "fig4", "fig6", "geometry", "table1", "table2", "exact",
               "verify", "enumerate")
GROUP_FLAGS = {"u": "U_full", "ua": "U_A", "ub": "U_B", "c": "C_full", "ca": "C_A", "cb": "C_B"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser():
    p = _Parser(prog="chshmagic", description="CHSH violation versus stabilizer entropy experiments.")
    p.add_argument("--version", action="version", version=f"chshmagic {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--samples", type=_positive, default=None,
                   help="Monte Carlo budget (default 10^6; 10^4 per theta for fig2 and verify)")
    p.add_argument("--bins", type=_positive, default=None)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--grid", type=_positive, default=None)
    p.add_argument("--core", action="append", default=None,
                   help="cx, cxh, w:<theta>, wtilde:<theta> (table1/table2; repeatable)")
    p.add_argument("--group", action="append", choices=sorted(GROUP_FLAGS), default=None,
                   help="restrict table2 to these twirling groups (repeatable)")
    p.add_argument("--log-base", choices=("e", "2"), default="e")
    return p


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError("non-finite value in output")
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        raise ValueError("non-finite value in output")
    return v


def _meta(args, result):
    meta = {
        "chshmagic": __version__,
        "command": args.subcommand,
        "seed": args.seed,
        "samples": args.samples,
        "workers": args.workers,
        "log_base": args.log_base,
    }
    for k, v in result.meta.items():
        meta[k] = v
    meta["checks_passed"] = result.ok
    return meta


def render_csv(meta, result):
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    for name, table in result.tables.items():
        buf.write(f"# table: {name}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(meta, result):
    doc = {
        "meta": {k: _json_value(v) for k, v in meta.items()},
        "tables": {
            name: {"columns": t.columns, "rows": [[_json_value(v) for v in row] for row in t.rows]}
            for name, t in result.tables.items()
        },
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def run(args):
    """Execute a parsed command; returns a ``Result``."""
    base = None if args.log_base == "e" else 2
    n = args.samples
    cmd = args.subcommand
    if args.core:
        for c in args.core:
            twirling.core_unitary(c)
    if cmd == "fig1":
        return experiments.fig1(args.grid or 361, base)
    if cmd == "fig2":
        return experiments.fig2(args.grid or 200, n or 10**4, args.seed)
    if cmd == "fig3":
        return experiments.fig3(args.grid or 101)
    if cmd == "fig4":
        return experiments.fig4(n or 10**6, args.seed, args.workers, args.bins or 50, base)
    if cmd == "fig6":
        return experiments.fig6(n or 10**6, args.seed, args.workers, base)
    if cmd == "geometry":
        return experiments.geometry(n or 10**6, args.seed, args.workers, args.bins or 50)
    if cmd == "exact":
        return experiments.exact(n or 10**6, args.seed, args.workers)
    if cmd == "verify":
        return experiments.verify(args.seed, n or 10**4)
    if cmd == "table1":
        return experiments.table1(args.core)
    if cmd == "table2":
        if args.core:
            unknown = [c for c in args.core if c not in twirling.TABLE2_REFERENCE]
            if unknown:
                raise ValueError(f"no reference table2 row for {unknown}; choose from "
                                 f"{', '.join(twirling.TABLE2_REFERENCE)}")
        groups = None if args.group is None else [GROUP_FLAGS[g] for g in args.group]
        return experiments.table2(n or 10**6, args.seed, args.workers, args.core, groups)
    return experiments.enumerate_groups()


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"chshmagic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run(args)
    except ValueError as exc:
        print(f"chshmagic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"chshmagic: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    meta = _meta(args, result)
    text = render_json(meta, result) if args.format == "json" else render_csv(meta, result)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"chshmagic: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    if not result.ok:
        print(f"chshmagic: {args.subcommand}: checks failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
