"""Command-line entry point: ``jtarch <subcommand> ...``.

Exit codes: 0 success, 1 input error (bad flags, unreadable or malformed
files, invalid junction tree), 2 model inconsistency (zero total mass).
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from typing import Sequence, TextIO

from . import generate, io
from .errors import (ConstructionError, DomainError, FormatError, InconsistentModelError,
                     InternalConsistencyError)
from .junction import Factorisation, JunctionTree, prepare, validate
from .oracle import brute_force_marginals
from .propagation import ENGINES, compute_marginals, propagate

EXIT_OK, EXIT_INPUT, EXIT_MODEL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _root_arg(text: str):
    if text == "max":
        return "max"
    try:
        r = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"root must be a positive integer or 'max', got {text!r}")
    if r < 1:
        raise argparse.ArgumentTypeError("root is 1-based")
    return r - 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jtarch", description="Exact marginals on boolean factored distributions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def engine_args(sp):
        sp.add_argument("--engine", required=True, choices=ENGINES)
        sp.add_argument("--input", required=True, metavar="FILE")
        sp.add_argument("--jt", metavar="FILE", help="junction tree (built by min-fill if omitted)")
        sp.add_argument("--root", type=_root_arg, default="max", help="1-based vertex or 'max'")
        sp.add_argument("--marginal-style", choices=("stream", "dual"), default=None)

    sp = sub.add_parser("marginals", help="normalised single-variable marginals")
    engine_args(sp)
    sp.add_argument("--stats", action="store_true", help="print STAT lines to stderr")

    sp = sub.add_parser("bench", help="operation counters as STAT lines on stdout")
    engine_args(sp)
    sp.add_argument("--stats", action="store_true", help="accepted for symmetry; always on")
    sp.add_argument("--vertex", type=int, default=None,
                    help="also report counters of this 1-based vertex (default: the root)")

    sp = sub.add_parser("oracle", help="brute-force marginals")
    sp.add_argument("--input", required=True, metavar="FILE")

    sp = sub.add_parser("validate", help="check a junction tree against a model")
    sp.add_argument("--input", required=True, metavar="FILE")
    sp.add_argument("--jt", required=True, metavar="FILE")

    sp = sub.add_parser("gen", help="write a seeded synthetic model")
    sp.add_argument("--kind", required=True, choices=("star", "chain", "random"))
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--out", required=True, metavar="FILE")
    sp.add_argument("--jt-out", metavar="FILE", help="star only: write its junction tree")
    sp.add_argument("--center", type=int, default=8)
    sp.add_argument("--sep", type=int, default=2)
    sp.add_argument("--degree", type=int, default=4)
    sp.add_argument("--length", type=int, default=6)
    sp.add_argument("--scope", type=int, default=3)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--factors", type=int, default=8)
    sp.add_argument("--max-scope", type=int, default=4)
    sp.add_argument("--zero-prob", type=float, default=0.0)

    sp = sub.add_parser("report", help="star-instance counter table (TSV) and figure (PNG)")
    sp.add_argument("--out", required=True, metavar="PREFIX", help="writes PREFIX.tsv and PREFIX.png")
    sp.add_argument("--center", type=int, default=12)
    sp.add_argument("--sep", type=int, default=2)
    sp.add_argument("--degrees", default="2,4,8,16,32")
    sp.add_argument("--engines", default=",".join(ENGINES))
    sp.add_argument("--seed", type=int, default=0)
    return p


def _load(args) -> tuple[Factorisation, JunctionTree]:
    f = io.parse_model(io.read_text(args.input))
    jt = io.parse_jt(io.read_text(args.jt)) if getattr(args, "jt", None) else None
    return f, prepare(f, jt, args.root)


def _stat_lines(stats: dict[str, int], prefix: str = "") -> str:
    return "".join(f"STAT {prefix}{k} {v}\n" for k, v in stats.items())


def _propagate(args):
    f, jt = _load(args)
    store = propagate(jt, f, args.engine)
    style = args.marginal_style or ("dual" if args.engine == "arch2" else "stream")
    result = compute_marginals(jt, f, store, style, store.instrument)
    return f, jt, store, result


def cmd_marginals(args, out: TextIO, err: TextIO) -> int:
    _, jt, store, result = _propagate(args)
    out.write(io.format_marginals(result.probabilities))
    if args.stats:
        err.write(_stat_lines(store.instrument.stats()))
        err.write(_stat_lines(store.instrument.at(jt.root).as_dict(), "root_"))
    return EXIT_OK


def cmd_bench(args, out: TextIO, err: TextIO) -> int:
    _, jt, store, _ = _propagate(args)
    v = jt.root if args.vertex is None else args.vertex - 1
    if not 0 <= v < len(jt):
        raise DomainError(f"vertex {v + 1} is out of range 1..{len(jt)}")
    out.write(_stat_lines(store.instrument.stats()))
    out.write(_stat_lines({"vertex": v + 1, "vertex_size": len(jt.vertices[v])}))
    out.write(_stat_lines(store.instrument.at(v).as_dict(), "vertex_"))
    return EXIT_OK


def cmd_oracle(args, out: TextIO, err: TextIO) -> int:
    f = io.parse_model(io.read_text(args.input))
    out.write(io.format_marginals(brute_force_marginals(f).probabilities))
    return EXIT_OK


def cmd_validate(args, out: TextIO, err: TextIO) -> int:
    f = io.parse_model(io.read_text(args.input))
    jt = io.parse_jt(io.read_text(args.jt))
    problems = validate(jt, f)
    if problems:
        out.write("".join(f"{p}\n" for p in problems))
        return EXIT_INPUT
    out.write("valid\n")
    return EXIT_OK


def cmd_gen(args, out: TextIO, err: TextIO) -> int:
    jt = None
    if args.kind == "star":
        f, jt = generate.star(args.center, args.sep, args.degree, args.seed)
        note = f"star center={args.center} sep={args.sep} degree={args.degree} seed={args.seed}"
    elif args.kind == "chain":
        f = generate.chain(args.length, args.scope, args.seed)
        note = f"chain length={args.length} scope={args.scope} seed={args.seed}"
    else:
        f = generate.random_model(args.n, args.factors, args.max_scope, args.seed, args.zero_prob)
        note = (f"random n={args.n} factors={args.factors} max-scope={args.max_scope} "
                f"zero-prob={args.zero_prob} seed={args.seed}")
    if args.jt_out and jt is None:
        raise DomainError("--jt-out is only available for --kind star")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(io.write_model(f, note))
    if args.jt_out:
        with open(args.jt_out, "w", encoding="utf-8") as fh:
            fh.write(io.write_jt(jt))
    return EXIT_OK


def cmd_report(args, out: TextIO, err: TextIO) -> int:
    from .report import star_report

    try:
        degrees = [int(d) for d in args.degrees.split(",") if d]
    except ValueError:
        raise DomainError(f"bad --degrees list {args.degrees!r}") from None
    engines = [e for e in args.engines.split(",") if e]
    bad = [e for e in engines if e not in ENGINES]
    if bad or not engines or not degrees:
        raise DomainError(f"bad --engines or --degrees (unknown: {bad})")
    tsv, png = star_report(args.out, args.center, args.sep, degrees, engines, args.seed)
    out.write(f"{tsv}\n{png}\n")
    return EXIT_OK


COMMANDS = {"marginals": cmd_marginals, "bench": cmd_bench, "oracle": cmd_oracle,
            "validate": cmd_validate, "gen": cmd_gen, "report": cmd_report}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out, err)
    except InconsistentModelError as exc:
        err.write(f"jtarch: inconsistent model: {exc}\n")
        return EXIT_MODEL
    except (FormatError, DomainError, ConstructionError, OSError) as exc:
        err.write(f"jtarch: error: {exc}\n")
        return EXIT_INPUT
    except InternalConsistencyError as exc:
        err.write(f"jtarch: internal error: {exc}\n")
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
