"""Command-line driver: run, transform, diff, bench, gen-graph, deps, corpus.

Exit codes: 0 success, 1 diagnostics (parse/validation/stratification errors,
bad fact files, differing answers), 2 evaluation errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import re
import sys
from pathlib import Path

from .analysis import SafetyError, StratificationError, build_dep_graph, sink_predicates, stratify
from .bench import VARIANTS, BenchConfig, answer_diff, run_benchmark, run_config, write_report_csv
from .corpus import DEFAULT_ENGINE_STRIDE, corpus
from .engine import EvalError, Limits, UnknownPredicate, evaluate, query
from .facts import TypeMismatch, database_from, load_facts, write_facts
from .graphgen import FAMILIES, PRESETS, GraphGenSpec, gen_graph
from .ir import validate
from .parser import ParseError, format_program, parse_program
from .transform import TransformError, transform

log = logging.getLogger("fpdatalog")

OK, DIAGNOSTICS, EVAL_ERROR = 0, 1, 2


class Failure(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


# ---------------------------------------------------------------------------
# helpers


def _load_program(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise Failure(DIAGNOSTICS, f"cannot read {path}: {e.strerror}") from None
    try:
        program = parse_program(text)
    except ParseError as e:
        raise Failure(DIAGNOSTICS, f"{path}: {e}") from None
    diags = validate(program)
    if diags:
        raise Failure(DIAGNOSTICS, "\n".join(f"{path}: {d}" for d in diags))
    try:
        stratify(build_dep_graph(program))
    except StratificationError as e:
        raise Failure(DIAGNOSTICS, f"{path}: {e}") from None
    return program


def _transform(program):
    try:
        return transform(program)
    except (TransformError, StratificationError, SafetyError) as e:
        raise Failure(DIAGNOSTICS, f"transform failed: {e}") from None


def _limits(args):
    return Limits(max_iterations=args.max_iterations, max_tuples=args.max_tuples)


def _database(args, program):
    if args.facts is None:
        return database_from(program, {})
    try:
        return load_facts(args.facts, program)
    except TypeMismatch as e:
        raise Failure(DIAGNOSTICS, str(e)) from None


def _evaluate(program, edb, args, debug=False):
    try:
        return evaluate(program, edb, _limits(args), debug=debug)
    except EvalError as e:
        raise Failure(EVAL_ERROR, str(e)) from None
    except SafetyError as e:
        raise Failure(DIAGNOSTICS, str(e)) from None


def _output(args):
    if getattr(args, "out", None):
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        return open(args.out, "w", newline="", encoding="utf-8")
    return sys.stdout


def _write_rows(out, rows):
    w = csv.writer(out, lineterminator="\n")
    for r in rows:
        w.writerow(r)


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args):
    program = _load_program(args.program)
    if args.transform:
        program = _transform(program).program
    edb = _database(args, program)
    db, stats = _evaluate(program, edb, args, debug=args.debug)
    preds = args.query or sink_predicates(program)
    out = _output(args)
    try:
        for pred in preds:
            try:
                rows = query(db, pred)
            except UnknownPredicate as e:
                raise Failure(DIAGNOSTICS, str(e)) from None
            if len(preds) > 1:
                out.write(f"# {pred}\n")
            _write_rows(out, rows)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("instantiations=%d derived=%d", stats.instantiations, stats.derived)
    return OK


def cmd_transform(args):
    program = _load_program(args.program)
    result = _transform(program)
    out = _output(args)
    try:
        out.write(format_program(result.program))
    finally:
        if out is not sys.stdout:
            out.close()
    for idx, reason in result.skipped:
        log.warning("rule %d not transformed: %s", idx, reason)
    return OK


def cmd_diff(args):
    original = _load_program(args.program)
    if args.against:
        other = _load_program(args.against)
    else:
        result = _transform(original)
        if not result.filters:
            print("identical programs: no filters were introduced")
            return OK
        other = result.program
    db1, _ = _evaluate(original, _database(args, original), args)
    db2, _ = _evaluate(other, _database(args, other), args)
    preds = args.preds or sorted(original.schema)
    diff = answer_diff(db1, db2, preds)
    for pred, (missing, extra) in diff.items():
        print(f"{pred}: {len(missing)} missing, {len(extra)} extra")
        for t in missing:
            print(f"- {pred}({','.join(map(str, t))})")
        for t in extra:
            print(f"+ {pred}({','.join(map(str, t))})")
    if not diff:
        print(f"no differences over {len(preds)} predicates")
    return DIAGNOSTICS if diff else OK


def cmd_bench(args):
    variants = tuple(v for v in args.variants.split(",") if v) if args.variants else None
    limits = _limits(args)
    reports = []
    if args.corpus is not None:
        selected = [
            b for b in corpus(engine_stride=args.stride or DEFAULT_ENGINE_STRIDE)
            if not args.corpus or b.name in args.corpus or b.group in args.corpus
        ]
        if not selected:
            raise Failure(DIAGNOSTICS, f"no corpus benchmark matches {args.corpus}")
        for b in selected:
            vs = tuple(v for v in (variants or b.variants) if v in b.variants)
            try:
                rep = run_benchmark(b, variants=vs, repeat=args.repeat, warmup=args.warmup, limits=limits)
            except EvalError as e:
                raise Failure(EVAL_ERROR, f"{b.name}: {e}") from None
            print(rep.format(), flush=True)
            reports.append(rep)
    else:
        if not args.program and not args.cmr:
            raise Failure(DIAGNOSTICS, "bench needs a PROGRAM, --cmr FILE or --corpus")
        for p in (args.program, args.cmr):
            if p:
                _load_program(p)
        try:
            cfg = BenchConfig(
                program=args.program, facts=args.facts,
                variants=variants or (("cmr", "cmr+fp") if not args.program else ("original", "fp")),
                repeat=args.repeat, warmup=args.warmup, limits=limits, cmr_program=args.cmr,
                answer=args.query[0] if args.query else None,
            )
            rep = run_config(cfg)
        except ValueError as e:
            raise Failure(DIAGNOSTICS, str(e)) from None
        except EvalError as e:
            raise Failure(EVAL_ERROR, str(e)) from None
        print(rep.format())
        reports.append(rep)
    if args.out:
        write_report_csv(args.out, reports)
        print(f"wrote {args.out}")
    failed = [r.benchmark for r in reports if r.failed]
    if failed:
        print("FAILED: " + ", ".join(failed), file=sys.stderr)
        return DIAGNOSTICS
    return OK


def cmd_gen_graph(args):
    if args.preset is not None:
        if not 1 <= args.preset <= len(PRESETS):
            raise Failure(DIAGNOSTICS, f"--preset must be in 1..{len(PRESETS)}")
        spec = PRESETS[args.preset - 1]
    else:
        if args.family is None or args.n is None:
            raise Failure(DIAGNOSTICS, "gen-graph needs --preset or --family and --n")
        kw = {"dist": (0, 7000)} if args.family == "clustered" else {}
        spec = GraphGenSpec(args.family, n=args.n, m=args.m, o=args.o, seed=args.seed, **kw)
    rows = gen_graph(spec)
    if args.out:
        write_facts(args.out, {"e": rows})
        print(f"wrote {len(rows)} edges to {Path(args.out) / 'e.csv'}")
    else:
        w = csv.writer(sys.stdout, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        w.writerows(rows)
    return OK


def cmd_deps(args):
    program = _load_program(args.program) if not args.no_check else parse_program(Path(args.program).read_text())
    out = _output(args)
    try:
        out.write(build_dep_graph(program).to_dot())
    finally:
        if out is not sys.stdout:
            out.close()
    return OK


def _slug(name):
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()


def cmd_corpus(args):
    """Write every corpus benchmark as `.dl` files plus a fact directory."""
    root = Path(args.out or "corpus")
    for b in corpus(engine_stride=args.stride or DEFAULT_ENGINE_STRIDE):
        d = root / _slug(b.name)
        d.mkdir(parents=True, exist_ok=True)
        if b.program:
            (d / "program.dl").write_text(b.program, encoding="utf-8")
        if b.cmr_program:
            (d / "cmr.dl").write_text(b.cmr_program, encoding="utf-8")
        write_facts(d / "facts", b.facts)
        print(d)
    return OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--facts", metavar="DIR", help="directory of <pred>.csv fact files")
    common.add_argument("--transform", action="store_true", help="apply the filter-predicate transformation")
    common.add_argument("--max-iterations", type=int, default=Limits.max_iterations, metavar="N")
    common.add_argument("--max-tuples", type=int, default=Limits.max_tuples, metavar="N")
    common.add_argument("--seed", type=int, default=0, metavar="N")
    common.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    common.add_argument("--stride", type=int, default=None, metavar="K", help="thin generated ranges (engine data)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(prog="fpdatalog", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="evaluate a program and print query tuples")
    p.add_argument("program")
    p.add_argument("--query", action="append", metavar="PRED", help="predicate to print (repeatable)")
    p.add_argument("--debug", action="store_true", help="check bindings and the final fixpoint")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("transform", parents=[common], help="print the transformed program")
    p.add_argument("program")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("diff", parents=[common], help="compare original and transformed answers")
    p.add_argument("program")
    p.add_argument("--against", metavar="FILE", help="compare with this program instead of the transform")
    p.add_argument("--preds", type=lambda s: [x for x in s.split(",") if x], metavar="P,Q")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("bench", parents=[common], help="time program variants")
    p.add_argument("program", nargs="?")
    p.add_argument("--cmr", metavar="FILE", help="constraint-magic rewritten program")
    p.add_argument("--variants", metavar="V,W", help=f"subset of {','.join(VARIANTS)}")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--query", action="append", metavar="PRED", help="answer predicate")
    p.add_argument("--corpus", nargs="*", metavar="NAME", help="run corpus benchmarks (by name or group)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-graph", parents=[common], help="generate a flight graph (e.csv)")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--o", type=int, default=0)
    p.add_argument("--preset", type=int, metavar="K", help=f"one of the {len(PRESETS)} preset graphs")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("deps", parents=[common], help="print the predicate dependency graph (DOT)")
    p.add_argument("program")
    p.add_argument("--no-check", action="store_true", help="skip validation (e.g. for ill-formed programs)")
    p.set_defaults(func=cmd_deps)

    p = sub.add_parser("corpus", parents=[common], help="write the benchmark corpus to --out DIR")
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except Failure as e:
        print(str(e), file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
