"""Shared driver for the table scripts: run corpus benchmarks, print and save."""

import argparse
import sys
from pathlib import Path

from fpdatalog.bench import run_benchmark, write_report_csv
from fpdatalog.corpus import DEFAULT_ENGINE_STRIDE, corpus


def parser(description, default_out):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--warmup", type=int, default=1)
    ap.add_argument("--stride", type=int, default=DEFAULT_ENGINE_STRIDE, help="engine data thinning")
    ap.add_argument("--only", nargs="*", help="benchmark names to run (default: the whole group)")
    ap.add_argument("--out", default=default_out, help="CSV report path")
    return ap


def run_group(args, groups, variants=None):
    reports = []
    for b in corpus(engine_stride=args.stride):
        if b.group not in groups or (args.only and b.name not in args.only):
            continue
        vs = [v for v in (variants or b.variants) if v in b.variants]
        rep = run_benchmark(b, variants=vs, repeat=args.repeat, warmup=args.warmup)
        print(rep.format(), flush=True)
        reports.append(rep)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_report_csv(args.out, reports)
    print(f"wrote {args.out}")
    failed = [r.benchmark for r in reports if r.failed]
    if failed:
        print("answer sets differ: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0

