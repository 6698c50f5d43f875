"""Timing harness: evaluate program variants and report Original/FP-style rows."""

from __future__ import annotations

import csv
import hashlib
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import sink_predicates
from .corpus import Benchmark
from .engine import Limits, evaluate, query
from .facts import database_from, load_facts
from .parser import parse_program
from .transform import transform

VARIANTS = ("original", "fp", "cmr", "cmr+fp")
CSV_COLUMNS = ("benchmark", "variant", "median_s", "relative_pct", "tuples", "instantiations", "answers_hash")
LOW_PRUNING_RATIO = 0.9


@dataclass
class BenchConfig:
    program: str | None = None  # path of the original program
    facts: str | None = None  # fact directory
    variants: tuple = ("original", "fp")
    repeat: int = 3
    warmup: int = 1
    limits: Limits = field(default_factory=Limits)
    cmr_program: str | None = None  # path of the CMR-rewritten program
    answer: str | None = None  # answer predicate of the original program
    cmr_answer: str | None = None
    name: str | None = None

    def __post_init__(self):
        if self.repeat < 1:
            raise ValueError("repeat must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if not self.variants:
            raise ValueError("at least one variant is required")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ValueError(f"unknown variants {bad}; expected a subset of {VARIANTS}")


@dataclass
class VariantResult:
    variant: str
    median_s: float
    min_s: float
    relative_pct: float
    tuples: int
    instantiations: int
    answers_hash: str
    answers: int
    domain_ratio: float | None = None  # filtered / generator tuples, fp variants only

    @property
    def low_pruning(self):
        return self.domain_ratio is not None and self.domain_ratio > LOW_PRUNING_RATIO


@dataclass
class BenchReport:
    benchmark: str
    results: list

    @property
    def failed(self):
        """Variants disagree on the answer set."""
        return len({r.answers_hash for r in self.results}) > 1

    def result(self, variant) -> VariantResult:
        for r in self.results:
            if r.variant == variant:
                return r
        raise KeyError(variant)

    def csv_rows(self):
        return [
            (self.benchmark, r.variant, f"{r.median_s:.6f}", f"{r.relative_pct:.2f}", r.tuples, r.instantiations, r.answers_hash)
            for r in self.results
        ]

    def format(self):
        lines = [f"{self.benchmark}{'  FAILED: answer sets differ' if self.failed else ''}"]
        for r in self.results:
            note = ""
            if r.domain_ratio is not None:
                note = f"  domain {r.domain_ratio:.3f}" + ("  low pruning" if r.low_pruning else "")
            lines.append(
                f"  {r.variant:<8} {r.median_s:9.4f} s {r.relative_pct:8.2f} %"
                f"  tuples {r.tuples:>9}  inst {r.instantiations:>11}  answers {r.answers:>6}{note}"
            )
        return "\n".join(lines)


def answers_hash(rows) -> str:
    text = "\n".join(",".join(map(str, t)) for t in rows)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _variant_program(variant, text, cmr_text):
    base = cmr_text if variant.startswith("cmr") else text
    if base is None:
        raise ValueError(f"variant {variant} needs a {'CMR ' if variant.startswith('cmr') else ''}program")
    program = parse_program(base)
    tr = None
    if variant.endswith("fp"):
        tr = transform(program)
        program = tr.program
    return program, tr


def domain_ratio(tr, db):
    """Filtered over generator tuples, summed over all emitted filters."""
    pairs = tr.filter_generators
    if not pairs:
        return None
    gen = sum(len(db.relations[g]) for g in pairs.values())
    filt = sum(len(db.relations[f]) for f in pairs)
    return filt / gen if gen else 1.0


def run_variants(name, variants, text, cmr_text, answer, cmr_answer, make_db, *, repeat=3, warmup=1, limits=None):
    """Time `evaluate` only (parsing and transformation excluded)."""
    limits = limits or Limits()
    results = []
    for variant in variants:
        program, tr = _variant_program(variant, text, cmr_text)
        edb = make_db(program)
        times = []
        for i in range(warmup + repeat):
            t0 = time.perf_counter()
            db, stats = evaluate(program, edb, limits)
            dt = time.perf_counter() - t0
            if i >= warmup:
                times.append(dt)
        rows = query(db, cmr_answer if variant.startswith("cmr") else answer)
        results.append(
            VariantResult(
                variant,
                statistics.median(times),
                min(times),
                0.0,
                stats.derived,
                stats.instantiations,
                answers_hash(rows),
                len(rows),
                domain_ratio(tr, db) if tr is not None else None,
            )
        )
    base = results[0].median_s
    for r in results:
        r.relative_pct = 100.0 if r is results[0] else (100.0 * r.median_s / base if base > 0 else float("inf"))
    return BenchReport(name, results)


def run_benchmark(bench: Benchmark, *, variants=None, repeat=3, warmup=1, limits=None) -> BenchReport:
    return run_variants(
        bench.name,
        tuple(variants or bench.variants),
        bench.program,
        bench.cmr_program,
        bench.answer,
        bench.cmr_answer or bench.answer,
        lambda program: database_from(program, bench.facts),
        repeat=repeat,
        warmup=warmup,
        limits=limits,
    )


def run_config(cfg: BenchConfig) -> BenchReport:
    text = Path(cfg.program).read_text() if cfg.program else None
    cmr_text = Path(cfg.cmr_program).read_text() if cfg.cmr_program else None
    answer = cfg.answer or _default_answer(text or cmr_text)
    cmr_answer = cfg.cmr_answer or (_default_answer(cmr_text) if cmr_text else answer)
    name = cfg.name or Path(cfg.program or cfg.cmr_program).stem
    return run_variants(
        name, tuple(cfg.variants), text, cmr_text, answer, cmr_answer,
        lambda program: load_facts(cfg.facts, program) if cfg.facts else database_from(program, {}),
        repeat=cfg.repeat, warmup=cfg.warmup, limits=cfg.limits,
    )


def _default_answer(text):
    program = parse_program(text)
    return sink_predicates(program)[-1]


def answer_diff(db1, db2, preds) -> dict:
    """pred -> (tuples only in db1, tuples only in db2), for differing preds."""
    out = {}
    for pred in preds:
        a = set(query(db1, pred)) if pred in db1 else set()
        b = set(query(db2, pred)) if pred in db2 else set()
        if a != b:
            out[pred] = (sorted(a - b), sorted(b - a))
    return out


def write_report_csv(path, reports):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rep in reports:
            w.writerows(rep.csv_rows())


__all__ = [
    "CSV_COLUMNS",
    "LOW_PRUNING_RATIO",
    "VARIANTS",
    "BenchConfig",
    "BenchReport",
    "VariantResult",
    "answer_diff",
    "answers_hash",
    "domain_ratio",
    "run_benchmark",
    "run_config",
    "run_variants",
    "write_report_csv",
]
