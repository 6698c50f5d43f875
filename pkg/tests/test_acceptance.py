"""Acceptance checks, one per criterion; each prints a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v` or `python tests/test_acceptance.py`.
"""

import random
import sys
import time

import pytest

from conftest import GOLDEN, fixture_text
from helpers import interval_soundness_samples
from fpdatalog.analysis import StratificationError, build_dep_graph, stratify
from fpdatalog.bench import answer_diff, domain_ratio, run_benchmark
from fpdatalog.corpus import FLIGHTS_CMR, corpus, engine_facts, flight_paths, get_benchmark
from fpdatalog.engine import evaluate, query
from fpdatalog.facts import database_from
from fpdatalog.graphgen import GraphGenSpec, gen_graph
from fpdatalog.ir import Rule, validate
from fpdatalog.parser import format_literal, format_program, parse_program
from fpdatalog.randprog import participating, random_program, random_single_rule
from fpdatalog.reference import naive_evaluate
from fpdatalog.transform import transform


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def compare(text, facts):
    """Evaluate a program and its transform; differences over all original predicates."""
    program = parse_program(text)
    tr = transform(program)
    db1, s1 = evaluate(program, database_from(program, facts))
    db2, s2 = evaluate(tr.program, database_from(tr.program, facts))
    return {
        "diff": answer_diff(db1, db2, sorted(program.schema)),
        "inst": (s1.instantiations, s2.instantiations),
        "ratio": domain_ratio(tr, db2),
        "filters": len(tr.filters),
    }


@pytest.fixture(scope="module")
def corpus_runs():
    t0 = time.perf_counter()
    runs = {}
    for b in corpus():
        if b.program:
            runs[b.name] = compare(b.program, b.facts)
        if b.cmr_program:
            runs[f"{b.name} (cmr)"] = compare(b.cmr_program, b.facts)
    return runs, time.perf_counter() - t0


def test_1_semantic_preservation(corpus_runs, report):
    runs, corpus_s = corpus_runs
    t0 = time.perf_counter()
    bad = [name for name, r in runs.items() if r["diff"]]
    n_filtered = 0
    for seed in range(50):
        rp = random_program(random.Random(seed))
        r = compare(rp.text, rp.facts)
        n_filtered += r["filters"] > 0
        if r["diff"]:
            bad.append(f"random#{seed}")
    total = corpus_s + time.perf_counter() - t0
    n_bench = len({name.removesuffix(" (cmr)") for name in runs})
    report(
        1,
        not bad and n_bench >= 14 and total < 120,
        f"{n_bench} corpus benchmarks ({len(runs)} program pairs) and 50 random programs "
        f"({n_filtered} with filters): {len(bad)} differing {bad[:5]}; {total:.1f} s",
    )


def test_2_filter_soundness(report):
    t0 = time.perf_counter()
    checked = violations = 0
    for seed in range(200):
        sr = random_single_rule(random.Random(10_000 + seed))
        program = sr.program
        tr = transform(program)
        rule = program.clauses[sr.rule_index]
        seen = participating(rule, sr.facts)
        db, _ = evaluate(tr.program, database_from(tr.program, sr.facts))
        for f in tr.filters:
            gen = rule.body[f.generator_index]
            kept = set(query(db, f.name))
            checked += 1
            if not (seen[f.generator_index] <= kept <= set(sr.facts[gen.pred])):
                violations += 1
    dt = time.perf_counter() - t0
    report(2, violations == 0 and checked > 0 and dt < 60,
           f"200 single-rule instances, {checked} filters, {violations} violations; {dt:.1f} s")


def test_3_derivation_fidelity(report):
    program = parse_program(fixture_text("i_am_sam.dl"))
    tr = transform(program)
    spec = next(f for f in tr.filters if f.generator.pred == "digit" and f.name.endswith("_i"))
    conds = [format_literal(c) for c in spec.conditions]
    expected = ["vi*(10*t_1 + t_1) <= 100*t_2 + 10*t_2 + t_2", "100*t_1 + 10*t_1 + t_1 <= vi*(10*t_2 + t_2)"]
    golden = format_program(tr.program) == (GOLDEN / "i_am_sam.fp.dl").read_text()
    report(3, conds == expected and golden, f"{spec.name}: {conds}; golden file {'matches' if golden else 'differs'}")


def test_4_approximation_fidelity(report):
    tr = transform(parse_program(fixture_text("engine.dl")))
    ok_form = validate(tr.program) == []
    stratify(build_dep_graph(tr.program))
    ub_e = [c for c in tr.program.clauses if isinstance(c, Rule) and c.head and c.head[0].pred == "ub_e"]
    ub_e_text = format_literal(ub_e[0].body[0]) if len(ub_e) == 1 else None
    golden = format_program(tr.program) == (GOLDEN / "engine.fp.dl").read_text()
    try:
        stratify(build_dep_graph(parse_program(fixture_text("engine_naive.dl"))))
        rejected = None
    except StratificationError as e:
        rejected = e.code
    ok = ok_form and ub_e_text == "n = max(ub_p[],ub_s[])" and golden and rejected == "RecursionThroughAggregation"
    report(4, ok, f"ub_e: {ub_e_text}; golden {'matches' if golden else 'differs'}; naive text rejected with {rejected}")


def test_5_pruning_effect(corpus_runs, report):
    runs, _ = corpus_runs
    i1, i2 = runs["SEND+MORE=MONEY"]["inst"]
    ratio = runs["DONALD+GERALD=ROBERT"]["ratio"]
    ok = i2 <= 0.6 * i1 and ratio is not None and ratio >= 0.9
    report(5, ok, f"SEND+MORE=MONEY instantiations {i2}/{i1} = {i2 / i1:.3f}; DONALD+GERALD=ROBERT domain ratio {ratio:.3f}")


def test_6_engine_directionality(report):
    parts, ok = [], True
    for k in (1, 2, 3, 4):
        b = get_benchmark(f"Engine Set{k}")
        assert max(len(rows) for rows in engine_facts(k).values()) <= 2 * 10**4
        rep = run_benchmark(b, repeat=5, warmup=1)
        rel = rep.result("fp").relative_pct
        ok &= not rep.failed and (k == 4 or rel < 100.0)
        parts.append(f"Set{k} {rel:.1f}%")
    report(6, ok, "transformed time relative to original: " + ", ".join(parts))


def test_7_flights_cmr(report):
    t0 = time.perf_counter()
    cmr = parse_program(FLIGHTS_CMR)
    fp = transform(cmr).program
    specs = [GraphGenSpec("random-bidir", n=n, m=2 + s % 2, seed=s) for s, n in enumerate((6, 8, 9, 10, 11, 12))]
    specs += [GraphGenSpec("disjoint-complete", n=4, m=3, seed=7), GraphGenSpec("disjoint-complete", n=6, m=2, seed=8)]
    specs += [GraphGenSpec("clustered", n=2, m=1, o=2, seed=9), GraphGenSpec("clustered", n=2, m=2, o=1, seed=10)]
    bad = []
    for spec in specs:
        edges = gen_graph(spec)
        n_nodes = len({x for x, _, _ in edges} | {y for _, y, _ in edges})
        assert n_nodes <= 12
        want = flight_paths(edges)
        db1, _ = evaluate(cmr, database_from(cmr, {"e": edges}))
        db2, _ = evaluate(fp, database_from(fp, {"e": edges}))
        if set(query(db1, "answer_f")) != want or query(db2, "answer_f") != query(db1, "answer_f"):
            bad.append(spec)
    dt = time.perf_counter() - t0
    report(7, not bad and dt < 120, f"{len(specs)} graphs: answer_f = path oracle and CMR+FP = CMR on "
           f"{len(specs) - len(bad)}; {dt:.1f} s")


def test_8_interval_and_naive_engines(report):
    t0 = time.perf_counter()
    n = interval_soundness_samples(10**5, seed=8)
    disagree = 0
    for seed in range(100):
        rp = random_program(random.Random(50_000 + seed))
        p = rp.program
        db, _ = evaluate(p, database_from(p, rp.facts))
        ref = naive_evaluate(p, database_from(p, rp.facts))
        disagree += any(set(map(tuple, db[q].rows.tolist())) != ref[q] for q in p.schema)
    dt = time.perf_counter() - t0
    report(8, disagree == 0 and dt < 120,
           f"{n} interval samples sound; naive vs semi-naive disagree on {disagree}/100 programs; {dt:.1f} s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
