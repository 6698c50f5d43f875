import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fpdatalog.engine as engine
from fpdatalog.corpus import digit_facts, flight_paths, puzzle_solutions, PUZZLES
from fpdatalog.engine import (
    FunctionalDependencyError,
    LimitExceeded,
    Limits,
    Overflow,
    evaluate,
    query,
    unique_rows,
)
from fpdatalog.facts import database_from
from fpdatalog.graphgen import GraphGenSpec, gen_graph
from fpdatalog.parser import parse_program
from fpdatalog.randprog import random_program
from fpdatalog.reference import naive_evaluate

TC = """
edge(x,y) -> int[64](x), int[64](y).
path(x,y) -> int[64](x), int[64](y).
path(x,y) <- edge(x,y).
path(x,z) <- edge(x,y), path(y,z).
"""


def run(text, facts, **kw):
    p = parse_program(text)
    return evaluate(p, database_from(p, facts), **kw)


def test_transitive_closure_and_stats():
    db, stats = run(TC, {"edge": [(1, 2), (2, 3), (3, 4)]})
    assert query(db, "path") == [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
    assert stats.derived == 6
    rec = [s for s in stats.strata if s.recursive]
    assert len(rec) == 1 and rec[0].iterations >= 3


def test_edb_is_not_modified():
    p = parse_program(TC)
    edb = database_from(p, {"edge": [(1, 2)]})
    evaluate(p, edb)
    assert "path" not in edb or len(edb["path"].rows) == 0


def test_puzzle_matches_brute_force(i_am_sam):
    db, _ = evaluate(i_am_sam, database_from(i_am_sam, digit_facts()))
    assert set(query(db, "solution")) == puzzle_solutions(PUZZLES[0])


def test_aggregates_min_max_grouped():
    text = """
    w(k,v) -> int[64](k), int[64](v).
    lo[k]=n -> int[64](k), int[64](n).
    lo[k]=n <- agg<<n=min(v)>> w(k,v).
    hi[]=n -> int[64](n).
    hi[]=n <- agg<<n=max(v)>> w(_,v).
    """
    db, _ = run(text, {"w": [(1, 5), (1, -2), (2, 7)]})
    assert query(db, "lo") == [(1, -2), (2, 7)]
    assert query(db, "hi") == [(7,)]


def test_empty_aggregate_has_no_value():
    text = """
    w(v) -> int[64](v).
    hi[]=n -> int[64](n).
    hi[]=n <- agg<<n=max(v)>> w(v).
    r(v) -> int[64](v).
    r(v) <- w(v), hi[]=h, v <= h.
    """
    db, _ = run(text, {"w": []})
    assert query(db, "hi") == [] and query(db, "r") == []


def test_builtin_min_max_and_lookup():
    text = """
    a[]=n -> int[64](n).
    b[]=n -> int[64](n).
    c[]=n -> int[64](n).
    c[]=n <- n = max(a[],b[]).
    """
    db, _ = run(text, {"a": [(3,)], "b": [(9,)]})
    assert query(db, "c") == [(9,)]
    db, _ = run(text, {"a": [(3,)], "b": []})
    assert query(db, "c") == []


def test_overflow_is_an_error():
    text = """
    v(x) -> int[64](x).
    r(y) -> int[64](y).
    r(y) <- v(x), y = x*x.
    """
    with pytest.raises(Overflow):
        run(text, {"v": [(2**40,)]})


def test_limits():
    with pytest.raises(LimitExceeded):
        run(TC, {"edge": [(i, i + 1) for i in range(20)]}, limits=Limits(max_iterations=3))
    with pytest.raises(LimitExceeded):
        run(TC, {"edge": [(i, i + 1) for i in range(20)]}, limits=Limits(max_tuples=30))


def test_functional_dependency_violation():
    text = "f[k]=v -> int[64](k), int[64](v).\ng(k) -> int[64](k).\n"
    with pytest.raises(FunctionalDependencyError):
        run(text, {"f": [(1, 2), (1, 3)]})


def test_string_constants_and_filters(flights):
    edges = [("Sydney", "A", 10), ("A", "B", 5), ("B", "Sydney", -1), ("C", "D", 1)]
    db, _ = evaluate(flights, database_from(flights, {"e": edges}))
    assert query(db, "query") == [("Sydney", "A", 10), ("Sydney", "B", 15)]


def test_chunked_join_matches_unchunked(monkeypatch):
    rng = random.Random(0)
    facts = {"edge": [(rng.randrange(40), rng.randrange(40)) for _ in range(200)]}
    full, _ = run(TC, facts)
    monkeypatch.setattr(engine, "CHUNK_ROWS", 7)
    small, _ = run(TC, facts)
    assert query(full, "path") == query(small, "path")


def test_unique_rows():
    rows = np.array([[2, 1], [1, 1], [2, 1]], dtype=np.int64)
    assert unique_rows(rows).tolist() == [[1, 1], [2, 1]]


@pytest.mark.parametrize("seed", range(3))
def test_flights_match_path_oracle(flights, seed):
    edges = gen_graph(GraphGenSpec("random-bidir", n=8, m=2, seed=seed, dist=(0, 3000)))
    db, _ = evaluate(flights, database_from(flights, {"e": edges}))
    assert set(query(db, "query")) == flight_paths(edges)


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_semi_naive_agrees_with_naive(seed):
    rp = random_program(random.Random(seed))
    p = rp.program
    db, _ = evaluate(p, database_from(p, rp.facts))
    ref_db = database_from(p, rp.facts)
    ref = naive_evaluate(p, ref_db)
    for pred in p.schema:
        assert set(map(tuple, db[pred].rows.tolist())) == ref[pred], pred
