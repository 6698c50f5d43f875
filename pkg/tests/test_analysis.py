import pytest

from conftest import fixture_text
from fpdatalog.analysis import (
    AGGREGATE,
    SafetyError,
    StratificationError,
    build_dep_graph,
    find_generator_chains,
    safety_order,
    sink_predicates,
    stratify,
)
from fpdatalog.ir import Compare, RelAtom
from fpdatalog.parser import format_literal, parse_clause, parse_program


def test_engine_strata(engine):
    plan = stratify(build_dep_graph(engine))
    i = plan.stratum_of("e")
    assert plan.strata[i].recursive
    assert plan.stratum_of("p") < i and plan.stratum_of("s") < i
    assert plan.recursive_scc("e") == {"e"}
    assert plan.recursive_scc("p") is None


def test_naive_engine_bounds_are_rejected():
    program = parse_program(fixture_text("engine_naive.dl"))
    with pytest.raises(StratificationError) as e:
        stratify(build_dep_graph(program))
    assert e.value.code == "RecursionThroughAggregation"
    assert "ub_e" in e.value.cycle and "e" in e.value.cycle
    assert str(e.value).startswith("RecursionThroughAggregation")


def test_aggregate_edges_are_labelled(engine):
    text = fixture_text("engine.dl") + "m[]=n -> int[64](n).\nm[]=n <- agg<<n=max(w)>> e(_,w).\n"
    g = build_dep_graph(parse_program(text))
    assert ("m", "e", AGGREGATE) in g.edges
    assert g.successors("m") == ["e"]
    dot = g.to_dot()
    assert dot.startswith("digraph") and '"m" -> "e" [style=dashed' in dot


def test_sink_predicates(i_am_sam, flights, flights_cmr):
    assert sink_predicates(i_am_sam) == ["solution"]
    assert sink_predicates(flights) == ["query"]
    assert sink_predicates(flights_cmr) == ["answer_f"]


def test_safety_order_puts_tests_after_binders():
    rule = parse_clause("p(x,y) <- x + y > 3, q(x), r(y).")
    ordered = safety_order(rule)
    kinds = [type(l).__name__ for l in ordered.body]
    assert kinds[-1] == "Compare"
    assert {l.pred for l in ordered.body if isinstance(l, RelAtom)} == {"q", "r"}


def test_safety_order_assignment():
    rule = parse_clause("p(x,d) <- q(x,a), r(x,b), d = a + b, d <= 10.")
    ordered = safety_order(rule)
    text = [format_literal(l) for l in ordered.body]
    assert text.index("d = a + b") < text.index("d <= 10")


def test_unsafe_rule_raises():
    with pytest.raises(SafetyError):
        safety_order(parse_clause("p(x) <- x > 3."))


def test_generator_chains_puzzle(i_am_sam):
    rule = i_am_sam.clauses[-1]
    chains = find_generator_chains(rule, i_am_sam)
    by_var = {c.value_var: c for c in chains}
    assert set(by_var) == {"vi", "va", "vm", "vs"}
    assert by_var["vi"].generator.pred == "digit"
    assert by_var["vi"].preds == ("digit", "val")


def test_generator_chains_engine(engine):
    rule = engine.clauses[-1]
    chains = find_generator_chains(rule, engine)
    assert {(c.generator.pred, c.value_var) for c in chains} == {("s", "w"), ("e", "wp")}
