import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, fixture_text
from fpdatalog.analysis import build_dep_graph, stratify
from fpdatalog.bench import answer_diff
from fpdatalog.corpus import ENGINE_TYPES, FLIGHTS_CMR, PRODUCTION, digit_facts, engine_facts, production_facts
from fpdatalog.engine import evaluate, query
from fpdatalog.facts import database_from
from fpdatalog.ir import AggRule, Rule, validate
from fpdatalog.parser import format_literal, format_program, parse_program
from fpdatalog.randprog import participating, random_single_rule
from fpdatalog.transform import transform, transform_program


def rule_for(program, pred):
    return [c for c in program.clauses if isinstance(c, (Rule, AggRule)) and _head(c) == pred]


def _head(c):
    return c.head.pred if isinstance(c, AggRule) else c.head[0].pred


@pytest.mark.parametrize("name", ["i_am_sam", "engine"])
def test_golden_output(name):
    out = format_program(transform_program(parse_program(fixture_text(f"{name}.dl"))))
    assert out == (GOLDEN / f"{name}.fp.dl").read_text()


def test_puzzle_digit_i_filter(i_am_sam):
    result = transform(i_am_sam)
    (spec,) = [f for f in result.filters if f.name == "digit_filtered_i"]
    conds = [format_literal(c) for c in spec.conditions]
    assert conds == [
        "vi*(10*t_1 + t_1) <= 100*t_2 + 10*t_2 + t_2",
        "100*t_1 + 10*t_1 + t_1 <= vi*(10*t_2 + t_2)",
    ]
    assert [b.name for b in spec.bounds_used] == ["lb_digit", "ub_digit"]


def test_puzzle_rule_uses_filters(i_am_sam):
    out = transform(i_am_sam).program
    (rule,) = rule_for(out, "solution")
    assert [a.pred for a in rule.body if hasattr(a, "pred") and a.pred.startswith("digit")] == [
        "digit_filtered_i", "digit_filtered_a", "digit_filtered_m", "digit_filtered_s"
    ]


def test_engine_bounds_approximation(engine):
    out = transform(engine).program
    assert validate(out) == []
    stratify(build_dep_graph(out))  # no recursion through aggregation
    (ub_e,) = rule_for(out, "ub_e")
    assert format_literal(ub_e.body[0]) == "n = max(ub_p[],ub_s[])"
    (lb_s,) = rule_for(out, "lb_s")
    assert isinstance(lb_s, AggRule) and lb_s.method == "min"


def test_untouched_program_is_returned(engine):
    text = "p(x) -> int[64](x).\nq(x) -> int[64](x).\nq(x) <- p(x).\n"
    program = parse_program(text)
    result = transform(program)
    assert result.filters == [] and result.program == program


def test_filter_names_follow_variables():
    names = {f.name for f in transform(parse_program(PRODUCTION)).filters}
    assert names == {"product_filtered_p", "line_filtered_l", "tons_filtered_t"}
    names = {f.name for f in transform(parse_program(FLIGHTS_CMR)).filters}
    assert "query_f_a_filtered_ld_ud" in names


def _same_answers(program, facts):
    fp = transform(program).program
    db1, s1 = evaluate(program, database_from(program, facts))
    db2, s2 = evaluate(fp, database_from(fp, facts))
    assert answer_diff(db1, db2, sorted(program.schema)) == {}
    return s1, s2


def test_puzzle_semantics(i_am_sam):
    s1, s2 = _same_answers(i_am_sam, digit_facts())
    assert s2.instantiations < s1.instantiations


def test_engine_semantics(engine):
    facts = engine_facts(1, stride=100)
    s1, s2 = _same_answers(engine, facts)
    assert s2.instantiations < s1.instantiations


def test_production_semantics():
    _same_answers(parse_program(PRODUCTION), production_facts((1, 2500), stride=10))


def test_flights_cmr_semantics(flights_cmr):
    from fpdatalog.corpus import flight_facts
    from fpdatalog.graphgen import PRESETS

    _same_answers(flights_cmr, flight_facts(PRESETS[0]))


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_filters_are_sound_and_subsets(seed):
    sr = random_single_rule(random.Random(seed))
    program = sr.program
    result = transform(program)
    rule = program.clauses[sr.rule_index]
    seen = participating(rule, sr.facts)
    db, _ = evaluate(result.program, database_from(result.program, sr.facts))
    for f in result.filters:
        gen = rule.body[f.generator_index]
        kept = set(query(db, f.name))
        assert kept <= set(sr.facts[gen.pred])
        assert seen[f.generator_index] <= kept
