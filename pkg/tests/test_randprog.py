import random

from fpdatalog.analysis import build_dep_graph, stratify
from fpdatalog.ir import AggRule, Rule, validate
from fpdatalog.randprog import RandomProgramSpec, participating, random_program, random_single_rule


def test_random_programs_are_well_formed():
    for seed in range(50):
        rp = random_program(random.Random(seed))
        p = rp.program
        assert validate(p) == []
        plan = stratify(build_dep_graph(p))
        rules = [c for c in p.clauses if isinstance(c, Rule) and not c.is_fact]
        assert len(rules) + sum(isinstance(c, AggRule) for c in p.clauses) <= 4
        assert all(len(info.types) <= 3 for info in p.schema.values())
        for s in plan.strata:
            assert len(s.preds) == 1  # only self-recursion
        for rows in rp.facts.values():
            assert len({v for row in rows for v in row}) <= 50


def test_generator_is_deterministic():
    assert random_program(random.Random(7)).text == random_program(random.Random(7)).text


def test_spec_validation():
    import pytest

    with pytest.raises(ValueError):
        RandomProgramSpec(max_arity=4)


def test_participation_oracle():
    sr = random_single_rule(random.Random(0))
    rule = sr.program.clauses[sr.rule_index]
    seen = participating(rule, sr.facts)
    for i, rows in seen.items():
        assert rows <= set(sr.facts[rule.body[i].pred])
