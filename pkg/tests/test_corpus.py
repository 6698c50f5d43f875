import pytest

from fpdatalog.corpus import (
    ENGINE_SETS,
    PUZZLES,
    corpus,
    engine_facts,
    flight_paths,
    get_benchmark,
    puzzle_program,
    puzzle_solutions,
)
from fpdatalog.graphgen import FAMILIES, PRESETS, GraphGenSpec, gen_graph, node_name
from fpdatalog.ir import validate
from fpdatalog.parser import parse_program


def test_corpus_shape():
    bs = corpus()
    groups = [b.group for b in bs]
    assert groups.count("puzzles") == 8
    assert groups.count("production") == 4
    assert groups.count("engine") == 4
    assert len([b for b in bs if b.name.startswith("CMR Graph")]) == 19
    for b in bs:
        for text in (b.program, b.cmr_program):
            if text:
                assert validate(parse_program(text)) == []


def test_get_benchmark():
    assert get_benchmark("SEND+MORE=MONEY").answer == "solution"
    with pytest.raises(KeyError):
        get_benchmark("nope")


def test_puzzle_program_style():
    text = puzzle_program(PUZZLES[2])
    assert "1000*vs+100*ve+10*vn+vd" in text.replace(" ", "")
    assert "vs != 0" in text and "vm != 0" in text


def test_puzzle_oracle():
    sols = puzzle_solutions(PUZZLES[0])
    assert ("9", "7", "5", "6") in sols and len(sols) == 7
    for i, a, m, s in sols:
        assert int(i) * int(a + m) == int(s + a + m)


def test_engine_sets_stride():
    for k in ENGINE_SETS:
        facts = engine_facts(k, stride=25)
        assert all(len(rows) <= 2 * 10**4 for rows in facts.values())


@pytest.mark.parametrize("family", FAMILIES)
def test_graph_generator_is_deterministic(family):
    spec = GraphGenSpec(family, n=6, m=2, o=1, seed=3)
    a, b = gen_graph(spec), gen_graph(spec)
    assert a == b and a == sorted(a)
    assert all(x != y and d >= 0 for x, y, d in a)


def test_graph_spec_validation():
    with pytest.raises(ValueError):
        GraphGenSpec("ring", n=3)
    with pytest.raises(ValueError):
        GraphGenSpec("random-bidir", n=0)


def test_presets():
    assert len(PRESETS) == 19
    assert node_name(0) == "Sydney"


def test_flight_paths_oracle():
    edges = [("Sydney", "A", 4000), ("A", "Sydney", 4000), ("A", "B", 3000)]
    assert flight_paths(edges) == {
        ("Sydney", "A", 4000), ("Sydney", "B", 7000), ("Sydney", "Sydney", 8000)
    }
