import pytest

from fpdatalog.ir import Program, validate
from fpdatalog.parser import format_program, parse_program


def codes(text):
    return sorted({d.code for d in validate(parse_program(text))})


def test_corpus_programs_validate(i_am_sam, engine, flights, flights_cmr):
    for p in (i_am_sam, engine, flights, flights_cmr):
        assert validate(p) == []


def test_schema_kinds(i_am_sam):
    schema = i_am_sam.schema
    assert schema["val"].kind == "refmode"
    assert schema["digit"].kind == "entity"
    assert schema["solution"].arity == 4


@pytest.mark.parametrize(
    "text, code",
    [
        ("p(x) -> int[64](x).\np(x) <- q(x).", "UndeclaredPredicate"),
        ("p(x) -> int[64](x).\nq(x) -> int[64](x).\np(y) <- q(x).", "UnsafeVariable"),
        ("p(x) -> int[64](x).\nq(x,y) -> int[64](x), int[64](y).\np(x) <- q(x).", "ArityMismatch"),
        ("p(x) -> int[64](x).\np(x) -> int[64](x).", "DuplicateDeclaration"),
        ("p(x) -> int[64](x).\np(x).", "NonGroundFact"),
    ],
)
def test_diagnostics(text, code):
    assert code in codes(text)


def test_all_diagnostics_reported():
    text = "p(x) -> int[64](x).\np(y) <- p(x).\np(x) <- q(x)."
    assert {"UndeclaredPredicate", "UnsafeVariable"} <= set(codes(text))


def test_clause_with_errors_skips_safety():
    # safety is only checked on otherwise well-formed clauses
    assert codes("p(x) -> int[64](x).\np(y) <- q(x).") == ["UndeclaredPredicate"]


def test_program_equality(engine):
    assert isinstance(engine, Program)
    assert engine == parse_program(format_program(engine))
