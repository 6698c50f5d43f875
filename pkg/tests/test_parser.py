import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES
from fpdatalog.corpus import ENGINE_NAIVE, FLIGHTS, FLIGHTS_CMR, PRODUCTION, PUZZLES, puzzle_program
from fpdatalog.ir import BinOp, Compare, Const, FuncLookup, RelAtom, RefModeAtom, Var
from fpdatalog.parser import ParseError, format_expr, format_program, parse_expr, parse_literal, parse_program

TEXTS = [FLIGHTS, FLIGHTS_CMR, PRODUCTION, ENGINE_NAIVE, *(puzzle_program(p) for p in PUZZLES)]


@pytest.mark.parametrize("text", TEXTS + [p.read_text() for p in sorted(FIXTURES.glob("*.dl"))])
def test_format_round_trip(text):
    program = parse_program(text)
    again = parse_program(format_program(program))
    assert again == program
    assert format_program(again) == format_program(program)


def test_refmode_and_functional_atoms():
    assert isinstance(parse_literal("val(x:vx)"), RefModeAtom)
    lit = parse_literal("rate[p,l]=r")
    assert lit.pred == "rate" and [k.name for k in lit.keys] == ["p", "l"]
    assert isinstance(parse_expr("ub_e[]"), FuncLookup)


def test_precedence_and_associativity():
    e = parse_expr("a - b - c*d + 2")
    assert format_expr(e) == "a - b - c*d + 2"
    assert isinstance(e, BinOp) and e.op == "+"
    assert format_expr(parse_expr("a - (b - c)")) == "a - (b - c)"
    assert format_expr(parse_expr("x*(10*y + z)")) == "x*(10*y + z)"


def test_compare_and_constants():
    c = parse_literal('x = "Sydney"')
    assert isinstance(c, Compare) and c.rhs == Const("Sydney")
    assert parse_literal("e(x,y,d)") == RelAtom("e", (Var("x"), Var("y"), Var("d")))


@pytest.mark.parametrize(
    "text",
    ["p(x) <- q(x)", "p(x) <- q(x),, r(x).", "p(x -> int[64](x).", "p(x) <- x << 3.", 'p("a) <- q(x).'],
)
def test_parse_errors_have_positions(text):
    with pytest.raises(ParseError) as e:
        parse_program(text)
    assert e.value.span.line >= 1


def test_comments_are_ignored():
    p = parse_program("// a comment\np(x) -> int[64](x). // trailing\n")
    assert len(p.clauses) == 1


names = st.sampled_from(["a", "b", "c", "vx", "t_1"])
exprs = st.recursive(
    st.one_of(names.map(Var), st.integers(0, 10**6).map(Const)),
    lambda sub: st.builds(BinOp, st.sampled_from(["+", "-", "*"]), sub, sub),
    max_leaves=8,
)


@given(exprs)
def test_expression_round_trip(e):
    text = format_expr(e)
    assert format_expr(parse_expr(text)) == text
