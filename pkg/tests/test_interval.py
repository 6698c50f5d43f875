import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import interval_soundness_samples, lowering_soundness_samples
from fpdatalog.interval import (
    EMPTY,
    INT64_MAX,
    INT64_MIN,
    NEG_INF,
    POS_INF,
    TOP,
    Interval,
    UnboundedOther,
    bound_exprs,
    interval_add,
    interval_max,
    interval_min,
    interval_mul,
    interval_sub,
    lower_constraint,
)
from fpdatalog.parser import format_expr, format_literal, parse_expr, parse_literal

ints = st.integers(INT64_MIN, INT64_MAX)


@st.composite
def interval_and_point(draw):
    a, b = sorted((draw(ints), draw(ints)))
    return Interval(a, b), draw(st.integers(a, b))


OPS = [
    (interval_add, lambda x, y: x + y),
    (interval_sub, lambda x, y: x - y),
    (interval_mul, lambda x, y: x * y),
    (interval_min, min),
    (interval_max, max),
]


@pytest.mark.parametrize("op, fn", OPS)
@given(interval_and_point(), interval_and_point())
def test_ops_enclose_points(op, fn, ax, by):
    (a, x), (b, y) = ax, by
    r = op(a, b)
    v = fn(x, y)
    if INT64_MIN <= v <= INT64_MAX:
        assert v in r
    else:
        assert r.widened
        assert (r.hi == POS_INF) if v > INT64_MAX else (r.lo == NEG_INF)


def test_saturation_to_infinity():
    big = Interval(INT64_MAX - 1, INT64_MAX)
    r = interval_add(big, big)
    assert r.hi == POS_INF and r.widened
    assert interval_mul(Interval(-2, 2), TOP) == TOP
    assert interval_mul(Interval(0, 0), TOP) == Interval(0, 0)


def test_empty_and_hull():
    assert EMPTY.is_empty and 3 not in EMPTY
    assert Interval(1, 3).intersect(Interval(5, 9)).is_empty
    assert Interval(1, 3).hull(Interval(5, 9)) == Interval(1, 9)
    with pytest.raises(ValueError):
        Interval(3, 1)


def test_interval_soundness_random_expressions():
    assert interval_soundness_samples(5000, seed=1) == 5000


def test_lowering_soundness_random_constraints():
    assert lowering_soundness_samples(300, seed=2) == 300


def test_lowering_digit_filter():
    cmp = parse_literal("vi*(10*va + vm) = 100*vs + 10*va + vm")
    bounds = {v: ("lb_digit", "ub_digit") for v in ("va", "vm", "vs")}
    nonneg = {v: True for v in ("vi", "va", "vm", "vs")}
    conds = [format_literal(c) for c in lower_constraint(cmp, "vi", bounds, nonneg)]
    assert conds == [
        "vi*(10*lb_digit[] + lb_digit[]) <= 100*ub_digit[] + 10*ub_digit[] + ub_digit[]",
        "100*lb_digit[] + 10*lb_digit[] + lb_digit[] <= vi*(10*ub_digit[] + ub_digit[])",
    ]


def test_lowering_ops():
    bounds = {"y": ("lb", "ub")}
    assert lower_constraint(parse_literal("x != y"), "x", bounds, {}) == []
    assert len(lower_constraint(parse_literal("x = y"), "x", bounds, {})) == 2
    (c,) = lower_constraint(parse_literal("x > y + 1"), "x", bounds, {})
    assert format_literal(c) == "lb[] + 1 < x"


def test_one_sided_bounds_drop_conditions():
    (c,) = lower_constraint(parse_literal("x - y <= 100"), "x", {"y": (None, "ub")}, {})
    assert format_literal(c) == "x - ub[] <= 100"
    assert lower_constraint(parse_literal("x + y <= 100"), "x", {"y": (None, "ub")}, {}) == []


def test_unbounded_other_variable():
    with pytest.raises(UnboundedOther):
        bound_exprs(parse_expr("x + z"), "x", {}, {})


def test_signed_product_uses_min_max():
    b = bound_exprs(parse_expr("x*y"), "x", {"y": ("lb", "ub")}, {})
    assert format_expr(b.lo) == "min(x*lb[],x*ub[])"
