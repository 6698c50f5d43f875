"""Extended-integer intervals and symbolic lowering of constraints to bounds.

Endpoints are python ints inside the int64 range or `NEG_INF`/`POS_INF`.
Arithmetic that leaves int64 saturates to the matching infinity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .ir import BinOp, Builtin, Compare, Const, FuncLookup, Var, expr_vars

log = logging.getLogger(__name__)

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
NEG_INF = -math.inf
POS_INF = math.inf


def _sat(x):
    """Clamp a product/sum to int64, saturating to infinity. Returns (value, widened)."""
    if isinstance(x, float):
        return x, False
    if x > INT64_MAX:
        return POS_INF, True
    if x < INT64_MIN:
        return NEG_INF, True
    return x, False


def ext_add(a, b):
    if math.isinf(a) and math.isinf(b) and a != b:
        raise ValueError("undefined: inf + -inf")
    if math.isinf(a):
        return a, False
    if math.isinf(b):
        return b, False
    return _sat(a + b)


def ext_neg(a):
    if math.isinf(a):
        return -a
    return -a


def ext_mul(a, b):
    if a == 0 or b == 0:
        return 0, False
    if math.isinf(a) or math.isinf(b):
        return (POS_INF if (a > 0) == (b > 0) else NEG_INF), False
    return _sat(a * b)


@dataclass(frozen=True)
class Interval:
    lo: object
    hi: object
    widened: bool = False

    def __post_init__(self):
        if self.lo is POS_INF and self.hi is NEG_INF:
            return  # EMPTY
        if not self.lo <= self.hi:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")
        if self.lo == POS_INF or self.hi == NEG_INF:
            raise ValueError("interval endpoints must contain a finite point")

    @property
    def is_empty(self):
        return self.lo is POS_INF and self.hi is NEG_INF

    def __contains__(self, x):
        return not self.is_empty and self.lo <= x <= self.hi

    def __str__(self):
        if self.is_empty:
            return "EMPTY"
        lo = "-inf" if self.lo == NEG_INF else str(self.lo)
        hi = "+inf" if self.hi == POS_INF else str(self.hi)
        return f"[{lo}, {hi}]"

    def intersect(self, other):
        if self.is_empty or other.is_empty:
            return EMPTY
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return EMPTY
        return Interval(lo, hi, self.widened or other.widened)

    def hull(self, other):
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi), self.widened or other.widened)

    @classmethod
    def point(cls, x):
        return cls(x, x)


EMPTY = Interval(POS_INF, NEG_INF)
TOP = Interval(NEG_INF, POS_INF)


def _saturated(lo, hi, widened):
    """Interval from possibly saturated endpoints.

    When both ends overflow in the same direction the exact result lies past
    int64; keep the innermost int64 value so the interval stays non-empty.
    """
    if lo == POS_INF:
        lo = INT64_MAX
    if hi == NEG_INF:
        hi = INT64_MIN
    return Interval(lo, hi, widened)


def interval_add(a: Interval, b: Interval) -> Interval:
    lo, w1 = ext_add(a.lo, b.lo)
    hi, w2 = ext_add(a.hi, b.hi)
    return _saturated(lo, hi, a.widened or b.widened or w1 or w2)


def interval_sub(a: Interval, b: Interval) -> Interval:
    lo, w1 = ext_add(a.lo, ext_neg(b.hi))
    hi, w2 = ext_add(a.hi, ext_neg(b.lo))
    return _saturated(lo, hi, a.widened or b.widened or w1 or w2)


def interval_mul(a: Interval, b: Interval) -> Interval:
    prods = [ext_mul(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
    vals = [p for p, _ in prods]
    widened = a.widened or b.widened or any(w for _, w in prods)
    return _saturated(min(vals), max(vals), widened)


def interval_min(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), min(a.hi, b.hi), a.widened or b.widened)


def interval_max(a: Interval, b: Interval) -> Interval:
    return Interval(max(a.lo, b.lo), max(a.hi, b.hi), a.widened or b.widened)


_OPS = {"+": interval_add, "-": interval_sub, "*": interval_mul}
_FNS = {"min": interval_min, "max": interval_max}


def lookup_key(lk: FuncLookup):
    """Env key under which a `p[]` lookup is resolved."""
    return f"{lk.pred}[]"


def eval_interval(expr, env, unknown=None) -> Interval:
    """Sound enclosure of `expr` given variable intervals.

    Unknown variables (and unresolvable lookups) evaluate to TOP; their names
    are added to `unknown` when given, and logged otherwise.
    """
    if isinstance(expr, Const):
        return Interval.point(expr.value)
    if isinstance(expr, Var):
        if expr.name in env:
            return env[expr.name]
        _report(expr.name, unknown)
        return TOP
    if isinstance(expr, FuncLookup):
        key = lookup_key(expr)
        if not expr.keys and key in env:
            return env[key]
        if expr.pred in env and not expr.keys:
            return env[expr.pred]
        _report(key, unknown)
        return TOP
    if isinstance(expr, BinOp):
        return _OPS[expr.op](eval_interval(expr.left, env, unknown), eval_interval(expr.right, env, unknown))
    if isinstance(expr, Builtin):
        return _FNS[expr.fn](eval_interval(expr.left, env, unknown), eval_interval(expr.right, env, unknown))
    raise TypeError(expr)


def _report(name, unknown):
    if unknown is not None:
        unknown.add(name)
    else:
        log.warning("no interval for %s; using (-inf, +inf)", name)


# ---------------------------------------------------------------------------
# symbolic lowering


class UnboundedOther(Exception):
    """A non-target variable of a constraint has no bound names."""

    def __init__(self, var):
        self.var = var
        super().__init__(f"no bounds for {var}")


@dataclass(frozen=True)
class BoundExprPair:
    """Symbolic [lo, hi]; a side is None when it is unbounded."""

    lo: object
    hi: object

    @property
    def is_point(self):
        return self.lo is not None and self.lo == self.hi


def _as_expr(b):
    if b is None or not isinstance(b, str):
        return b
    return FuncLookup(b, ())


def _nonneg_expr(e, nonneg):
    if isinstance(e, Const):
        return isinstance(e.value, int) and e.value >= 0
    if isinstance(e, Var):
        return bool(nonneg.get(e.name))
    if isinstance(e, FuncLookup):
        return bool(nonneg.get(lookup_key(e)))
    if isinstance(e, BinOp):
        return e.op in ("+", "*") and _nonneg_expr(e.left, nonneg) and _nonneg_expr(e.right, nonneg)
    if isinstance(e, Builtin):
        if e.fn == "max":
            return _nonneg_expr(e.left, nonneg) or _nonneg_expr(e.right, nonneg)
        return _nonneg_expr(e.left, nonneg) and _nonneg_expr(e.right, nonneg)
    return False


def _lift(fn, *xs):
    return None if any(x is None for x in xs) else fn(*xs)


def _add(a, b):
    return BinOp("+", a, b)


def _sub(a, b):
    return BinOp("-", a, b)


def _mul(a, b):
    return BinOp("*", a, b)


def _min(*xs):
    if any(x is None for x in xs):
        return None
    out = xs[0]
    for x in xs[1:]:
        out = Builtin("min", out, x)
    return out


def _max(*xs):
    if any(x is None for x in xs):
        return None
    out = xs[0]
    for x in xs[1:]:
        out = Builtin("max", out, x)
    return out


def bound_exprs(expr, target, bounds, nonneg, simplify=True) -> BoundExprPair:
    """Symbolic bounds of `expr`: `target` is a point, other variables range over
    their (lb, ub) expressions from `bounds`.

    `bounds` maps a variable to a pair whose items are a predicate name (read as
    `name[]`), an ArithExpr, or None for an unbounded side. A variable bound to
    the same expression on both sides is a point. `nonneg` maps variable names
    (and `pred[]` lookup keys) to a statically known sign.
    """
    sign = dict(nonneg)

    def nn(e):
        return _nonneg_expr(e, sign)

    def go(e):
        if isinstance(e, Const):
            return BoundExprPair(e, e), nn(e)
        if isinstance(e, FuncLookup):
            return BoundExprPair(e, e), nn(e)
        if isinstance(e, Var):
            if e.name == target:
                return BoundExprPair(e, e), bool(sign.get(e.name))
            if e.name not in bounds:
                raise UnboundedOther(e.name)
            lo, hi = (_as_expr(b) for b in bounds[e.name])
            pos = bool(sign.get(e.name))
            if lo is not None and pos:
                sign[lookup_key(lo) if isinstance(lo, FuncLookup) else getattr(lo, "name", "")] = True
            if hi is not None and pos:
                sign[lookup_key(hi) if isinstance(hi, FuncLookup) else getattr(hi, "name", "")] = True
            return BoundExprPair(lo, hi), pos
        if isinstance(e, Builtin):
            (a, pa), (b, pb) = go(e.left), go(e.right)
            # an absent side is -inf (lo) or +inf (hi): max ignores -inf, min ignores +inf
            if e.fn == "min":
                hi = _min(*[x for x in (a.hi, b.hi) if x is not None]) if a.hi is not None or b.hi is not None else None
                return BoundExprPair(_min(a.lo, b.lo), hi), pa and pb
            lo = _max(*[x for x in (a.lo, b.lo) if x is not None]) if a.lo is not None or b.lo is not None else None
            return BoundExprPair(lo, _max(a.hi, b.hi)), pa or pb
        if isinstance(e, BinOp):
            (a, pa), (b, pb) = go(e.left), go(e.right)
            if e.op == "+":
                return BoundExprPair(_lift(_add, a.lo, b.lo), _lift(_add, a.hi, b.hi)), pa and pb
            if e.op == "-":
                return BoundExprPair(_lift(_sub, a.lo, b.hi), _lift(_sub, a.hi, b.lo)), False
            return _product(a, pa, b, pb, e), pa and pb
        raise TypeError(e)

    def _product(a, pa, b, pb, e):
        if a.is_point and b.is_point:
            return BoundExprPair(_mul(a.lo, b.lo), _mul(a.hi, b.hi))
        if simplify and pa and pb:
            # every factor nonnegative: the product is monotone in each
            return BoundExprPair(_lift(_mul, a.lo, b.lo), _lift(_mul, a.hi, b.hi))
        for c, other, const_left in ((e.left, b, True), (e.right, a, False)):
            if isinstance(c, Const) and isinstance(c.value, int):
                k = c
                mul = (lambda x: _mul(k, x)) if const_left else (lambda x: _mul(x, k))
                if k.value >= 0:
                    return BoundExprPair(_lift(mul, other.lo), _lift(mul, other.hi))
                return BoundExprPair(_lift(mul, other.hi), _lift(mul, other.lo))
        if a.is_point or b.is_point:
            p, iv, p_left = (a.lo, b, True) if a.is_point else (b.lo, a, False)
            if iv.lo is None or iv.hi is None:
                return BoundExprPair(None, None)
            c1 = _mul(p, iv.lo) if p_left else _mul(iv.lo, p)
            c2 = _mul(p, iv.hi) if p_left else _mul(iv.hi, p)
            return BoundExprPair(_min(c1, c2), _max(c1, c2))
        if None in (a.lo, a.hi, b.lo, b.hi):
            return BoundExprPair(None, None)
        cands = [_mul(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
        return BoundExprPair(_min(*cands), _max(*cands))

    return go(expr)[0]


def lower_constraint(cmp: Compare, target, bound_names, signedness, simplify=True) -> list:
    """Necessary conditions on `target` implied by `cmp`.

    Every non-target variable ranges over its bounds. `=` splits into two
    inequalities; `>`/`>=` swap sides; `!=` yields nothing. A condition whose
    side would read an unbounded bound is omitted.
    """
    if target not in set(expr_vars(cmp.lhs)) | set(expr_vars(cmp.rhs)):
        raise ValueError(f"{target} does not occur in the constraint")
    if cmp.op == "!=":
        return []
    if cmp.op == "=":
        pairs = [("<=", cmp.lhs, cmp.rhs), ("<=", cmp.rhs, cmp.lhs)]
    elif cmp.op in ("<", "<="):
        pairs = [(cmp.op, cmp.lhs, cmp.rhs)]
    else:
        pairs = [({">": "<", ">=": "<="}[cmp.op], cmp.rhs, cmp.lhs)]
    out = []
    for op, small, big in pairs:
        lo = bound_exprs(small, target, bound_names, signedness, simplify).lo
        hi = bound_exprs(big, target, bound_names, signedness, simplify).hi
        if lo is None or hi is None:
            continue
        out.append(Compare(op, lo, hi))
    return out


def eval_point(expr, env):
    """Exact integer value of `expr` under a point environment (for oracles)."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, FuncLookup):
        return env[lookup_key(expr)]
    a, b = eval_point(expr.left, env), eval_point(expr.right, env)
    if isinstance(expr, Builtin):
        return min(a, b) if expr.fn == "min" else max(a, b)
    return {"+": a + b, "-": a - b, "*": a * b}[expr.op]


def holds(cmp, env):
    a, b = eval_point(cmp.lhs, env), eval_point(cmp.rhs, env)
    return {
        "=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
    }[cmp.op]


__all__ = [
    "EMPTY",
    "NEG_INF",
    "POS_INF",
    "TOP",
    "BoundExprPair",
    "Interval",
    "UnboundedOther",
    "bound_exprs",
    "eval_interval",
    "eval_point",
    "holds",
    "interval_add",
    "interval_max",
    "interval_min",
    "interval_mul",
    "interval_sub",
    "lower_constraint",
]
