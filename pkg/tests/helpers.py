"""Shared randomized checks used by the property tests and the acceptance run."""

import random

from fpdatalog.interval import (
    INT64_MAX,
    INT64_MIN,
    Interval,
    eval_interval,
    eval_point,
    holds,
    lower_constraint,
)
from fpdatalog.ir import BinOp, Builtin, Compare, Const, Var, expr_vars

VARS = ("x", "y", "z")


def random_expr(rng, depth=3, vars_=VARS):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.6:
            return Var(rng.choice(vars_))
        return Const(rng.randint(-50, 50))
    if rng.random() < 0.15:
        return Builtin(rng.choice(["min", "max"]), random_expr(rng, depth - 1, vars_), random_expr(rng, depth - 1, vars_))
    return BinOp(rng.choice("+-*"), random_expr(rng, depth - 1, vars_), random_expr(rng, depth - 1, vars_))


def random_interval(rng, wide=False):
    span = 10**12 if wide and rng.random() < 0.2 else 40
    a, b = sorted(rng.randint(-span, span) for _ in range(2))
    if wide and rng.random() < 0.05:
        a = rng.choice([a, INT64_MIN])
        b = rng.choice([b, INT64_MAX])
    return Interval(a, b)


def interval_soundness_samples(n, seed=0):
    """Random expressions over random boxes: every point value lies in the enclosure.

    Returns the number of samples checked; raises AssertionError on a violation.
    """
    rng = random.Random(seed)
    for i in range(n):
        expr = random_expr(rng)
        box = {v: random_interval(rng, wide=True) for v in VARS}
        iv = eval_interval(expr, box)
        point = {v: rng.choice([b.lo, b.hi, rng.randint(b.lo, b.hi)]) for v, b in box.items()}
        value = eval_point(expr, point)
        if INT64_MIN <= value <= INT64_MAX:
            assert value in iv, (i, expr, box, point, value, iv)
        else:
            assert iv.widened, (i, expr, box, value, iv)
    return n


def lowering_soundness_samples(n, seed=0):
    """Random constraints; any solution point satisfies the lowered conditions
    once bound names are replaced by the actual extremes of the other variables."""
    rng = random.Random(seed)
    checked = 0
    while checked < n:
        cmp = Compare(rng.choice(["<", "<=", "=", ">=", ">"]), random_expr(rng, 2), random_expr(rng, 2))
        names = set(expr_vars(cmp.lhs)) | set(expr_vars(cmp.rhs))
        if "x" not in names:
            continue
        others = sorted(names - {"x"})
        boxes = {v: random_interval(rng) for v in others}
        signed = {v: b.lo >= 0 for v, b in boxes.items()}
        bounds = {v: (f"lb_{v}", f"ub_{v}") for v in others}
        conds = lower_constraint(cmp, "x", bounds, signed)
        for _ in range(20):
            env = {v: rng.randint(b.lo, b.hi) for v, b in boxes.items()}
            env["x"] = rng.randint(-60, 60)
            if not holds(cmp, env):
                continue
            ext = dict(env)
            for v, b in boxes.items():
                ext[f"lb_{v}[]"] = b.lo
                ext[f"ub_{v}[]"] = b.hi
            for c in conds:
                assert holds(c, ext), (cmp, c, env, boxes)
        checked += 1
    return checked
