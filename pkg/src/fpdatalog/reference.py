"""Naive tuple-at-a-time evaluator used as a test oracle.

Re-runs every rule of a stratum against the full relations until nothing
changes. Slow by design; it shares only the stratification and the body
ordering with the columnar engine.
"""

from __future__ import annotations

from .analysis import build_dep_graph, safety_order, stratify
from .engine import Database, Overflow, _encode_const
from .ir import (
    ATOM_TYPES,
    AggRule,
    Builtin,
    Compare,
    Const,
    FuncLookup,
    Program,
    Rule,
    Var,
    is_assignment,
    is_primitive_type,
)

INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1

_TESTS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class _Lookups:
    """Functional index (keys -> value) per predicate, rebuilt on demand."""

    def __init__(self, rels):
        self.rels = rels
        self.cache = {}

    def get(self, pred, keys):
        rows = self.rels.get(pred, set())
        idx = self.cache.get(pred)
        if idx is None or idx[0] != len(rows):
            idx = (len(rows), {r[:-1]: r[-1] for r in rows})
            self.cache[pred] = idx
        return idx[1].get(keys)


def _eval(e, env, symbols, lookups):
    if isinstance(e, Const):
        return _encode_const(e.value, symbols)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, FuncLookup):
        keys = tuple(_eval(k, env, symbols, lookups) for k in e.keys)
        v = lookups.get(e.pred, keys)
        if v is None:
            raise KeyError(e.pred)
        return v
    a = _eval(e.left, env, symbols, lookups)
    b = _eval(e.right, env, symbols, lookups)
    if isinstance(e, Builtin):
        return min(a, b) if e.fn == "min" else max(a, b)
    r = a + b if e.op == "+" else a - b if e.op == "-" else a * b
    if r < INT64_MIN or r > INT64_MAX:
        raise Overflow(f"Overflow: {a} {e.op} {b}")
    return r


def solutions(body, rels, symbols, env=None):
    """Yield every variable binding satisfying `body` (already safety-ordered)."""
    lookups = _Lookups(rels)

    def go(i, env):
        if i == len(body):
            yield dict(env)
            return
        lit = body[i]
        if isinstance(lit, ATOM_TYPES):
            if is_primitive_type(lit.pred):
                yield from go(i + 1, env)
                return
            terms = lit.terms
            for row in rels.get(lit.pred, ()):
                new = dict(env)
                ok = True
                for t, v in zip(terms, row):
                    if isinstance(t, Const):
                        if _encode_const(t.value, symbols) != v:
                            ok = False
                            break
                    elif t.name in new:
                        if new[t.name] != v:
                            ok = False
                            break
                    else:
                        new[t.name] = v
                if ok:
                    yield from go(i + 1, new)
            return
        assert isinstance(lit, Compare), lit
        try:
            var = is_assignment(lit, env.keys())
            if var is not None:
                other = lit.rhs if isinstance(lit.lhs, Var) and lit.lhs.name == var else lit.lhs
                new = dict(env)
                new[var] = _eval(other, env, symbols, lookups)
                yield from go(i + 1, new)
                return
            a = _eval(lit.lhs, env, symbols, lookups)
            b = _eval(lit.rhs, env, symbols, lookups)
        except KeyError:
            return  # absent functional value: no solution
        if _TESTS[lit.op](a, b):
            yield from go(i + 1, env)

    yield from go(0, dict(env or {}))


def _head_row(atom, env, symbols):
    return tuple(env[t.name] if isinstance(t, Var) else _encode_const(t.value, symbols) for t in atom.terms)


def naive_evaluate(program: Program, edb: Database | None = None) -> dict:
    """Evaluate `program`; returns {pred: set of encoded tuples}.

    The symbol table of `edb` is extended in place with program constants.
    """
    edb = edb if edb is not None else Database()
    symbols = edb.symbols
    rels = {p: set(r.tuples()) for p, r in edb.relations.items()}
    for p in program.schema:
        rels.setdefault(p, set())
    plan = stratify(build_dep_graph(program))
    for stratum in plan.strata:
        clauses = [program.clauses[i] for i in stratum.clauses]
        for c in clauses:
            if isinstance(c, Rule) and c.is_fact:
                for h in c.head:
                    rels.setdefault(h.pred, set()).add(_head_row(h, {}, symbols))
        for c in clauses:
            if isinstance(c, AggRule):
                rels.setdefault(c.head.pred, set()).update(_aggregate(c, rels, symbols))
        rules = [safety_order(c) for c in clauses if isinstance(c, Rule) and not c.is_fact]
        changed = True
        while changed:
            changed = False
            for r in rules:
                new = set()
                for env in solutions(r.body, rels, symbols):
                    for h in r.head:
                        new.add((h.pred, _head_row(h, env, symbols)))
                for pred, row in new:
                    target = rels.setdefault(pred, set())
                    if row not in target:
                        target.add(row)
                        changed = True
    return rels


def _aggregate(agg: AggRule, rels, symbols):
    ordered = safety_order(agg)
    best = {}
    pick = min if agg.method == "min" else max
    for env in solutions(ordered.body, rels, symbols):
        key = tuple(env[k.name] if isinstance(k, Var) else _encode_const(k.value, symbols) for k in agg.head.keys)
        v = env[agg.value_var]
        best[key] = pick(best[key], v) if key in best else v
    return {k + (v,) for k, v in best.items()}


__all__ = ["naive_evaluate", "solutions"]
