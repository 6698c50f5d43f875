"""Stratified semi-naive bottom-up evaluation over columnar int64 relations.

Every column is stored as int64: integers inline, strings as ids interned in
the database's symbol table, entities as opaque ids. A rule body is evaluated
as a sequence of steps over a frame (one array per bound variable): atom
steps equi-join the frame with a relation, comparison steps filter it or add
an assigned column. Arithmetic is checked; leaving int64 raises Overflow.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import build_dep_graph, stratify
from .ir import (
    ATOM_TYPES,
    INT,
    STRING,
    AggRule,
    BinOp,
    Builtin,
    ColType,
    Compare,
    Const,
    FuncAtom,
    FuncLookup,
    Program,
    RefModeAtom,
    RelAtom,
    Rule,
    Var,
    expr_vars,
    fresh_name,
    is_assignment,
    is_primitive_type,
    literal_vars,
)

log = logging.getLogger(__name__)

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
CHUNK_ROWS = 1 << 18


# ---------------------------------------------------------------------------
# errors


class EvalError(Exception):
    code = "EvalError"


class Overflow(EvalError):
    code = "Overflow"


class FunctionalDependencyError(EvalError):
    code = "FunctionalDependencyError"


class LimitExceeded(EvalError):
    code = "LimitExceeded"

    def __init__(self, which, limit):
        self.which = which
        self.limit = limit
        super().__init__(f"LimitExceeded({which}={limit})")


class UnknownPredicate(KeyError):
    code = "UnknownPredicate"

    def __str__(self):
        return f"UnknownPredicate: {self.args[0]}"


# ---------------------------------------------------------------------------
# symbols, relations, database


class Symbols:
    """Interned strings and entity ids shared by one database."""

    def __init__(self):
        self.strings: list[str] = []
        self.string_ids: dict[str, int] = {}
        self.entity_labels: list[tuple[str, str]] = []  # id -> (type, label)
        self.entity_ids: dict[tuple[str, str], int] = {}

    def intern(self, s: str) -> int:
        i = self.string_ids.get(s)
        if i is None:
            i = len(self.strings)
            self.strings.append(s)
            self.string_ids[s] = i
        return i

    def entity(self, etype: str, label: str) -> int:
        k = (etype, label)
        i = self.entity_ids.get(k)
        if i is None:
            i = len(self.entity_labels)
            self.entity_labels.append(k)
            self.entity_ids[k] = i
        return i

    def copy(self):
        s = Symbols()
        s.strings = list(self.strings)
        s.string_ids = dict(self.string_ids)
        s.entity_labels = list(self.entity_labels)
        s.entity_ids = dict(self.entity_ids)
        return s


def _empty(arity):
    return np.empty((0, arity), dtype=np.int64)


def unique_rows(rows):
    """Distinct rows in lexicographic (numeric) order."""
    n, k = rows.shape
    if n <= 1:
        return rows
    if k == 0:
        return rows[:1]
    order = np.lexsort(rows.T[::-1])
    s = rows[order]
    keep = np.ones(n, dtype=bool)
    keep[1:] = np.any(s[1:] != s[:-1], axis=1)
    return s[keep]


def first_occurrences(rows):
    """Indices of the first occurrence of each distinct row."""
    n, k = rows.shape
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if k == 0:
        return np.zeros(1, dtype=np.int64)
    order = np.lexsort(rows.T[::-1])  # stable: equal rows keep index order
    s = rows[order]
    keep = np.ones(n, dtype=bool)
    keep[1:] = np.any(s[1:] != s[:-1], axis=1)
    return np.sort(order[keep])


@dataclass
class Relation:
    """Deduplicated rows of one predicate."""

    name: str
    arity: int
    rows: np.ndarray = None
    types: list = field(default_factory=list)
    key_arity: int | None = None

    def __post_init__(self):
        if self.rows is None:
            self.rows = _empty(self.arity)
        if not self.types:
            self.types = [INT] * self.arity

    def __len__(self):
        return len(self.rows)

    def tuples(self):
        return set(map(tuple, self.rows.tolist()))

    def functional_index(self):
        """key tuple -> value, for functional predicates."""
        k = self.key_arity
        return {tuple(r[:k]): r[k] for r in self.rows.tolist()}


class Database:
    """Predicate name -> Relation, plus the symbol table."""

    def __init__(self, relations=None, symbols=None):
        self.relations: dict[str, Relation] = dict(relations or {})
        self.symbols = symbols or Symbols()

    def __contains__(self, pred):
        return pred in self.relations

    def __getitem__(self, pred):
        try:
            return self.relations[pred]
        except KeyError:
            raise UnknownPredicate(pred) from None

    def get(self, pred):
        return self.relations.get(pred)

    def preds(self):
        return sorted(self.relations)

    def copy(self):
        rels = {
            k: Relation(r.name, r.arity, r.rows, list(r.types), r.key_arity) for k, r in self.relations.items()
        }
        return Database(rels, self.symbols.copy())

    def ensure(self, pred, info):
        if pred not in self.relations:
            self.relations[pred] = Relation(pred, info.arity, types=list(info.types), key_arity=info.key_arity)
        return self.relations[pred]

    def add(self, pred, rows, info=None):
        """Insert rows (python tuples of encoded values or an array)."""
        rel = self.relations.get(pred)
        if rel is None:
            if info is None:
                raise UnknownPredicate(pred)
            rel = self.ensure(pred, info)
        arr = np.asarray(rows, dtype=np.int64).reshape(-1, rel.arity)
        rel.rows = unique_rows(np.vstack([rel.rows, arr]))
        return rel

    def encode(self, value, ctype):
        if ctype.kind == "string":
            return self.symbols.intern(value)
        if ctype.kind == "entity":
            return self.symbols.entity(ctype.entity, str(value))
        return int(value)

    def decode(self, value, ctype):
        if ctype.kind == "string":
            return self.symbols.strings[value]
        if ctype.kind == "entity":
            return self.symbols.entity_labels[value][1]
        return int(value)

    def decoded(self, pred):
        rel = self[pred]
        return [tuple(self.decode(v, t) for v, t in zip(row, rel.types)) for row in rel.rows.tolist()]


def query(db: Database, pred: str) -> list:
    """Decoded tuples of `pred` in lexicographic order."""
    return sorted(db.decoded(pred))


# ---------------------------------------------------------------------------
# statistics and limits


@dataclass
class Limits:
    max_iterations: int = 10**6
    max_tuples: int = 10**8


@dataclass
class RuleStats:
    instantiations: int = 0
    derived: int = 0
    duplicates: int = 0


@dataclass
class StratumStats:
    preds: tuple
    recursive: bool
    iterations: int = 0
    seconds: float = 0.0


@dataclass
class EvalStats:
    rules: dict = field(default_factory=dict)  # clause index -> RuleStats
    strata: list = field(default_factory=list)

    def rule(self, idx):
        if idx not in self.rules:
            self.rules[idx] = RuleStats()
        return self.rules[idx]

    @property
    def instantiations(self):
        return sum(r.instantiations for r in self.rules.values())

    @property
    def derived(self):
        return sum(r.derived for r in self.rules.values())

    @property
    def seconds(self):
        return sum(s.seconds for s in self.strata)

    def instantiations_of(self, indices):
        return sum(self.rules[i].instantiations for i in indices if i in self.rules)


# ---------------------------------------------------------------------------
# checked vector arithmetic


def _overflow(mask, what):
    if mask.any():
        raise Overflow(f"Overflow: int64 {what}")


def _magnitude(a):
    """Largest absolute value in `a` as a python int (0 when empty)."""
    if not len(a):
        return 0
    return max(-int(a.min()), int(a.max()))


def checked_add(a, b):
    if _magnitude(a) + _magnitude(b) <= INT64_MAX:
        return a + b
    r = a + b
    _overflow(((a ^ r) & (b ^ r)) < 0, "addition")
    return r


def checked_sub(a, b):
    if _magnitude(a) + _magnitude(b) <= INT64_MAX:
        return a - b
    r = a - b
    _overflow(((a ^ b) & (a ^ r)) < 0, "subtraction")
    return r


def checked_mul(a, b):
    if _magnitude(a) * _magnitude(b) <= INT64_MAX:
        return a * b
    r = a * b
    approx = a.astype(np.float64) * b.astype(np.float64)
    suspect = np.abs(approx) >= 2.0**62
    if suspect.any():
        for x, y in zip(a[suspect].tolist(), b[suspect].tolist()):
            p = x * y
            if p < INT64_MIN or p > INT64_MAX:
                raise Overflow("Overflow: int64 multiplication")
    return r


_ARITH = {"+": checked_add, "-": checked_sub, "*": checked_mul}
_CMP = {
    "=": np.equal,
    "!=": np.not_equal,
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


# ---------------------------------------------------------------------------
# rule compilation


@dataclass
class AtomStep:
    pred: str
    args: tuple  # ("var", name) | ("const", value)
    position: int  # index among the rule's atoms


@dataclass
class TestStep:
    expr_fn: object
    op: str
    lhs: object
    rhs: object
    needs: tuple


@dataclass
class AssignStep:
    var: str
    expr: object
    needs: tuple


def _lookup_free(rule, taken):
    """Replace FuncLookups inside comparisons by FuncAtoms with fresh variables."""
    body = []
    counter = [0]

    def fresh():
        counter[0] += 1
        name = fresh_name(f"lk_{counter[0]}", taken)
        taken.add(name)
        return name

    def rewrite(e, pre):
        if isinstance(e, FuncLookup):
            keys = tuple(rewrite(k, pre) for k in e.keys)
            key_terms = []
            for k in keys:
                if isinstance(k, (Var, Const)):
                    key_terms.append(k)
                else:
                    v = Var(fresh())
                    pre.append(Compare("=", v, k))
                    key_terms.append(v)
            v = Var(fresh())
            pre.append(FuncAtom(e.pred, tuple(key_terms), v))
            return v
        if isinstance(e, BinOp):
            return BinOp(e.op, rewrite(e.left, pre), rewrite(e.right, pre))
        if isinstance(e, Builtin):
            return Builtin(e.fn, rewrite(e.left, pre), rewrite(e.right, pre))
        return e

    for lit in rule.body:
        if isinstance(lit, Compare):
            pre = []
            c = Compare(lit.op, rewrite(lit.lhs, pre), rewrite(lit.rhs, pre))
            body.extend(pre)
            body.append(c)
        else:
            body.append(lit)
    return body


def _encode_const(value, symbols):
    if isinstance(value, str):
        return symbols.intern(value)
    return int(value)


def _encode_expr(e, symbols):
    if isinstance(e, Const):
        return Const(_encode_const(e.value, symbols))
    if isinstance(e, BinOp):
        return BinOp(e.op, _encode_expr(e.left, symbols), _encode_expr(e.right, symbols))
    if isinstance(e, Builtin):
        return Builtin(e.fn, _encode_expr(e.left, symbols), _encode_expr(e.right, symbols))
    return e


@dataclass
class CompiledRule:
    index: int | None
    heads: list  # [(pred, args)]
    atoms: list  # AtomStep in body order
    compares: list  # encoded Compare
    agg: tuple | None = None  # (method, value var, key vars)
    _plans: dict = field(default_factory=dict)

    def plan(self, first=None):
        """Steps with atom `first` moved to the front and comparisons placed
        as early as their variables allow."""
        if first in self._plans:
            return self._plans[first]
        order = list(self.atoms)
        if first is not None:
            order = [order[first]] + [a for i, a in enumerate(order) if i != first]
        pending = list(self.compares)
        bound: set[str] = set()
        steps = []

        def place():
            progress = True
            while progress:
                progress = False
                for c in list(pending):
                    names = set(literal_vars(c))
                    if names <= bound:
                        steps.append(TestStep(None, c.op, c.lhs, c.rhs, tuple(sorted(names))))
                        pending.remove(c)
                        progress = True
                        continue
                    v = is_assignment(c, bound)
                    if v is not None:
                        other = c.rhs if isinstance(c.lhs, Var) and c.lhs.name == v else c.lhs
                        steps.append(AssignStep(v, other, tuple(sorted(set(expr_vars(other))))))
                        bound.add(v)
                        pending.remove(c)
                        progress = True

        place()
        for a in order:
            steps.append(a)
            bound.update(n for kind, n in a.args if kind == "var")
            place()
        if pending:
            raise EvalError(f"unsafe comparison {pending[0]}")
        # liveness: drop variables no later step or head needs
        head_vars = {n for _, args in self.heads for kind, n in args if kind == "var"}
        if self.agg is not None:
            head_vars |= set(self.agg[2]) | {self.agg[1]}
        live_after = []
        live = set(head_vars)
        for s in reversed(steps):
            live_after.append(frozenset(live))
            if isinstance(s, AtomStep):
                live |= {n for kind, n in s.args if kind == "var"}
            elif isinstance(s, TestStep):
                live |= set(s.needs)
            else:
                live |= set(s.needs)
        live_after.reverse()
        plan = list(zip(steps, live_after))
        self._plans[first] = plan
        return plan


def compile_rule(clause, index, symbols):
    taken = set()
    for lit in clause.body:
        taken.update(literal_vars(lit))
    body = _lookup_free(clause, taken)
    atoms, compares = [], []
    for lit in body:
        if isinstance(lit, ATOM_TYPES):
            if is_primitive_type(lit.pred):
                continue
            args = []
            for t in lit.terms:
                if isinstance(t, Var):
                    args.append(("var", t.name))
                else:
                    args.append(("const", _encode_const(t.value, symbols)))
            atoms.append(AtomStep(lit.pred, tuple(args), len(atoms)))
        elif isinstance(lit, Compare):
            compares.append(Compare(lit.op, _encode_expr(lit.lhs, symbols), _encode_expr(lit.rhs, symbols)))
        else:
            raise EvalError(f"unsupported literal {lit}")

    def head_args(atom):
        out = []
        for t in atom.terms:
            if isinstance(t, Var):
                out.append(("var", t.name))
            else:
                out.append(("const", _encode_const(t.value, symbols)))
        return tuple(out)

    if isinstance(clause, AggRule):
        keys = tuple(k.name for k in clause.head.keys if isinstance(k, Var))
        cr = CompiledRule(index, [(clause.head.pred, head_args(clause.head))], atoms, compares)
        cr.agg = (clause.method, clause.value_var, keys)
        return cr
    return CompiledRule(index, [(h.pred, head_args(h)) for h in clause.head], atoms, compares)


# ---------------------------------------------------------------------------
# body execution


class _IndexCache:
    """Sorted join keys per (relation array, key columns)."""

    def __init__(self):
        self.cache = {}

    def get(self, rows, cols):
        key = (id(rows), cols)
        hit = self.cache.get(key)
        if hit is not None and hit[0] is rows:
            return hit[1], hit[2]
        keys = _composite(rows, cols)
        order = np.argsort(keys, kind="stable")
        entry = (rows, order, keys[order])
        self.cache[key] = entry
        return entry[1], entry[2]

    def clear(self):
        self.cache.clear()


def _composite(rows, cols):
    """One int64 key per row for the given columns (dense packing)."""
    if len(cols) == 1:
        return np.ascontiguousarray(rows[:, cols[0]])
    return _pack([rows[:, c] for c in cols], None)


def _pack(columns, ranges):
    """Injective int64 packing given per-column (lo, hi) ranges."""
    if ranges is None:
        ranges = [(int(c.min()), int(c.max())) if len(c) else (0, 0) for c in columns]
    total = 1
    for lo, hi in ranges:
        total *= hi - lo + 1
    if total >= 2**62:
        return None
    key = np.zeros(len(columns[0]), dtype=np.int64)
    mult = 1
    for c, (lo, hi) in zip(columns, ranges):
        key += (c - lo) * mult
        mult *= hi - lo + 1
    return key


class _Executor:
    def __init__(self, db, limits, stats, debug=False):
        self.db = db
        self.limits = limits
        self.stats = stats
        self.debug = debug
        self.index = _IndexCache()

    # relation source: pred -> rows array
    def run(self, rule, plan, sources):
        """Evaluate a planned body; returns (head rows per head, instantiations)."""
        out = [[] for _ in rule.heads]
        agg_frames = []
        self._inst = 0
        self._step(rule, plan, 0, 1, {}, sources, out, agg_frames)
        if rule.agg is not None:
            return agg_frames, self._inst
        heads = []
        for (pred, args), parts in zip(rule.heads, out):
            arr = np.vstack(parts) if parts else _empty(len(args))
            heads.append(arr)
        return heads, self._inst

    def _step(self, rule, plan, k, n, frame, sources, out, agg_frames):
        while k < len(plan):
            if n == 0:
                return
            step, live = plan[k]
            if isinstance(step, AtomStep):
                rows = sources[step.position] if step.position in sources else sources[step.pred]
                res = self._join(step, rows, n, frame)
                if res is None:
                    return
                lo, counts, order, rows, new_vars = res
                cum = np.cumsum(counts)
                total = int(cum[-1])
                if total == 0:
                    return
                self._inst += total
                # comparisons directly after the join are fused into it
                j = k + 1
                while j < len(plan) and isinstance(plan[j][0], TestStep):
                    j += 1
                tests = [st for st, _ in plan[k + 1 : j]]
                live_out = plan[j - 1][1]
                if total <= CHUNK_ROWS:
                    frame, n = self._gather(frame, live_out, lo, counts, order, rows, new_vars, 0, n, 0, tests)
                    k = j
                    continue
                # materialize in pieces of bounded size
                s = 0
                while s < n:
                    base = int(cum[s - 1]) if s else 0
                    e = int(np.searchsorted(cum, base + CHUNK_ROWS, side="right"))
                    e = min(max(e, s + 1), n)
                    size = int(cum[e - 1]) - base
                    if size:
                        piece, m = self._gather(frame, live_out, lo, counts, order, rows, new_vars, s, e, base, tests)
                        if m:
                            self._step(rule, plan, j, m, piece, sources, out, agg_frames)
                    s = e
                return
            elif isinstance(step, TestStep):
                # consecutive tests share one mask so the frame is compacted once
                mask = None
                while True:
                    if self.debug:
                        missing = [v for v in step.needs if v not in frame]
                        if missing:
                            raise AssertionError(f"comparison evaluated with unbound {missing}")
                    a = self._eval(step.lhs, frame, n)
                    b = self._eval(step.rhs, frame, n)
                    m = _CMP[step.op](a, b)
                    mask = m if mask is None else mask & m
                    if k + 1 < len(plan) and isinstance(plan[k + 1][0], TestStep):
                        k += 1
                        step, live = plan[k]
                    else:
                        break
                frame = {v: col[mask] for v, col in frame.items() if v in live}
                n = int(mask.sum())
            else:
                if self.debug:
                    missing = [v for v in step.needs if v not in frame]
                    if missing:
                        raise AssertionError(f"assignment evaluated with unbound {missing}")
                val = self._eval(step.expr, frame, n)
                frame = {v: col for v, col in frame.items() if v in live}
                if step.var in live:
                    frame[step.var] = val
            k += 1
        if n == 0:
            return
        if rule.agg is not None:
            method, value_var, keys = rule.agg
            agg_frames.append(np.column_stack([frame[v] for v in keys] + [frame[value_var]]))
            return
        for i, (pred, args) in enumerate(rule.heads):
            cols = [frame[name] if kind == "var" else np.full(n, name, dtype=np.int64) for kind, name in args]
            out[i].append(np.column_stack(cols) if cols else np.empty((n, 0), dtype=np.int64))

    def _gather(self, frame, live, lo, counts, order, rows, new_vars, s, e, base, tests=()):
        """Join output rows [s, e) that pass `tests`, as (frame, row count)."""
        c = counts[s:e]
        size = int(c.sum())
        fidx = np.repeat(np.arange(s, e), c)
        offs = np.cumsum(c) - c
        ridx = order[np.repeat(lo[s:e] - offs, c) + np.arange(size)]
        newcol = {v: col for col, v in new_vars}
        cols = {}

        def column(v):
            if v not in cols:
                cols[v] = rows[ridx, newcol[v]] if v in newcol else frame[v][fidx]
            return cols[v]

        if tests:
            mask = None
            for st in tests:
                if self.debug:
                    missing = [v for v in st.needs if v not in frame and v not in newcol]
                    if missing:
                        raise AssertionError(f"comparison evaluated with unbound {missing}")
                env = {v: column(v) for v in st.needs}
                m = _CMP[st.op](self._eval(st.lhs, env, size), self._eval(st.rhs, env, size))
                mask = m if mask is None else mask & m
            fidx, ridx = fidx[mask], ridx[mask]
            cols = {v: col[mask] for v, col in cols.items()}
            size = len(fidx)
        out = {v: column(v) for v in live if v in newcol or v in frame}
        return out, size

    def _eval(self, e, frame, n):
        if isinstance(e, Const):
            return np.full(n, e.value, dtype=np.int64)
        if isinstance(e, Var):
            return frame[e.name]
        a = self._eval(e.left, frame, n)
        b = self._eval(e.right, frame, n)
        if isinstance(e, Builtin):
            return np.minimum(a, b) if e.fn == "min" else np.maximum(a, b)
        return _ARITH[e.op](a, b)

    def _join(self, step, rows, n, frame):
        """Match frame rows with relation rows; returns index arrays."""
        m = len(rows)
        if m == 0:
            return None
        # constant and repeated-variable selections on the relation
        sel = None
        first_col = {}
        for col, (kind, val) in enumerate(step.args):
            if kind == "const":
                c = rows[:, col] == val
                sel = c if sel is None else sel & c
            elif val in first_col:
                c = rows[:, col] == rows[:, first_col[val]]
                sel = c if sel is None else sel & c
            else:
                first_col[val] = col
        if sel is not None:
            rows = rows[sel]
            m = len(rows)
            if m == 0:
                return None
        shared = [(col, v) for v, col in first_col.items() if v in frame]
        new_vars = [(col, v) for v, col in first_col.items() if v not in frame]
        if not shared:
            return np.zeros(n, dtype=np.int64), np.full(n, m, dtype=np.int64), np.arange(m), rows, new_vars
        rcols = tuple(c for c, _ in shared)
        if len(shared) == 1:
            fkey = frame[shared[0][1]]
            order, skeys = self.index.get(rows, rcols)
        else:
            fcols = [frame[v] for _, v in shared]
            rc = [rows[:, c] for c in rcols]
            ranges = []
            for a, b in zip(fcols, rc):
                ranges.append((int(min(a.min(), b.min())), int(max(a.max(), b.max()))))
            fkey = _pack(fcols, ranges)
            rkey = _pack(rc, ranges)
            if fkey is None:
                allrows = np.vstack([np.column_stack(rc), np.column_stack(fcols)])
                _, inv = np.unique(allrows, axis=0, return_inverse=True)
                inv = inv.reshape(-1)
                rkey, fkey = inv[:m], inv[m:]
            order = np.argsort(rkey, kind="stable")
            skeys = rkey[order]
        lo = np.searchsorted(skeys, fkey, side="left")
        hi = np.searchsorted(skeys, fkey, side="right")
        return lo, hi - lo, order, rows, new_vars


# ---------------------------------------------------------------------------
# evaluation


def eval_aggregate(agg: AggRule, db: Database, _executor=None, _compiled=None) -> Relation:
    """Group body solutions by the head keys; min/max of the value variable."""
    ex = _executor or _Executor(db, Limits(), EvalStats())
    cr = _compiled or compile_rule(agg, None, db.symbols)
    sources = {a.pred: db[a.pred].rows if a.pred in db else _empty(len(a.args)) for a in cr.atoms}
    frames, inst = ex.run(cr, cr.plan(), sources)
    if cr.index is not None:
        ex.stats.rule(cr.index).instantiations += inst
    nkeys = len(cr.agg[2])
    arity = len(cr.heads[0][1])
    rows = np.vstack(frames) if frames else _empty(nkeys + 1)
    if len(rows):
        order = np.lexsort(rows.T[::-1])
        rows = rows[order]
        keys = rows[:, :nkeys]
        if nkeys:
            start = np.ones(len(rows), dtype=bool)
            start[1:] = np.any(keys[1:] != keys[:-1], axis=1)
        else:
            start = np.zeros(len(rows), dtype=bool)
            start[0] = True
        if cr.agg[0] == "min":
            rows = rows[start]
        else:
            end = np.roll(start, -1)
            end[-1] = True
            rows = rows[end]
    # head keys may contain constants; rebuild the head tuple
    head_args = cr.heads[0][1]
    cols = []
    key_pos = {v: i for i, v in enumerate(cr.agg[2])}
    for kind, name in head_args[:-1]:
        cols.append(rows[:, key_pos[name]] if kind == "var" else np.full(len(rows), name, dtype=np.int64))
    cols.append(rows[:, -1] if len(rows) else np.empty(0, dtype=np.int64))
    out = np.column_stack(cols) if len(rows) else _empty(arity)
    name = cr.heads[0][0]
    existing = db.get(name)
    types = existing.types if existing is not None else [INT] * arity
    return Relation(name, arity, unique_rows(out), types, key_arity=arity - 1)


def check_functional(rel):
    k = rel.key_arity
    if k is None or len(rel.rows) == 0:
        return
    keys = rel.rows[:, :k]
    if len(unique_rows(keys)) != len(rel.rows):
        first = first_occurrences(keys)
        dup = np.setdiff1d(np.arange(len(rel.rows)), first)[0]
        raise FunctionalDependencyError(
            f"FunctionalDependencyError: {rel.name} maps key {tuple(keys[dup].tolist())} to several values"
        )


def _prepare_db(program, edb):
    schema = program.schema
    db = edb.copy() if edb is not None else Database()
    for pred, info in schema.items():
        if pred in db.relations:
            rel = db.relations[pred]
            rel.types = list(info.types)
            rel.key_arity = info.key_arity
        else:
            db.ensure(pred, info)
    # predicates used without declarations (validated programs have none)
    for c in program.clauses:
        heads = [c.head] if isinstance(c, AggRule) else list(getattr(c, "head", ()))
        for h in heads:
            if h.pred not in db.relations:
                db.relations[h.pred] = Relation(h.pred, len(h.terms))
    return db


def evaluate(program: Program, edb: Database | None = None, limits: Limits | None = None, *, debug=False):
    """Stratified semi-naive fixpoint. Returns (Database, EvalStats)."""
    limits = limits or Limits()
    db = _prepare_db(program, edb)
    stats = EvalStats()
    plan = stratify(build_dep_graph(program))
    ex = _Executor(db, limits, stats, debug)
    compiled = {}
    for idx, c in program.indexed(Rule, AggRule):
        if isinstance(c, Rule) and c.is_fact:
            continue
        compiled[idx] = compile_rule(c, idx, db.symbols)
    facts = {}
    for idx, c in program.indexed(Rule):
        if c.is_fact:
            for h in c.head:
                row = tuple(_encode_const(t.value, db.symbols) for t in h.terms)
                facts.setdefault(h.pred, []).append(row)

    total = [sum(len(r) for r in db.relations.values())]
    for stratum in plan.strata:
        t0 = time.perf_counter()
        st = StratumStats(tuple(sorted(stratum.preds)), stratum.recursive)
        stats.strata.append(st)
        _eval_stratum(program, db, stratum, compiled, facts, ex, limits, stats, st, total)
        st.seconds = time.perf_counter() - t0
        ex.index.clear()
    if debug:
        _check_fixpoint(program, db, compiled, ex)
    return db, stats


def _insert(db, pred, new_rows, total, limits):
    rel = db.relations[pred]
    rel.rows = np.vstack([rel.rows, new_rows]) if len(rel.rows) else new_rows
    check_functional(rel)
    total[0] += len(new_rows)
    if total[0] > limits.max_tuples:
        raise LimitExceeded("max_tuples", limits.max_tuples)


def _new_rows(existing, outputs):
    """Split per-rule head outputs into (new rows, per-output derived counts).

    A row is credited to the first output (in order) that produced it.
    """
    arity = existing.shape[1]
    parts = [existing] + [o for _, o in outputs]
    allrows = np.vstack(parts) if any(len(p) for p in parts) else _empty(arity)
    firsts = first_occurrences(allrows)
    firsts = firsts[firsts >= len(existing)]
    bounds = np.cumsum([len(existing)] + [len(o) for _, o in outputs])
    owner = np.searchsorted(bounds, firsts, side="right") - 1
    counts = np.bincount(owner, minlength=len(outputs)) if len(firsts) else np.zeros(len(outputs), int)
    return allrows[firsts], counts


def _eval_stratum(program, db, stratum, compiled, facts, ex, limits, stats, st, total):
    preds = stratum.preds
    idxs = stratum.clauses
    aggs = [i for i in idxs if isinstance(program.clauses[i], AggRule)]
    rules = [i for i in idxs if isinstance(program.clauses[i], Rule) and not program.clauses[i].is_fact]

    delta = {p: _empty(db.relations[p].arity) for p in preds}

    def commit(outputs_by_pred):
        for p, outs in outputs_by_pred.items():
            rel = db.relations[p]
            new, counts = _new_rows(rel.rows, outs)
            for (idx, o), c in zip(outs, counts):
                if idx is not None:
                    rs = stats.rule(idx)
                    rs.derived += int(c)
                    rs.duplicates += len(o) - int(c)
            if len(new):
                _insert(db, p, new, total, limits)
            delta[p] = np.vstack([delta[p], new]) if len(delta[p]) else new

    # aggregates and facts form the initial delta; existing EDB rows count too
    for p in preds:
        if len(db.relations[p].rows):
            delta[p] = db.relations[p].rows.copy()
    initial = {}
    for i in aggs:
        rel = eval_aggregate(program.clauses[i], db, ex, compiled[i])
        initial.setdefault(rel.name, []).append((i, rel.rows))
    for p in preds:
        if p in facts:
            arr = unique_rows(np.asarray(facts[p], dtype=np.int64).reshape(-1, db.relations[p].arity))
            initial.setdefault(p, []).append((None, arr))
    commit(initial)

    def run(i, first=None, sources=None):
        cr = compiled[i]
        src = {a.pred: db.relations[a.pred].rows for a in cr.atoms}
        if sources:
            src.update(sources)
        heads, inst = ex.run(cr, cr.plan(first), src)
        stats.rule(i).instantiations += inst
        return heads

    recursive_rules = [i for i in rules if any(a.pred in preds for a in compiled[i].atoms)]
    exit_rules = [i for i in rules if i not in recursive_rules]
    outs = {}
    for i in exit_rules:
        for (pred, _), rows in zip(compiled[i].heads, run(i)):
            outs.setdefault(pred, []).append((i, rows))
    commit(outs)
    st.iterations = 1
    if not stratum.recursive:
        return

    while any(len(d) for d in delta.values()):
        st.iterations += 1
        if st.iterations > limits.max_iterations:
            raise LimitExceeded("max_iterations", limits.max_iterations)
        cur_delta = delta
        delta = {p: _empty(db.relations[p].arity) for p in preds}
        full = {p: db.relations[p].rows for p in preds}
        old = {p: full[p][: len(full[p]) - len(cur_delta[p])] for p in preds}
        outs = {}
        for i in recursive_rules:
            cr = compiled[i]
            positions = [a.position for a in cr.atoms if a.pred in preds]
            for pos in positions:
                if not len(cur_delta[cr.atoms[pos].pred]):
                    continue
                sources = {}
                for a in cr.atoms:
                    if a.pred not in preds:
                        continue
                    if a.position == pos:
                        sources[a.position] = cur_delta[a.pred]
                    elif a.position < pos:
                        sources[a.position] = old[a.pred]
                    else:
                        sources[a.position] = full[a.pred]
                for (pred, _), rows in zip(cr.heads, run(i, pos, sources)):
                    outs.setdefault(pred, []).append((i, rows))
        commit(outs)


def _check_fixpoint(program, db, compiled, ex):
    for i, cr in compiled.items():
        if cr.agg is not None:
            continue
        src = {a.pred: db.relations[a.pred].rows for a in cr.atoms}
        heads, _ = ex.run(cr, cr.plan(), src)
        for (pred, _), rows in zip(cr.heads, heads):
            if len(rows):
                new, _ = _new_rows(db.relations[pred].rows, [(None, unique_rows(rows))])
                if len(new):
                    raise AssertionError(f"not a fixpoint: clause {i} derives new {pred} tuples")


__all__ = [
    "CHUNK_ROWS",
    "Database",
    "EvalError",
    "EvalStats",
    "FunctionalDependencyError",
    "check_functional",
    "LimitExceeded",
    "Limits",
    "Overflow",
    "Relation",
    "RuleStats",
    "StratumStats",
    "Symbols",
    "UnknownPredicate",
    "compile_rule",
    "eval_aggregate",
    "evaluate",
    "query",
    "unique_rows",
]
