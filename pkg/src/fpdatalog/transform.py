"""Filter-predicate transformation.

For every generator atom whose values are constrained by arithmetic
comparisons, a filter predicate keeps only the tuples that can satisfy the
necessary bound conditions obtained by `interval.lower_constraint`. Bounds
of the other variables are read from shared `lb_*`/`ub_*` predicates: exact
aggregates for non-recursive predicates, rule-wise approximations for
predicates defined by recursion.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field

from .analysis import (
    SafetyError,
    StratumPlan,
    build_dep_graph,
    find_generator_chains,
    safety_order,
    stratify,
)
from .interval import UnboundedOther, bound_exprs, lower_constraint
from .ir import (
    ATOM_TYPES,
    AggRule,
    BinOp,
    Builtin,
    Compare,
    Const,
    Declaration,
    FuncAtom,
    FuncLookup,
    Program,
    RefModeAtom,
    RelAtom,
    Rule,
    Var,
    expr_lookups,
    expr_vars,
    fresh_name,
    is_anonymous,
    is_assignment,
    is_primitive_type,
    literal_preds,
    literal_vars,
    subst_expr,
    validate,
    with_pred,
)

log = logging.getLogger(__name__)

LB, UB = "lb", "ub"
EXACT, APPROXIMATED, UNBOUNDED = "exact-aggregate", "approximated", "unbounded"


class TransformError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class BoundName:
    """`lb_<base>` / `ub_<base>` for one bounded column."""

    pred: str
    column: int
    kind: str
    name: str

    def __str__(self):
        return self.name

    @property
    def lookup(self):
        return FuncLookup(self.name, ())


@dataclass
class BoundApprox:
    bound: BoundName
    key: tuple
    status: str
    agg_body: tuple = ()  # exact: aggregate body, value variable `v`
    expr: object = None  # approximated: combined symbolic bound
    contributions: list = field(default_factory=list)
    type_name: str = "int[64]"
    nonneg: bool = False

    @property
    def bounded(self):
        return self.status != UNBOUNDED


@dataclass(frozen=True)
class FilterSpec:
    rule_index: int | None
    chains: tuple
    name: str
    generator: RelAtom
    generator_index: int
    head: RelAtom
    body: tuple
    conditions: tuple
    bounds_used: tuple  # BoundName

    @property
    def rule(self):
        return Rule((self.head,), self.body)


@dataclass
class TransformResult:
    program: Program
    filters: list
    bounds: "BoundPlan"
    rewritten: dict  # clause index -> rewritten Rule
    skipped: list  # (clause index, reason)

    @property
    def filter_generators(self):
        """Filter predicate -> generator predicate."""
        return {f.name: f.generator.pred for f in self.filters}


# ---------------------------------------------------------------------------
# per-rule facts


def _atom_index(program, rule):
    """var -> list of (pred, column) occurrences in body atoms."""
    schema = program.schema
    out = defaultdict(list)
    for lit in rule.body:
        if isinstance(lit, ATOM_TYPES) and lit.pred in schema:
            for col, t in enumerate(lit.terms):
                if isinstance(t, Var):
                    out[t.name].append((lit.pred, col))
    return out


class RuleInfo:
    """Assignment substitution, comparisons and chains of one rule."""

    def __init__(self, rule, program, chains=None):
        self.rule = rule
        self.program = program
        body = rule.body
        self.atom_vars = {v for lit in body if isinstance(lit, ATOM_TYPES) for v in literal_vars(lit)}
        self.all_vars = set(self.atom_vars)
        for lit in body:
            self.all_vars.update(literal_vars(lit))
        for h in rule.head if isinstance(rule, Rule) else (rule.head,):
            self.all_vars.update(literal_vars(h))

        ordered = safety_order(rule)
        self.mapping = {}
        assigns = set()
        bound = set()
        for lit in ordered.body:
            if isinstance(lit, ATOM_TYPES):
                bound.update(literal_vars(lit))
            elif isinstance(lit, Compare):
                v = is_assignment(lit, bound)
                if v is None:
                    continue
                bound.add(v)
                if v not in self.atom_vars:
                    other = lit.rhs if isinstance(lit.lhs, Var) and lit.lhs.name == v else lit.lhs
                    self.mapping[v] = subst_expr(other, self.mapping)
                    assigns.add(lit)
        self.compares = []
        for lit in body:
            if isinstance(lit, Compare) and lit not in assigns and lit.op != "!=":
                self.compares.append(
                    Compare(lit.op, subst_expr(lit.lhs, self.mapping), subst_expr(lit.rhs, self.mapping))
                )
        occ = _atom_index(program, rule)
        schema = program.schema
        self.nonneg = {v: any(schema[p].nonneg[c] for p, c in cols) for v, cols in occ.items()}
        if chains is None:
            chains = find_generator_chains(rule, program)
        self.chains = list(chains)
        self.all_chains = find_generator_chains(rule, program, variables=sorted(occ))
        self.chains_by_var = defaultdict(list)
        for c in self.all_chains:
            self.chains_by_var[c.value_var].append(c)

    def const_bounds(self, var):
        """Tightest constant (lo, hi) stated on `var` by a body comparison."""
        lo = hi = None
        for lit in self.rule.body:
            if not isinstance(lit, Compare):
                continue
            op, a, b = lit.op, lit.lhs, lit.rhs
            if isinstance(b, Var) and b.name == var and isinstance(a, Const):
                a, b = b, a
                op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[op]
            if not (isinstance(a, Var) and a.name == var and isinstance(b, Const)):
                continue
            if not isinstance(b.value, int):
                continue
            c = b.value
            new_lo = {">": c + 1, ">=": c, "=": c}.get(op)
            new_hi = {"<": c - 1, "<=": c, "=": c}.get(op)
            if new_lo is not None:
                lo = new_lo if lo is None else max(lo, new_lo)
            if new_hi is not None:
                hi = new_hi if hi is None else min(hi, new_hi)
        return lo, hi


# ---------------------------------------------------------------------------
# bound planning


def _fold(fn, exprs):
    """Combine bound expressions with min/max, folding constants."""
    consts = [e.value for e in exprs if isinstance(e, Const)]
    out, seen, const_done = [], set(), False
    for e in exprs:
        if isinstance(e, Const):
            if not const_done:
                out.append(Const(fn(consts)))
                const_done = True
        elif e not in seen:
            seen.add(e)
            out.append(e)
    result = out[0]
    for e in out[1:]:
        result = Builtin(fn.__name__, result, e)
    return result


def _tighten(expr, c, fn):
    if c is None:
        return expr
    if expr is None:
        return Const(c)
    if isinstance(expr, Const):
        return Const(fn(expr.value, c))
    return Builtin(fn.__name__, expr, Const(c))


def _canonical_vars(literals, value_var):
    """Rename variables for an aggregate body: value -> v, shared -> d, d1, ...,
    single-occurrence -> wildcard."""
    counts = defaultdict(int)
    for lit in literals:
        for t in lit.terms:
            if isinstance(t, Var):
                counts[t.name] += 1
    names, k, anon = {value_var: "v"}, 0, 0
    for lit in literals:
        for t in lit.terms:
            if isinstance(t, Var) and t.name not in names:
                if counts[t.name] == 1:
                    anon += 1
                    names[t.name] = f"_{anon}"
                else:
                    names[t.name] = "d" if k == 0 else f"d{k}"
                    k += 1

    def ren(t):
        return Var(names[t.name]) if isinstance(t, Var) else t

    out = []
    for lit in literals:
        if isinstance(lit, RelAtom):
            out.append(RelAtom(lit.pred, tuple(ren(a) for a in lit.args)))
        elif isinstance(lit, RefModeAtom):
            out.append(RefModeAtom(lit.pred, ren(lit.key), ren(lit.value)))
        else:
            out.append(FuncAtom(lit.pred, tuple(ren(a) for a in lit.keys), ren(lit.value)))
    return tuple(out)


def _column_atom(info, col):
    """Atom over `info`'s predicate with `v` at `col` and wildcards elsewhere."""
    terms = [Var(f"_{i + 1}") for i in range(info.arity)]
    terms[col] = Var("v")
    k = 0
    for i in range(info.arity):
        if i != col:
            k += 1
            terms[i] = Var(f"_{k}")
    if info.kind == "refmode":
        return RefModeAtom(info.name, terms[0], terms[1])
    if info.kind == "functional":
        return FuncAtom(info.name, tuple(terms[:-1]), terms[-1])
    return RelAtom(info.name, tuple(terms))


class BoundPlan(Mapping):
    """Bound planning for one program.

    Keys are `("col", pred, column)` for a single column or
    `("chain", literals)` for a generator-plus-functional-chain pattern. As a
    mapping it exposes the column bounds keyed by `(pred, column, kind)`.
    """

    def __init__(self, program: Program, plan: StratumPlan):
        self.program = program
        self.plan = plan
        self.schema = program.schema
        self._entries = {}
        self._names = {}  # key -> base name
        self._by_name = {}  # rendered bound name -> (key, kind)
        self._taken = set(self.schema) | program.defined_preds()
        for c in program.clauses:
            for lit in _clause_literals(c):
                self._taken.update(literal_preds(lit))
        self._infos = {}
        self.readers = defaultdict(set)  # (key, kind) -> clause indices of reading rules
        self.used = []  # (key, kind) in first-use order
        for pred in sorted(self.schema):
            for col in self.schema[pred].numeric_columns():
                self.entry(("col", pred, col))

    # -- mapping over column bounds
    def __getitem__(self, k):
        pred, col, kind = k
        return self.entry(("col", pred, col))[kind]

    def __iter__(self):
        return iter(
            (k[1], k[2], kind) for k in list(self._entries) if k[0] == "col" for kind in (LB, UB)
        )

    def __len__(self):
        return 2 * sum(1 for k in self._entries if k[0] == "col")

    # -- helpers
    def rule_info(self, idx, clause):
        if idx is None:
            return RuleInfo(clause, self.program)
        if idx not in self._infos:
            self._infos[idx] = RuleInfo(clause, self.program)
        return self._infos[idx]

    def _recursive(self, pred):
        try:
            return self.plan.recursive_scc(pred) is not None
        except KeyError:
            return False

    def resolve(self, chain):
        """Bound key for the values a generator chain produces."""
        if not chain.chain:
            return ("col", chain.generator.pred, chain.column)
        if not any(self._recursive(p) for p in chain.preds):
            return ("chain", _canonical_vars((chain.generator,) + chain.chain, chain.value_var))
        return ("col", chain.terminal, chain.column)

    def _base_name(self, key):
        if key in self._names:
            return self._names[key]
        if key[0] == "col":
            pred, col = key[1], key[2]
            base = pred + (f"_c{col}" if len(self.schema[pred].numeric_columns()) > 1 else "")
        else:
            lits = key[1]
            gen, last = lits[0], lits[-1]
            ginfo = self.schema.get(gen.pred)
            if len(lits) == 2 and isinstance(last, RefModeAtom) and ginfo is not None and ginfo.kind == "entity":
                base = gen.pred
            else:
                base = f"{gen.pred}_{last.pred}"
        cand, k = base, 1
        while any(n in self._taken for n in _bound_pred_names(cand)):
            k += 1
            cand = f"{base}_{k}"
        self._taken.update(_bound_pred_names(cand))
        self._names[key] = cand
        return cand

    def entry(self, key):
        if key in self._entries:
            if self._entries[key] is None:
                raise RuntimeError(f"cyclic bound approximation at {key}")
            return self._entries[key]
        self._entries[key] = None
        base = self._base_name(key)
        if key[0] == "col":
            pred, col = key[1], key[2]
            info = self.schema[pred]
            type_name, nonneg = info.type_names[col], info.nonneg[col]
        else:
            last = key[1][-1]
            info = self.schema[last.pred]
            pred, col = last.pred, info.arity - 1
            type_name, nonneg = info.type_names[col], info.nonneg[col]
        names = {kind: BoundName(pred, col, kind, f"{kind}_{base}") for kind in (LB, UB)}
        if key[0] == "col" and self._recursive(pred):
            out = self._approximate(key, names)
        else:
            body = (_column_atom(info, col),) if key[0] == "col" else key[1]
            out = {
                kind: BoundApprox(names[kind], key, EXACT, agg_body=body, type_name=type_name, nonneg=nonneg)
                for kind in (LB, UB)
            }
        for kind, b in out.items():
            self._by_name[b.bound.name] = (key, kind)
        self._entries[key] = out
        return out

    def lookup_for(self, key, kind):
        b = self.entry(key)[kind]
        return b.bound.lookup if b.bounded else None

    # -- recursive approximation
    def _approximate(self, key, names):
        pred, col = key[1], key[2]
        scc = self.plan.recursive_scc(pred)
        contribs = {LB: [], UB: []}
        for idx, clause in self.program.indexed(Rule, AggRule):
            if isinstance(clause, AggRule):
                if clause.head.pred != pred:
                    continue
                head = clause.head
                terms = list(head.keys) + [Var(clause.value_var)]
                heads = [terms]
                clause = Rule((RelAtom(head.pred, tuple(terms)),), clause.body, span=clause.span)
            else:
                heads = [list(h.terms) for h in clause.head if h.pred == pred]
            for terms in heads:
                term = terms[col]
                lo, hi = self._contribution(idx, clause, term, scc)
                contribs[LB].append(lo)
                contribs[UB].append(hi)
        out = {}
        for kind in (LB, UB):
            parts = contribs[kind]
            if not parts or any(p is None for p in parts):
                out[kind] = BoundApprox(names[kind], key, UNBOUNDED, contributions=parts)
                continue
            fn = min if kind == LB else max
            out[kind] = BoundApprox(
                names[kind], key, APPROXIMATED, expr=_fold(fn, parts), contributions=_dedupe_fold(fn, parts)
            )
        return out

    def _contribution(self, idx, rule, term, scc):
        if isinstance(term, Const):
            return (term, term) if isinstance(term.value, int) else (None, None)
        if rule.is_fact:
            return None, None
        try:
            info = self.rule_info(idx, rule) if rule is self.program.clauses[idx] else RuleInfo(rule, self.program)
        except SafetyError:
            return None, None
        v = term.name
        lo = hi = None
        for ch in info.chains_by_var.get(v, []):
            if not set(ch.preds) & scc:
                k = self.resolve(ch)
                lo, hi = self.lookup_for(k, LB), self.lookup_for(k, UB)
                break
        else:
            if v in info.mapping:
                expr = info.mapping[v]
                bmap = {}
                for u in set(expr_vars(expr)):
                    bmap[u] = (None, None)
                    for ch in info.chains_by_var.get(u, []):
                        if not set(ch.preds) & scc:
                            k = self.resolve(ch)
                            bmap[u] = (self.lookup_for(k, LB), self.lookup_for(k, UB))
                            break
                if not any(lk.keys for lk in expr_lookups(expr)):
                    pair = bound_exprs(expr, None, bmap, {})
                    lo, hi = pair.lo, pair.hi
        clo, chi = info.const_bounds(v)
        return _tighten(lo, clo, max), _tighten(hi, chi, min)

    # -- use tracking and emission
    def use(self, key, kind, reader):
        if (key, kind) not in self.used:
            self.used.append((key, kind))
        if reader is not None:
            self.readers[(key, kind)].add(reader)

    def _operands(self, b):
        out = []
        for e in [b.expr] if b.expr is not None else []:
            for lk in expr_lookups(e):
                if lk.pred in self._by_name and self._by_name[lk.pred] not in out:
                    out.append(self._by_name[lk.pred])
        return out

    def _chain_keys(self, idx, clause):
        if isinstance(clause, Rule) and clause.is_fact:
            return set()
        if isinstance(clause, AggRule):
            clause = Rule((clause.head,), clause.body, span=clause.span)
        try:
            info = RuleInfo(clause, self.program)
        except SafetyError:
            return set()
        return {self.resolve(c) for c in info.all_chains}

    def _closure(self):
        """Used bounds plus the operands of used approximations, in order."""
        order = list(self.used)
        operand_of = set()
        i = 0
        while i < len(order):
            key, kind = order[i]
            b = self.entry(key)[kind]
            if b.status == APPROXIMATED:
                for op in self._operands(b):
                    operand_of.add(op)
                    if op not in order:
                        order.append(op)
            i += 1
        return order, operand_of

    def form(self, key, kind, operand_of):
        """'expression' (a single min/max expression) or 'parts' (aggregate over contributions).

        The expression form is absent whenever one operand is absent. That is
        harmless when the missing operand forces the bounded predicate to be
        empty (it occurs in every exit rule of its SCC) or keeps every reader
        rule from firing (it occurs in each of them).
        """
        if (key, kind) in operand_of:
            return "parts"
        b = self.entry(key)[kind]
        ops = self._operands(b)
        if not ops:
            return "expression"
        scc = self.plan.recursive_scc(key[1])
        exits = []
        for idx, c in self.program.indexed(Rule, AggRule):
            heads = [c.head] if isinstance(c, AggRule) else c.head
            if not any(h.pred in scc for h in heads):
                continue
            body_preds = {p for lit in c.body for p in literal_preds(lit)}
            if not body_preds & scc:
                exits.append(self._chain_keys(idx, c))
        readers = [self._chain_keys(i, self.program.clauses[i]) for i in sorted(self.readers[(key, kind)])]
        for op_key, _ in ops:
            in_exits = bool(exits) and all(op_key in ks for ks in exits)
            in_readers = bool(readers) and all(op_key in ks for ks in readers)
            if not (in_exits or in_readers):
                return "parts"
        return "expression"

    def emit(self):
        """(declarations, defining clauses) for every used bound, each once."""
        order, operand_of = self._closure()
        decls, clauses = [], []
        for key, kind in order:
            b = self.entry(key)[kind]
            if not b.bounded:
                continue
            n = Var("n")
            head = FuncAtom(b.bound.name, (), n)
            method = "min" if kind == LB else "max"
            decls.append(Declaration((head,), (RelAtom(b.type_name, (n,)),)))
            if b.status == EXACT:
                clauses.append(AggRule(head, method, "v", b.agg_body))
                continue
            if self.form(key, kind, operand_of) == "expression":
                clauses.append(Rule((head,), (Compare("=", n, b.expr),)))
                continue
            parts = f"{b.bound.name}_parts"
            v = Var("v")
            decls.append(Declaration((RelAtom(parts, (v,)),), (RelAtom("int[64]", (v,)),)))
            for c in b.contributions:
                clauses.append(Rule((RelAtom(parts, (v,)),), (Compare("=", v, c),)))
            clauses.append(AggRule(head, method, "v", (RelAtom(parts, (v,)),)))
        return decls, clauses


def _dedupe_fold(fn, parts):
    consts = [p.value for p in parts if isinstance(p, Const)]
    out = []
    for p in parts:
        if isinstance(p, Const):
            p = Const(fn(consts))
        if p not in out:
            out.append(p)
    return out


def _bound_pred_names(base):
    return [f"lb_{base}", f"ub_{base}", f"lb_{base}_parts", f"ub_{base}_parts"]


def _clause_literals(c):
    if isinstance(c, Declaration):
        return list(c.lhs) + list(c.rhs)
    if isinstance(c, AggRule):
        return [c.head] + list(c.body)
    return list(c.head) + list(c.body)


def plan_bounds(program: Program, plan: StratumPlan | None = None) -> BoundPlan:
    if plan is None:
        plan = stratify(build_dep_graph(program))
    return BoundPlan(program, plan)


# ---------------------------------------------------------------------------
# filters


class FilterRegistry:
    """Program-wide filter names; structurally identical filters are shared."""

    def __init__(self, program):
        self.taken = set(program.schema) | program.defined_preds()
        for c in program.clauses:
            for lit in _clause_literals(c):
                self.taken.update(literal_preds(lit))
        self.by_shape = {}
        self.specs = []

    def register(self, base, rule_index, shape):
        if shape in self.by_shape:
            return self.by_shape[shape], False
        name = base
        if name in self.taken:
            name = f"{base}_r{rule_index}" if rule_index is not None else base
            name = fresh_name(name, self.taken)
        self.taken.add(name)
        self.by_shape[shape] = name
        return name, True


def _shape(head, body):
    """Variable-renaming-invariant form of a filter clause."""
    names = {}

    def ren(name):
        if name not in names:
            names[name] = f"V{len(names)}"
        return names[name]

    def term(t):
        return Var(ren(t.name)) if isinstance(t, Var) else t

    def expr(e):
        if isinstance(e, Var):
            return Var(ren(e.name))
        if isinstance(e, BinOp):
            return BinOp(e.op, expr(e.left), expr(e.right))
        if isinstance(e, Builtin):
            return Builtin(e.fn, expr(e.left), expr(e.right))
        if isinstance(e, FuncLookup):
            return FuncLookup(e.pred, tuple(expr(k) for k in e.keys))
        return e

    def lit(x):
        if isinstance(x, RelAtom):
            return RelAtom(x.pred, tuple(term(a) for a in x.args))
        if isinstance(x, RefModeAtom):
            return RefModeAtom(x.pred, term(x.key), term(x.value))
        if isinstance(x, FuncAtom):
            return FuncAtom(x.pred, tuple(term(k) for k in x.keys), term(x.value))
        return Compare(x.op, expr(x.lhs), expr(x.rhs))

    return (lit(head),) + tuple(lit(x) for x in body)


def _ground_value(e):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, (BinOp, Builtin)):
        a, b = _ground_value(e.left), _ground_value(e.right)
        if a is None or b is None:
            return None
        if isinstance(e, Builtin):
            return min(a, b) if e.fn == "min" else max(a, b)
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    return None


def _trivially_true(cmp):
    a, b = _ground_value(cmp.lhs), _ground_value(cmp.rhs)
    if a is None or b is None:
        return False
    return {"<": a < b, "<=": a <= b, "=": a == b}.get(cmp.op, False)


def _rename_expr(e, mapping):
    return subst_expr(e, {k: Var(v) for k, v in mapping.items()})


def _replace_keyed_lookups(e, point, fresh):
    """Keyed lookups whose keys are not all points become fresh free variables."""
    if isinstance(e, FuncLookup):
        if e.keys and not all(v in point for v in expr_vars(e)):
            return fresh(e)
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, _replace_keyed_lookups(e.left, point, fresh), _replace_keyed_lookups(e.right, point, fresh))
    if isinstance(e, Builtin):
        return Builtin(e.fn, _replace_keyed_lookups(e.left, point, fresh), _replace_keyed_lookups(e.right, point, fresh))
    return e


def _filter_for(g, info, bounds, registry, rule_index, simplify):
    rule = info.rule
    body = list(rule.body)
    gen = body[g]
    gchains = [c for c in info.chains if c.generator_index == g]
    if not gchains:
        return None

    # variables with a single value per filter tuple
    point_src = {v: () for v in literal_vars(gen)}
    for c in info.all_chains:
        if c.generator_index == g:
            for j in c.chain_indices:
                for v in literal_vars(body[j]):
                    point_src.setdefault(v, tuple(c.chain_indices))
    for j, lit in enumerate(body):
        if isinstance(lit, FuncAtom) and not lit.keys and j != g:
            for v in literal_vars(lit):
                point_src.setdefault(v, (j,))

    placeholders = {}  # placeholder name -> (key, kind)
    free = {}

    def placeholder(key, kind):
        b = bounds.entry(key)[kind]
        if not b.bounded:
            return None
        name = f"\0{kind}:{b.bound.name}"
        placeholders[name] = (key, kind)
        return Var(name)

    def fresh(lk):
        name = f"\0free{len(free)}"
        free[name] = lk
        return Var(name)

    conditions, targets = [], []
    for c in gchains:
        v = c.value_var
        for cmp in info.compares:
            cmp = Compare(
                cmp.op,
                _replace_keyed_lookups(cmp.lhs, point_src, fresh),
                _replace_keyed_lookups(cmp.rhs, point_src, fresh),
            )
            names = set(literal_vars(cmp))
            if v not in names:
                continue
            bmap, sign = {}, {}
            for u in names:
                sign[u] = info.nonneg.get(u, False)
                if u == v:
                    continue
                if u in point_src:
                    bmap[u] = (Var(u), Var(u))
                    continue
                bmap[u] = (None, None)
                for ch in info.chains_by_var.get(u, []):
                    key = bounds.resolve(ch)
                    bmap[u] = (placeholder(key, LB), placeholder(key, UB))
                    break
            for pair in bmap.values():
                for p in pair:
                    if p is not None and p.name in placeholders:
                        key, kind = placeholders[p.name]
                        sign[p.name] = bounds.entry(key)[kind].nonneg
            try:
                lowered = lower_constraint(cmp, v, bmap, sign, simplify=simplify)
            except UnboundedOther:
                continue
            for cond in lowered:
                if any(n in free for n in literal_vars(cond)) or _trivially_true(cond):
                    continue
                if cond not in conditions:
                    conditions.append(cond)
                    if v not in targets:
                        targets.append(v)
    if not conditions:
        return None

    # bound variables t_1, t_2, ... in (key, lb/ub) order of first reference
    used = []
    for cond in conditions:
        for n in literal_vars(cond):
            if n in placeholders and n not in used:
                used.append(n)
    used.sort(key=lambda n: (list(placeholders).index(n)))
    ordered = []
    for n in placeholders:
        key, _ = placeholders[n]
        for kind in (LB, UB):
            ph = f"\0{kind}:{bounds.entry(key)[kind].bound.name}"
            if ph in used and ph not in ordered:
                ordered.append(ph)
    taken = set(info.all_vars)
    rename, k = {}, 0
    for ph in ordered:
        k += 1
        name = fresh_name(f"t_{k}", taken)
        taken.add(name)
        rename[ph] = name
    conditions = [
        Compare(c.op, _rename_expr(c.lhs, rename), _rename_expr(c.rhs, rename)) for c in conditions
    ]

    # generator copy: wildcards get names so that head and body share them
    gen_map = {}
    for t in gen.args:
        if isinstance(t, Var) and is_anonymous(t.name):
            gen_map[t.name] = fresh_name("a", taken)
            taken.add(gen_map[t.name])
    gen_copy = RelAtom(gen.pred, tuple(Var(gen_map.get(t.name, t.name)) if isinstance(t, Var) else t for t in gen.args))

    needed = set()
    for cond in conditions:
        needed.update(literal_vars(cond))
    extra = set()
    for n in needed:
        extra.update(point_src.get(n, ()))
    filter_body = [gen_copy]
    filter_body += [body[j] for j in sorted(extra)]
    bounds_used = []
    for ph in ordered:
        key, kind = placeholders[ph]
        b = bounds.entry(key)[kind]
        filter_body.append(FuncAtom(b.bound.name, (), Var(rename[ph])))
        bounds_used.append(b.bound)
        bounds.use(key, kind, rule_index)
    filter_body += conditions

    # name suffix: the generator column starting each constrained chain
    gen_vars = [t.name for t in gen.args if isinstance(t, Var)]
    suffix = []
    for c in gchains:
        if c.value_var not in targets:
            continue
        if not c.chain:
            s = c.value_var
        else:
            link_vars = {x for a in c.chain for x in literal_vars(a)}
            s = next((x for x in gen_vars if x in link_vars), c.value_var)
        if s not in suffix:
            suffix.append(s)
    suffix.sort(key=lambda s: gen_vars.index(s) if s in gen_vars else len(gen_vars))
    base = f"{gen.pred}_filtered_" + "_".join(suffix)

    head = RelAtom("\0", gen_copy.args)
    shape = _shape(head, filter_body)
    name, new = registry.register(base, rule_index, shape)
    spec = FilterSpec(
        rule_index,
        tuple(c for c in gchains if c.value_var in targets),
        name,
        gen,
        g,
        RelAtom(name, gen_copy.args),
        tuple(filter_body),
        tuple(conditions),
        tuple(bounds_used),
    )
    if new:
        registry.specs.append(spec)
    return spec


def make_filters(rule, chains, bounds: BoundPlan, *, rule_index=None, registry=None, simplify=True):
    """Rewrite one rule.

    Returns (rewritten rule, filter specs, bounds used). Bound clauses are
    emitted program-wide by `BoundPlan.emit` so every bound is defined once.
    """
    registry = registry if registry is not None else FilterRegistry(bounds.program)
    if rule_index is not None:
        info = bounds.rule_info(rule_index, rule)
    else:
        info = RuleInfo(rule, bounds.program, chains)
    info.chains = list(chains)
    specs, replaced = [], {}
    for g in sorted({c.generator_index for c in chains}):
        spec = _filter_for(g, info, bounds, registry, rule_index, simplify)
        if spec is not None:
            specs.append(spec)
            replaced[g] = with_pred(rule.body[g], spec.name)
    if not replaced:
        return rule, [], []
    body = tuple(replaced.get(i, lit) for i, lit in enumerate(rule.body))
    used = [b for s in specs for b in s.bounds_used]
    return Rule(rule.head, body, span=rule.span), specs, list(dict.fromkeys(used))


# ---------------------------------------------------------------------------
# declarations


def _renamed_declaration(decl, old, new):
    def ren(a):
        if isinstance(a, ATOM_TYPES) and a.pred == old:
            return with_pred(a, new)
        return a

    return Declaration(tuple(ren(a) for a in decl.lhs), decl.rhs)


def filter_declaration(spec, program):
    schema = program.schema
    info = schema[spec.generator.pred]
    if info.kind in ("relation", "functional"):
        decl = program.clauses[info.decl_index]
        return _renamed_declaration(decl, info.name, spec.name)
    names = [f"x{i}" if info.arity > 1 else "d" for i in range(info.arity)]
    head = RelAtom(spec.name, tuple(Var(n) for n in names))
    rhs = []
    for n, tname, lo, hi in zip(names, info.type_names, info.lo, info.hi):
        rhs.append(RelAtom(tname, (Var(n),)))
        if lo is not None:
            rhs.append(Compare(">=", Var(n), Const(lo)))
        if hi is not None:
            rhs.append(Compare("<=", Var(n), Const(hi)))
    return Declaration((head,), tuple(rhs))


def derive_declarations(specs, bounds: BoundPlan, program: Program) -> list:
    """Declarations for filter predicates and used bound predicates."""
    out = []
    seen = set()
    for s in specs:
        if s.name not in seen:
            seen.add(s.name)
            out.append(filter_declaration(s, program))
    decls, _ = bounds.emit()
    return out + decls


# ---------------------------------------------------------------------------
# driver


def transform(program: Program, *, simplify=True) -> TransformResult:
    diags = validate(program)
    if diags:
        raise TransformError(diags)
    plan = stratify(build_dep_graph(program))
    bounds = plan_bounds(program, plan)
    registry = FilterRegistry(program)
    clauses = list(program.clauses)
    rewritten, skipped = {}, []
    for idx, rule in program.indexed(Rule):
        if rule.is_fact:
            continue
        try:
            info = bounds.rule_info(idx, rule)
        except SafetyError as e:
            skipped.append((idx, str(e)))
            continue
        if not info.chains:
            continue
        new, specs, _ = make_filters(rule, info.chains, bounds, rule_index=idx, registry=registry, simplify=simplify)
        if specs:
            clauses[idx] = new
            rewritten[idx] = new
    if not rewritten:
        return TransformResult(program, [], bounds, {}, skipped)

    bound_decls, bound_clauses = bounds.emit()
    filter_clauses = []
    for s in registry.specs:
        filter_clauses.append(filter_declaration(s, program))
        filter_clauses.append(s.rule)
    out = Program(tuple(clauses) + tuple(_interleave(bound_decls, bound_clauses)) + tuple(filter_clauses))
    diags = validate(out)
    if diags:
        raise TransformError(diags)
    stratify(build_dep_graph(out))
    return TransformResult(out, list(registry.specs), bounds, rewritten, skipped)


def _interleave(decls, clauses):
    """Each bound's declaration followed by its defining clauses."""
    by_pred = defaultdict(list)
    for c in clauses:
        by_pred[c.head.pred if isinstance(c, AggRule) else c.head[0].pred].append(c)
    out = []
    for d in decls:
        out.append(d)
        out.extend(by_pred.pop(d.lhs[0].pred, []))
    for rest in by_pred.values():
        out.extend(rest)
    return out


def transform_program(program: Program, *, simplify=True) -> Program:
    return transform(program, simplify=simplify).program


__all__ = [
    "APPROXIMATED",
    "EXACT",
    "LB",
    "UB",
    "UNBOUNDED",
    "BoundApprox",
    "BoundName",
    "BoundPlan",
    "FilterSpec",
    "RuleInfo",
    "TransformError",
    "TransformResult",
    "derive_declarations",
    "make_filters",
    "plan_bounds",
    "transform",
    "transform_program",
]
