"""Intermediate representation for programs in the dialect.

Every node is a frozen dataclass; equality is structural and ignores source
spans, so two parses of the same text compare equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Union


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Entity:
    """Opaque entity id. Only ever compared for equality."""

    type: str
    id: int

    def __str__(self):
        return f"{self.type}#{self.id}"


# ---------------------------------------------------------------------------
# terms and arithmetic expressions


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan | None = _span()

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: Union[int, str, Entity]
    span: SourceSpan | None = _span()

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, str, Entity)):
            raise TypeError(f"unsupported constant {self.value!r}")

    def __str__(self):
        if isinstance(self.value, str):
            return '"' + self.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return str(self.value)


ARITH_OPS = ("+", "-", "*")
BUILTINS = ("min", "max")


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "ArithExpr"
    right: "ArithExpr"
    span: SourceSpan | None = _span()

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Builtin:
    fn: str
    left: "ArithExpr"
    right: "ArithExpr"
    span: SourceSpan | None = _span()

    def __post_init__(self):
        if self.fn not in BUILTINS:
            raise ValueError(f"unknown builtin {self.fn!r}")


@dataclass(frozen=True)
class FuncLookup:
    """`p[k1,...,kn]` used as a value; `p[]` reads a singleton."""

    pred: str
    keys: tuple = ()
    span: SourceSpan | None = _span()


Term = Union[Var, Const]
ArithExpr = Union[Var, Const, BinOp, Builtin, FuncLookup]


# ---------------------------------------------------------------------------
# literals


@dataclass(frozen=True)
class RelAtom:
    pred: str
    args: tuple
    span: SourceSpan | None = _span()

    @property
    def terms(self):
        return self.args


@dataclass(frozen=True)
class RefModeAtom:
    """`val(d:v)`: one-to-one functional relation from entity to value."""

    pred: str
    key: Term
    value: Term
    span: SourceSpan | None = _span()

    @property
    def terms(self):
        return (self.key, self.value)


@dataclass(frozen=True)
class FuncAtom:
    """`p[k1,...,kn]=v` as a literal or a head."""

    pred: str
    keys: tuple
    value: Term
    span: SourceSpan | None = _span()

    @property
    def terms(self):
        return tuple(self.keys) + (self.value,)


COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: ArithExpr
    rhs: ArithExpr
    span: SourceSpan | None = _span()

    def __post_init__(self):
        if self.op not in COMPARE_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Negation:
    """Parsed so validate can reject it with a useful message."""

    atom: "Atom"
    span: SourceSpan | None = _span()


Atom = Union[RelAtom, RefModeAtom, FuncAtom]
Literal = Union[RelAtom, RefModeAtom, FuncAtom, Compare, Negation]
ATOM_TYPES = (RelAtom, RefModeAtom, FuncAtom)


# ---------------------------------------------------------------------------
# clauses


@dataclass(frozen=True)
class Rule:
    head: tuple
    body: tuple = ()
    span: SourceSpan | None = _span()

    @property
    def is_fact(self):
        return not self.body

    @property
    def kind(self):
        return "fact" if self.is_fact else "derivation"


@dataclass(frozen=True)
class AggRule:
    """`head[keys]=n <- agg<<n=method(v)>> body`."""

    head: FuncAtom
    method: str
    value_var: str
    body: tuple
    span: SourceSpan | None = _span()

    @property
    def result_var(self):
        return self.head.value.name if isinstance(self.head.value, Var) else None


@dataclass(frozen=True)
class Declaration:
    """`lhs -> rhs`: checked, never derived."""

    lhs: tuple
    rhs: tuple = ()
    span: SourceSpan | None = _span()

    kind = "declaration"


Clause = Union[Rule, AggRule, Declaration]


# ---------------------------------------------------------------------------
# schema


PRIMITIVE_RE = re.compile(r"^(u?int)(\[(\d+)\])?$|^string$")


def is_primitive_type(name):
    return PRIMITIVE_RE.match(name) is not None


@dataclass(frozen=True)
class ColType:
    kind: str  # "int" | "string" | "entity"
    entity: str | None = None

    def __str__(self):
        return self.entity if self.kind == "entity" else self.kind


INT = ColType("int")
STRING = ColType("string")


@dataclass
class PredInfo:
    name: str
    arity: int
    kind: str = "relation"  # relation | entity | refmode | functional
    types: list = field(default_factory=list)
    type_names: list = field(default_factory=list)
    nonneg: list = field(default_factory=list)
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    key_arity: int | None = None
    entity: str | None = None  # entity type keyed by a refmode
    refmode: str | None = None  # refmode predicate of an entity
    decl_index: int | None = None

    @property
    def is_functional(self):
        return self.key_arity is not None

    def numeric_columns(self):
        return [i for i, t in enumerate(self.types) if t == INT]


@dataclass(frozen=True)
class Program:
    clauses: tuple = ()

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self):
        return len(self.clauses)

    @property
    def declarations(self):
        return [c for c in self.clauses if isinstance(c, Declaration)]

    @property
    def rules(self):
        return [c for c in self.clauses if isinstance(c, Rule) and not c.is_fact]

    @property
    def facts(self):
        return [c for c in self.clauses if isinstance(c, Rule) and c.is_fact]

    @property
    def agg_rules(self):
        return [c for c in self.clauses if isinstance(c, AggRule)]

    def indexed(self, *kinds):
        for i, c in enumerate(self.clauses):
            if not kinds or isinstance(c, kinds):
                yield i, c

    @cached_property
    def schema(self) -> dict:
        return build_schema(self)[0]

    def defined_preds(self):
        """Predicates with at least one rule, fact or aggregate defining them."""
        out = set()
        for c in self.clauses:
            if isinstance(c, Rule):
                out.update(a.pred for a in c.head)
            elif isinstance(c, AggRule):
                out.add(c.head.pred)
        return out


# ---------------------------------------------------------------------------
# traversal helpers


def expr_vars(e) -> Iterator[str]:
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, (BinOp, Builtin)):
        yield from expr_vars(e.left)
        yield from expr_vars(e.right)
    elif isinstance(e, FuncLookup):
        for k in e.keys:
            yield from expr_vars(k)


def expr_lookups(e) -> Iterator[FuncLookup]:
    if isinstance(e, FuncLookup):
        yield e
        for k in e.keys:
            yield from expr_lookups(k)
    elif isinstance(e, (BinOp, Builtin)):
        yield from expr_lookups(e.left)
        yield from expr_lookups(e.right)


def literal_vars(lit) -> list:
    """Variables of a literal in order of first occurrence."""
    if isinstance(lit, ATOM_TYPES):
        names = [t.name for t in lit.terms if isinstance(t, Var)]
    elif isinstance(lit, Compare):
        names = list(expr_vars(lit.lhs)) + list(expr_vars(lit.rhs))
    elif isinstance(lit, Negation):
        names = literal_vars(lit.atom)
    else:
        raise TypeError(lit)
    return list(dict.fromkeys(names))


def literal_preds(lit) -> list:
    if isinstance(lit, ATOM_TYPES):
        return [lit.pred]
    if isinstance(lit, Compare):
        return [l.pred for l in (*expr_lookups(lit.lhs), *expr_lookups(lit.rhs))]
    if isinstance(lit, Negation):
        return literal_preds(lit.atom)
    raise TypeError(lit)


def clause_vars(clause) -> list:
    lits = []
    if isinstance(clause, Rule):
        lits = list(clause.head) + list(clause.body)
    elif isinstance(clause, AggRule):
        lits = [clause.head] + list(clause.body)
    elif isinstance(clause, Declaration):
        lits = list(clause.lhs) + list(clause.rhs)
    names = []
    for lit in lits:
        names.extend(literal_vars(lit))
    if isinstance(clause, AggRule):
        names.append(clause.value_var)
    return list(dict.fromkeys(names))


def subst_expr(e, mapping):
    """Replace variables by expressions (mapping: name -> ArithExpr)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_expr(e.left, mapping), subst_expr(e.right, mapping))
    if isinstance(e, Builtin):
        return Builtin(e.fn, subst_expr(e.left, mapping), subst_expr(e.right, mapping))
    if isinstance(e, FuncLookup):
        return FuncLookup(e.pred, tuple(subst_expr(k, mapping) for k in e.keys))
    return e


def rename_literal(lit, mapping):
    """Rename variables (mapping: name -> name) inside a literal."""

    def t(term):
        if isinstance(term, Var) and term.name in mapping:
            return Var(mapping[term.name])
        return term

    if isinstance(lit, RelAtom):
        return RelAtom(lit.pred, tuple(t(a) for a in lit.args))
    if isinstance(lit, RefModeAtom):
        return RefModeAtom(lit.pred, t(lit.key), t(lit.value))
    if isinstance(lit, FuncAtom):
        return FuncAtom(lit.pred, tuple(t(k) for k in lit.keys), t(lit.value))
    if isinstance(lit, Compare):
        m = {k: Var(v) for k, v in mapping.items()}
        return Compare(lit.op, subst_expr(lit.lhs, m), subst_expr(lit.rhs, m))
    if isinstance(lit, Negation):
        return Negation(rename_literal(lit.atom, mapping))
    raise TypeError(lit)


def with_pred(atom, pred):
    if isinstance(atom, RelAtom):
        return RelAtom(pred, atom.args)
    if isinstance(atom, RefModeAtom):
        return RefModeAtom(pred, atom.key, atom.value)
    if isinstance(atom, FuncAtom):
        return FuncAtom(pred, atom.keys, atom.value)
    raise TypeError(atom)


def is_anonymous(name):
    return re.fullmatch(r"_\d+", name) is not None


def fresh_name(base, taken):
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def is_assignment(cmp, bound):
    """Return the variable assigned by `cmp` given the bound set, if any."""
    if cmp.op != "=":
        return None
    for side, other in ((cmp.lhs, cmp.rhs), (cmp.rhs, cmp.lhs)):
        if isinstance(side, Var) and side.name not in bound:
            if all(v in bound for v in expr_vars(other)):
                return side.name
    return None


# ---------------------------------------------------------------------------
# schema construction and validation


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    clause: int | None = None
    span: SourceSpan | None = field(default=None, compare=False)

    def __str__(self):
        where = f" (clause {self.clause}" + (f", {self.span}" if self.span else "") + ")"
        return f"{self.code}: {self.message}{where if self.clause is not None else ''}"


def _const_bound(cmp, var):
    """Constant bound on `var` stated by a declaration compare: (lo, hi)."""
    lhs, rhs, op = cmp.lhs, cmp.rhs, cmp.op
    if isinstance(rhs, Var) and rhs.name == var and isinstance(lhs, Const):
        lhs, rhs = rhs, lhs
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[op]
    if not (isinstance(lhs, Var) and lhs.name == var and isinstance(rhs, Const)):
        return None, None
    if not isinstance(rhs.value, int):
        return None, None
    c = rhs.value
    return {
        "<": (None, c - 1),
        "<=": (None, c),
        ">": (c + 1, None),
        ">=": (c, None),
        "=": (c, c),
    }.get(op, (None, None))


def build_schema(program):
    """Collect predicate signatures from declarations.

    Returns (schema, diagnostics).
    """
    schema: dict[str, PredInfo] = {}
    diags: list[Diagnostic] = []
    decls = list(program.indexed(Declaration))

    for i, d in decls:
        if (
            len(d.lhs) == 1
            and isinstance(d.lhs[0], RelAtom)
            and len(d.lhs[0].args) == 1
            and not d.rhs
        ):
            name = d.lhs[0].pred
            schema[name] = PredInfo(
                name, 1, "entity", [ColType("entity", name)], [name], [False], [None], [None],
                decl_index=i,
            )

    def type_of(tname):
        if is_primitive_type(tname):
            if tname == "string":
                return STRING, False
            return INT, tname.startswith("uint")
        if tname in schema and schema[tname].kind == "entity":
            return ColType("entity", tname), False
        return None, False

    for i, d in decls:
        if i in {p.decl_index for p in schema.values()}:
            continue
        refmodes = [a for a in d.lhs if isinstance(a, RefModeAtom)]
        var_types: dict[str, tuple] = {}
        var_bounds: dict[str, list] = {}
        for r in d.rhs:
            if isinstance(r, RelAtom) and len(r.args) == 1 and isinstance(r.args[0], Var):
                ct, nn = type_of(r.pred)
                if ct is None:
                    diags.append(Diagnostic("UndeclaredPredicate", f"unknown type {r.pred}", i, r.span))
                    continue
                var_types[r.args[0].name] = (ct, r.pred, nn)
            elif isinstance(r, Compare):
                for v in expr_vars(r.lhs):
                    lo, hi = _const_bound(r, v)
                    b = var_bounds.setdefault(v, [None, None])
                    if lo is not None:
                        b[0] = lo if b[0] is None else max(b[0], lo)
                    if hi is not None:
                        b[1] = hi if b[1] is None else min(b[1], hi)
                for v in expr_vars(r.rhs):
                    lo, hi = _const_bound(r, v)
                    b = var_bounds.setdefault(v, [None, None])
                    if lo is not None:
                        b[0] = lo if b[0] is None else max(b[0], lo)
                    if hi is not None:
                        b[1] = hi if b[1] is None else min(b[1], hi)

        def column(term, where):
            if not isinstance(term, Var):
                diags.append(Diagnostic("BadDeclaration", f"constant in declaration of {where}", i, d.span))
                return INT, "int[64]", False, None, None
            ct = var_types.get(term.name)
            lo, hi = var_bounds.get(term.name, (None, None))
            if ct is None:
                # an entity-typed lhs atom also types its variable
                for a in d.lhs:
                    if (
                        isinstance(a, RelAtom)
                        and len(a.args) == 1
                        and a.args[0] == term
                        and a.pred in schema
                        and schema[a.pred].kind == "entity"
                    ):
                        return ColType("entity", a.pred), a.pred, False, lo, hi
                diags.append(Diagnostic("UntypedColumn", f"no type for {term.name} in {where}", i, d.span))
                return INT, "int[64]", False, lo, hi
            t, tname, nn = ct
            return t, tname, nn or (lo is not None and lo >= 0), lo, hi

        if refmodes:
            rm = refmodes[0]
            ents = [
                a.pred
                for a in d.lhs
                if isinstance(a, RelAtom) and len(a.args) == 1 and a.args[0] == rm.key
            ]
            if not ents or ents[0] not in schema or schema[ents[0]].kind != "entity":
                diags.append(Diagnostic("BadDeclaration", f"refmode {rm.pred} lacks an entity", i, d.span))
                continue
            ent = ents[0]
            vt, vname, vnn, vlo, vhi = column(rm.value, rm.pred)
            schema[rm.pred] = PredInfo(
                rm.pred, 2, "refmode",
                [ColType("entity", ent), vt], [ent, vname], [False, vnn], [None, vlo], [None, vhi],
                key_arity=1, entity=ent, decl_index=i,
            )
            schema[ent].refmode = rm.pred
            continue

        if len(d.lhs) != 1 or not isinstance(d.lhs[0], (RelAtom, FuncAtom)):
            diags.append(Diagnostic("BadDeclaration", "declaration must describe one predicate", i, d.span))
            continue
        a = d.lhs[0]
        cols = [column(t, a.pred) for t in a.terms]
        info = PredInfo(
            a.pred, len(cols),
            "functional" if isinstance(a, FuncAtom) else "relation",
            [c[0] for c in cols], [c[1] for c in cols], [c[2] for c in cols],
            [c[3] for c in cols], [c[4] for c in cols],
            key_arity=len(a.keys) if isinstance(a, FuncAtom) else None,
            decl_index=i,
        )
        if a.pred in schema:
            diags.append(Diagnostic("DuplicateDeclaration", f"{a.pred} declared twice", i, d.span))
            continue
        schema[a.pred] = info
    return schema, diags


def _atom_shape_ok(atom, info):
    if isinstance(atom, RefModeAtom):
        return info.kind == "refmode"
    if isinstance(atom, FuncAtom):
        return info.key_arity is not None and len(atom.keys) == info.key_arity
    # relational syntax is accepted for any predicate of the right arity
    return True


def _arity(atom):
    return len(atom.terms)


def validate(program: Program) -> list:
    """Static checks. Returns every diagnostic found, never stops early."""
    schema, diags = build_schema(program)
    diags = list(diags)

    def check_atom(atom, i, declared_ok=False):
        if isinstance(atom, RelAtom) and is_primitive_type(atom.pred) and declared_ok:
            return
        info = schema.get(atom.pred)
        if info is None:
            diags.append(Diagnostic("UndeclaredPredicate", f"predicate {atom.pred} is not declared", i, atom.span))
            return
        if _arity(atom) != info.arity or not _atom_shape_ok(atom, info):
            diags.append(
                Diagnostic("ArityMismatch", f"{atom.pred} used with arity {_arity(atom)}, declared {info.arity}", i, atom.span)
            )

    for i, c in program.indexed():
        if isinstance(c, Declaration):
            lhs_vars = set()
            for a in c.lhs:
                lhs_vars.update(literal_vars(a))
            for r in c.rhs:
                if isinstance(r, RelAtom):
                    check_atom(r, i, declared_ok=True)
                extra = [v for v in literal_vars(r) if v not in lhs_vars]
                if extra:
                    diags.append(
                        Diagnostic("DeclarationScope", f"right side uses {', '.join(extra)} not on the left", i, c.span)
                    )
            continue

        heads = [c.head] if isinstance(c, AggRule) else list(c.head)
        for h in heads:
            check_atom(h, i)
        for lit in c.body:
            if isinstance(lit, Negation):
                diags.append(Diagnostic("NotSupported", "negated atoms are not supported", i, lit.span))
            elif isinstance(lit, ATOM_TYPES):
                check_atom(lit, i)
            else:
                for lk in (*expr_lookups(lit.lhs), *expr_lookups(lit.rhs)):
                    info = schema.get(lk.pred)
                    if info is None:
                        diags.append(Diagnostic("UndeclaredPredicate", f"predicate {lk.pred} is not declared", i, lk.span))
                    elif info.key_arity is None or info.key_arity != len(lk.keys):
                        diags.append(Diagnostic("ArityMismatch", f"{lk.pred}[...] lookup does not match its declaration", i, lk.span))
        if isinstance(c, Rule) and c.is_fact:
            for h in c.head:
                if any(isinstance(t, Var) for t in h.terms):
                    diags.append(Diagnostic("NonGroundFact", f"fact for {h.pred} has variables", i, c.span))
        if isinstance(c, AggRule):
            if c.method not in BUILTINS:
                diags.append(Diagnostic("NotSupported", f"aggregate method {c.method}", i, c.span))
            body_vars = set()
            for lit in c.body:
                body_vars.update(literal_vars(lit))
            if c.value_var not in body_vars:
                diags.append(Diagnostic("UnboundAggregate", f"{c.value_var} does not occur in the body", i, c.span))
            for k in c.head.keys:
                if isinstance(k, Var) and k.name not in body_vars:
                    diags.append(Diagnostic("UnsafeVariable", f"head key {k.name} not bound in body", i, c.span))
        diags.extend(_check_types(c, i, schema))
        if not any(d.clause == i for d in diags):
            diags.extend(_check_safety(c, i))
    return diags


def _check_safety(clause, i):
    from .analysis import SafetyError, safety_order

    if isinstance(clause, Rule) and clause.is_fact:
        return []
    try:
        safety_order(clause)
    except SafetyError as e:
        return [Diagnostic("UnsafeVariable", str(e), i, clause.span)]
    return []


def _check_types(clause, i, schema):
    """Infer variable column types; flag entities/strings used as numbers."""
    diags = []
    vtypes: dict[str, ColType] = {}

    def note(name, t, span):
        old = vtypes.get(name)
        if old is None:
            vtypes[name] = t
        elif old != t:
            diags.append(Diagnostic("TypeConflict", f"{name} is both {old} and {t}", i, span))

    heads = [clause.head] if isinstance(clause, AggRule) else list(clause.head)
    atoms = heads + [l for l in clause.body if isinstance(l, ATOM_TYPES)]
    atoms += [l.atom for l in clause.body if isinstance(l, Negation)]
    for a in atoms:
        info = schema.get(a.pred)
        if info is None or len(info.types) != len(a.terms):
            continue
        for t, ct in zip(a.terms, info.types):
            if isinstance(t, Var):
                note(t.name, ct, a.span)
            else:
                ok = (
                    (ct == STRING and isinstance(t.value, str))
                    or (ct == INT and isinstance(t.value, int))
                    or (ct.kind == "entity" and isinstance(t.value, Entity))
                )
                if not ok:
                    diags.append(Diagnostic("TypeConflict", f"constant {t} in {ct} column of {a.pred}", i, a.span))

    def expr_type(e):
        if isinstance(e, Var):
            return vtypes.get(e.name)
        if isinstance(e, Const):
            if isinstance(e.value, str):
                return STRING
            if isinstance(e.value, Entity):
                return ColType("entity", e.value.type)
            return INT
        if isinstance(e, FuncLookup):
            info = schema.get(e.pred)
            return info.types[-1] if info and info.types else None
        return INT

    def check_numeric(e, span):
        if isinstance(e, (BinOp, Builtin)):
            for sub in (e.left, e.right):
                t = expr_type(sub)
                if t is not None and t.kind == "entity":
                    diags.append(Diagnostic("EntityInArithmetic", f"entity value {_show(sub)} used in arithmetic", i, span))
                elif t == STRING:
                    diags.append(Diagnostic("TypeConflict", f"string value {_show(sub)} used in arithmetic", i, span))
                check_numeric(sub, span)

    # assignments give types to variables not bound by atoms
    cmps = [l for l in clause.body if isinstance(l, Compare)]
    for _ in range(len(cmps)):
        for c in cmps:
            if c.op == "=":
                for side, other in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
                    if isinstance(side, Var) and side.name not in vtypes:
                        t = expr_type(other)
                        if t is not None:
                            vtypes[side.name] = t

    for c in cmps:
        check_numeric(c.lhs, c.span)
        check_numeric(c.rhs, c.span)
        lt, rt = expr_type(c.lhs), expr_type(c.rhs)
        if c.op in ("=", "!="):
            if lt is not None and rt is not None and lt != rt:
                diags.append(Diagnostic("TypeConflict", f"comparing {lt} with {rt}", i, c.span))
        else:
            for t, side in ((lt, c.lhs), (rt, c.rhs)):
                if t is not None and t.kind == "entity":
                    diags.append(Diagnostic("EntityInArithmetic", f"entity value {_show(side)} used in ordering", i, c.span))
                elif t == STRING:
                    diags.append(Diagnostic("TypeConflict", f"string value {_show(side)} used in ordering", i, c.span))
    if isinstance(clause, AggRule):
        t = vtypes.get(clause.value_var)
        if t is not None and t != INT:
            diags.append(Diagnostic("EntityInArithmetic", f"aggregating non-numeric {clause.value_var}", i, clause.span))
    return diags


def _show(e):
    from .parser import format_expr

    return format_expr(e)
