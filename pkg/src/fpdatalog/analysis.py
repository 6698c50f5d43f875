"""Dependency graph, stratification, body ordering and generator chains."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import networkx as nx

from .ir import (
    ATOM_TYPES,
    INT,
    AggRule,
    Compare,
    FuncAtom,
    Negation,
    Program,
    RefModeAtom,
    RelAtom,
    Rule,
    Var,
    expr_lookups,
    expr_vars,
    is_assignment,
    is_primitive_type,
    literal_vars,
)

POSITIVE = "positive"
AGGREGATE = "aggregate"


class StratificationError(Exception):
    """Raised when an aggregate edge lies on a dependency cycle."""

    code = "RecursionThroughAggregation"

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"{self.code}: " + " -> ".join(self.cycle))


class SafetyError(Exception):
    def __init__(self, var, message=None):
        self.var = var
        super().__init__(message or f"variable {var} cannot be bound")


@dataclass
class DepGraph:
    nodes: list
    edges: list  # sorted (head, body, tag) triples
    program: Program | None = field(default=None, repr=False, compare=False)

    def successors(self, p):
        return [q for (h, q, _) in self.edges if h == p]

    def to_dot(self):
        lines = ["digraph deps {"]
        for n in self.nodes:
            lines.append(f'  "{n}";')
        for h, q, tag in self.edges:
            style = ' [style=dashed, label="agg"]' if tag == AGGREGATE else ""
            lines.append(f'  "{h}" -> "{q}"{style};')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass
class Stratum:
    preds: frozenset
    recursive: bool
    clauses: list = field(default_factory=list)  # clause indices defining preds


@dataclass
class StratumPlan:
    strata: list

    def stratum_of(self, pred):
        for i, s in enumerate(self.strata):
            if pred in s.preds:
                return i
        raise KeyError(pred)

    def recursive_scc(self, pred):
        """Predicates of `pred`'s SCC if it is recursive, else None."""
        for s in self.strata:
            if pred in s.preds:
                return s.preds if s.recursive else None
        return None


def _body_edges(head, body, tag):
    for lit in body:
        if isinstance(lit, ATOM_TYPES):
            yield head, lit.pred, tag
        elif isinstance(lit, Negation):
            yield head, lit.atom.pred, tag
        elif isinstance(lit, Compare):
            for lk in (*expr_lookups(lit.lhs), *expr_lookups(lit.rhs)):
                yield head, lk.pred, AGGREGATE


def build_dep_graph(program: Program) -> DepGraph:
    nodes = {p for p in program.schema}
    edges = set()
    for c in program.clauses:
        if isinstance(c, Rule):
            for h in c.head:
                nodes.add(h.pred)
                edges.update(_body_edges(h.pred, c.body, POSITIVE))
        elif isinstance(c, AggRule):
            nodes.add(c.head.pred)
            edges.update(_body_edges(c.head.pred, c.body, AGGREGATE))
    for _, q, _ in edges:
        nodes.add(q)
    nodes = {n for n in nodes if not is_primitive_type(n)}
    return DepGraph(sorted(nodes), sorted(edges), program)


def sink_predicates(program: Program) -> list:
    """Rule-defined predicates that no other predicate reads, in definition order."""
    graph = build_dep_graph(program)
    read = {q for h, q, _ in graph.edges if h != q}
    out = []
    for c in program.clauses:
        if isinstance(c, AggRule):
            heads = [c.head]
        elif isinstance(c, Rule) and not c.is_fact:
            heads = c.head
        else:
            continue
        for h in heads:
            if h.pred not in read and h.pred not in out:
                out.append(h.pred)
    return out


def stratify(graph: DepGraph) -> StratumPlan:
    g = nx.DiGraph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from((h, q) for h, q, _ in graph.edges)
    comp = {}
    sccs = [frozenset(s) for s in nx.strongly_connected_components(g)]
    for i, s in enumerate(sccs):
        for p in s:
            comp[p] = i

    for h, q, tag in graph.edges:
        if tag == AGGREGATE and comp[h] == comp[q]:
            raise StratificationError(_cycle_through(g, h, q, sccs[comp[h]]))

    # order SCCs bottom-up: a body SCC precedes every head SCC that reads it
    deps = {i: set() for i in range(len(sccs))}
    users = {i: set() for i in range(len(sccs))}
    for h, q, _ in graph.edges:
        a, b = comp[h], comp[q]
        if a != b:
            deps[a].add(b)
            users[b].add(a)
    pending = {i: len(d) for i, d in deps.items()}
    heap = [(min(sccs[i]), i) for i, n in pending.items() if n == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, i = heapq.heappop(heap)
        order.append(i)
        for u in users[i]:
            pending[u] -= 1
            if pending[u] == 0:
                heapq.heappush(heap, (min(sccs[u]), u))

    self_loops = {h for h, q, _ in graph.edges if h == q}
    strata = []
    for i in order:
        preds = sccs[i]
        rec = len(preds) > 1 or bool(preds & self_loops)
        st = Stratum(preds, rec)
        if graph.program is not None:
            for k, c in graph.program.indexed(Rule, AggRule):
                heads = [c.head] if isinstance(c, AggRule) else c.head
                if any(h.pred in preds for h in heads):
                    st.clauses.append(k)
        strata.append(st)
    return StratumPlan(strata)


def _cycle_through(g, h, q, scc):
    path = nx.shortest_path(g.subgraph(scc), q, h)
    return [h] + list(path)


# ---------------------------------------------------------------------------
# body ordering


def _ready(lit, bound):
    """Whether a comparison can run given `bound`; returns (ok, assigned var)."""
    names = literal_vars(lit)
    if all(v in bound for v in names):
        return True, None
    var = is_assignment(lit, bound)
    if var is not None:
        return True, var
    return False, None


def safety_order(rule):
    """Stable body permutation where every comparison runs after its inputs.

    Literals that are already evaluable keep their place; a comparison that is
    not yet evaluable moves to just after the literal that makes it so.
    """
    bound: set[str] = set()
    out, pending = [], []

    def flush():
        changed = True
        while changed:
            changed = False
            for lit in list(pending):
                ok, var = _ready(lit, bound)
                if ok:
                    pending.remove(lit)
                    out.append(lit)
                    if var:
                        bound.add(var)
                    changed = True
                    break

    for lit in rule.body:
        if isinstance(lit, ATOM_TYPES):
            out.append(lit)
            bound.update(literal_vars(lit))
            flush()
        elif isinstance(lit, Negation):
            pending.append(lit)
        else:
            ok, var = _ready(lit, bound)
            if ok:
                out.append(lit)
                if var:
                    bound.add(var)
                flush()
            else:
                pending.append(lit)
                flush()
    if pending:
        lit = pending[0]
        missing = [v for v in literal_vars(lit) if v not in bound]
        raise SafetyError(missing[0] if missing else "?", f"cannot bind {missing[0] if missing else '?'} in {lit}")

    if isinstance(rule, AggRule):
        need = [k.name for k in rule.head.keys if isinstance(k, Var)] + [rule.value_var]
    else:
        need = [t.name for h in rule.head for t in h.terms if isinstance(t, Var)]
    for v in need:
        if v not in bound:
            raise SafetyError(v, f"head variable {v} is not bound by the body")

    body = tuple(out)
    if isinstance(rule, AggRule):
        return AggRule(rule.head, rule.method, rule.value_var, body, span=rule.span)
    return Rule(rule.head, body, span=rule.span)


# ---------------------------------------------------------------------------
# generator chains


@dataclass(frozen=True)
class GeneratorChain:
    value_var: str
    generator: RelAtom
    generator_index: int
    chain: tuple = ()  # atoms linking generator output to value_var, body order
    chain_indices: tuple = ()
    column: int = 0  # numeric column in the terminal predicate
    terminal: str = ""

    @property
    def preds(self):
        return (self.generator.pred,) + tuple(a.pred for a in self.chain)


def var_types(rule, program) -> dict:
    schema = program.schema
    out = {}
    for lit in rule.body:
        if isinstance(lit, ATOM_TYPES) and lit.pred in schema:
            info = schema[lit.pred]
            for t, ct in zip(lit.terms, info.types):
                if isinstance(t, Var):
                    out.setdefault(t.name, ct)
    return out


def compare_vars(rule):
    names = []
    for lit in rule.body:
        if isinstance(lit, Compare):
            names.extend(literal_vars(lit))
    return list(dict.fromkeys(names))


def find_generator_chains(rule, program: Program, variables=None) -> list:
    """One chain per (generator atom, numeric variable used in a comparison).

    `variables` overrides which variables are considered (default: those
    occurring in comparisons).
    """
    schema = program.schema
    body = list(rule.body)
    types = var_types(rule, program)
    chains = []

    def rel_binders(var, exclude=()):
        for i, lit in enumerate(body):
            if (
                i not in exclude
                and isinstance(lit, RelAtom)
                and not is_primitive_type(lit.pred)
                and any(isinstance(t, Var) and t.name == var for t in lit.args)
            ):
                yield i

    def value_binders(var, exclude=()):
        for i, lit in enumerate(body):
            if i in exclude or not isinstance(lit, (FuncAtom, RefModeAtom)):
                continue
            if isinstance(lit.value, Var) and lit.value.name == var:
                yield i

    def keys_of(lit):
        return [lit.key] if isinstance(lit, RefModeAtom) else list(lit.keys)

    def resolve(var, used):
        """Tree of atoms producing `var`; returns (leaves, links) or None."""
        for i in rel_binders(var, used):
            return [i], []
        for i in value_binders(var, used):
            sub = resolve_keys(i, used | {i})
            if sub is not None:
                leaves, links = sub
                return leaves, links + [i]
        return None

    def resolve_keys(i, used):
        leaves, links = [], []
        for k in keys_of(body[i]):
            if not isinstance(k, Var):
                continue
            r = resolve(k.name, used | set(leaves) | set(links))
            if r is None:
                return None
            leaves += [x for x in r[0] if x not in leaves]
            links += [x for x in r[1] if x not in links]
        return leaves, links

    for v in compare_vars(rule) if variables is None else variables:
        if types.get(v) != INT:
            continue
        for i, lit in enumerate(body):
            if isinstance(lit, RelAtom) and not is_primitive_type(lit.pred):
                for pos, t in enumerate(lit.args):
                    if isinstance(t, Var) and t.name == v:
                        chains.append(GeneratorChain(v, lit, i, (), (), pos, lit.pred))
                        break
            elif isinstance(lit, (FuncAtom, RefModeAtom)) and isinstance(lit.value, Var) and lit.value.name == v:
                info = schema.get(lit.pred)
                if info is None:
                    continue
                sub = resolve_keys(i, {i})
                if sub is None:
                    continue
                leaves, links = sub
                links = links + [i]
                if not leaves:
                    continue
                leaves.sort()
                gen = leaves[0]
                rest = sorted(set(leaves[1:]) | set(links))
                chains.append(
                    GeneratorChain(
                        v, body[gen], gen,
                        tuple(body[j] for j in rest), tuple(rest),
                        info.arity - 1, lit.pred,
                    )
                )
    return chains


__all__ = [
    "AGGREGATE",
    "POSITIVE",
    "DepGraph",
    "GeneratorChain",
    "SafetyError",
    "StratificationError",
    "Stratum",
    "StratumPlan",
    "build_dep_graph",
    "compare_vars",
    "expr_vars",
    "find_generator_chains",
    "safety_order",
    "sink_predicates",
    "stratify",
    "var_types",
]
