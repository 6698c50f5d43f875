"""Random Datalog programs with linear constraints, for property tests.

`random_program` builds small stratified programs: EDB relations over a small
integer domain, up to four rules (optionally one self-recursive rule and one
min/max aggregate read by a later rule).  `random_single_rule` builds one rule
over up to three generator relations together with a brute-force oracle for
which generator tuples take part in some rule solution.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product

from .interval import holds
from .ir import Compare, Const, RelAtom, Var
from .parser import parse_program

OPS = ("<", "<=", "=", "!=", ">=", ">")
INT = "int[64]"


@dataclass
class RandomProgramSpec:
    max_rules: int = 4
    max_arity: int = 3
    domain: int = 50  # distinct values per column pool
    max_rows: int = 25
    max_body_atoms: int = 3
    max_constraints: int = 2
    max_coef: int = 3
    recursion: bool = True
    aggregates: bool = True

    def __post_init__(self):
        if not 1 <= self.max_rules:
            raise ValueError("max_rules must be >= 1")
        if not 1 <= self.max_arity <= 3:
            raise ValueError("max_arity must be in 1..3")
        if self.domain < 1:
            raise ValueError("domain must be >= 1")


@dataclass
class RandomProgram:
    text: str
    facts: dict  # pred -> list of tuples
    preds: list = field(default_factory=list)

    @property
    def program(self):
        return parse_program(self.text)


def _decl(name, arity):
    vs = [f"x{i}" for i in range(arity)]
    return f"{name}({','.join(vs)}) -> {', '.join(f'{INT}({v})' for v in vs)}."


def _linear(rng, vars_, max_coef):
    """A random linear comparison over (a subset of) `vars_`."""
    chosen = rng.sample(vars_, k=rng.randint(1, min(3, len(vars_))))
    lhs, rhs = [], []
    for v in chosen:
        c = rng.choice([c for c in range(-max_coef, max_coef + 1) if c])
        side = lhs if (c > 0) == (rng.random() < 0.7) else rhs
        c = abs(c)
        side.append(v if c == 1 else f"{c}*{v}")
    const = rng.randint(-20, 40)
    if not lhs:
        lhs, rhs = rhs, lhs
    if rhs and rng.random() < 0.5:
        rhs.append(str(const) if const >= 0 else f"0-{-const}")
    elif not rhs:
        rhs.append(str(const) if const >= 0 else f"0-{-const}")
    return f"{' + '.join(lhs)} {rng.choice(OPS)} {' + '.join(rhs)}"


def _body_atoms(rng, preds, arities, n_atoms, counter, vars_=None):
    """`n_atoms` atoms over `preds`; variables are fresh or (sometimes) joined."""
    atoms, vars_ = [], vars_ if vars_ is not None else []
    for _ in range(n_atoms):
        p = rng.choice(preds)
        args = []
        for _ in range(arities[p]):
            if vars_ and rng.random() < 0.25:
                args.append(rng.choice(vars_))
            else:
                counter[0] += 1
                v = f"v{counter[0]}"
                vars_.append(v)
                args.append(v)
        atoms.append(f"{p}({','.join(args)})")
    return atoms, vars_


def random_program(rng: random.Random, spec: RandomProgramSpec | None = None) -> RandomProgram:
    spec = spec or RandomProgramSpec()
    pool = rng.sample(range(-15, 60), k=min(spec.domain, 75))
    arities, facts, lines = {}, {}, []
    for i in range(rng.randint(1, 3)):
        name = f"e{i}"
        arities[name] = rng.randint(1, spec.max_arity)
        facts[name] = sorted(
            {tuple(rng.choice(pool) for _ in range(arities[name])) for _ in range(rng.randint(1, spec.max_rows))}
        )
        lines.append(_decl(name, arities[name]))
    available = list(arities)
    lookups = []  # aggregate predicates usable as `m[]=t`
    deps = {p: set() for p in arities}  # pred -> preds it depends on (transitively)
    counter = [0]
    n_rules = rng.randint(1, spec.max_rules)
    idb = []
    for i in range(n_rules):
        kind = "plain"
        r = rng.random()
        if spec.recursion and idb and r < 0.3:
            kind = "rec"
        elif spec.aggregates and r > 0.8 and i < n_rules - 1:
            kind = "agg"
        if kind == "agg":
            p = rng.choice(available)
            col = rng.randrange(arities[p])
            args = ["_"] * arities[p]
            args[col] = "v"
            name = f"m{i}"
            lines.append(f"{name}[]=n -> {INT}(n).")
            lines.append(f"{name}[]=n <- agg<<n={rng.choice(['min', 'max'])}(v)>> {p}({','.join(args)}).")
            lookups.append(name)
            deps[name] = deps[p] | {p}
            continue
        if kind == "rec":
            head = rng.choice(idb)
            # only self-recursion: other body predicates must not depend on the head
            lower = [p for p in available if p != head and head not in deps[p]]
            usable = [m for m in lookups if head not in deps[m]]
            atoms, vars_ = _body_atoms(rng, lower, arities, rng.randint(0, 1), counter)
            counter[0] += 1
            rec_vars = [f"v{counter[0]}_{k}" for k in range(arities[head])]
            atoms.insert(0, f"{head}({','.join(rec_vars)})")
            vars_ = rec_vars + vars_
        else:
            head = f"r{i}"
            arities[head] = rng.randint(1, spec.max_arity)
            usable = lookups
            atoms, vars_ = _body_atoms(rng, available, arities, rng.randint(1, spec.max_body_atoms), counter)
        body = list(atoms)
        cvars = list(vars_)
        used = {a.split("(")[0] for a in atoms}
        if usable and rng.random() < 0.5:
            counter[0] += 1
            t = f"t{counter[0]}"
            m = rng.choice(usable)
            body.append(f"{m}[]={t}")
            cvars.append(t)
            used.add(m)
        deps.setdefault(head, set())
        for q in used:
            deps[head] |= deps[q] | {q}
        for _ in range(rng.randint(1, spec.max_constraints)):
            body.append(_linear(rng, cvars, spec.max_coef))
        head_args = [rng.choice(vars_) for _ in range(arities[head])]
        if kind == "plain":
            lines.append(_decl(head, arities[head]))
            idb.append(head)
        lines.append(f"{head}({','.join(head_args)}) <- {', '.join(body)}.")
        if kind == "plain":
            available.append(head)
    return RandomProgram("\n".join(lines) + "\n", facts, [*arities, *lookups])


# ---------------------------------------------------------------------------
# single-rule instances with a brute-force participation oracle


@dataclass
class SingleRule:
    text: str
    facts: dict
    rule_index: int  # clause index of the rule in the parsed program

    @property
    def program(self):
        return parse_program(self.text)


def random_single_rule(rng: random.Random, *, max_generators=3, domain=20, max_arity=2, max_rows=12, max_coef=3):
    pool = rng.sample(range(-8, 30), k=domain)
    n = rng.randint(1, max_generators)
    arities, facts, lines = {}, {}, []
    for i in range(n):
        name = f"g{i}"
        arities[name] = rng.randint(1, max_arity)
        facts[name] = sorted(
            {tuple(rng.choice(pool) for _ in range(arities[name])) for _ in range(rng.randint(1, max_rows))}
        )
        lines.append(_decl(name, arities[name]))
    counter = [0]
    # every generator relation appears at least once; one may repeat
    preds = list(arities)
    rng.shuffle(preds)
    if rng.random() < 0.3:
        preds.append(rng.choice(preds))
    atoms, vars_ = [], []
    for p in preds:
        atoms += _body_atoms(rng, [p], arities, 1, counter, vars_)[0]
    body = list(atoms)
    for _ in range(rng.randint(1, 2)):
        body.append(_linear(rng, vars_, max_coef))
    head_args = rng.sample(vars_, k=min(len(vars_), rng.randint(1, 2)))
    lines.append(_decl("out", len(head_args)))
    lines.append(f"out({','.join(head_args)}) <- {', '.join(body)}.")
    text = "\n".join(lines) + "\n"
    return SingleRule(text, facts, len(parse_program(text).clauses) - 1)


def participating(rule, facts) -> dict:
    """Body position -> set of generator tuples occurring in some solution.

    Plain enumeration of the cross product of the generator relations.
    """
    atoms = [(i, lit) for i, lit in enumerate(rule.body) if isinstance(lit, RelAtom)]
    tests = [lit for lit in rule.body if isinstance(lit, Compare)]
    seen = {i: set() for i, _ in atoms}
    for rows in product(*(facts[a.pred] for _, a in atoms)):
        env, ok = {}, True
        for (_, a), row in zip(atoms, rows):
            for t, v in zip(a.args, row):
                if isinstance(t, Var):
                    if env.setdefault(t.name, v) != v:
                        ok = False
                elif isinstance(t, Const) and t.value != v:
                    ok = False
        if ok and all(holds(c, env) for c in tests):
            for (i, _), row in zip(atoms, rows):
                seen[i].add(row)
    return seen


__all__ = [
    "RandomProgram",
    "RandomProgramSpec",
    "SingleRule",
    "participating",
    "random_program",
    "random_single_rule",
]
