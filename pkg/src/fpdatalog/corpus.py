"""Benchmark corpus: programs plus deterministic fact generators.

* eight cryptarithmetic puzzles written in the style of I*AM=SAM,
* Production (four tons ranges),
* the recursive Engine program with data sets 1-4,
* Flights and its constraint-magic rewritten variant (CMR) over the
  generated flight graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .graphgen import PRESETS, GraphGenSpec, gen_graph

# ---------------------------------------------------------------------------
# cryptarithmetic puzzles


@dataclass(frozen=True)
class Puzzle:
    name: str
    operands: tuple  # words on the left-hand side
    result: str
    op: str = "+"  # "+" sums the operands, "*" multiplies a letter by a word
    nonzero: str | None = None  # letters that may not be 0 (default: leading letters)

    @property
    def letters(self):
        return list(dict.fromkeys("".join(self.operands) + self.result).keys())

    @property
    def nonzero_letters(self):
        if self.nonzero is not None:
            return list(self.nonzero)
        return list(dict.fromkeys(w[0] for w in (*self.operands, self.result)))


PUZZLES = (
    Puzzle("I*AM=SAM", ("I", "AM"), "SAM", op="*", nonzero="IS"),
    Puzzle("BASE+BALL=GAMES", ("BASE", "BALL"), "GAMES"),
    Puzzle("SEND+MORE=MONEY", ("SEND", "MORE"), "MONEY"),
    Puzzle("BANJO+VIOLA=VIOLIN", ("BANJO", "VIOLA"), "VIOLIN"),
    Puzzle("SATURN+URANUS=PLANETS", ("SATURN", "URANUS"), "PLANETS"),
    Puzzle("SIX+SEVEN+SEVEN=TWENTY", ("SIX", "SEVEN", "SEVEN"), "TWENTY"),
    Puzzle("DONALD+GERALD=ROBERT", ("DONALD", "GERALD"), "ROBERT"),
    Puzzle("BLACK+GREEN=ORANGE", ("BLACK", "GREEN"), "ORANGE"),
)


def _word_expr(word):
    n = len(word)
    terms = []
    for i, ch in enumerate(word):
        w = 10 ** (n - 1 - i)
        v = f"v{ch.lower()}"
        terms.append(v if w == 1 else f"{w}*{v}")
    return "+".join(terms)


def puzzle_program(p: Puzzle) -> str:
    """Program text with a single `solution` rule over the puzzle letters."""
    letters = [c.lower() for c in p.letters]
    args = ",".join(letters)
    lines = [
        "digit(_) ->.",
        "digit(d), val(d:v) -> uint[8](v), v<=9.",
        "",
        f"solution({args}) -> " + ", ".join(f"digit({c})" for c in letters) + ".",
        f"solution({args}) <-",
    ]
    body = [f"   digit({c}), val({c}:v{c})," for c in letters]
    body += [f"   v{c.lower()} != 0," for c in p.nonzero_letters]
    for c in letters:
        pairs = [f"v{c} != v{d}" for a, d in combinations(letters, 2) if a == c]
        if pairs:
            body.append("   " + ", ".join(pairs) + ",")
    if p.op == "*":
        left = f"v{p.operands[0].lower()}*({_word_expr(p.operands[1])})"
    else:
        left = " + ".join(_word_expr(w) for w in p.operands)
    body.append(f"   {left} = {_word_expr(p.result)}.")
    return "\n".join(lines + body) + "\n"


def digit_facts() -> dict:
    """Ten digit entities labelled "0".."9" with values 0..9."""
    return {"val": [(str(i), i) for i in range(10)]}


def puzzle_solutions(p: Puzzle) -> set:
    """Brute-force oracle: solution tuples as digit labels."""
    from itertools import permutations

    letters = p.letters
    out = set()
    for digits in permutations(range(10), len(letters)):
        env = dict(zip(letters, digits))
        if any(env[c] == 0 for c in p.nonzero_letters):
            continue

        def val(w):
            return int("".join(str(env[c]) for c in w))

        if p.op == "*":
            left = env[p.operands[0]] * val(p.operands[1])
        else:
            left = sum(val(w) for w in p.operands)
        if left == val(p.result):
            out.add(tuple(str(d) for d in digits))
    return out


# ---------------------------------------------------------------------------
# production planning

PRODUCTION = """\
// Production planning: choose a product, a factory line and a number of tons
// so that line hours, product demand and the budget are respected.
product(_) ->.
line(_) ->.
tons(_) ->.
tons(t), amount(t:a) -> uint[32](a).

rate[p,l]=r -> product(p), line(l), uint[32](r).
unitcost[p,l]=c -> product(p), line(l), uint[32](c).
hours[l]=h -> line(l), uint[32](h).
demand[p]=m -> product(p), uint[32](m).
price[p]=v -> product(p), uint[32](v).
budget[]=b -> uint[32](b).

plan(p,l,t,g) -> product(p), line(l), tons(t), int[64](g).
plan(p,l,t,g) <-
   product(p), line(l), tons(t), amount(t:a),
   rate[p,l]=r, hours[l]=h, a*r <= h,
   demand[p]=m, a <= m,
   unitcost[p,l]=c, budget[]=b, a*c <= b,
   price[p]=v, g = a*(v-c).

best[]=g -> int[64](g).
best[]=g <- agg<<g=max(x)>> plan(_,_,_,x).

bestplan(p,l,t) -> product(p), line(l), tons(t).
bestplan(p,l,t) <- best[]=g, plan(p,l,t,g).
"""

TONS_RANGES = ((1, 500), (1, 1000), (1, 2500), (1, 5000))


def production_facts(tons_range, *, products=8, lines=4, seed=0, stride=1) -> dict:
    import random

    rng = random.Random(f"production:{products}:{lines}:{seed}")
    ps = [f"P{i}" for i in range(1, products + 1)]
    ls = [f"L{i}" for i in range(1, lines + 1)]
    lo, hi = tons_range
    return {
        "product": [(p,) for p in ps],
        "line": [(l,) for l in ls],
        "amount": [(f"t{a}", a) for a in range(lo, hi + 1, stride)],
        "rate": [(p, l, rng.randint(1, 4)) for p in ps for l in ls],
        "unitcost": [(p, l, rng.randint(5, 20)) for p in ps for l in ls],
        "hours": [(l, rng.randint(400, 1200)) for l in ls],
        "demand": [(p, rng.randint(300, 1500)) for p in ps],
        "price": [(p, rng.randint(10, 40)) for p in ps],
        "budget": [(20000,)],
    }


# ---------------------------------------------------------------------------
# engine yard (recursive)

ENGINE = """\
p(t,w) -> string(t), int[64](w).
s(t,w) -> string(t), int[64](w).

e(t,w) -> string(t), int[64](w).
e(t,w) <- p(t,w).
e(t,w) <- s(t,w),
          e(tp,wp),
          w - wp <= 100,
          w + wp >= 19500.
"""

ENGINE_TYPES = ("Steam engine", "Internal combustion engine", "Gas Turbine")

# (P weight range, S weight range) per data set
ENGINE_SETS = {
    1: ((1100, 11500), (1, 10000)),
    2: ((500, 5000), (1, 6000)),
    3: ((500, 16000), (1000, 14000)),
    4: ((10000, 16000), (8, 12000)),
}

DEFAULT_ENGINE_STRIDE = 25


def engine_facts(set_no, stride=DEFAULT_ENGINE_STRIDE) -> dict:
    """P and S as T x range, keeping every `stride`-th weight."""
    (plo, phi), (slo, shi) = ENGINE_SETS[set_no]
    return {
        "p": [(t, w) for t in ENGINE_TYPES for w in range(plo, phi + 1, stride)],
        "s": [(t, w) for t in ENGINE_TYPES for w in range(slo, shi + 1, stride)],
    }


# ---------------------------------------------------------------------------
# multi-legged flights

FLIGHTS = """\
e(x,y,d) -> string(x), string(y), int[64](d).

f(x,y,d) -> string(x), string(y), int[64](d).
f(x,y,d) <- e(x,y,d), d >= 0.
f(x,y,d) <- e(x,z,d1), d1 >= 0,
            f(z,y,d2), d2 >= 0,
            d = d1 + d2, d <= 10000.

query(x,y,d) -> string(x), string(y), int[64](d).
query("Sydney",y,d) <- f("Sydney",y,d), d >= 0, d <= 10000.
"""

FLIGHTS_CMR = """\
answer_f(x,y,d) -> string(x), string(y), int[64](d).
answer_f(x,y,d) <-
   x = "Sydney", f_a(x,y,d), d >= 0, d <= 10000.

f_a(x,y,d) -> string(x), string(y), int[64](d).
f_a(x,y,d) <-
   query_f_a(x,ld,ud), ld <= ud,
   e(x,y,d), d >= 0, d >= ld, d <= ud.
f_a(x,y,d) <-
   query_f_a(x,ld,ud), ld <= ud,
   e(x,z,d1), d1 >= 0,
   f_a(z,y,d2), d2 >= 0,
   d = d1 + d2, d >= ld, d <= ud.

query_f_a(x,ld,ud) -> string(x), int[64](ld), int[64](ud).
query_f_a("Sydney",0,10000).
query_f_a(y,ld2,ud2) <-
   query_f_a(x,ld,ud), ld <= ud,
   e(x,y,d), d >= 0,
   ud2 = ud - d, ld2 = max(ld-d,0).

e(x,y,d) -> string(x), string(y), int[64](d).
"""

# Naive filter transformation of the Engine program: ill-formed because
# the bound aggregates read the recursive predicate they filter.
ENGINE_NAIVE = """\
p(t,w) -> string(t), int[64](w).
s(t,w) -> string(t), int[64](w).
e(t,w) -> string(t), int[64](w).
s_filtered(t,w) -> string(t), int[64](w).
e_filtered(t,w) -> string(t), int[64](w).
lb_s[]=n -> int[64](n).
ub_s[]=n -> int[64](n).
ub_e[]=n -> int[64](n).

e(t,w) <- p(t,w).
e(t,w) <- s_filtered(t,w),
          e_filtered(tp,wp),
          w-wp <= 100,
          w+wp >= 19500.

lb_s[]=n <- agg<<n=min(v)>> s(_,v).
ub_s[]=n <- agg<<n=max(v)>> s(_,v).
ub_e[]=n <- agg<<n=max(v)>> e(_,v).

s_filtered(t,w) <-
   s(t,w),
   w-ub_e[] <= 100,
   19500 <= w+ub_e[].

e_filtered(tp,wp) <-
   e(tp,wp),
   lb_s[]-wp <= 100,
   19500 <= ub_s[]+wp.
"""


def flight_facts(spec: GraphGenSpec) -> dict:
    return {"e": gen_graph(spec)}


def flight_paths(edges, source="Sydney", cap=10000) -> set:
    """Oracle: every (source, y, d) reachable by a walk of total distance <= cap.

    Distances are non-negative, so a depth-first search over
    (node, distance) states terminates.
    """
    adj = {}
    for a, b, d in edges:
        if d >= 0:
            adj.setdefault(a, []).append((b, d))
    seen = set()
    stack = [(source, 0)]
    out = set()
    while stack:
        node, dist = stack.pop()
        for nxt, d in adj.get(node, ()):
            nd = dist + d
            if nd <= cap and (nxt, nd) not in seen:
                seen.add((nxt, nd))
                out.add((source, nxt, nd))
                stack.append((nxt, nd))
    return out


# ---------------------------------------------------------------------------
# benchmark registry


@dataclass
class Benchmark:
    """One benchmark: program text(s), facts and the answer predicate(s)."""

    name: str
    group: str
    program: str | None
    facts: dict
    answer: str
    cmr_program: str | None = None
    cmr_answer: str | None = None
    variants: tuple = ("original", "fp")
    meta: dict = field(default_factory=dict)


def corpus(*, engine_stride=DEFAULT_ENGINE_STRIDE, production_stride=1, graphs=PRESETS) -> list:
    """All benchmarks at desk scale, in report order."""
    out = []
    for p in PUZZLES:
        out.append(Benchmark(p.name, "puzzles", puzzle_program(p), digit_facts(), "solution", meta={"puzzle": p}))
    for lo, hi in TONS_RANGES:
        out.append(
            Benchmark(
                f"Production[{lo},{hi}]", "production", PRODUCTION,
                production_facts((lo, hi), stride=production_stride), "bestplan",
                meta={"tons": (lo, hi)},
            )
        )
    for k in sorted(ENGINE_SETS):
        out.append(
            Benchmark(f"Engine Set{k}", "engine", ENGINE, engine_facts(k, engine_stride), "e",
                      meta={"set": k, "stride": engine_stride})
        )
    out.append(
        Benchmark("Flights", "flights", FLIGHTS, flight_facts(graphs[0]), "query",
                  cmr_program=FLIGHTS_CMR, cmr_answer="answer_f",
                  variants=("original", "fp", "cmr", "cmr+fp"), meta={"graph": graphs[0]})
    )
    for i, g in enumerate(graphs, start=1):
        out.append(
            Benchmark(f"CMR Graph{i}", "cmr", None, flight_facts(g), "answer_f",
                      cmr_program=FLIGHTS_CMR, cmr_answer="answer_f",
                      variants=("cmr", "cmr+fp"), meta={"graph": g})
        )
    return out


def get_benchmark(name: str, **kw) -> Benchmark:
    for b in corpus(**kw):
        if b.name == name:
            return b
    raise KeyError(name)


__all__ = [
    "ENGINE",
    "ENGINE_NAIVE",
    "ENGINE_SETS",
    "ENGINE_TYPES",
    "FLIGHTS",
    "FLIGHTS_CMR",
    "PRODUCTION",
    "PUZZLES",
    "TONS_RANGES",
    "Benchmark",
    "Puzzle",
    "corpus",
    "digit_facts",
    "engine_facts",
    "flight_facts",
    "flight_paths",
    "get_benchmark",
    "production_facts",
    "puzzle_program",
    "puzzle_solutions",
]
