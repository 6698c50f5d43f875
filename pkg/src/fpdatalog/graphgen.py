"""Weighted flight-graph generators: random-bidir, clustered, disjoint-complete.

Every family writes edges `e(from, to, distance)`; node 0 is labelled
"Sydney" so the Flights queries have a fixed source.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

FAMILIES = ("random-bidir", "clustered", "disjoint-complete")
SOURCE = "Sydney"
N_CLUSTERS = 6


@dataclass(frozen=True)
class GraphGenSpec:
    family: str
    n: int
    m: int = 1
    o: int = 0
    seed: int = 0
    dist: tuple = (0, 10000)  # edge distances (intra-cluster for `clustered`)
    inter_dist: tuple = (0, 15000)  # cross-cluster distances for `clustered`

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown graph family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 1 or self.m < 1 or self.o < 0:
            raise ValueError("n, m must be >= 1 and o >= 0")


def node_name(i: int) -> str:
    return SOURCE if i == 0 else f"n{i}"


def _bidir(rng, edges, a, b, lo, hi):
    d = rng.randint(lo, hi)
    edges.add((a, b, d))
    edges.add((b, a, d))


def _random_bidir(spec, rng):
    """n nodes; each node gets [0, n//m] bi-directional edges to random peers."""
    n = spec.n
    edges = set()
    for a in range(n):
        for _ in range(rng.randint(0, n // spec.m)):
            b = rng.randrange(n)
            if b != a:
                _bidir(rng, edges, a, b, *spec.dist)
    return edges


def _clustered(spec, rng):
    """6 subgraphs of n nodes; [0, m] local edges per node, [0, o] links per subgraph."""
    n = spec.n
    edges = set()
    for c in range(N_CLUSTERS):
        base = c * n
        for a in range(n):
            for _ in range(rng.randint(0, spec.m)):
                b = rng.randrange(n)
                if b != a:
                    _bidir(rng, edges, base + a, base + b, *spec.dist)
    for c in range(N_CLUSTERS):
        others = [k for k in range(N_CLUSTERS) if k != c]
        for k in rng.sample(others, min(rng.randint(0, spec.o), len(others))):
            _bidir(rng, edges, c * n + rng.randrange(n), k * n + rng.randrange(n), *spec.inter_dist)
    return edges


def _disjoint_complete(spec, rng):
    """m complete digraphs of n nodes with no edges between them."""
    n = spec.n
    edges = set()
    for c in range(spec.m):
        base = c * n
        for a in range(n):
            for b in range(n):
                if a != b:
                    edges.add((base + a, base + b, rng.randint(*spec.dist)))
    return edges


_FAMILY = {
    "random-bidir": _random_bidir,
    "clustered": _clustered,
    "disjoint-complete": _disjoint_complete,
}


def gen_graph(spec: GraphGenSpec) -> list:
    """Sorted `(from, to, distance)` rows; identical for identical specs."""
    rng = random.Random(f"{spec.family}:{spec.n}:{spec.m}:{spec.o}:{spec.seed}")
    edges = _FAMILY[spec.family](spec, rng)
    return sorted((node_name(a), node_name(b), d) for a, b, d in edges)


# Desk-scale stand-ins for the 19 flight graphs: six random graphs, four
# clustered graphs and nine families of disjoint complete subgraphs.
PRESETS = (
    GraphGenSpec("random-bidir", n=8, m=2, seed=1),
    GraphGenSpec("random-bidir", n=12, m=3, seed=2),
    GraphGenSpec("random-bidir", n=12, m=3, seed=3),
    GraphGenSpec("random-bidir", n=16, m=4, seed=3),
    GraphGenSpec("random-bidir", n=16, m=4, seed=4),
    GraphGenSpec("random-bidir", n=24, m=6, seed=1),
    GraphGenSpec("clustered", n=4, m=2, o=3, dist=(0, 7000), seed=1),
    GraphGenSpec("clustered", n=5, m=2, o=2, dist=(0, 7000), seed=5),
    GraphGenSpec("clustered", n=5, m=2, o=2, dist=(0, 7000), seed=1),
    GraphGenSpec("clustered", n=6, m=2, o=3, dist=(0, 7000), seed=4),
    GraphGenSpec("disjoint-complete", n=3, m=2, seed=3),
    GraphGenSpec("disjoint-complete", n=4, m=2, seed=2),
    GraphGenSpec("disjoint-complete", n=4, m=5, seed=2),
    GraphGenSpec("disjoint-complete", n=5, m=2, seed=2),
    GraphGenSpec("disjoint-complete", n=5, m=3, seed=1),
    GraphGenSpec("disjoint-complete", n=6, m=2, seed=5),
    GraphGenSpec("disjoint-complete", n=6, m=2, seed=2),
    GraphGenSpec("disjoint-complete", n=7, m=2, seed=1),
    GraphGenSpec("disjoint-complete", n=8, m=2, seed=3),
)


__all__ = ["FAMILIES", "GraphGenSpec", "N_CLUSTERS", "PRESETS", "SOURCE", "gen_graph", "node_name"]
