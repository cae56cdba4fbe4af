"""Motif specifications and injective-map subgraph counts.

``N(H, G)`` counts injective vertex maps ``H -> G`` that send every edge of
``H`` to an edge of ``G`` (so a triangle is counted 6 times).  The three
motifs used by the models have closed-form fast paths; anything else goes
through a bitset backtracking search.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .graph import Encoding, Graph, degrees, pair_index


@dataclass(frozen=True)
class SubgraphSpec:
    zeta: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    def __post_init__(self):
        if self.zeta < 2:
            raise ValueError("a motif needs at least two vertices")
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"motif has a self-loop at {u}")
            if not (0 <= u < self.zeta and 0 <= v < self.zeta):
                raise ValueError(f"motif edge ({u}, {v}) outside 0..{self.zeta - 1}")
            norm.append((min(u, v), max(u, v)))
        if len(set(norm)) != len(norm):
            raise ValueError("motif edge list has duplicates")
        if not _connected(self.zeta, norm):
            raise ValueError("motif must be connected")
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def kind(self) -> str:
        """'K2', 'K12', 'K3' for the fast-path motifs, else 'generic'."""
        key = (self.zeta, len(self.edges))
        return {(2, 1): "K2", (3, 2): "K12", (3, 3): "K3"}.get(key, "generic")

    def to_dict(self) -> dict:
        return {"zeta": self.zeta, "edges": [list(e) for e in self.edges], "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "SubgraphSpec":
        name = d.get("name", "")
        if name in NAMED and "edges" not in d:
            return NAMED[name]
        return cls(int(d["zeta"]), tuple(tuple(e) for e in d["edges"]), name)


def _connected(zeta: int, edges) -> bool:
    adj = [set() for _ in range(zeta)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u] - seen:
            seen.add(v)
            stack.append(v)
    return len(seen) == zeta


K2 = SubgraphSpec(2, ((0, 1),), "K2")
K12 = SubgraphSpec(3, ((0, 1), (0, 2)), "K12")  # center is vertex 0
K3 = SubgraphSpec(3, ((0, 1), (0, 2), (1, 2)), "K3")
NAMED = {"K2": K2, "K12": K12, "K3": K3, "two_star": K12, "edge": K2, "triangle": K3}


def _require_zero_one(g: Graph):
    if g.encoding is not Encoding.ZERO_ONE:
        raise ValueError("subgraph counts are defined on zero-one graphs")


def _backtrack_count(h: SubgraphSpec, rows: list[int], n: int, fixed: dict[int, int]) -> int:
    """Injective maps extending ``fixed`` with every motif edge present."""
    order = sorted(range(h.zeta), key=lambda v: (v not in fixed, v))
    nbrs = [[] for _ in range(h.zeta)]
    for u, v in h.edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    image = dict(fixed)
    for u, v in h.edges:
        if u in image and v in image and not (rows[image[u]] >> image[v]) & 1:
            return 0
    free = [v for v in order if v not in fixed]
    full = (1 << n) - 1

    def rec(k: int, used: int) -> int:
        if k == len(free):
            return 1
        hv = free[k]
        cand = full & ~used
        for w in nbrs[hv]:
            if w in image:
                cand &= rows[image[w]]
        total = 0
        while cand:
            low = cand & -cand
            x = low.bit_length() - 1
            cand ^= low
            image[hv] = x
            total += rec(k + 1, used | low)
            del image[hv]
        return total

    used = 0
    for x in image.values():
        used |= 1 << x
    return rec(0, used)


def count_subgraph(h: SubgraphSpec, g: Graph) -> int:
    """N(H, G): number of injective maps H -> G preserving edges."""
    _require_zero_one(g)
    if h.zeta > g.n:
        raise ValueError(f"motif has {h.zeta} vertices but graph only {g.n}")
    kind = h.kind
    if kind == "K2":
        return int(degrees(g).sum())
    if kind == "K12":
        d = degrees(g)
        return int(2 * sum(comb(int(x), 2) for x in d))
    if kind == "K3":
        a = g.adjacency().astype(np.int64)
        return int(np.trace(a @ a @ a))
    return count_subgraph_bruteforce(h, g)


def count_subgraph_bruteforce(h: SubgraphSpec, g: Graph) -> int:
    """Backtracking count with no closed forms; used as the reference route."""
    _require_zero_one(g)
    if h.zeta > g.n:
        raise ValueError(f"motif has {h.zeta} vertices but graph only {g.n}")
    return _backtrack_count(h, g.row_bitsets(), g.n, {})


class EdgeCount(NamedTuple):
    count: int
    scaled: float  # count / n**(zeta - 2)


def count_through_edge(h: SubgraphSpec, g: Graph, e: tuple[int, int]) -> EdgeCount:
    """N_e(H, G): maps using pair ``e`` as an edge image, with ``e`` forced present."""
    _require_zero_one(g)
    i, j = int(e[0]), int(e[1])
    pair_index(g.n, i, j)  # validates the pair
    if h.zeta > g.n:
        raise ValueError(f"motif has {h.zeta} vertices but graph only {g.n}")
    kind = h.kind
    if kind == "K2":
        c = 2
    elif kind in ("K12", "K3"):
        a = g.adjacency()
        if kind == "K12":
            di = int(a[i].sum()) - int(a[i, j])
            dj = int(a[j].sum()) - int(a[i, j])
            c = 2 * (di + dj)
        else:
            c = 6 * int(np.dot(a[i].astype(np.int64), a[j]))
    else:
        c = count_through_edge_bruteforce(h, g, (i, j))
    return EdgeCount(c, c / g.n ** (h.zeta - 2))


def count_through_edge_bruteforce(h: SubgraphSpec, g: Graph, e) -> int:
    i, j = int(e[0]), int(e[1])
    rows = g.row_bitsets()
    rows[i] |= 1 << j
    rows[j] |= 1 << i
    total = 0
    for a, b in h.edges:
        for x, y in ((i, j), (j, i)):
            total += _backtrack_count(h, rows, g.n, {a: x, b: y})
    return total
