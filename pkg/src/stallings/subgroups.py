"""Finitely generated subgroups of F(S) as rooted core graphs."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import digraph as dg
from .words import Alphabet, inverse, mul, ball, word_key


class SubgroupHandle:
    """A subgroup H ≤ F(S), stored as its canonical rooted core graph.

    Two handles compare equal iff they represent the same subgroup.
    """

    __slots__ = ("graph", "alphabet", "_gens")

    def __init__(self, graph: dg.SDigraph, alphabet: Alphabet):
        self.graph = graph
        self.alphabet = alphabet
        self._gens = None

    def __eq__(self, other):
        return isinstance(other, SubgroupHandle) and self.graph == other.graph

    def __hash__(self):
        return hash(self.graph)

    def __repr__(self):
        gens = ", ".join(self.alphabet.format(g) for g in self.generators())
        return f"<{gens}>"

    @property
    def rank(self) -> int:
        return rank(self)

    def generators(self) -> list:
        """A free basis read off a BFS spanning tree of the core graph."""
        if self._gens is None:
            self._gens = _basis(self.graph)
        return list(self._gens)


def _tree_paths(g: dg.SDigraph) -> tuple:
    """BFS spanning tree: (path word to each vertex, set of tree edges)."""
    path = {g.basepoint: ()}
    tree = set()
    queue = deque([g.basepoint])
    while queue:
        v = queue.popleft()
        for x in range(2 * g.rank):
            w = g.step(v, x)
            if w is None or w in path:
                continue
            path[w] = path[v] + (x,)
            edge = (v, x >> 1, w) if not x & 1 else (w, x >> 1, v)
            tree.add(edge)
            queue.append(w)
    return path, tree


def _basis(g: dg.SDigraph) -> list:
    path, tree = _tree_paths(g)
    gens = []
    for e in g.edges:
        if e in tree:
            continue
        u, gen, v = e
        gens.append(mul(path[u], (2 * gen,), inverse(path[v])))
    return sorted(gens, key=word_key)


def from_graph(g: dg.SDigraph, alphabet: Alphabet) -> SubgroupHandle:
    """Wrap a folded graph: fold (if needed) and take the core at its basepoint."""
    if not g.is_folded():
        g = dg.fold(g)
    return SubgroupHandle(dg.core(g, g.basepoint), alphabet)


def from_generators(gens, alphabet: Alphabet) -> SubgroupHandle:
    gens = [tuple(w) for w in gens]
    return SubgroupHandle(dg.core(dg.fold(dg.bouquet(gens, alphabet.rank))), alphabet)


def whole_group(alphabet: Alphabet) -> SubgroupHandle:
    return from_generators([(2 * g,) for g in range(alphabet.rank)], alphabet)


def trivial(alphabet: Alphabet) -> SubgroupHandle:
    return from_generators([], alphabet)


def contains(h: SubgroupHandle, w) -> bool:
    g = h.graph
    return g.read(g.basepoint, w) == g.basepoint


def rank(h: SubgroupHandle) -> int:
    g = h.graph
    return len(g.edges) - g.n + 1


def index(h: SubgroupHandle):
    """Index in F(S): the vertex count when the core is regular, else ``math.inf``."""
    g = h.graph
    if g.is_regular():
        idx = g.n
        assert rank(h) - 1 == idx * (h.alphabet.rank - 1), "Nielsen-Schreier identity violated"
        return idx
    return math.inf


def is_finite_index(h: SubgroupHandle) -> bool:
    return h.graph.is_regular()


def is_amenable(h: SubgroupHandle) -> bool:
    """Subgroups of free groups are amenable iff cyclic or trivial."""
    return rank(h) <= 1


def is_infinite(h: SubgroupHandle) -> bool:
    return rank(h) >= 1


def conjugate(h: SubgroupHandle, g) -> SubgroupHandle:
    """The handle of g·H·g⁻¹, obtained by re-rooting at the end of a g⁻¹ path."""
    g = tuple(g)
    if not g:
        return h
    graph = h.graph
    n = graph.n
    edges = list(graph.edges)
    cur = graph.basepoint
    for x in inverse(g):
        nxt = n
        n += 1
        if x & 1:
            edges.append((nxt, x >> 1, cur))
        else:
            edges.append((cur, x >> 1, nxt))
        cur = nxt
    grown = dg.SDigraph(n, edges, cur, graph.rank)
    return SubgroupHandle(dg.core(dg.fold(grown)), h.alphabet)


def intersect(h: SubgroupHandle, k: SubgroupHandle) -> SubgroupHandle:
    """Fiber product of the two core graphs, component of the base pair, cored."""
    if h.alphabet != k.alphabet:
        raise ValueError("alphabet mismatch")
    g1, g2 = h.graph, k.graph
    start = (g1.basepoint, g2.basepoint)
    index_of = {start: 0}
    queue = deque([start])
    edges = []
    while queue:
        p = queue.popleft()
        a, b = p
        for gen in range(g1.rank):
            ta, tb = g1.step(a, 2 * gen), g2.step(b, 2 * gen)
            if ta is not None and tb is not None:
                q = (ta, tb)
                if q not in index_of:
                    index_of[q] = len(index_of)
                    queue.append(q)
                edges.append((index_of[p], gen, index_of[q]))
            sa, sb = g1.step(a, 2 * gen + 1), g2.step(b, 2 * gen + 1)
            if sa is not None and sb is not None:
                q = (sa, sb)
                if q not in index_of:
                    index_of[q] = len(index_of)
                    queue.append(q)
    prod = dg.SDigraph(len(index_of), edges, 0, g1.rank)
    return SubgroupHandle(dg.core(prod, 0), h.alphabet)


def is_subgroup(h: SubgroupHandle, k: SubgroupHandle) -> bool:
    """H ≤ K, checked on a free basis of H."""
    return all(contains(k, w) for w in h.generators())


def join(h: SubgroupHandle, k: SubgroupHandle) -> SubgroupHandle:
    return from_generators(h.generators() + k.generators(), h.alphabet)


@dataclass
class MalnormalVerdict:
    malnormal: bool
    radius: int
    checked: int
    witness: Optional[tuple] = None
    intersection_rank: int = 0

    def to_json(self, alphabet: Alphabet) -> dict:
        return {
            "malnormal_in_ball": self.malnormal,
            "radius": self.radius,
            "checked": self.checked,
            "witness": None if self.witness is None else alphabet.format(self.witness),
            "intersection_rank": self.intersection_rank,
        }


def malnormal_in_ball(h: SubgroupHandle, radius: int) -> MalnormalVerdict:
    """Check gHg⁻¹ ∩ H = 1 for every reduced g ∉ H with |g| ≤ radius."""
    if radius < 1:
        raise ValueError("radius must be at least 1")
    checked = 0
    for g in ball(h.alphabet.rank, radius):
        if contains(h, g):
            continue
        checked += 1
        r = rank(intersect(conjugate(h, g), h))
        if r > 0:
            return MalnormalVerdict(False, radius, checked, g, r)
    return MalnormalVerdict(True, radius, checked)
