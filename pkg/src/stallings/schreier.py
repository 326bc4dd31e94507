"""Lazy 2|S|-regular completion Γ* of a folded S-digraph.

A vertex of Γ* is either an ``int`` (a vertex of the finite graph) or a
pair ``(anchor, path)``: the end of the reduced word ``path`` read from
the graph vertex ``anchor`` whose first letter has no edge at ``anchor``.
Tree vertices are never materialized; they are addressed symbolically.

``act(w, x)`` is the end of the path with origin ``x`` and label ``w``,
read left to right, so ``act(uv, x) == act(v, act(u, x))``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import digraph as dg
from .words import Alphabet, cyclically_reduce, inverse


class InvalidArgumentError(ValueError):
    pass


def is_tree_vertex(x) -> bool:
    return isinstance(x, tuple)


class SchreierView:
    """The completion Γ* of a connected folded graph, acted on by F(S)."""

    def __init__(self, graph: dg.SDigraph, alphabet: Optional[Alphabet] = None):
        if not graph.is_folded():
            raise ValueError("SchreierView needs a folded graph")
        if not graph.is_connected():
            raise ValueError("SchreierView needs a connected graph")
        self.graph = graph
        self.alphabet = alphabet or Alphabet(graph.rank)
        self.base = graph.basepoint if graph.basepoint is not None else 0

    @classmethod
    def of_subgroup(cls, h) -> "SchreierView":
        """Schreier graph of F(S)/H: the completion of H's core graph."""
        return cls(h.graph, h.alphabet)

    @classmethod
    def cayley(cls, alphabet: Alphabet) -> "SchreierView":
        return cls(dg.SDigraph(1, [], 0, alphabet.rank), alphabet)

    @property
    def is_finite(self) -> bool:
        return self.graph.is_regular()

    def __repr__(self):
        return f"SchreierView({self.graph!r})"

    def step(self, x, letter: int):
        if is_tree_vertex(x):
            anchor, path = x
            if path[-1] == letter ^ 1:
                return anchor if len(path) == 1 else (anchor, path[:-1])
            return (anchor, path + (letter,))
        y = self.graph.step(x, letter)
        if y is None:
            return (x, (letter,))
        return y

    def act(self, w, x):
        for letter in w:
            x = self.step(x, letter)
        return x

    def neighbours(self, x) -> list:
        return [self.step(x, letter) for letter in self.alphabet.letters]

    def orbit_finiteness(self, w, x) -> Optional[list]:
        """The orbit of ``x`` under ``w`` as a list, or ``None`` if infinite.

        Exact: a cyclically reduced word has finite orbits only on graph
        vertices, and staying inside the finite graph for |V|+1 iterations
        forces a return to the start.
        """
        w = tuple(w)
        if not w:
            raise InvalidArgumentError("orbit of the empty word is not defined")
        conj, core_word = cyclically_reduce(w)
        y = self.act(conj, x)
        if is_tree_vertex(y):
            return None
        orbit = [y]
        z = y
        for _ in range(self.graph.n + 1):
            z = self.graph.read(z, core_word)
            if z is None:
                return None
            if z == y:
                break
            orbit.append(z)
        else:  # pragma: no cover - excluded by bijectivity
            raise AssertionError("orbit did not close within |V|+1 steps")
        if conj:
            back = inverse(conj)
            orbit = [self.act(back, z) for z in orbit]
        return orbit

    def finite_orbits(self, w, seeds=None) -> list:
        """All finite orbits of a cyclically reduced ``w`` meeting ``seeds``.

        With the default seeds (every graph vertex) this is every finite
        orbit of ``w`` on Γ*.
        """
        seeds = range(self.graph.n) if seeds is None else seeds
        seen = set()
        orbits = []
        for x in seeds:
            if x in seen:
                continue
            orbit = self.orbit_finiteness(w, x)
            if orbit is None:
                seen.add(x)
                continue
            seen.update(orbit)
            orbits.append(orbit)
        return orbits

    def ball(self, center=None, radius: int = 0) -> "Ball":
        """Induced subgraph on vertices within ``radius`` (undirected metric)."""
        if radius < 0:
            raise InvalidArgumentError("radius must be nonnegative")
        center = self.base if center is None else center
        refs = [center]
        dist = {center: 0}
        queue = deque([center])
        while queue:
            x = queue.popleft()
            if dist[x] == radius:
                continue
            for y in self.neighbours(x):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    refs.append(y)
                    queue.append(y)
        return Ball.from_refs(self, refs, dist)


@dataclass
class Ball:
    """A finite ball of a view, with back references to view vertices."""

    graph: dg.SDigraph
    refs: list
    dist: dict

    @classmethod
    def from_refs(cls, view, refs, dist=None) -> "Ball":
        index = {x: i for i, x in enumerate(refs)}
        edges = []
        for i, x in enumerate(refs):
            for gen in range(view.alphabet.rank):
                j = index.get(view.step(x, 2 * gen))
                if j is not None:
                    edges.append((i, gen, j))
        return cls(dg.SDigraph(len(refs), edges, 0, view.alphabet.rank), refs, dist or {})

    def __len__(self):
        return len(self.refs)
