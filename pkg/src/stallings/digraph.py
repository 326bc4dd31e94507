"""Finite S-digraphs: Stallings folding, cores and graph surgery.

Vertices are dense integers ``0..n-1``.  An edge ``(u, g, v)`` is a directed
edge from ``u`` to ``v`` labelled by generator index ``g``; reading the
letter ``2*g`` follows it forwards and ``2*g+1`` backwards.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

from .words import Alphabet


class InvalidVertexError(ValueError):
    pass


class SurgeryConflictError(ValueError):
    """Attaching a path would break foldedness."""


class SDigraph:
    """A finite directed graph with generator-labelled edges.

    The edge set is stored sorted and duplicate free.  When the graph is
    folded, ``step(v, letter)`` gives the unique neighbour (or ``None``).
    """

    __slots__ = ("n", "edges", "basepoint", "rank", "_out", "_inn", "_folded")

    def __init__(self, n: int, edges: Iterable, basepoint: Optional[int] = 0, rank: int = 2):
        self.n = n
        self.rank = rank
        self.edges = tuple(sorted(set((int(u), int(g), int(v)) for u, g, v in edges)))
        for u, g, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidVertexError(f"edge {(u, g, v)} outside 0..{n - 1}")
            if not 0 <= g < rank:
                raise ValueError(f"edge label {g} outside rank {rank}")
        if basepoint is not None and not 0 <= basepoint < n:
            raise InvalidVertexError(f"basepoint {basepoint} outside 0..{n - 1}")
        self.basepoint = basepoint
        self._out = None
        self._inn = None
        self._folded = None

    # -- adjacency -----------------------------------------------------

    def _tables(self):
        if self._out is None:
            out = [dict() for _ in range(self.n)]
            inn = [dict() for _ in range(self.n)]
            folded = True
            for u, g, v in self.edges:
                if g in out[u] or g in inn[v]:
                    folded = False
                out[u][g] = v
                inn[v][g] = u
            self._out, self._inn, self._folded = out, inn, folded
        return self._out, self._inn

    def is_folded(self) -> bool:
        self._tables()
        return self._folded

    def step(self, v: int, letter: int) -> Optional[int]:
        """Follow ``letter`` from ``v``; requires a folded graph."""
        out, inn = self._tables()
        if letter & 1:
            return inn[v].get(letter >> 1)
        return out[v].get(letter >> 1)

    def read(self, v: int, word) -> Optional[int]:
        for x in word:
            v = self.step(v, x)
            if v is None:
                return None
        return v

    def degree(self, v: int) -> int:
        """Number of edge ends at ``v`` (a loop counts twice)."""
        out, inn = self._tables()
        return len(out[v]) + len(inn[v])

    def free_letters(self, v: int) -> list:
        """Letters with no edge to follow from ``v``."""
        return [x for x in range(2 * self.rank) if self.step(v, x) is None]

    def neighbours(self, v: int) -> list:
        return [w for x in range(2 * self.rank) if (w := self.step(v, x)) is not None]

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        return len(_bfs_order(self, 0 if self.basepoint is None else self.basepoint)) == self.n

    def is_regular(self) -> bool:
        """Every vertex has all 2|S| edge slots filled."""
        return self.is_folded() and all(self.degree(v) == 2 * self.rank for v in range(self.n))

    def induced(self, vertices) -> tuple:
        """Edges with both endpoints in ``vertices``."""
        vs = set(vertices)
        return tuple(e for e in self.edges if e[0] in vs and e[2] in vs)

    # -- comparison / serialization -----------------------------------

    def key(self):
        return (self.rank, self.n, self.basepoint, self.edges)

    def __eq__(self, other):
        return isinstance(other, SDigraph) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"SDigraph(n={self.n}, edges={len(self.edges)}, basepoint={self.basepoint})"

    def to_json(self, alphabet: Optional[Alphabet] = None) -> dict:
        alphabet = alphabet or Alphabet(self.rank)
        return {
            "vertices": list(range(self.n)),
            "edges": [[u, alphabet.gen_name(g), v] for u, g, v in self.edges],
            "basepoint": self.basepoint,
        }

    @classmethod
    def from_json(cls, data: dict, rank: int = 2) -> "SDigraph":
        alphabet = Alphabet(rank)
        vertices = list(data["vertices"])
        index = {v: i for i, v in enumerate(vertices)}
        edges = []
        for u, label, v in data["edges"]:
            g = label if isinstance(label, int) else alphabet.letter(label) >> 1
            edges.append((index[u], g, index[v]))
        base = data.get("basepoint")
        return cls(len(vertices), edges, None if base is None else index[base], rank)

    def to_dot(self, alphabet: Optional[Alphabet] = None, name: str = "G") -> str:
        alphabet = alphabet or Alphabet(self.rank)
        lines = [f"digraph {name} {{"]
        for v in range(self.n):
            shape = "doublecircle" if v == self.basepoint else "circle"
            lines.append(f"  {v} [shape={shape}];")
        for u, g, v in self.edges:
            lines.append(f'  {u} -> {v} [label="{alphabet.gen_name(g)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _bfs_order(g: SDigraph, start: int) -> list:
    seen = {start}
    order = [start]
    queue = deque([start])
    out, inn = g._tables()
    while queue:
        v = queue.popleft()
        for gen in range(g.rank):
            for w in (out[v].get(gen), inn[v].get(gen)):
                if w is not None and w not in seen:
                    seen.add(w)
                    order.append(w)
                    queue.append(w)
    return order


def bouquet(words, rank: int) -> SDigraph:
    """Petals reading each word as a closed loop at vertex 0 (unfolded)."""
    edges = []
    n = 1
    for w in words:
        if not w:
            continue
        cur = 0
        for i, x in enumerate(w):
            nxt = 0 if i == len(w) - 1 else n
            if nxt:
                n += 1
            if x & 1:
                edges.append((nxt, x >> 1, cur))
            else:
                edges.append((cur, x >> 1, nxt))
            cur = nxt
    return SDigraph(n, edges, 0, rank)


def fold(g: SDigraph, order=None) -> SDigraph:
    """Stallings folding to a folded graph, then canonical renumbering.

    ``order`` optionally permutes the edge processing order; the result is
    independent of it.
    """
    parent = list(range(g.n))
    size = [1] * g.n

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    out = [dict() for _ in range(g.n)]
    inn = [dict() for _ in range(g.n)]
    edges = list(g.edges)
    if order is not None:
        edges = [edges[i] for i in order]
    pending = deque(edges)

    def merge(x, y):
        if size[x] < size[y]:
            x, y = y, x
        # detach every edge stored at y, then replay it against the merged class
        moved = []
        for gen, t in out[y].items():
            rt = find(t)
            if rt != y:
                del inn[rt][gen]
            moved.append((y, gen, t))
        for gen, s in inn[y].items():
            rs = find(s)
            if rs != y:
                del out[rs][gen]
                moved.append((s, gen, y))
        out[y] = {}
        inn[y] = {}
        parent[y] = x
        size[x] += size[y]
        pending.extend(moved)

    while pending:
        u, gen, v = pending.popleft()
        u, v = find(u), find(v)
        t = out[u].get(gen)
        if t is not None:
            t = find(t)
            if t != v:
                merge(t, v)
            continue
        s = inn[v].get(gen)
        if s is not None:
            s = find(s)
            if s != u:
                merge(s, u)
            continue
        out[u][gen] = v
        inn[v][gen] = u

    roots = sorted({find(v) for v in range(g.n)})
    index = {r: i for i, r in enumerate(roots)}
    new_edges = [(index[find(u)], gen, index[find(v)]) for u, gen, v in g.edges]
    base = None if g.basepoint is None else index[find(g.basepoint)]
    return canonical(SDigraph(len(roots), new_edges, base, g.rank))


def canonical(g: SDigraph) -> SDigraph:
    """Renumber vertices in BFS order from the basepoint.

    Components not reachable from the basepoint follow in order of their
    smallest old vertex id.  For rooted connected folded graphs two graphs
    are isomorphic iff their canonical forms are equal.
    """
    order = []
    seen = set()
    starts = ([g.basepoint] if g.basepoint is not None else []) + list(range(g.n))
    for s in starts:
        if s not in seen:
            comp = _bfs_order(g, s)
            seen.update(comp)
            order.extend(comp)
    index = {v: i for i, v in enumerate(order)}
    edges = [(index[u], gen, index[v]) for u, gen, v in g.edges]
    base = None if g.basepoint is None else index[g.basepoint]
    return SDigraph(g.n, edges, base, g.rank)


def core(g: SDigraph, base: Optional[int] = None) -> SDigraph:
    """Prune degree-1 vertices other than ``base`` until none remain.

    The result is canonically renumbered and rooted at ``base``.
    """
    if base is None:
        base = g.basepoint
    if base is None or not 0 <= base < g.n:
        raise InvalidVertexError(f"base vertex {base} not in graph")
    deg = [0] * g.n
    incident = [[] for _ in range(g.n)]
    for i, (u, _, v) in enumerate(g.edges):
        deg[u] += 1
        deg[v] += 1
        incident[u].append(i)
        incident[v].append(i)
    alive_edge = [True] * len(g.edges)
    alive = [True] * g.n
    stack = [v for v in range(g.n) if v != base and deg[v] <= 1]
    while stack:
        v = stack.pop()
        if not alive[v] or v == base or deg[v] > 1:
            continue
        alive[v] = False
        for i in incident[v]:
            if alive_edge[i]:
                alive_edge[i] = False
                u, _, w = g.edges[i]
                other = w if u == v else u
                deg[other] -= 1
                deg[v] -= 1
                if other != base and alive[other] and deg[other] <= 1:
                    stack.append(other)
    # keep only the component of base
    keep = [v for v in range(g.n) if alive[v]]
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], gen, index[v]) for i, (u, gen, v) in enumerate(g.edges) if alive_edge[i]]
    h = SDigraph(len(keep), edges, index[base], g.rank)
    comp = _bfs_order(h, h.basepoint)
    if len(comp) != h.n:
        cidx = {v: i for i, v in enumerate(comp)}
        cs = set(comp)
        h = SDigraph(len(comp), [(cidx[u], gen, cidx[v]) for u, gen, v in h.edges if u in cs],
                     0, g.rank)
    return canonical(h)


def disjoint_union(g1: SDigraph, g2: SDigraph) -> SDigraph:
    """Vertices of ``g2`` are shifted by ``g1.n``; the basepoint is ``g1``'s."""
    if g1.rank != g2.rank:
        raise ValueError("rank mismatch")
    off = g1.n
    edges = list(g1.edges) + [(u + off, gen, v + off) for u, gen, v in g2.edges]
    return SDigraph(g1.n + g2.n, edges, g1.basepoint, g1.rank)


def attach_path(g: SDigraph, start: int, end: int, gen: int, length: int) -> SDigraph:
    """Attach a directed path of ``length`` edges labelled ``gen`` from ``start`` to ``end``.

    New interior vertices are numbered ``g.n, g.n+1, ...`` in path order.
    """
    if length < 1:
        raise ValueError("path length must be positive")
    for v in (start, end):
        if not 0 <= v < g.n:
            raise InvalidVertexError(f"vertex {v} not in graph")
    if g.step(start, 2 * gen) is not None:
        raise SurgeryConflictError(f"vertex {start} already has an outgoing edge labelled {gen}")
    if g.step(end, 2 * gen + 1) is not None:
        raise SurgeryConflictError(f"vertex {end} already has an incoming edge labelled {gen}")
    chain = [start] + list(range(g.n, g.n + length - 1)) + [end]
    edges = list(g.edges) + [(chain[i], gen, chain[i + 1]) for i in range(length)]
    return SDigraph(g.n + length - 1, edges, g.basepoint, g.rank)
