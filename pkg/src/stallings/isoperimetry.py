"""Exact boundary ratios, Følner checks and φ_S search.

For a finite nonempty set P of a G-set X the boundary ratio is
Σ_{s∈S} |sP ∖ P| / |P|, summed over the generators only (not their
inverses).  All values are ``Fraction``; nothing here uses floats.

Any object with ``alphabet`` and ``step(x, letter)`` can serve as a
G-set ("view"): ``SchreierView``, ``DiagonalPowerView``, ``ProductView``.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import perm
from typing import Optional

from .schreier import Ball, InvalidArgumentError, SchreierView


def _check_set(P) -> list:
    P = list(P)
    if not P:
        raise InvalidArgumentError("boundary ratio of an empty set")
    if len(set(P)) != len(P):
        raise InvalidArgumentError("set has duplicate points")
    return P


def boundary_count(view, P) -> int:
    """Σ_{s∈S} |sP ∖ P|."""
    members = set(P)
    return sum(
        1
        for s in view.alphabet.generators
        for x in members
        if view.step(x, s) not in members
    )


def boundary_ratio(view, P) -> Fraction:
    P = _check_set(P)
    return Fraction(boundary_count(view, P), len(P))


def check_invariance(view, P, eps) -> bool:
    """True iff P is (S, eps)-invariant: boundary ratio strictly below ``eps``."""
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    ratio = boundary_ratio(view, P)
    invariant = ratio < eps
    if invariant and _orbits_exceed(view, 1 / eps):
        assert len(P) > 1 / eps, "Følner set smaller than 1/eps on large orbits"
    return invariant


def _orbits_exceed(view, bound) -> bool:
    """Whether every orbit of ``view`` is known to have more than ``bound`` points."""
    if isinstance(view, SchreierView):
        return not view.is_finite or view.graph.n > bound
    return False


def conductance(phi: Fraction, rank: int) -> Fraction:
    """h_S = φ_S / |S|."""
    return Fraction(phi) / rank


def split_components(view, P) -> list:
    """Connected pieces of P in the Schreier graph of ``view``."""
    members = set(P)
    seen = set()
    parts = []
    for x in P:
        if x in seen:
            continue
        comp = [x]
        seen.add(x)
        queue = deque([x])
        while queue:
            y = queue.popleft()
            for letter in view.alphabet.letters:
                z = view.step(y, letter)
                if z in members and z not in seen:
                    seen.add(z)
                    comp.append(z)
                    queue.append(z)
        parts.append(comp)
    return parts


def best_component(view, P) -> tuple:
    """The piece of P with the smallest ratio; never worse than P itself."""
    best = None
    for comp in split_components(view, P):
        r = boundary_ratio(view, comp)
        if best is None or r < best[0]:
            best = (r, comp)
    return best


# -- connected subsets --------------------------------------------------


def _adjacency(graph) -> list:
    adj = [set() for _ in range(graph.n)]
    for u, _, v in graph.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return [sorted(a) for a in adj]


def iter_connected_subsets(adj, max_size: int, vertices=None):
    """Every connected vertex set of size ≤ ``max_size``, each exactly once.

    ``adj`` is a list of neighbour lists; ``vertices`` restricts the search.
    Uses exclusive-neighbourhood extension (ESU), rooted at the smallest
    vertex of each set.
    """
    allowed = set(range(len(adj))) if vertices is None else set(vertices)

    def extend(sub, sub_nbhd, ext, root):
        yield sub
        if len(sub) == max_size:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new_ext = list(ext)
            added = []
            for u in adj[w]:
                if u > root and u in allowed and u not in sub_nbhd:
                    new_ext.append(u)
                    added.append(u)
            sub_nbhd.update(added)
            sub_nbhd.add(w)
            yield from extend(sub + [w], sub_nbhd, new_ext, root)
            sub_nbhd.difference_update(added)
            # w stays in the neighbourhood: it was there before the pop

    for v in sorted(allowed):
        nb = {v} | {u for u in adj[v] if u in allowed}
        ext = [u for u in adj[v] if u > v and u in allowed]
        yield from extend([v], set(nb), ext, v)


def _induced_edge_count(graph, vertices) -> int:
    vs = set(vertices)
    return sum(1 for u, _, v in graph.edges if u in vs and v in vs)


def two_core(graph) -> set:
    """Vertices surviving repeated deletion of degree ≤ 1 vertices (loops count 2)."""
    deg = [0] * graph.n
    nbrs = [[] for _ in range(graph.n)]
    for u, _, v in graph.edges:
        deg[u] += 1
        deg[v] += 1
        nbrs[u].append(v)
        if u != v:
            nbrs[v].append(u)
    alive = [True] * graph.n
    stack = [v for v in range(graph.n) if deg[v] <= 1]
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for u in nbrs[v]:
            if alive[u] and u != v:
                deg[u] -= 1
                if deg[u] <= 1:
                    stack.append(u)
    return {v for v in range(graph.n) if alive[v]}


class BudgetExceeded(RuntimeError):
    pass


def _grow(adj, seed, size) -> list:
    """Extend a connected set to ``size`` vertices by BFS."""
    out = list(seed)
    have = set(out)
    queue = deque(out)
    while queue and len(out) < size:
        v = queue.popleft()
        for u in adj[v]:
            if u not in have:
                have.add(u)
                out.append(u)
                queue.append(u)
                if len(out) == size:
                    break
    return out


def exhaustive_min_by_size(ball: Ball, rank: int, max_size: int, method: str = "reduced",
                           node_budget: int = 5_000_000) -> dict:
    """Minimum boundary ratio among connected subsets of a ball, per size.

    Returns ``{size: (ratio, vertex ids)}``.  The ball graph is induced,
    so boundary counts taken inside it equal those in the view.

    ``method="brute"`` enumerates every connected subset.  ``"reduced"``
    uses ratio = |S| - (|P| - 1 + β(P)) / |P| for connected P, where β is
    the cycle rank of the induced subgraph; the largest β at size m is
    attained by a connected subset of the ball's 2-core with at most m
    vertices, so only those are enumerated.
    """
    g = ball.graph
    adj = _adjacency(g)
    sizes = range(1, min(max_size, g.n) + 1)
    best = {}
    nodes = 0
    if method == "brute":
        for sub in iter_connected_subsets(adj, max_size):
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceeded(f"more than {node_budget} connected subsets")
            e = _induced_edge_count(g, sub)
            r = Fraction(rank * len(sub) - e, len(sub))
            m = len(sub)
            if m not in best or r < best[m][0]:
                best[m] = (r, list(sub))
        return best
    if method != "reduced":
        raise ValueError(f"unknown method {method!r}")
    cyc = two_core(g)
    # best cycle rank seen at each exact size of the 2-core subset
    beta_at = {}
    for sub in iter_connected_subsets(adj, max_size, cyc):
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"more than {node_budget} connected 2-core subsets")
        beta = _induced_edge_count(g, sub) - len(sub) + 1
        if len(sub) not in beta_at or beta > beta_at[len(sub)][0]:
            beta_at[len(sub)] = (beta, list(sub))
    running = (0, [0])
    for m in sizes:
        if m in beta_at and beta_at[m][0] > running[0]:
            running = beta_at[m]
        beta, seed = running
        witness = _grow(adj, seed, m)
        e = _induced_edge_count(g, witness)
        r = Fraction(rank * m - e, m)
        assert r == Fraction(rank * m - (m - 1 + beta), m), "cycle-rank reduction mismatch"
        best[m] = (r, witness)
    return best


def greedy_growth(view, start, size: int) -> tuple:
    """Grow a set from ``start`` adding the neighbour with most edges into it."""
    P = [start]
    members = {start}
    best = (boundary_ratio(view, P), list(P))
    frontier = {}

    def touch(x):
        for letter in view.alphabet.letters:
            y = view.step(x, letter)
            if y not in members:
                frontier[y] = frontier.get(y, 0) + 1

    touch(start)
    while len(P) < size and frontier:
        y = max(frontier, key=frontier.get)  # ties: earliest discovered
        del frontier[y]
        P.append(y)
        members.add(y)
        touch(y)
        r = boundary_ratio(view, P)
        if r < best[0]:
            best = (r, list(P))
    return best


@dataclass
class PhiBound:
    """Search result for φ_S of a view.

    ``upper`` is a genuine upper bound witnessed by ``witness``.  ``floor``
    is the exact minimum over the exhaustive stratum (connected subsets of
    the ball up to ``max_size``); it certifies the search, not a lower bound
    on φ_S.  ``floor`` is ``None`` when the search budget ran out.
    """

    upper: Fraction
    witness: list
    floor: Optional[Fraction]
    max_size: int
    radius: int
    complete: bool = True
    by_size: dict = field(default_factory=dict)
    heuristic: bool = False

    def to_json(self, fmt=repr) -> dict:
        return {
            "upper": {
                "num": str(self.upper.numerator),
                "den": str(self.upper.denominator),
                "witness": [fmt(x) for x in self.witness],
            },
            "floor": None if self.floor is None else {
                "num": str(self.floor.numerator),
                "den": str(self.floor.denominator),
                "budget": {"max_size": self.max_size, "radius": self.radius},
                "complete": self.complete,
                "note": "minimum over the searched stratum; not a lower-bound proof",
            },
        }


def phi_search(view: SchreierView, max_size: int, radius: int, heuristics: bool = False,
               method: str = "reduced", node_budget: int = 5_000_000) -> PhiBound:
    if max_size < 1 or radius < 0:
        raise InvalidArgumentError("budgets must be positive")
    ball = view.ball(view.base, radius)
    rank = view.alphabet.rank
    complete = True
    try:
        by_size = exhaustive_min_by_size(ball, rank, max_size, method, node_budget)
    except BudgetExceeded:
        complete = False
        by_size = {}
    # the ball is an induced subgraph, so in-ball counts equal view counts
    by_size_view = {}
    for m, (_, ids) in by_size.items():
        refs = [ball.refs[i] for i in ids]
        r, comp = best_component(view, refs)
        by_size_view[m] = (r, comp)
    candidates = list(by_size_view.values())
    floor = None
    if complete and by_size:
        floor = min(r for r, _ in by_size.values())
    if view.is_finite:
        everything = list(range(view.graph.n))
        candidates.append((boundary_ratio(view, everything), everything))
    if heuristics:
        starts = list(range(view.graph.n)) or [view.base]
        for x in starts:
            candidates.append(greedy_growth(view, x, 4 * max_size))
    if not candidates:
        candidates.append((boundary_ratio(view, [view.base]), [view.base]))
    upper, witness = min(candidates, key=lambda c: (c[0], len(c[1])))
    return PhiBound(upper, witness, floor, max_size, radius, complete, by_size_view, heuristics)


# -- diagonal powers ------------------------------------------------------


class DiagonalPowerView:
    """X^{⊛n}: n-tuples of distinct points of a transitive view, acted on diagonally."""

    def __init__(self, view, n: int):
        if n < 1:
            raise InvalidArgumentError("n must be positive")
        self.view = view
        self.n = n
        self.alphabet = view.alphabet

    def step(self, x, letter):
        return tuple(self.view.step(y, letter) for y in x)

    def act(self, w, x):
        for letter in w:
            x = self.step(x, letter)
        return x


def diag_power(view, n: int) -> DiagonalPowerView:
    return DiagonalPowerView(view, n)


def diag_set(P, n: int) -> list:
    """P^{⊛n} = Pⁿ ∩ X^{⊛n} for P inside one orbit."""
    return list(itertools.permutations(P, n))


@dataclass
class NDiagReport:
    ratio: Fraction
    ratio_power: Fraction
    eps: Fraction
    n: int
    proof_inequality: bool
    invariant: bool

    @property
    def holds(self) -> bool:
        return self.proof_inequality and self.invariant


def lemma_ndiag_check(view, P, n: int, slack=Fraction(1, 10**6)) -> NDiagReport:
    """Check that P^{⊛n} is (S, n·eps)-invariant whenever P is (S, eps)-invariant.

    ``eps`` is the exact ratio of P plus ``slack``.  Reports both the sharp
    inequality ratio(P^{⊛n}) ≤ n·ratio(P) and the strict invariance at n·eps.
    """
    P = _check_set(P)
    if len(P) < n:
        raise InvalidArgumentError(f"|P| = {len(P)} is smaller than n = {n}")
    slack = Fraction(slack)
    if slack <= 0:
        raise InvalidArgumentError("slack must be positive")
    r = boundary_ratio(view, P)
    eps = r + slack
    tuples = diag_set(P, n)
    rn = boundary_ratio(diag_power(view, n), tuples)
    report = NDiagReport(r, rn, eps, n, rn <= n * r, rn < n * eps)
    return report


def diag_ratio_closed_form(view, P, n: int) -> Fraction:
    """ratio(P^{⊛n}) from |sP ∩ P| alone: |sT ∩ T| = (|sP ∩ P|)_n falling."""
    P = list(P)
    members = set(P)
    total = perm(len(P), n)
    out = 0
    for s in view.alphabet.generators:
        inside = sum(1 for x in P if view.step(x, s) in members)
        out += total - perm(inside, n)
    return Fraction(out, total)


# -- G-maps ---------------------------------------------------------------


def path_word(view: SchreierView, x) -> tuple:
    """A word w with base·w = x."""
    if isinstance(x, tuple):
        anchor, path = x
        return path_word(view, anchor) + path
    seen = {view.base: ()}
    queue = deque([view.base])
    while queue:
        v = queue.popleft()
        if v == x:
            return seen[v]
        for letter in view.alphabet.letters:
            y = view.graph.step(v, letter)
            if y is not None and y not in seen:
                seen[y] = seen[v] + (letter,)
                queue.append(y)
    raise InvalidArgumentError(f"vertex {x!r} not reachable")


def quotient_map(src: SchreierView, dst: SchreierView):
    """The G-map G/H → G/L (H ≤ L) sending base·w to base·w."""

    def phi(x):
        return dst.act(path_word(src, x), dst.base)

    return phi


def push_folner(src, dst, phi, P) -> tuple:
    """Find Q ⊆ φ(P) with ratio(Q) ≤ ratio(P), via level sets of the fibre count."""
    P = _check_set(P)
    count = {}
    for x in P:
        y = phi(x)
        count[y] = count.get(y, 0) + 1
    best = None
    for t in sorted(set(count.values())):
        Q = [y for y, c in count.items() if c >= t]
        r = boundary_ratio(dst, Q)
        if best is None or r < best[0]:
            best = (r, Q)
    return best


class ProductView:
    """Diagonal product of two views: (x, y)·s = (x·s, y·s)."""

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self.alphabet = left.alphabet

    def step(self, p, letter):
        return (self.left.step(p[0], letter), self.right.step(p[1], letter))


def induced_product_set(src: SchreierView, finite: SchreierView, P) -> list:
    """{(y, x·σ(y)) : y ∈ P, x ∈ X} in G/H × X with σ(y) a path word to y."""
    X = list(range(finite.graph.n))
    out = []
    for y in P:
        w = path_word(src, y)
        out.extend((y, finite.act(w, x)) for x in X)
    return out


# -- isoperimetric threshold versus wq*-normality ------------------------


@dataclass
class ThresholdReport:
    upper: Fraction
    threshold: Fraction
    n: int
    met: bool
    certificate: Optional[object] = None
    status: str = ""

    def to_json(self) -> dict:
        return {
            "phi_upper": {"num": str(self.upper.numerator), "den": str(self.upper.denominator)},
            "threshold": {"num": str(self.threshold.numerator),
                          "den": str(self.threshold.denominator)},
            "degree": self.n,
            "threshold_met": self.met,
            "status": self.status,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


CAYLEY_PHI_F2 = Fraction(1)  # φ_S(F₂) for S a free basis of size 2


def threshold_report(h, n: int, reference_phi=None, max_size: int = 12, radius: int = 6,
                     cert_radius: int = 2, heuristics: bool = False) -> ThresholdReport:
    """Compare φ_S(G/H) against φ_S(X)/2ⁿ and cross-check with certification.

    With ``reference_phi`` unset, X is the Cayley graph of F₂ (φ = 1).
    """
    from .normality import NONAMENABLE, Verdict, degree_certify

    if reference_phi is None:
        if h.alphabet.rank != 2:
            raise InvalidArgumentError("the built-in reference value is for F₂ only")
        reference_phi = CAYLEY_PHI_F2
    bound = phi_search(SchreierView.of_subgroup(h), max_size, radius, heuristics)
    threshold = Fraction(reference_phi) / 2 ** n
    if not bound.upper < threshold:
        return ThresholdReport(bound.upper, threshold, n, False, None, "threshold not met")
    cert = degree_certify(h, n, NONAMENABLE, cert_radius)
    status = "agreement" if cert.verdict is Verdict.CERTIFIED else "unknown"
    return ThresholdReport(bound.upper, threshold, n, True, cert, status)
