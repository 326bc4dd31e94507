"""A transitive amenable strongly almost free action of F(S), stage by stage.

Builds finite folded graphs Γ₀ ⊆ Γ₁ ⊆ … such that for every n

1. Γₙ has a vertex of degree < 2|S|,
2. V(Γₙ) contains an (S, 1/n)-invariant set for the action on V(Γₙ*),
3. every finite orbit on V(Γₙ*) of a word in C_{n-1} lies in V(Γ_{n-1}).

Stage n glues a ball B_k of the Schreier graph Δₙ of G/N′ (N a finite
index normal subgroup) onto Γ_{n-1} along a path of 2n edges.  Points of
G/N′ are pairs (q, v) with q ∈ Q = G/N and v ∈ Z^r = N/N′.
"""

from __future__ import annotations

import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import digraph as dg
from .isoperimetry import boundary_ratio
from .schreier import Ball, SchreierView, is_tree_vertex
from .words import Alphabet, enumerate_cyclically_reduced, mul, power

log = logging.getLogger(__name__)


class StageBuildError(RuntimeError):
    """A bounded search ran out of budget while building a stage."""

    def __init__(self, search: str, budget: str):
        super().__init__(f"{search} exhausted its budget ({budget})")
        self.search = search
        self.budget = budget


class InternalConsistencyError(AssertionError):
    pass


class VerificationFailure(AssertionError):
    def __init__(self, report):
        super().__init__(f"stage {report.n} failed verification: {report.failures}")
        self.report = report


# -- finite quotients -------------------------------------------------------


def _compose(p, q):
    """p then q (right action on points)."""
    return tuple(q[i] for i in p)


def _invert(p):
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


@dataclass
class FiniteQuotient:
    """A homomorphism F(S) → Q given by permutation images, factor by factor.

    ``images[g]`` is a tuple with one permutation per factor; an element of
    Q is such a tuple.  Words act on points left to right.
    """

    rank: int
    degrees: list
    images: list
    label: str = ""
    degenerate: bool = False

    def __post_init__(self):
        self._letter_images = []
        for g in range(self.rank):
            self._letter_images.append(tuple(self.images[g]))
            self._letter_images.append(tuple(_invert(p) for p in self.images[g]))

    def identity(self):
        return tuple(tuple(range(d)) for d in self.degrees)

    def step(self, q, letter):
        return tuple(_compose(p, s) for p, s in zip(q, self._letter_images[letter]))

    def evaluate(self, w):
        q = self.identity()
        for letter in w:
            q = self.step(q, letter)
        return q

    def is_identity(self, q) -> bool:
        return q == self.identity()

    def describe(self) -> dict:
        return {"label": self.label, "degrees": list(self.degrees)}


def trivial_quotient(rank: int) -> FiniteQuotient:
    return FiniteQuotient(rank, [], [() for _ in range(rank)], "trivial")


def cyclic_quotient(rank: int, m: int, shifts) -> FiniteQuotient:
    """F(S) → Z/m sending generator g to ``shifts[g]``."""
    images = [(tuple((i + shifts[g]) % m for i in range(m)),) for g in range(rank)]
    return FiniteQuotient(rank, [m], images, f"Z/{m} {list(shifts)}")


def avoiding_quotient(words, rank: int) -> FiniteQuotient:
    """A finite quotient in which no word of ``words`` is trivial.

    Each word w gets a permutation representation on {0, …, |w|} in which
    reading w moves 0 to |w|; the factors are combined diagonally.
    """
    words = [tuple(w) for w in words]
    if not words:
        q = trivial_quotient(rank)
        q.degenerate = True
        return q
    degrees = []
    per_gen = [[] for _ in range(rank)]
    for w in words:
        if not w:
            raise ValueError("the identity cannot be avoided")
        d = len(w) + 1
        degrees.append(d)
        partial = [dict() for _ in range(rank)]
        for i, letter in enumerate(w):
            g = letter >> 1
            if letter & 1:
                partial[g][i + 1] = i
            else:
                partial[g][i] = i + 1
        for g in range(rank):
            pmap = partial[g]
            free_src = [i for i in range(d) if i not in pmap]
            free_dst = sorted(set(range(d)) - set(pmap.values()))
            full = dict(pmap)
            full.update(zip(free_src, free_dst))
            per_gen[g].append(tuple(full[i] for i in range(d)))
    images = [tuple(per_gen[g]) for g in range(rank)]
    q = FiniteQuotient(rank, degrees, images, f"avoiding {len(words)} words")
    for w in words:
        if q.is_identity(q.evaluate(w)):
            raise InternalConsistencyError(f"word {w} maps to the identity")
    return q


# -- G/N' as pairs (q, v) -------------------------------------------------


class MetabelianCosetSpace:
    """G/N′ for N = ker(F(S) → Q), with Reidemeister–Schreier bookkeeping.

    A spanning tree of the Cayley graph of Q gives a transversal σ; each
    non-tree edge (q, s) gives a Schreier generator σ(q)·s·σ(qs)⁻¹ of N,
    and these form a basis of N/N′ ≅ Z^r.  Right multiplication by s sends
    (q, v) to (qs, v + e_j) when (q, s) is non-tree edge j, else (qs, v).
    """

    def __init__(self, quotient: FiniteQuotient, max_order: int = 100_000):
        self.quotient = quotient
        self.rank = quotient.rank
        self.alphabet = Alphabet(self.rank)
        ident = quotient.identity()
        self.elements = [ident]
        self.index = {ident: 0}
        self.sigma = [()]
        queue = deque([0])
        tree = set()
        table = []
        while queue:
            i = queue.popleft()
            while len(table) <= i:
                table.append([None] * (2 * self.rank))
            for letter in range(2 * self.rank):
                q = quotient.step(self.elements[i], letter)
                j = self.index.get(q)
                if j is None:
                    j = len(self.elements)
                    if j >= max_order:
                        raise StageBuildError("quotient enumeration", f"|Q| < {max_order}")
                    self.elements.append(q)
                    self.index[q] = j
                    self.sigma.append(self.sigma[i] + (letter,))
                    queue.append(j)
                    tree.add((i, letter >> 1) if not letter & 1 else (j, letter >> 1))
                table[i][letter] = j
        while len(table) < len(self.elements):
            table.append([None] * (2 * self.rank))
        self.table = table
        self.order = len(self.elements)
        # Schreier generators from non-tree edges
        self.gamma = [[None] * self.rank for _ in range(self.order)]
        self.schreier_words = []
        for i in range(self.order):
            for g in range(self.rank):
                if (i, g) in tree:
                    continue
                j = table[i][2 * g]
                self.gamma[i][g] = len(self.schreier_words)
                self.schreier_words.append(mul(self.sigma[i], (2 * g,), _inv(self.sigma[j])))
        self.r = len(self.schreier_words)
        if self.r - 1 != self.order * (self.rank - 1):
            raise InternalConsistencyError("Nielsen-Schreier count failed for N")
        self.root = (0, (0,) * self.r)
        self._conj = None

    # points of G/N'

    def step(self, x, letter):
        i, v = x
        g = letter >> 1
        if letter & 1:
            j = self.table[i][letter]
            k = self.gamma[j][g]
            if k is None:
                return (j, v)
            return (j, v[:k] + (v[k] - 1,) + v[k + 1:])
        j = self.table[i][letter]
        k = self.gamma[i][g]
        if k is None:
            return (j, v)
        return (j, v[:k] + (v[k] + 1,) + v[k + 1:])

    def act(self, w, x):
        for letter in w:
            x = self.step(x, letter)
        return x

    def image(self, w) -> int:
        i = 0
        for letter in w:
            i = self.table[i][letter]
        return i

    def in_n(self, w) -> bool:
        return self.image(w) == 0

    def rewrite(self, w) -> tuple:
        """Abelianized Reidemeister–Schreier rewriting of w ∈ N in Z^r."""
        i, v = self.act(w, self.root)
        if i != 0:
            raise ValueError("word is not in N")
        return v

    def in_commutator(self, w) -> bool:
        """w ∈ N′."""
        return self.act(w, self.root) == self.root

    def has_infinite_order(self, w) -> bool:
        """w has infinite order in G/N′ (exact: look at w^ord(q))."""
        if not w:
            return False
        k = 1
        q = self.image(w)
        cur = q
        while cur != 0:
            cur = self.image(power(w, k + 1))
            k += 1
        return any(self.rewrite(power(w, k)))

    def conj_matrices(self) -> list:
        """Per q, the matrix of n ↦ σ(q) n σ(q)⁻¹ on N/N′ (columns = images of basis)."""
        if self._conj is None:
            mats = []
            for i in range(self.order):
                cols = [self.rewrite(mul(self.sigma[i], gw, _inv(self.sigma[i])))
                        for gw in self.schreier_words]
                mats.append([[cols[j][row] for j in range(self.r)] for row in range(self.r)])
            self._conj = mats
        return self._conj

    def translate(self, x, vec):
        """Apply the element of N with abelian image ``vec`` to the point x."""
        i, v = x
        mat = self.conj_matrices()[i]
        shift = [sum(mat[row][j] * vec[j] for j in range(self.r)) for row in range(self.r)]
        return (i, tuple(a + b for a, b in zip(v, shift)))

    def avoids(self, words) -> bool:
        """No word lies in N′."""
        return not any(self.in_commutator(w) for w in words)


def _inv(w):
    return tuple(x ^ 1 for x in reversed(w))


def build_coset_space(q: FiniteQuotient, max_order: int = 100_000) -> MetabelianCosetSpace:
    space = MetabelianCosetSpace(q, max_order)
    for x in [space.root] + [(i, space.root[1]) for i in range(space.order)]:
        for letter in range(2 * space.rank):
            if space.step(space.step(x, letter), letter ^ 1) != x:
                raise InternalConsistencyError("s·s⁻¹ is not the identity")
    return space


def choose_quotient(words, rank: int, policy: str = "minimal", max_order: int = 64):
    """Pick N with no word of ``words`` in N′.

    ``"strict"`` uses ``avoiding_quotient`` (no word in N, the stronger
    condition).  ``"minimal"`` tries the trivial quotient, then cyclic
    quotients Z/m in increasing m, then falls back to ``"strict"``.
    """
    words = list(words)
    if policy == "strict":
        q = avoiding_quotient(words, rank)
        return q, build_coset_space(q)
    if policy != "minimal":
        raise ValueError(f"unknown quotient policy {policy!r}")
    def candidates():
        yield trivial_quotient(rank)
        for m in range(2, max_order + 1):
            for shifts in itertools.product(range(m), repeat=rank):
                if any(shifts):
                    yield cyclic_quotient(rank, m, shifts)

    for q in candidates():
        space = build_coset_space(q)
        if space.avoids(words):
            return q, space
    q = avoiding_quotient(words, rank)
    return q, build_coset_space(q)


# -- the Γ sequence ----------------------------------------------------------


@dataclass
class StageMeta:
    n: int
    k: int = 0
    u: int = 0
    v: int = 0
    s: int = 0
    reversed: bool = False
    quotient: dict = field(default_factory=dict)
    quotient_order: int = 1
    schreier_rank: int = 0
    ball_size: int = 0
    folner: list = field(default_factory=list)
    folner_ratio: Fraction = Fraction(0)
    words: int = 0

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["folner_ratio"] = {"num": str(self.folner_ratio.numerator),
                               "den": str(self.folner_ratio.denominator)}
        return out

    @classmethod
    def from_json(cls, data) -> "StageMeta":
        data = dict(data)
        fr = data.pop("folner_ratio")
        return cls(folner_ratio=Fraction(int(fr["num"]), int(fr["den"])), **data)


@dataclass
class GammaSequence:
    rank: int
    stages: list
    meta: list
    policy: str = "minimal"

    @classmethod
    def start(cls, rank: int = 2, policy: str = "minimal") -> "GammaSequence":
        return cls(rank, [dg.SDigraph(1, [], 0, rank)], [StageMeta(0)], policy)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.rank)

    def view(self, n: int) -> SchreierView:
        return SchreierView(self.stages[n], self.alphabet)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "policy": self.policy,
            "stages": [
                {"graph": g.to_json(), "meta": m.to_json()}
                for g, m in zip(self.stages, self.meta)
            ],
        }

    @classmethod
    def from_json(cls, data) -> "GammaSequence":
        rank = data["rank"]
        stages = [dg.SDigraph.from_json(s["graph"], rank) for s in data["stages"]]
        meta = [StageMeta.from_json(s["meta"]) for s in data["stages"]]
        return cls(rank, stages, meta, data.get("policy", "minimal"))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "GammaSequence":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class Budgets:
    max_k: int = 40
    max_ball: int = 2_000_000
    max_quotient_order: int = 64
    trim_passes: int = 3


class _Layers:
    """BFS layers of Δ around the root, grown on demand."""

    def __init__(self, space: MetabelianCosetSpace):
        self.space = space
        self.dist = {space.root: 0}
        self.order = [space.root]
        self.frontier = [space.root]
        self.radius = 0

    def grow_to(self, radius: int, max_ball: int):
        while self.radius < radius:
            nxt = []
            for x in self.frontier:
                for letter in range(2 * self.space.rank):
                    y = self.space.step(x, letter)
                    if y not in self.dist:
                        self.dist[y] = self.radius + 1
                        self.order.append(y)
                        nxt.append(y)
            self.radius += 1
            self.frontier = nxt
            if len(self.order) > max_ball:
                raise StageBuildError("ball expansion in Δ", f"{max_ball} vertices")

    def ball(self, radius: int) -> list:
        return [x for x in self.order if self.dist[x] <= radius]


def _trim(view, P, passes: int) -> tuple:
    """Greedily drop points while the boundary ratio strictly decreases.

    The boundary count is updated locally: removing x only changes the
    terms of the edges at x.
    """
    members = set(P)
    count = sum(1 for x in members for g in range(view.rank)
                if view.step(x, 2 * g) not in members)
    for _ in range(passes):
        improved = False
        for x in list(P):
            if len(members) == 1:
                break
            if x not in members:
                continue
            delta = 0
            for g in range(view.rank):
                if view.step(x, 2 * g) not in members:
                    delta -= 1
                y = view.step(x, 2 * g + 1)
                if y != x and y in members:
                    delta += 1
            if Fraction(count + delta, len(members) - 1) < Fraction(count, len(members)):
                members.discard(x)
                count += delta
                improved = True
        if not improved:
            break
    kept = [x for x in P if x in members]
    return Fraction(count, len(kept)), kept


def _folner_candidates(space: MetabelianCosetSpace, layers: _Layers, radius: int):
    """Boxes in the Z^r fibre (times all of Q) inside the ball, and sub-balls."""
    inside = layers.dist
    for j in range(radius + 1):
        yield layers.ball(j)
    for side in itertools.count(1):
        lo = -((side - 1) // 2)
        box = []
        fits = True
        for v in itertools.product(range(lo, lo + side), repeat=space.r):
            for i in range(space.order):
                x = (i, v)
                if inside.get(x, radius + 1) > radius:
                    fits = False
                    break
                box.append(x)
            if not fits:
                break
        if not fits:
            return
        yield box


def find_folner(space: MetabelianCosetSpace, layers: _Layers, radius: int, eps: Fraction,
                trim_passes: int = 3) -> Optional[tuple]:
    """A strictly (S, eps)-invariant set inside the radius-ball of Δ, or None."""
    best = None
    for P in _folner_candidates(space, layers, radius):
        r = boundary_ratio(space, P)
        if best is None or r < best[0]:
            best = (r, P)
    if best is None:
        return None
    if not best[0] < eps:
        best = _trim(space, best[1], trim_passes)
    return best if best[0] < eps else None


def _pick_slot(graph: dg.SDigraph) -> tuple:
    """(u, s, reversed): first vertex with a free outgoing slot, else a free incoming one."""
    for u in range(graph.n):
        for g in range(graph.rank):
            if graph.step(u, 2 * g) is None:
                return u, g, False
    for u in range(graph.n):
        for g in range(graph.rank):
            if graph.step(u, 2 * g + 1) is None:
                return u, g, True
    raise StageBuildError("free slot in Γ_{n-1}", "graph is 2|S|-regular")


def build_stage(seq: GammaSequence, n: int, budgets: Optional[Budgets] = None,
                verify: bool = True) -> GammaSequence:
    """Append stage n to ``seq`` (which must end at stage n - 1)."""
    budgets = budgets or Budgets()
    if n == 0:
        return seq
    if len(seq.stages) != n:
        raise ValueError(f"sequence has {len(seq.stages)} stages; cannot build stage {n}")
    prev = seq.stages[n - 1]
    rank = seq.rank
    words = enumerate_cyclically_reduced(rank, n)
    quotient, space = choose_quotient(words, rank, seq.policy, budgets.max_quotient_order)
    if not space.avoids(words):
        raise InternalConsistencyError("chosen quotient does not avoid C_n in N'")
    for w in words:
        if not space.has_infinite_order(w):
            raise InternalConsistencyError(f"torsion in G/N' at {w}")
    log.info("stage %d: |C_n|=%d, Q=%s, |Q|=%d, r=%d",
             n, len(words), quotient.label, space.order, space.r)

    eps = Fraction(1, n)
    layers = _Layers(space)
    found = None
    for k in range(1, budgets.max_k + 1):
        layers.grow_to(k, budgets.max_ball)
        found = find_folner(space, layers, k - 1, eps, budgets.trim_passes)
        if found is not None:
            break
    if found is None:
        raise StageBuildError("Følner search in Δ", f"k ≤ {budgets.max_k}")
    ratio, folner = found

    refs = layers.ball(k)
    bk = Ball.from_refs(space, refs)
    u, s, rev = _pick_slot(prev)
    want = 2 * s + 1 if not rev else 2 * s  # slot that must be free at v
    members = set(refs)
    v = next((i for i, x in enumerate(refs) if space.step(x, want) not in members), None)
    if v is None:
        raise InternalConsistencyError("every vertex of B_k has the required s-edge")

    off = prev.n
    glued = dg.disjoint_union(prev, bk.graph)
    if rev:
        graph = dg.attach_path(glued, off + v, u, s, 2 * n)
    else:
        graph = dg.attach_path(glued, u, off + v, s, 2 * n)
    if graph.n != prev.n + len(refs) + 2 * n - 1:
        raise InternalConsistencyError("vertex count identity failed")
    index = {x: i for i, x in enumerate(refs)}
    meta = StageMeta(
        n=n, k=k, u=u, v=off + v, s=s, reversed=rev,
        quotient=quotient.describe(), quotient_order=space.order, schreier_rank=space.r,
        ball_size=len(refs), folner=sorted(off + index[x] for x in folner),
        folner_ratio=ratio, words=len(words),
    )
    out = GammaSequence(rank, seq.stages + [graph], seq.meta + [meta], seq.policy)
    if verify:
        report = verify_stage(out, n)
        if not report.ok:
            raise VerificationFailure(report)
    return out


def build(rank: int = 2, stages: int = 3, budgets: Optional[Budgets] = None,
          policy: str = "minimal", seq: Optional[GammaSequence] = None) -> GammaSequence:
    """Build (or resume) the sequence up to stage ``stages``."""
    seq = seq or GammaSequence.start(rank, policy)
    for n in range(len(seq.stages), stages + 1):
        seq = build_stage(seq, n, budgets)
    return seq


# -- verification ----------------------------------------------------------------


@dataclass
class StageReport:
    n: int
    degree_ok: bool = True
    folner_ok: bool = True
    folner_ratio: Optional[Fraction] = None
    nested_ok: bool = True
    orbits_ok: bool = True
    finite_orbits: int = 0
    words_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.degree_ok and self.folner_ok and self.nested_ok and self.orbits_ok

    def to_json(self) -> dict:
        return {
            "stage": self.n,
            "ok": self.ok,
            "property_1_degree": self.degree_ok,
            "property_2_folner": self.folner_ok,
            "folner_ratio": None if self.folner_ratio is None else {
                "num": str(self.folner_ratio.numerator),
                "den": str(self.folner_ratio.denominator)},
            "property_3_nested": self.nested_ok,
            "property_3_orbits": self.orbits_ok,
            "finite_orbits": self.finite_orbits,
            "words_checked": self.words_checked,
            "failures": self.failures,
        }


def verify_stage(seq: GammaSequence, n: int) -> StageReport:
    """Re-check properties (1)–(3) for stage n on the completed graph Γₙ*."""
    graph = seq.stages[n]
    view = seq.view(n)
    report = StageReport(n)
    if not graph.is_folded() or not graph.is_connected():
        report.degree_ok = False
        report.failures.append("graph is not folded and connected")
    if not any(graph.degree(x) < 2 * seq.rank for x in range(graph.n)):
        report.degree_ok = False
        report.failures.append("no vertex of degree < 2|S|")
    if n >= 1:
        P = seq.meta[n].folner
        ratio = boundary_ratio(view, P) if P else None
        report.folner_ratio = ratio
        if ratio is None or not ratio < Fraction(1, n):
            report.folner_ok = False
            report.failures.append(f"Følner set ratio {ratio} is not < 1/{n}")
        prev = seq.stages[n - 1]
        if graph.induced(range(prev.n)) != prev.edges:
            report.nested_ok = False
            report.failures.append("Γ_{n-1} is not an induced subgraph of Γ_n")
        for w in enumerate_cyclically_reduced(seq.rank, n - 1):
            report.words_checked += 1
            for orbit in view.finite_orbits(w):
                report.finite_orbits += 1
                bad = [x for x in orbit if is_tree_vertex(x) or x >= prev.n]
                if bad:
                    report.orbits_ok = False
                    report.failures.append(
                        {"word": seq.alphabet.format(w), "vertex": bad[0]})
    return report


def finite_cycle_census(seq: GammaSequence, m: int) -> dict:
    """For each w ∈ C_m, the finite cycles of w on V(Γ_m*) (all inside V(Γ_m))."""
    view = seq.view(m)
    out = {}
    for w in enumerate_cyclically_reduced(seq.rank, m):
        orbits = view.finite_orbits(w)
        assert all(not is_tree_vertex(x) for o in orbits for x in o)
        out[w] = orbits
    return out


def export_action(seq: GammaSequence, m: int, depth: int) -> dict:
    """Generator tables of the action on the depth-ball of Γ_m* around vertex 0."""
    view = seq.view(m)
    ball = view.ball(0, depth)
    if not ball.graph.is_connected():
        raise InternalConsistencyError("exported ball is not connected")
    index = {x: i for i, x in enumerate(ball.refs)}
    tables = {}
    for g in range(seq.rank):
        name = seq.alphabet.gen_name(g)
        for letter, key in ((2 * g, name), (2 * g + 1, name.upper())):
            tables[key] = [index.get(view.step(x, letter), "external") for x in ball.refs]
    return {
        "stage": m,
        "depth": depth,
        "vertices": [_fmt_vertex(x, seq.alphabet) for x in ball.refs],
        "generators": tables,
    }


def _fmt_vertex(x, alphabet: Alphabet) -> str:
    if is_tree_vertex(x):
        return f"{x[0]}.{alphabet.format(x[1])}"
    return str(x)
