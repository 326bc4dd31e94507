"""ℒ-q-normality, wq-closures and n-degree certification over free groups.

Every search here is bounded by a ball radius.  A predicate answers
``True`` only when membership in ℒ is established; the resulting
certificates are either ``CERTIFIED`` or ``UNKNOWN`` (never refuted).
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import subgroups as sg
from .schreier import SchreierView
from .words import ball, inverse


class Verdict(enum.Enum):
    CERTIFIED = "Certified"
    UNKNOWN = "Unknown"


class LPredicate:
    """An upward closed collection ℒ of subgroups, tested one-sidedly."""

    name = "L"
    heuristic = False

    def holds(self, k: sg.SubgroupHandle) -> bool:
        raise NotImplementedError

    def __repr__(self):
        return self.name


class RankAtLeast(LPredicate):
    def __init__(self, bound: int, name: str):
        self.bound = bound
        self.name = name

    def holds(self, k):
        return sg.rank(k) >= self.bound


# nontrivial subgroups of a free group are infinite; rank ≥ 2 means nonamenable
INFINITE = RankAtLeast(1, "infinite")
NONAMENABLE = RankAtLeast(2, "nonamenable")


def predicate(name: str) -> LPredicate:
    try:
        return {"infinite": INFINITE, "nonamenable": NONAMENABLE}[name]
    except KeyError:
        raise ValueError(f"unknown predicate {name!r}") from None


class NonamenableOnX(LPredicate):
    """K acts nonamenably on X = V(Γ*): heuristic, not a decision.

    Holds when rank(K) ≥ 2 and no ball of X (radius ≤ ``radius``, or all of
    X when finite) has K-boundary ratio below ``eps``.
    """

    heuristic = True

    def __init__(self, view: SchreierView, radius: int = 3, eps=Fraction(1, 10)):
        self.view = view
        self.radius = radius
        self.eps = Fraction(eps)
        self.name = f"nonamenable-on-X(radius={radius}, eps={self.eps})"

    def k_ratio(self, gens, P) -> Fraction:
        members = set(P)
        out = sum(1 for w in gens for x in P if self.view.act(w, x) not in members)
        return Fraction(out, len(P))

    def holds(self, k):
        if sg.rank(k) < 2:
            return False
        gens = k.generators()
        candidates = [self.view.ball(self.view.base, r).refs for r in range(self.radius + 1)]
        if self.view.is_finite:
            candidates.append(list(range(self.view.graph.n)))
        return all(self.k_ratio(gens, P) >= self.eps for P in candidates)


class LevelPredicate(LPredicate):
    """ℒ_n: subgroups certified n-degree ℒ-wq-normal at the given radius."""

    def __init__(self, base: LPredicate, level: int, radius: int, max_iter: int = 10):
        self.base = base
        self.level = level
        self.radius = radius
        self.max_iter = max_iter
        self.name = f"{base.name}_{level}"
        self.heuristic = base.heuristic
        self._memo = {}

    def holds(self, k):
        if k not in self._memo:
            cert = degree_certify(k, self.level, self.base, self.radius, self.max_iter)
            self._memo[k] = cert.verdict is Verdict.CERTIFIED
        return self._memo[k]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("STALLINGS_THREADS", "1")))
    except ValueError:
        return 1


def _witness_test(args):
    h, pred, g = args
    inter = sg.intersect(sg.conjugate(h, g), h)
    return g, inter, pred.holds(inter)


def witnesses(h: sg.SubgroupHandle, pred: LPredicate, radius: int) -> list:
    """All reduced g with |g| ≤ radius and gHg⁻¹ ∩ H ∈ ℒ, with the intersection.

    Shortlex ordered.  Honours ``STALLINGS_THREADS`` for a process pool;
    results do not depend on it.
    """
    if radius < 1:
        raise ValueError("radius must be at least 1")
    jobs = [(h, pred, g) for g in ball(h.alphabet.rank, radius)]
    threads = _threads()
    if threads > 1 and len(jobs) > 64 and not isinstance(pred, LevelPredicate):
        with ProcessPoolExecutor(threads) as pool:
            results = list(pool.map(_witness_test, jobs, chunksize=32))
    else:
        results = [_witness_test(job) for job in jobs]
    return [(g, inter) for g, inter, ok in results if ok]


def f_step(k: sg.SubgroupHandle, ambient_gens, pred: LPredicate, radius: int) -> tuple:
    """⟨K, {g ∈ M : |g| ≤ radius, gKg⁻¹ ∩ K ∈ ℒ}⟩ with M = ⟨ambient_gens⟩.

    Returns ``(subgroup, witness list)``.
    """
    ambient = sg.from_generators(ambient_gens, k.alphabet)
    found = [(g, inter) for g, inter in witnesses(k, pred, radius) if sg.contains(ambient, g)]
    new = sg.from_generators(k.generators() + [g for g, _ in found if g], k.alphabet)
    return new, found


@dataclass
class ClosureResult:
    subgroup: sg.SubgroupHandle
    reached_fixpoint: bool
    chain: list
    steps: list  # per step: list of (g, intersection rank)


def wq_closure(h: sg.SubgroupHandle, pred: LPredicate, radius: int, max_iter: int = 10,
               ambient_gens=None) -> ClosureResult:
    """Iterate ``f_step`` from H until it stabilizes or the budget runs out.

    The returned subgroup is always contained in the true ℒ-wq-closure.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if ambient_gens is None:
        ambient_gens = [(2 * g,) for g in range(h.alphabet.rank)]
    ambient = sg.from_generators(ambient_gens, h.alphabet)
    chain = [h]
    steps = []
    cur = h
    for _ in range(max_iter):
        if cur == ambient:
            return ClosureResult(cur, True, chain, steps)
        nxt, found = f_step(cur, ambient_gens, pred, radius)
        steps.append([(g, sg.rank(inter)) for g, inter in found])
        if nxt == cur:
            return ClosureResult(cur, True, chain, steps)
        chain.append(nxt)
        cur = nxt
    return ClosureResult(cur, cur == ambient, chain, steps)


@dataclass
class NormalityCertificate:
    subject: sg.SubgroupHandle
    ambient_gens: list
    degree: int
    predicate: str
    radius: int
    verdict: Verdict
    chain: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    heuristic: bool = False

    def check(self) -> bool:
        """A certified chain must end in a group containing every ambient generator."""
        if self.verdict is not Verdict.CERTIFIED:
            return True
        if self.degree == 0:
            return True
        last = self.chain[-1]
        return all(sg.contains(last, g) for g in self.ambient_gens)

    def to_json(self) -> dict:
        alph = self.subject.alphabet
        fmt = alph.format
        return {
            "subject": [fmt(g) for g in self.subject.generators()],
            "ambient": [fmt(g) for g in self.ambient_gens],
            "degree": self.degree,
            "predicate": self.predicate,
            "radius": self.radius,
            "verdict": self.verdict.value,
            "heuristic": self.heuristic,
            "chain": [[fmt(g) for g in k.generators()] for k in self.chain],
            "witnesses": [[[fmt(g), r] for g, r in step] for step in self.witnesses],
        }


def degree_certify(h: sg.SubgroupHandle, n: int, pred_base: LPredicate, radius: int,
                   max_iter: int = 10) -> NormalityCertificate:
    """Try to certify that H is n-degree ℒ-wq-normal in F(S)."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    ambient_gens = [(2 * g,) for g in range(h.alphabet.rank)]
    if n == 0:
        ok = pred_base.holds(h)
        return NormalityCertificate(
            h, ambient_gens, 0, pred_base.name, radius,
            Verdict.CERTIFIED if ok else Verdict.UNKNOWN, [h], [], pred_base.heuristic)
    pred = pred_base if n == 1 else LevelPredicate(pred_base, n - 1, radius, max_iter)
    result = wq_closure(h, pred, radius, max_iter, ambient_gens)
    ambient = sg.from_generators(ambient_gens, h.alphabet)
    verdict = Verdict.CERTIFIED if result.subgroup == ambient else Verdict.UNKNOWN
    cert = NormalityCertificate(h, ambient_gens, n, pred.name, radius, verdict,
                                result.chain, result.steps, pred_base.heuristic)
    assert cert.check(), "certified chain does not reach the ambient group"
    return cert


def is_q_normal_in_ball(h: sg.SubgroupHandle, pred: LPredicate, radius: int) -> bool:
    """The ball witnesses alone generate F(S) (one step, no chain)."""
    whole = sg.whole_group(h.alphabet)
    gens = [g for g, _ in witnesses(h, pred, radius) if g]
    return sg.from_generators(gens, h.alphabet) == whole


def witness_symmetric(h: sg.SubgroupHandle, pred: LPredicate, radius: int) -> bool:
    """g witnesses iff g⁻¹ does."""
    found = {g for g, _ in witnesses(h, pred, radius)}
    return all(inverse(g) in found for g in found)
