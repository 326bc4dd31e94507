from __future__ import annotations

import math
import random

from hypothesis import given, settings, strategies as st

from oracles import inv, naive_fold, random_perm_graph, subgroup_elements
from stallings import digraph as dg
from stallings import subgroups as sg
from stallings.words import Alphabet, ball, mul, reduce

F2 = Alphabet(2)
F3 = Alphabet(3)


def h(text, alph=F2):
    return sg.from_generators(alph.parse_list(text), alph)


def test_sharp_example_graph():
    H = h("a,baB")
    assert sg.rank(H) == 2
    assert sg.index(H) == math.inf
    assert H.graph.edges == ((0, 0, 0), (0, 1, 1), (1, 0, 1))
    assert sg.is_infinite(H) and not sg.is_amenable(H)


def test_basic_membership_and_equality():
    H = h("a,baB")
    assert sg.contains(H, F2.parse("baaB"))
    assert not sg.contains(H, F2.parse("b"))
    assert h("a,baB") == h("baB,a,aaa")
    assert sg.whole_group(F2) == h("a,b") == h("ab,b")
    assert sg.rank(sg.trivial(F2)) == 0


def test_intersections():
    assert sg.intersect(h("aa"), h("aaa")) == h("aaaaaa")
    H = h("a,baB")
    assert sg.intersect(sg.conjugate(H, F2.parse("b")), H) == h("baB")
    assert sg.intersect(H, sg.whole_group(F2)) == H


def test_conjugate_is_gHg_inverse():
    H = h("a,baB")
    g = F2.parse("ab")
    C = sg.conjugate(H, g)
    for x in H.generators():
        assert sg.contains(C, mul(g, x, inv(g)))
    assert sg.conjugate(C, inv(g)) == H


def test_index_and_nielsen_schreier_on_random_permutation_graphs():
    rng = random.Random(11)
    seen = 0
    for _ in range(150):
        n, edges, _, _ = random_perm_graph(rng, 2, rng.randint(1, 7))
        H = sg.from_graph(dg.SDigraph(n, edges, 0, 2), F2)
        assert sg.index(H) == n
        assert sg.rank(H) - 1 == n * (2 - 1)
        seen += 1
    assert seen == 150


def test_finite_index_examples():
    assert sg.index(h("aa,ab,aB")) == 2
    assert sg.index(h("a,b")) == 1
    K = h("a,b,cc,cac,cbc,cC", F3)
    assert sg.index(K) == 2 and sg.rank(K) == 5


def test_malnormality_in_f3():
    v = sg.malnormal_in_ball(h("a,b", F3), 4)
    assert v.malnormal and v.checked > 0
    w = sg.malnormal_in_ball(h("aa", F2), 2)
    assert not w.malnormal


def test_is_subgroup_and_join():
    assert sg.is_subgroup(h("aa"), h("a"))
    assert not sg.is_subgroup(h("a"), h("aa"))
    assert sg.join(h("a"), h("b")) == sg.whole_group(F2)


def _random_gens(rng):
    out = []
    for _ in range(rng.randint(1, 3)):
        w = reduce(rng.randrange(4) for _ in range(rng.randint(1, 6)))
        if w:
            out.append(w)
    return out


def test_membership_against_oracles_small():
    rng = random.Random(5)
    words = ball(2, 6)
    for _ in range(25):
        gens = _random_gens(rng)
        H = sg.from_generators(gens, F2)
        member = naive_fold(gens)
        for w in words:
            assert sg.contains(H, w) == member(w)


def test_product_search_oracle_is_sound():
    H_gens = [F2.parse("ab"), F2.parse("bbA")]
    H = sg.from_generators(H_gens, F2)
    for w in subgroup_elements(H_gens, 8):
        assert sg.contains(H, w)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=1, max_size=6), min_size=1, max_size=3),
       st.lists(st.integers(0, 3), max_size=4))
def test_intersection_rank_and_conjugation_invariants(gens, g):
    H = sg.from_generators([reduce(w) for w in gens], F2)
    g = reduce(g)
    C = sg.conjugate(H, g)
    assert sg.rank(C) == sg.rank(H)
    assert sg.index(C) == sg.index(H)
    inter = sg.intersect(H, C)
    assert sg.is_subgroup(inter, H) and sg.is_subgroup(inter, C)
    for x in H.generators():
        assert sg.contains(H, x)
