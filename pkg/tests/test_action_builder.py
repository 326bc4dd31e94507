from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from stallings import action_builder as ab
from stallings.schreier import is_tree_vertex
from stallings.words import enumerate_cyclically_reduced, mul, power, reduce


@pytest.fixture(scope="module")
def seq3():
    return ab.build(2, 3)


def test_avoiding_quotient_example():
    c1 = enumerate_cyclically_reduced(2, 1)
    q = ab.avoiding_quotient(c1, 2)
    space = ab.build_coset_space(q)
    assert space.order == 4 and space.r == 5
    assert not any(space.in_n(w) for w in c1)


def test_avoiding_quotient_degenerate_and_identity():
    assert ab.avoiding_quotient([], 2).degenerate
    with pytest.raises(ValueError):
        ab.avoiding_quotient([()], 2)


def test_avoiding_quotient_random_words():
    rng = random.Random(3)
    for _ in range(30):
        words = []
        for _ in range(rng.randint(1, 4)):
            w = reduce(rng.randrange(4) for _ in range(rng.randint(1, 6)))
            if w:
                words.append(w)
        if not words:
            continue
        q = ab.avoiding_quotient(words, 2)
        assert all(not q.is_identity(q.evaluate(w)) for w in words)


def _spaces():
    yield ab.build_coset_space(ab.trivial_quotient(2))
    yield ab.build_coset_space(ab.cyclic_quotient(2, 3, (1, 2)))
    yield ab.build_coset_space(ab.avoiding_quotient([(0, 2)], 2))


def test_schreier_rank_and_relations():
    rng = random.Random(8)
    for space in _spaces():
        assert space.r == 1 + space.order * (space.rank - 1)
        for _ in range(50):
            x = (rng.randrange(space.order), tuple(rng.randint(-3, 3) for _ in range(space.r)))
            for letter in range(4):
                assert space.step(space.step(x, letter), letter ^ 1) == x


def test_conjugation_matrices_agree_with_walking():
    rng = random.Random(5)
    for space in _spaces():
        gens = space.schreier_words
        for _ in range(30):
            w = ()
            for _ in range(3):
                g = gens[rng.randrange(len(gens))]
                w = mul(w, g if rng.random() < 0.5 else tuple(x ^ 1 for x in reversed(g)))
            assert space.in_n(w)
            x = (rng.randrange(space.order), tuple(rng.randint(-2, 2) for _ in range(space.r)))
            assert space.act(w, x) == space.translate(x, space.rewrite(w))


def test_commutator_membership_and_torsion():
    space = ab.build_coset_space(ab.trivial_quotient(2))
    assert space.in_commutator((0, 2, 1, 3))
    assert not space.in_commutator((0,))
    space2 = ab.build_coset_space(ab.cyclic_quotient(2, 2, (0, 1)))
    assert not space2.in_commutator((0, 2, 1, 3))
    for w in enumerate_cyclically_reduced(2, 3):
        assert space.has_infinite_order(w)


def test_minimal_policy_prefers_small_quotients():
    q, space = ab.choose_quotient(enumerate_cyclically_reduced(2, 3), 2)
    assert q.label == "trivial" and space.r == 2
    q, space = ab.choose_quotient(enumerate_cyclically_reduced(2, 4), 2)
    assert space.order == 2 and space.avoids(enumerate_cyclically_reduced(2, 4))


def test_stage_zero_is_a_point():
    seq = ab.GammaSequence.start(2)
    rep = ab.verify_stage(seq, 0)
    assert rep.ok and rep.words_checked == 0


def test_three_stages(seq3):
    sizes = [g.n for g in seq3.stages]
    for n in range(1, 4):
        meta = seq3.meta[n]
        assert sizes[n] == sizes[n - 1] + meta.ball_size + 2 * n - 1
        assert meta.folner_ratio < Fraction(1, n)
        rep = ab.verify_stage(seq3, n)
        assert rep.ok, rep.failures
    assert [m.k for m in seq3.meta[1:]] == [3, 4, 6]
    assert sizes == [1, 27, 71, 161]


def test_stage_two_orbit_sweep(seq3):
    view = seq3.view(2)
    for w in enumerate_cyclically_reduced(2, 1):
        for orbit in view.finite_orbits(w):
            assert all(not is_tree_vertex(x) and x < seq3.stages[1].n for x in orbit)


def test_strong_almost_freeness_census(seq3):
    census = ab.finite_cycle_census(seq3, 2)
    assert set(census) == set(enumerate_cyclically_reduced(2, 2))


def test_tampered_stage_fails_verification(seq3):
    bad = ab.GammaSequence(seq3.rank, list(seq3.stages), list(seq3.meta), seq3.policy)
    meta = ab.StageMeta.from_json(seq3.meta[2].to_json())
    meta.folner = meta.folner[:1]
    bad.meta[2] = meta
    rep = ab.verify_stage(bad, 2)
    assert not rep.ok and not rep.folner_ok


def test_persistence_round_trip_and_resume(seq3, tmp_path):
    path = tmp_path / "stages.json"
    seq3.save(path)
    back = ab.GammaSequence.load(path)
    assert back.stages == seq3.stages
    assert [m.to_json() for m in back.meta] == [m.to_json() for m in seq3.meta]
    short = ab.GammaSequence(back.rank, back.stages[:2], back.meta[:2])
    resumed = ab.build(2, 3, seq=short)
    assert resumed.stages == seq3.stages


def test_build_stage_requires_previous():
    with pytest.raises(ValueError):
        ab.build_stage(ab.GammaSequence.start(2), 2)


def test_budget_exhaustion():
    with pytest.raises(ab.StageBuildError):
        ab.build(2, 2, ab.Budgets(max_k=2))


def test_export_tables(seq3):
    data = ab.export_action(seq3, 2, 2)
    n = len(data["vertices"])
    tables = data["generators"]
    for name, inv_name in (("a", "A"), ("b", "B")):
        for i in range(n):
            j = tables[name][i]
            if j != "external":
                assert tables[inv_name][j] == i
    zero = ab.export_action(seq3, 1, 0)
    assert zero["vertices"] == ["0"]
    json.dumps(data)


def test_closed_loop_stabilizes_vertex(seq3):
    view = seq3.view(3)
    g = seq3.stages[3]
    rng = random.Random(0)
    for _ in range(100):
        x = rng.randrange(g.n)
        w = ()
        y = x
        for _ in range(rng.randint(1, 8)):
            letter = rng.randrange(4)
            w = w + (letter,)
            y = view.step(y, letter)
        back = power(w, -1)
        assert view.act(back, y) == x


def test_strict_policy_first_stage():
    seq = ab.build(2, 1, policy="strict")
    meta = seq.meta[1]
    assert meta.quotient_order == 4 and meta.schreier_rank == 5
    assert ab.verify_stage(seq, 1).ok


def test_incremental_trim_matches_recount():
    from stallings.isoperimetry import boundary_ratio

    for q in (ab.trivial_quotient(2), ab.cyclic_quotient(2, 3, (1, 2))):
        space = ab.build_coset_space(q)
        layers = ab._Layers(space)
        layers.grow_to(4, 10**6)
        rng = random.Random(0)
        for _ in range(20):
            P = rng.sample(layers.order, 30)
            r, kept = ab._trim(space, P, 3)
            assert r == boundary_ratio(space, kept) <= boundary_ratio(space, P)
