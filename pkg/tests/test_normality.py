from __future__ import annotations

import pytest

from stallings import subgroups as sg
from stallings.normality import (
    INFINITE, NONAMENABLE, LevelPredicate, NonamenableOnX, Verdict, degree_certify, f_step,
    is_q_normal_in_ball, predicate, witness_symmetric, witnesses, wq_closure,
)
from stallings.schreier import SchreierView
from stallings.words import Alphabet

F2 = Alphabet(2)


def h(text):
    return sg.from_generators(F2.parse_list(text), F2)


SHARP = h("a,baB")
INDEX2 = h("aa,ab,aB")


def test_predicate_lookup():
    assert predicate("infinite") is INFINITE
    with pytest.raises(ValueError):
        predicate("huge")


def test_sharp_example_is_q_normal():
    cert = degree_certify(SHARP, 1, INFINITE, 1)
    assert cert.verdict is Verdict.CERTIFIED and cert.check()
    assert cert.chain[0] == SHARP and cert.chain[-1] == sg.whole_group(F2)
    assert is_q_normal_in_ball(SHARP, INFINITE, 1)


def test_sharp_example_nonamenable_witnesses_stay_in_h():
    found = witnesses(SHARP, NONAMENABLE, 3)
    assert found and all(sg.contains(SHARP, g) for g, _ in found)
    new, _ = f_step(SHARP, [(0,), (2,)], NONAMENABLE, 3)
    assert new == SHARP


def test_sharp_example_unknown_for_nonamenable():
    cert = degree_certify(SHARP, 1, NONAMENABLE, 4)
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.chain == [SHARP]


def test_finite_index_certified_at_every_degree():
    for n in (0, 1, 2):
        assert degree_certify(INDEX2, n, NONAMENABLE, 2).verdict is Verdict.CERTIFIED


def test_trivial_subgroup_is_never_certified():
    assert degree_certify(sg.trivial(F2), 1, INFINITE, 3).verdict is Verdict.UNKNOWN


def test_closure_is_monotone():
    res = wq_closure(h("ab"), INFINITE, 2)
    for a, b in zip(res.chain, res.chain[1:]):
        assert sg.is_subgroup(a, b)


def test_witness_symmetry():
    for H in (SHARP, INDEX2, h("ab,bbA")):
        assert witness_symmetric(H, INFINITE, 3)
        assert witness_symmetric(H, NONAMENABLE, 3)


def test_level_predicate_nests():
    level = LevelPredicate(INFINITE, 1, 1)
    assert level.holds(SHARP)
    assert not level.holds(h("ab"))
    # bHb⁻¹ ∩ H = ⟨baB⟩ is malnormal, so it is not itself wq-normal and
    # degree 2 loses the witness b
    cert = degree_certify(SHARP, 2, INFINITE, 1)
    assert cert.verdict is Verdict.UNKNOWN and cert.chain == [SHARP]
    assert degree_certify(INDEX2, 2, INFINITE, 1).verdict is Verdict.CERTIFIED


def test_heuristic_predicate_is_flagged():
    pred = NonamenableOnX(SchreierView.of_subgroup(SHARP), radius=2)
    cert = degree_certify(INDEX2, 1, pred, 2)
    assert cert.heuristic
    assert cert.to_json()["heuristic"] is True


def test_certificate_json():
    data = degree_certify(SHARP, 1, INFINITE, 1).to_json()
    assert data["verdict"] == "Certified"
    assert data["subject"] == ["a", "baB"]


def test_thread_pool_gives_same_witnesses(monkeypatch):
    serial = witnesses(SHARP, INFINITE, 3)
    monkeypatch.setenv("STALLINGS_THREADS", "2")
    assert witnesses(SHARP, INFINITE, 3) == serial
