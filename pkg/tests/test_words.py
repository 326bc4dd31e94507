from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from oracles import cyclically_reduced_brute, reduce_by_rescan
from stallings.words import (
    Alphabet, MalformedWordError, ball, cyclically_reduce, enumerate_cyclically_reduced,
    inverse, is_cyclically_reduced, is_reduced, iter_reduced, mul, power, reduce,
)

letters2 = st.lists(st.integers(0, 3), max_size=30)


def test_parse_and_format():
    a = Alphabet(2)
    assert a.parse("abAB") == (0, 2, 1, 3)
    assert a.format(a.parse("abAB")) == "abAB"
    assert a.parse("aA") == ()
    assert a.parse("1") == () and a.parse("e") == ()
    assert a.format(()) == "1"
    assert a.parse_list("a, baB") == [(0,), (2, 0, 3)]


def test_parse_rejects_unknown_letters():
    with pytest.raises(MalformedWordError):
        Alphabet(2).parse("abc")
    with pytest.raises(ValueError):
        Alphabet(0)


def test_inverse_example():
    a = Alphabet(2)
    assert a.format(inverse(a.parse("abA"))) == "aBA"


@given(letters2)
def test_reduce_matches_rescan(w):
    assert reduce(w) == reduce_by_rescan(w)
    assert is_reduced(reduce(w))


@given(letters2, letters2, letters2)
def test_group_laws(u, v, w):
    assert mul(mul(u, v), w) == mul(u, mul(v, w))
    assert mul(u, inverse(u)) == ()
    assert inverse(inverse(reduce(u))) == reduce(u)
    assert inverse(mul(u, v)) == mul(inverse(v), inverse(u))


@given(letters2, st.integers(-4, 4))
def test_power(w, k):
    expect = ()
    base = w if k >= 0 else inverse(w)
    for _ in range(abs(k)):
        expect = mul(expect, base)
    assert power(w, k) == expect


@given(letters2)
def test_cyclic_reduction_is_a_conjugation(w):
    conj, core = cyclically_reduce(w)
    assert is_cyclically_reduced(core)
    assert mul(conj, core, inverse(conj)) == reduce(w)


def test_cyclically_reduced_sets_match_brute_force():
    for rank in (1, 2, 3):
        for n in range(0, 6 if rank < 3 else 4):
            got = enumerate_cyclically_reduced(rank, n)
            assert sorted(got) == sorted(cyclically_reduced_brute(rank, n))
            assert len(set(got)) == len(got)


def test_small_counts():
    assert enumerate_cyclically_reduced(2, 0) == []
    assert len(enumerate_cyclically_reduced(2, 1)) == 4
    assert len(enumerate_cyclically_reduced(2, 2)) == 16
    assert len(enumerate_cyclically_reduced(2, 3)) == 44


@pytest.mark.parametrize("rank,radius", [(1, 5), (2, 4), (3, 3)])
def test_ball_size_formula(rank, radius):
    # 1 + 2r((2r-1)^R - 1)/(2r-2) reduced words of length ≤ R, r > 1
    words = ball(rank, radius)
    if rank == 1:
        assert len(words) == 2 * radius + 1
    else:
        q = 2 * rank - 1
        assert len(words) == 1 + 2 * rank * (q ** radius - 1) // (q - 1)
    assert len(set(words)) == len(words)
    assert words == sorted(words, key=lambda w: (len(w), w))


def test_iter_reduced_lengths():
    assert list(iter_reduced(2, 0)) == [()]
    assert all(len(w) == 3 and is_reduced(w) for w in iter_reduced(2, 3))
