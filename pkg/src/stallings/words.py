"""Reduced words in a free group over a symmetric alphabet.

Letters are small integers: generator ``i`` is ``2*i`` and its inverse is
``2*i + 1``, so inversion is ``letter ^ 1``.  A word is a plain tuple of
letters; the empty tuple is the identity.
"""

from __future__ import annotations

import itertools
import string
from typing import Iterable, Iterator, Sequence

Word = tuple  # tuple[int, ...], kept as an alias for readability


class MalformedWordError(ValueError):
    """Raised when a word contains a symbol outside the alphabet."""


def inv_letter(letter: int) -> int:
    return letter ^ 1


def gen_of(letter: int) -> int:
    return letter >> 1


def is_positive(letter: int) -> bool:
    return not letter & 1


class Alphabet:
    """The symmetric alphabet S ∪ S⁻¹ of a free group of given rank.

    Generators print as lowercase letters and their inverses as the
    matching uppercase letter, so rank is capped at 26.
    """

    def __init__(self, rank: int):
        if not 1 <= rank <= 26:
            raise ValueError(f"rank must be between 1 and 26, got {rank}")
        self.rank = rank
        self.names = []
        for g in string.ascii_lowercase[:rank]:
            self.names.extend([g, g.upper()])
        self._lookup = {name: i for i, name in enumerate(self.names)}

    def __repr__(self):
        return f"Alphabet(rank={self.rank})"

    def __eq__(self, other):
        return isinstance(other, Alphabet) and other.rank == self.rank

    def __hash__(self):
        return hash(("Alphabet", self.rank))

    @property
    def letters(self) -> range:
        return range(2 * self.rank)

    @property
    def generators(self) -> range:
        """Positive letters, one per generator in S."""
        return range(0, 2 * self.rank, 2)

    def gen_name(self, g: int) -> str:
        return self.names[2 * g]

    def letter(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise MalformedWordError(f"unknown letter {name!r} for {self!r}") from None

    def parse(self, text: str) -> Word:
        """Parse ``abAB`` style syntax into a reduced word.

        ``1`` and ``e`` (when ``e`` is not a generator) denote the identity.
        """
        text = text.strip()
        if text in ("", "1") or (text == "e" and "e" not in self._lookup):
            return ()
        return reduce(self.letter(ch) for ch in text)

    def parse_list(self, text: str) -> list:
        """Parse a comma separated list of words; empty entries are skipped."""
        return [self.parse(part) for part in text.split(",") if part.strip()]

    def format(self, w: Sequence[int]) -> str:
        if not w:
            return "1"
        return "".join(self.names[x] for x in w)


def reduce(letters: Iterable[int]) -> Word:
    """Freely reduce a letter sequence (single stack pass)."""
    out = []
    for x in letters:
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def check_letters(letters: Iterable[int], alphabet: Alphabet) -> Word:
    """Validate raw letters against ``alphabet`` and reduce them."""
    letters = tuple(letters)
    for x in letters:
        if not isinstance(x, int) or not 0 <= x < 2 * alphabet.rank:
            raise MalformedWordError(f"letter {x!r} not in {alphabet!r}")
    return reduce(letters)


def inverse(w: Sequence[int]) -> Word:
    return tuple(x ^ 1 for x in reversed(w))


def mul(*words: Sequence[int]) -> Word:
    return reduce(itertools.chain.from_iterable(words))


def power(w: Sequence[int], k: int) -> Word:
    if k < 0:
        w, k = inverse(w), -k
    return reduce(tuple(w) * k)


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i] != w[i + 1] ^ 1 for i in range(len(w) - 1))


def is_cyclically_reduced(w: Sequence[int]) -> bool:
    return is_reduced(w) and (len(w) < 2 or w[0] != w[-1] ^ 1)


def cyclically_reduce(w: Sequence[int]) -> tuple:
    """Split ``w`` as ``conjugator * core * conjugator⁻¹``.

    ``w`` is freely reduced first.  Returns ``(conjugator, core)`` with
    ``core`` cyclically reduced.
    """
    w = reduce(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == w[j] ^ 1:
        i += 1
        j -= 1
    return w[:i], w[i:j + 1]


def word_key(w: Sequence[int]) -> tuple:
    """Sort key: shortlex on the letter encoding."""
    return (len(w), tuple(w))


def iter_reduced(rank: int, length: int) -> Iterator[Word]:
    """All reduced words of exactly ``length`` letters, in shortlex order."""
    if length == 0:
        yield ()
        return
    nletters = 2 * rank

    def extend(prefix):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        last = prefix[-1] if prefix else None
        for x in range(nletters):
            if last is not None and x == last ^ 1:
                continue
            prefix.append(x)
            yield from extend(prefix)
            prefix.pop()

    yield from extend([])


def ball(rank: int, radius: int) -> list:
    """All reduced words of length at most ``radius``, shortlex ordered."""
    out = []
    for n in range(radius + 1):
        out.extend(iter_reduced(rank, n))
    return out


def enumerate_cyclically_reduced(rank: int, n: int) -> list:
    """Nonempty cyclically reduced words of length at most ``n`` (the set C_n)."""
    out = []
    for length in range(1, n + 1):
        out.extend(w for w in iter_reduced(rank, length) if w[0] != w[-1] ^ 1)
    return out
