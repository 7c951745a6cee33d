"""Finite words over the alphabet {0, ..., N-1}, cylinders and the shift.

Words are immutable digit tuples tagged with their alphabet size.  The text
form uses one base-N digit per symbol (``0-9`` then ``a-z``), so alphabets of
up to 36 letters round-trip through configs and the CLI.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import AlphabetMismatch, EnumerationCapExceeded, ValidationError, WordRangeError

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_SYMBOLS = len(DIGITS)
DEFAULT_ENUMERATION_CAP = 2**20


@dataclass(frozen=True)
class Alphabet:
    n_symbols: int

    def __post_init__(self):
        if not isinstance(self.n_symbols, int) or isinstance(self.n_symbols, bool):
            raise ValidationError(f"alphabet size must be an integer, got {self.n_symbols!r}")
        if not 2 <= self.n_symbols <= MAX_SYMBOLS:
            raise ValidationError(
                f"alphabet size must lie in [2, {MAX_SYMBOLS}], got {self.n_symbols}"
            )

    def __len__(self):
        return self.n_symbols

    def __iter__(self):
        return iter(range(self.n_symbols))


@dataclass(frozen=True)
class Word:
    """A finite word; the empty word stands for the whole space as a cylinder."""

    symbols: tuple[int, ...]
    n_symbols: int

    def __post_init__(self):
        Alphabet(self.n_symbols)
        syms = tuple(int(s) for s in self.symbols)
        for s in syms:
            if not 0 <= s < self.n_symbols:
                raise ValidationError(f"symbol {s} outside alphabet of size {self.n_symbols}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def parse(cls, text: str, n_symbols: int) -> "Word":
        text = text.strip()
        if text in ("", "-", "ε"):
            return cls((), n_symbols)
        syms = []
        for ch in text.lower():
            k = DIGITS.find(ch)
            if k < 0:
                raise ValidationError(f"invalid digit {ch!r} in word {text!r}")
            syms.append(k)
        return cls(tuple(syms), n_symbols)

    @classmethod
    def empty(cls, n_symbols: int) -> "Word":
        return cls((), n_symbols)

    def __len__(self):
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __getitem__(self, k):
        return self.symbols[k]

    def __str__(self):
        return "".join(DIGITS[s] for s in self.symbols)

    def __repr__(self):
        return f"Word({str(self)!r}, N={self.n_symbols})"

    @property
    def length(self) -> int:
        return len(self.symbols)

    def is_prefix_of(self, other: "Word") -> bool:
        _same_alphabet(self, other)
        return other.symbols[: len(self)] == self.symbols

    def index(self) -> int:
        """Position of the word in the lexicographic list of words of its length."""
        k = 0
        for s in self.symbols:
            k = k * self.n_symbols + s
        return k


# Paths are handled through their finite prefixes; the type is the same.
PathPrefix = Word


def _same_alphabet(a: Word, b: Word):
    if a.n_symbols != b.n_symbols:
        raise AlphabetMismatch(f"alphabet sizes differ: {a.n_symbols} vs {b.n_symbols}")


def word(text: str | Iterable[int], n_symbols: int) -> Word:
    """Build a word from a digit string or an iterable of symbols."""
    if isinstance(text, str):
        return Word.parse(text, n_symbols)
    return Word(tuple(text), n_symbols)


def concat(a: Word, b: Word) -> Word:
    _same_alphabet(a, b)
    return Word(a.symbols + b.symbols, a.n_symbols)


def truncate(w: Word, k: int) -> Word:
    if not 0 <= k <= len(w):
        raise WordRangeError(f"cannot truncate a word of length {len(w)} to {k}")
    return Word(w.symbols[:k], w.n_symbols)


def shift_word(w: Word) -> Word:
    if len(w) == 0:
        raise WordRangeError("the empty word has no shift")
    return Word(w.symbols[1:], w.n_symbols)


def inverse_branch(i: int, w: Word) -> Word:
    """Prepend the letter ``i``; a right inverse of :func:`shift_word`."""
    if not 0 <= i < w.n_symbols:
        raise ValidationError(f"symbol {i} outside alphabet of size {w.n_symbols}")
    return Word((i,) + w.symbols, w.n_symbols)


def count_words(n_symbols: int, k: int) -> int:
    return n_symbols**k


def check_cap(count: int, cap: int | None = DEFAULT_ENUMERATION_CAP):
    if cap is not None and count > cap:
        raise EnumerationCapExceeded(count, cap)


def enumerate_words(n_symbols: int, k: int, cap: int | None = DEFAULT_ENUMERATION_CAP) -> list[Word]:
    """All words of length ``k`` in lexicographic order."""
    Alphabet(n_symbols)
    if k < 0:
        raise WordRangeError(f"word length must be non-negative, got {k}")
    check_cap(count_words(n_symbols, k), cap)
    return [Word(t, n_symbols) for t in itertools.product(range(n_symbols), repeat=k)]
