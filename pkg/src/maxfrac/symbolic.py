"""Finite words over the map alphabet ``{1, ..., m}`` and composed maps.

A word is a tuple of letters; the empty tuple is the empty word. The
composed map of ``w = w1 w2 ... wn`` is ``f_w1 o f_w2 o ... o f_wn``: the
last letter acts first.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import CapExceededError

Word = tuple

EMPTY: Word = ()

# eager enumeration limit, in bits of word count (n * log2 m)
WORD_CAP_BITS = 24

# images per block yielded by iter_word_images
BLOCK_ENTRIES = 1 << 21


def _check_alphabet(m: int):
    if m < 1:
        raise ValueError("alphabet size must be >= 1")


def word_bits(m: int, n: int) -> float:
    return n * math.log2(m) if m > 1 else 0.0


def check_cap(m: int, n: int, cap_bits: float = WORD_CAP_BITS):
    if word_bits(m, n) > cap_bits:
        raise CapExceededError(
            f"{m}^{n} words exceeds the enumeration cap of 2^{cap_bits}")


def iter_words(m: int, n: int) -> Iterator[Word]:
    """Words of length ``n`` in lexicographic order, lazily."""
    _check_alphabet(m)
    if n < 0:
        raise ValueError("word length must be >= 0")
    return itertools.product(range(1, m + 1), repeat=n)


def enumerate_words(m: int, n: int) -> list[Word]:
    """All ``m**n`` words of length ``n``; ``n = 0`` gives ``[()]``."""
    check_cap(m, n)
    return list(iter_words(m, n))


def enumerate_prefix_words(m: int, p: int) -> list[Word]:
    """All words of length ``0 .. p-1`` (includes the empty word)."""
    _check_alphabet(m)
    if p < 1:
        raise ValueError("depth must be >= 1")
    out: list[Word] = []
    for k in range(p):
        out.extend(enumerate_words(m, k))
    return out


def concat(w: Word, v: Word) -> Word:
    return tuple(w) + tuple(v)


def _check_letters(w: Word, m: int):
    for letter in w:
        if not 1 <= letter <= m:
            raise ValueError(f"letter {letter} outside alphabet 1..{m}")


def word_probability(w: Word, probs: Sequence[float]) -> float:
    """Product of the letter probabilities; 1 for the empty word."""
    _check_letters(w, len(probs))
    out = 1.0
    for letter in w:
        out *= probs[letter - 1]
    return out


def compose(maps: Sequence[Callable], w: Word) -> Callable:
    """The map ``f_w``; identity for the empty word."""
    _check_letters(w, len(maps))
    chain = [maps[letter - 1] for letter in reversed(w)]

    def f(x):
        for g in chain:
            x = g(x)
        return x

    return f


def format_word(w: Word) -> str:
    return "".join(str(letter) for letter in w)


def parse_word(text: str) -> Word:
    return tuple(int(ch) for ch in text)


def iter_word_images(maps: Sequence[Callable], n: int, points: np.ndarray,
                     probs: Sequence[float] | None = None,
                     block_entries: int = BLOCK_ENTRIES,
                     cap_bits: float = WORD_CAP_BITS):
    """Stream ``f_w(points)`` for every ``w`` of length ``n``, in word order.

    ``maps`` act on ``(..., d)`` arrays. Yields ``(images, weights)`` where
    ``images`` has shape ``(W, len(points), d)`` for a contiguous run of ``W``
    words in lexicographic order, and ``weights`` holds their probabilities
    (all ones when ``probs`` is None).
    """
    m = len(maps)
    check_cap(m, n, cap_bits)
    points = np.asarray(points, dtype=float)
    probs = np.ones(m) if probs is None else np.asarray(probs, dtype=float)
    per_word = max(1, points.size)
    # split w = u v: suffix images for all v are shared, prefixes u stream
    suffix_len = n
    while suffix_len > 0 and (m ** suffix_len) * per_word > block_entries:
        suffix_len -= 1
    suffix = points[None, ...]
    suffix_w = np.ones(1)
    for _ in range(suffix_len):
        suffix = np.concatenate([f(suffix) for f in maps], axis=0)
        suffix_w = np.concatenate([p * suffix_w for p in probs])
    for u in iter_words(m, n - suffix_len):
        imgs = suffix
        for letter in reversed(u):
            imgs = maps[letter - 1](imgs)
        yield imgs, word_probability(u, probs) * suffix_w
