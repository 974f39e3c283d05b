"""Multiindices on n+1 variables and their graded lexicographic order.

Multiindices are plain tuples of nonnegative ints.  Graded lex puts lower
total degree first; within a degree the larger leading exponent comes
first, so the degree-2 basis on two variables is ``(2,0), (1,1), (0,2)``.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial, prod
from typing import Sequence

MultiIndex = tuple  # tuple[int, ...]


def make_index(entries: Sequence[int]) -> MultiIndex:
    alpha = tuple(int(a) for a in entries)
    if any(a < 0 for a in alpha):
        raise ValueError(f"multiindex entries must be nonnegative: {alpha}")
    return alpha


def length(alpha: MultiIndex) -> int:
    return sum(alpha)


def grlex_key(alpha: MultiIndex):
    return (sum(alpha), tuple(-a for a in alpha))


def unit(n: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(n + 1))


def add(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex | None:
    """alpha - beta, or None when some entry would go negative."""
    out = tuple(a - b for a, b in zip(alpha, beta))
    if any(c < 0 for c in out):
        return None
    return out


def multinomial(alpha: MultiIndex) -> int:
    """|alpha|! / alpha!"""
    return factorial(sum(alpha)) // prod(factorial(a) for a in alpha)


def basis_size(k: int, n: int) -> int:
    """Number of monomials of degree k in n+1 variables."""
    return comb(k + n, n)


@lru_cache(maxsize=None)
def monomials(k: int, n: int) -> tuple[MultiIndex, ...]:
    """All multiindices of length k on n+1 variables, in graded lex order."""
    if k < 0:
        raise ValueError("degree must be nonnegative")

    def rec(remaining: int, slots: int):
        if slots == 1:
            yield (remaining,)
            return
        for first in range(remaining, -1, -1):
            for rest in rec(remaining - first, slots - 1):
                yield (first,) + rest

    return tuple(rec(k, n + 1))


@lru_cache(maxsize=None)
def index_map(k: int, n: int) -> dict:
    return {alpha: i for i, alpha in enumerate(monomials(k, n))}
