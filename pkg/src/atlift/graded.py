"""Exact scalars, Koszul signs, shuffles.

Scalars are rationals.  Integral values are kept as plain ``int`` (much
faster in the inner loops) and everything else as ``fractions.Fraction``;
both compare and hash consistently, so callers never need to care.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence, Union

Rational = Union[int, Fraction]


def rational(value) -> Rational:
    """Coerce ``value`` to an exact rational.

    Accepts ints, Fractions and strings such as ``"-1/3"`` or ``"2"``
    (a leading unicode minus is tolerated).  Floats are refused.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    if isinstance(value, str):
        text = value.strip().replace("−", "-")
        if not text or any(ch in text for ch in ".eE"):
            raise ValueError(f"not an exact rational literal: {value!r}")
        try:
            q = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational literal: {value!r}") from exc
        return q.numerator if q.denominator == 1 else q
    if isinstance(value, _RationalABC):
        q = Fraction(value.numerator, value.denominator)
        return q.numerator if q.denominator == 1 else q
    raise TypeError(f"cannot use {type(value).__name__} as an exact scalar")


def normalize(c: Rational) -> Rational:
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def fmt(c: Rational) -> str:
    c = normalize(c)
    return str(c)


def parity_sign(n: int) -> int:
    return -1 if n & 1 else 1


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0..n-1}``, stored by its images.

    ``Permutation((1, 0))`` is the transposition written ``(2 1)`` in
    one-based notation.
    """

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise ValueError(f"not a permutation: {self.images!r}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_one_based(cls, images: Iterable[int]) -> "Permutation":
        return cls(tuple(i - 1 for i in images))

    def __len__(self):
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        # (self * other)(i) = self(other(i))
        if len(self) != len(other):
            raise ValueError("permutations of different sizes")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def inversions(self) -> list[tuple[int, int]]:
        """Pairs ``(sigma(a), sigma(b))`` with ``a < b`` and ``sigma(a) > sigma(b)``."""
        im = self.images
        return [(im[a], im[b]) for a, b in combinations(range(len(im)), 2) if im[a] > im[b]]

    def sign(self) -> int:
        return parity_sign(len(self.inversions()))


def koszul_sign(sigma: Permutation, degrees: Sequence[int]) -> int:
    """Antisymmetric Koszul sign chi(sigma; v_1..v_n).

    Defined by ``v_sigma(1) ^ ... ^ v_sigma(n) = chi * v_1 ^ ... ^ v_n`` in the
    exterior power: every inverted pair contributes ``-(-1)^(|v_i||v_j|)``.
    """
    if len(degrees) != len(sigma):
        raise ValueError(f"{len(degrees)} degrees for a permutation of {len(sigma)} letters")
    s = 1
    for x, y in sigma.inversions():
        if not (degrees[x] & 1 and degrees[y] & 1):
            s = -s
    return s


def shuffles(p: int, q: int) -> list[Permutation]:
    """All (p, q)-shuffles: increasing on the first p and on the last q slots."""
    if p < 0 or q < 0:
        raise ValueError("shuffle block sizes must be non-negative")
    n = p + q
    out = []
    for first in combinations(range(n), p):
        chosen = set(first)
        rest = tuple(i for i in range(n) if i not in chosen)
        out.append(Permutation(first + rest))
    return out


def lcm_denominator(values: Iterable[Rational]) -> int:
    from math import lcm

    den = 1
    for v in values:
        if type(v) is Fraction:
            den = lcm(den, v.denominator)
    return den
