"""Exact arithmetic for numbers of the form a + b*sqrt(s) with rational a, b, s.

The expansion constants of the planar patches are quadratic surds, and the
certificate inequalities compare affine combinations of one surd against
rationals.  Squaring resolves every such comparison exactly, so no float
ever decides a certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational) or isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"exact arithmetic needs a rational, got {type(x).__name__}")


@dataclass(frozen=True)
class Surd:
    """Value a + b*sqrt(s), all three components rational, s >= 0."""

    a: Fraction
    b: Fraction
    s: Fraction

    @staticmethod
    def of(a=0, b=0, s=0) -> "Surd":
        s = _frac(s)
        if s < 0:
            raise ValueError("radicand must be nonnegative")
        return Surd(_frac(a), _frac(b), s)

    @staticmethod
    def rational(a) -> "Surd":
        return Surd.of(a, 0, 0)

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(float(self.s))

    def scale(self, c) -> "Surd":
        c = _frac(c)
        return Surd(self.a * c, self.b * c, self.s)

    def shift(self, c) -> "Surd":
        return Surd(self.a + _frac(c), self.b, self.s)

    def sub(self, other: "Surd") -> "Surd":
        a, b = self._align(other)
        return Surd(a.a - b.a, a.b - b.b, a.s if a.b or not b.b else b.s)

    def _align(self, other: "Surd") -> tuple["Surd", "Surd"]:
        if not isinstance(other, Surd):
            other = Surd.rational(other)
        # two surd parts are combinable only over one radicand
        if self.b and other.b and self.s != other.s:
            raise ValueError("cannot combine surds over distinct radicands")
        s = self.s if self.b else other.s
        return Surd(self.a, self.b, s), Surd(other.a, other.b, s)

    def sign(self) -> int:
        a, b, s = self.a, self.b, self.s
        if b == 0 or s == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        sa = 1 if a > 0 else -1
        sb = 1 if b > 0 else -1
        if sa == sb:
            return sa
        lhs, rhs = a * a, b * b * s
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def _cmp(self, other) -> int:
        if not isinstance(other, Surd):
            other = Surd.rational(other)
        return self.sub(other).sign()

    def __lt__(self, other) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other) -> bool:
        return self._cmp(other) >= 0

    def equals(self, other) -> bool:
        return self._cmp(other) == 0


def edge_expansion_surd(d: int, f: int) -> Surd:
    """Edge expansion constant of the (d, f) patch family: (d-2)*sqrt(1 - 4/((d-2)(f-2)))."""
    prod = (d - 2) * (f - 2)
    if prod <= 4:
        raise ValueError(f"(d-2)(f-2) must exceed 4, got {prod}")
    return Surd.of(0, d - 2, Fraction(prod - 4, prod))


def vertex_expansion_lower_surd(d: int) -> Surd:
    """Lower bound (d - 6 + sqrt((d-2)(d-6)))/2 for plane graphs of min degree d >= 7."""
    if d < 7:
        raise ValueError("bound needs minimum degree at least 7")
    return Surd.of(Fraction(d - 6, 2), Fraction(1, 2), (d - 2) * (d - 6))
