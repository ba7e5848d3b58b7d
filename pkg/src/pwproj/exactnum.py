"""Exact arithmetic over Q and real quadratic fields Q(sqrt k).

Every value is canonical: the radicand is square-free, rationals are the
k == 1 case, and equality/ordering are decided symbolically (no floats).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import total_ordering
from typing import Dict, Iterable, Tuple, Union

Rational = Fraction


class MixedFieldError(ArithmeticError):
    """Combination of irrationals from two distinct quadratic fields."""


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def _factor_trial(n: int) -> Dict[int, int]:
    # Trial division with a 2/3/5 wheel; fine for radicands at desk scale.
    factors: Dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
    inc = (4, 2, 4, 2, 4, 6, 2, 6)
    p, i = 7, 0
    while p * p <= n:
        if n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
        else:
            p += inc[i]
            i = (i + 1) % 8
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


_RADICAND_CACHE: Dict[int, Tuple[int, int]] = {}


def register_squarefree(k: int) -> None:
    """Record k as known square-free, so later canonicalizations are free.

    Producers that obtain a square-free part without factoring the full
    radicand (for example from a factored product) seed the cache here.
    """
    if len(_RADICAND_CACHE) < 1 << 20:
        _RADICAND_CACHE[k] = (k, 1)


def normalize_radicand(n: int) -> Tuple[int, int]:
    """Write n = m*m*k with k square-free; return (k, m)."""
    if n < 1:
        raise ValueError("radicand must be a positive integer")
    if n == 1:
        return 1, 1
    cached = _RADICAND_CACHE.get(n)
    if cached is not None:
        return cached
    k = m = 1
    for p, e in _factor_trial(n).items():
        if e % 2:
            k *= p
        m *= p ** (e // 2)
    if len(_RADICAND_CACHE) < 1 << 20:
        _RADICAND_CACHE[n] = (k, m)
        _RADICAND_CACHE[k] = (k, 1)
    return k, m


def squarefree_of_factors(parts: Iterable[int]) -> Tuple[int, int]:
    """normalize_radicand of a product given through its integer parts.

    Useful when the product is too large to factor directly but the parts
    are not (for example tr*tr - 4 == (tr - 2)*(tr + 2)).
    """
    merged: Dict[int, int] = {}
    for part in parts:
        if part < 1:
            raise ValueError("parts must be positive")
        for p, e in _factor_trial(part).items():
            merged[p] = merged.get(p, 0) + e
    k = m = 1
    for p, e in merged.items():
        if e % 2:
            k *= p
        m *= p ** (e // 2)
    register_squarefree(k)
    return k, m


@total_ordering
class QuadraticNumber:
    """Element a + b*sqrt(k) of Q(sqrt k), with k square-free (k == 1 on Q)."""

    __slots__ = ("k", "a", "b")

    def __init__(self, a=0, b=0, k: int = 1):
        a = Fraction(a)
        b = Fraction(b)
        k = int(k)
        if k < 0:
            raise ValueError("radicand must be nonnegative")
        if k == 0:
            b = Fraction(0)
            k = 1
        if b == 0:
            k = 1
        elif k == 1:
            a, b = a + b, Fraction(0)
        else:
            k0, m = normalize_radicand(k)
            if k0 == 1:
                a, b = a + b * m, Fraction(0)
                k = 1
            else:
                b = b * m
                k = k0
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __setattr__(self, name, value):
        raise AttributeError("QuadraticNumber is immutable")

    @classmethod
    def sqrt_of(cls, n: int) -> "QuadraticNumber":
        return cls(0, 1, n)

    @property
    def is_rational(self) -> bool:
        return self.k == 1

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber(self.a, -self.b, self.k)

    def sign(self) -> int:
        if self.b == 0:
            return _sgn(self.a)
        if self.a == 0:
            return _sgn(self.b)
        sa, sb = _sgn(self.a), _sgn(self.b)
        if sa == sb:
            return sa
        return sa * _sgn(self.a * self.a - self.b * self.b * self.k)

    # -- field plumbing -------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, QuadraticNumber):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadraticNumber(other)
        return None

    def _join(self, other: "QuadraticNumber") -> int:
        if self.k == 1:
            return other.k
        if other.k == 1 or other.k == self.k:
            return self.k
        raise MixedFieldError(
            f"cannot combine sqrt({self.k}) with sqrt({other.k})"
        )

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = self._join(o)
        return QuadraticNumber(self.a + o.a, self.b + o.b, k)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.k)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = self._join(o)
        return QuadraticNumber(
            self.a * o.a + self.b * o.b * k, self.a * o.b + self.b * o.a, k
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = self._join(o)
        norm = o.a * o.a - o.b * o.b * k
        if o.a == 0 and o.b == 0:
            raise ZeroDivisionError("division by zero quadratic number")
        return QuadraticNumber(
            (self.a * o.a - self.b * o.b * k) / norm,
            (self.b * o.a - self.a * o.b) / norm,
            k,
        )

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    # -- comparisons ----------------------------------------------------

    def __eq__(self, other):
        if other is INFINITY:
            return False
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.k == o.k and self.a == o.a and self.b == o.b

    def __lt__(self, other):
        if other is INFINITY:
            return True
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return qn_compare(self, o) < 0

    def __hash__(self):
        if self.is_rational:
            return hash(self.a)
        return hash((self.k, self.a, self.b))

    def __float__(self):
        # diagnostics only; all decisions in the library are exact
        return float(self.a) + float(self.b) * math.sqrt(self.k)

    def __repr__(self):
        return f"QuadraticNumber({self.a!r}, {self.b!r}, {self.k})"

    def __str__(self):
        return qn_to_text(self)


class _InfinityType:
    """The single point at infinity of the projective line."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("pwproj-infinity")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INFINITY = _InfinityType()

ExtendedPoint = Union[QuadraticNumber, _InfinityType]


def is_infinity(p: ExtendedPoint) -> bool:
    return p is INFINITY


def qn_compare(x: QuadraticNumber, y: QuadraticNumber) -> int:
    """Exact sign of x - y, valid across distinct quadratic fields."""
    if x.k == y.k or x.k == 1 or y.k == 1:
        k = x.k if x.k != 1 else y.k
        return QuadraticNumber(x.a - y.a, x.b - y.b, k).sign()
    # x.a - y.a + x.b*sqrt(kx) - y.b*sqrt(ky), both radicands >= 2 and distinct
    part = QuadraticNumber(x.a - y.a, x.b, x.k)
    return _sign_plus_root(part, -y.b, y.k)


def _sign_plus_root(part: QuadraticNumber, c: Fraction, radicand: int) -> int:
    # sign of part + c*sqrt(radicand) with part in a different field
    if c == 0:
        return part.sign()
    sc = _sgn(c)
    sp = part.sign()
    if sp == 0:
        return sc
    if sp == sc:
        return sp
    return sp * (part * part - QuadraticNumber(c * c * radicand)).sign()


def ext_compare(p: ExtendedPoint, q: ExtendedPoint) -> int:
    """Total-order comparison with INFINITY above every finite point."""
    if p is INFINITY:
        return 0 if q is INFINITY else 1
    if q is INFINITY:
        return -1
    return qn_compare(p, q)


def canonical_key(p: ExtendedPoint):
    """Injective, hashable, run-stable key for an extended point."""
    if p is INFINITY:
        return ("inf",)
    return (p.k, p.a.numerator, p.a.denominator, p.b.numerator, p.b.denominator)


# -- text form ----------------------------------------------------------

_QN_RE = re.compile(
    r"""^\s*(?P<a>[+-]?\d+(?:/\d+)?)\s*
         (?P<sign>[+-])\s*
         (?P<b>\d+(?:/\d+)?)\s*\*\s*sqrt\(\s*(?P<k>\d+)\s*\)\s*$""",
    re.VERBOSE,
)
_RAT_RE = re.compile(r"^\s*(?P<a>[+-]?\d+(?:/\d+)?)\s*$")
_ROOT_RE = re.compile(
    r"^\s*(?P<sign>[+-]?)\s*(?P<b>\d+(?:/\d+)?)?\s*\*?\s*sqrt\(\s*(?P<k>\d+)\s*\)\s*$"
)


def qn_to_text(x: QuadraticNumber) -> str:
    if x.is_rational:
        return str(x.a)
    sign = "+" if x.b >= 0 else "-"
    return f"{x.a}{sign}{abs(x.b)}*sqrt({x.k})"


def qn_from_text(text: str) -> QuadraticNumber:
    m = _QN_RE.match(text)
    if m:
        b = Fraction(m.group("b"))
        if m.group("sign") == "-":
            b = -b
        return QuadraticNumber(Fraction(m.group("a")), b, int(m.group("k")))
    m = _RAT_RE.match(text)
    if m:
        return QuadraticNumber(Fraction(m.group("a")))
    m = _ROOT_RE.match(text)
    if m:
        b = Fraction(m.group("b")) if m.group("b") else Fraction(1)
        if m.group("sign") == "-":
            b = -b
        return QuadraticNumber(0, b, int(m.group("k")))
    raise ValueError(f"cannot parse quadratic number: {text!r}")


def point_to_text(p: ExtendedPoint) -> str:
    return "inf" if p is INFINITY else qn_to_text(p)


def point_from_text(text: str) -> ExtendedPoint:
    if text.strip() == "inf":
        return INFINITY
    return qn_from_text(text)
