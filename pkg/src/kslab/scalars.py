"""Exact scalar rings: prime fields, extension fields and localizations of Z.

Rings are small frozen value objects. Elements are carried around in their
*raw* canonical form (``int`` residue, coefficient tuple, or ``Fraction``)
and the ring performs arithmetic on raw values; :class:`ScalarValue` pairs a
raw value with its ring for the public, operator-overloaded API.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Iterator, Union

from . import polynomials as poly
from .errors import (
    DivisionByZero,
    NoRoot,
    NonInvertible,
    NotPrime,
    ParseError,
    RingMismatch,
)

ALL = "ALL"

_TABLE_LIMIT = 1 << 16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    return all(n % d for d in range(3, r + 1, 2))


def prime_factors(n: int) -> set[int]:
    n = abs(n)
    out = set()
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.add(d)
            n //= d
        d += 1
    if n > 1:
        out.add(n)
    return out


def in_localization(q: Fraction | int, inverted) -> bool:
    """True iff every prime factor of the reduced denominator of ``q`` lies in ``inverted``.

    ``inverted`` is a set of primes or the marker ``ALL`` (the whole of Q).
    """
    q = Fraction(q)
    if inverted == ALL:
        return True
    return prime_factors(q.denominator) <= set(inverted)


class ScalarRing:
    """Interface for raw-value arithmetic. Subclasses are frozen dataclasses."""

    is_field: bool = True
    characteristic: int = 0

    # raw arithmetic, overridden per ring
    def zero(self): raise NotImplementedError
    def one(self): raise NotImplementedError
    def add(self, a, b): raise NotImplementedError
    def sub(self, a, b): raise NotImplementedError
    def neg(self, a): raise NotImplementedError
    def mul(self, a, b): raise NotImplementedError
    def inv(self, a): raise NotImplementedError
    def from_int(self, n: int): raise NotImplementedError
    def canon(self, raw): raise NotImplementedError
    def is_zero(self, a) -> bool: return a == self.zero()

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def dot(self, xs, ys):
        acc = self.zero()
        for x, y in zip(xs, ys):
            acc = self.add(acc, self.mul(x, y))
        return acc

    def __call__(self, value) -> "ScalarValue":
        if isinstance(value, ScalarValue):
            if value.ring != self:
                raise RingMismatch(f"{value.ring} vs {self}")
            return value
        if isinstance(value, str):
            return parse_scalar(value, self)
        return ScalarValue(self, self.canon(value))

    def elements(self) -> Iterator:
        raise TypeError(f"{self} is infinite")

    @property
    def order(self) -> int | None:
        return None

    def format_raw(self, raw) -> str:
        return str(raw)


@dataclass(frozen=True)
class PrimeField(ScalarRing):
    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise NotPrime(self.p)

    @property
    def characteristic(self) -> int:
        return self.p

    @property
    def order(self) -> int:
        return self.p

    def zero(self): return 0
    def one(self): return 1 % self.p
    def add(self, a, b): return (a + b) % self.p
    def sub(self, a, b): return (a - b) % self.p
    def neg(self, a): return (-a) % self.p
    def mul(self, a, b): return (a * b) % self.p
    def from_int(self, n): return n % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise DivisionByZero(f"inverse of 0 in GF({self.p})")
        return pow(a, self.p - 2, self.p)

    def dot(self, xs, ys):
        return sum(x * y for x, y in zip(xs, ys)) % self.p

    def canon(self, raw):
        if isinstance(raw, Fraction):
            if raw.denominator % self.p == 0:
                raise NonInvertible(f"{raw} has no image in GF({self.p})")
            return raw.numerator * pow(raw.denominator, self.p - 2, self.p) % self.p
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise TypeError(f"cannot coerce {raw!r} into GF({self.p})")
        return raw % self.p

    def elements(self):
        return iter(range(self.p))

    def __str__(self):
        return f"GF({self.p})"


@dataclass(frozen=True)
class ExtensionField(ScalarRing):
    """F_p[x]/(modulus) for a monic irreducible modulus of degree k >= 2."""

    p: int
    k: int
    modulus: tuple = field(repr=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise NotPrime(self.p)
        if len(self.modulus) != self.k + 1 or self.modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree k")
        if not poly.is_irreducible(tuple(self.modulus), self.p):
            raise ValueError(f"modulus {self.modulus} is reducible over GF({self.p})")

    @property
    def characteristic(self) -> int:
        return self.p

    @property
    def order(self) -> int:
        return self.p ** self.k

    def zero(self): return (0,) * self.k
    def one(self): return (1,) + (0,) * (self.k - 1)

    def add(self, a, b):
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a):
        return tuple((-x) % self.p for x in a)

    def from_int(self, n):
        return (n % self.p,) + (0,) * (self.k - 1)

    def _pad(self, f) -> tuple:
        return tuple(f) + (0,) * (self.k - len(f))

    def _slow_mul(self, a, b):
        return self._pad(poly.mod(poly.mul(poly.trim(a, self.p), poly.trim(b, self.p), self.p),
                                  self.modulus, self.p))

    def encode(self, a) -> int:
        n = 0
        for c in reversed(a):
            n = n * self.p + c
        return n

    def decode(self, n: int) -> tuple:
        out = []
        for _ in range(self.k):
            n, c = divmod(n, self.p)
            out.append(c)
        return tuple(out)

    @cached_property
    def _log_tables(self):
        """(exp, log) tables over a primitive element, or None for large fields."""
        q = self.order
        if q > _TABLE_LIMIT:
            return None
        for g_code in range(self.p, q):
            g = self.decode(g_code)
            exp = [0] * (q - 1)
            log = [-1] * q
            x = self.one()
            ok = True
            for i in range(q - 1):
                c = self.encode(x)
                if log[c] != -1:
                    ok = False
                    break
                log[c] = i
                exp[i] = c
                x = self._slow_mul(x, g)
            if ok:
                return exp, log
        raise RuntimeError("no primitive element found")  # pragma: no cover

    def mul(self, a, b):
        tables = self._log_tables
        if tables is None:
            return self._slow_mul(a, b)
        exp, log = tables
        la, lb = log[self.encode(a)], log[self.encode(b)]
        if la < 0 or lb < 0:
            return self.zero()
        return self.decode(exp[(la + lb) % (self.order - 1)])

    def inv(self, a):
        if not any(a):
            raise DivisionByZero(f"inverse of 0 in {self}")
        tables = self._log_tables
        if tables is not None:
            exp, log = tables
            return self.decode(exp[(-log[self.encode(a)]) % (self.order - 1)])
        return self._pad(poly.inverse_mod(poly.trim(a, self.p), self.modulus, self.p))

    def canon(self, raw):
        if isinstance(raw, int) and not isinstance(raw, bool):
            return self.from_int(raw)
        if isinstance(raw, Fraction):
            return self.mul(self.from_int(raw.numerator), self.inv(self.from_int(raw.denominator)))
        c = tuple(raw)
        if len(c) > self.k:
            c = poly.mod(poly.trim(c, self.p), self.modulus, self.p)
        return self._pad(tuple(x % self.p for x in c))

    def elements(self):
        return (self.decode(n) for n in range(self.order))

    def format_raw(self, raw) -> str:
        return "[" + ",".join(str(c) for c in raw) + f"]@GF({self.p}^{self.k})"

    def __str__(self):
        return f"GF({self.p}^{self.k})"


@dataclass(frozen=True)
class Rationals(ScalarRing):
    """The localization Z[S^-1] inside Q; ``inverted`` empty is Z, ``ALL`` is Q."""

    inverted: Union[frozenset, str] = frozenset()

    def __post_init__(self):
        if self.inverted != ALL:
            inv = frozenset(self.inverted)
            for q in inv:
                if not is_prime(q):
                    raise NotPrime(q)
            object.__setattr__(self, "inverted", inv)

    @property
    def is_field(self) -> bool:  # type: ignore[override]
        return self.inverted == ALL

    def zero(self): return Fraction(0)
    def one(self): return Fraction(1)
    def add(self, a, b): return a + b
    def sub(self, a, b): return a - b
    def neg(self, a): return -a
    def mul(self, a, b): return a * b
    def from_int(self, n): return Fraction(n)

    def dot(self, xs, ys):
        return Fraction(sum(x * y for x, y in zip(xs, ys)))

    def contains(self, q) -> bool:
        return in_localization(q, self.inverted)

    def inv(self, a):
        if a == 0:
            raise DivisionByZero(f"inverse of 0 in {self}")
        r = 1 / Fraction(a)
        if not self.contains(r):
            raise NonInvertible(f"{a} is not a unit of {self}")
        return r

    def canon(self, raw):
        if isinstance(raw, bool):
            raise TypeError("bool is not a scalar")
        q = Fraction(raw)
        if not self.contains(q):
            raise NonInvertible(f"{q} does not lie in {self}")
        return q

    def format_raw(self, raw) -> str:
        return str(raw)

    def __str__(self):
        if self.inverted == ALL:
            return "Q"
        if not self.inverted:
            return "Z"
        return f"Z[1/{math.prod(sorted(self.inverted))}]"


ZZ = Rationals(frozenset())
QQ = Rationals(ALL)


@dataclass(frozen=True)
class ScalarValue:
    ring: ScalarRing
    raw: Any

    def _check(self, other) -> "ScalarValue":
        if not isinstance(other, ScalarValue):
            other = self.ring(other)
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")
        return other

    def __add__(self, other):
        o = self._check(other)
        return ScalarValue(self.ring, self.ring.add(self.raw, o.raw))

    def __sub__(self, other):
        o = self._check(other)
        return ScalarValue(self.ring, self.ring.sub(self.raw, o.raw))

    def __mul__(self, other):
        o = self._check(other)
        return ScalarValue(self.ring, self.ring.mul(self.raw, o.raw))

    def __truediv__(self, other):
        o = self._check(other)
        return ScalarValue(self.ring, self.ring.div(self.raw, o.raw))

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return self._check(other) - self

    def __neg__(self):
        return ScalarValue(self.ring, self.ring.neg(self.raw))

    def inverse(self) -> "ScalarValue":
        return ScalarValue(self.ring, self.ring.inv(self.raw))

    def is_zero(self) -> bool:
        return self.ring.is_zero(self.raw)

    def __str__(self):
        return self.ring.format_raw(self.raw)


def field_arith(a: ScalarValue, b: ScalarValue, op: str) -> ScalarValue:
    if a.ring != b.ring:
        raise RingMismatch(f"{a.ring} vs {b.ring}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


@lru_cache(maxsize=None)
def build_extension(p: int, k: int) -> ScalarRing:
    """GF(p^k) with the lexicographically least monic irreducible modulus.

    Coefficients are compared low-to-high; ``k == 1`` returns the prime field.
    """
    if not is_prime(p):
        raise NotPrime(p)
    if not 1 <= k <= 6:
        raise ValueError(f"extension degree {k} outside 1..6")
    if k == 1:
        return PrimeField(p)
    for f in poly.monic_polys(k, p):
        if poly.is_irreducible(f, p):
            return ExtensionField(p, k, f)
    raise RuntimeError("no irreducible polynomial found")  # pragma: no cover


def evaluate_in(ring: ScalarRing, f, x):
    """Evaluate an F_p polynomial ``f`` at raw element ``x`` of ``ring``."""
    acc = ring.zero()
    for c in reversed(f):
        acc = ring.add(ring.mul(acc, x), ring.from_int(c))
    return acc


@dataclass(frozen=True)
class FieldEmbedding:
    source: ScalarRing
    target: ScalarRing
    image_of_generator: Any  # raw element of target

    def __post_init__(self):
        if isinstance(self.source, ExtensionField):
            val = evaluate_in(self.target, self.source.modulus, self.image_of_generator)
            if not self.target.is_zero(val):
                raise ValueError("generator image is not a root of the source modulus")

    def __call__(self, raw):
        """Map a raw source element to a raw target element."""
        if isinstance(self.source, PrimeField):
            return self.target.from_int(raw)
        return evaluate_in(self.target, poly.trim(raw, self.source.p), self.image_of_generator)

    def apply(self, value: ScalarValue) -> ScalarValue:
        if value.ring != self.source:
            raise RingMismatch(f"{value.ring} vs {self.source}")
        return ScalarValue(self.target, self(value.raw))


def _raw_sort_key(ring: ScalarRing, raw):
    return tuple(raw) if isinstance(raw, tuple) else (raw,)


def field_roots(ring: ScalarRing, f) -> list:
    """All roots in ``ring`` of the F_p polynomial ``f``, sorted lexicographically."""
    found = [x for x in ring.elements() if ring.is_zero(evaluate_in(ring, f, x))]
    return sorted(found, key=lambda x: _raw_sort_key(ring, x))


@lru_cache(maxsize=None)
def embed_subfield(d: int, k: int, p: int) -> FieldEmbedding:
    """Embed GF(p^d) into GF(p^k), sending the generator to its least root."""
    if k % d:
        raise ValueError(f"{d} does not divide {k}")
    source = build_extension(p, d)
    target = build_extension(p, k)
    if d == 1:
        return FieldEmbedding(source, target, target.one())
    rts = field_roots(target, source.modulus)
    if not rts:
        raise NoRoot(f"modulus of GF({p}^{d}) has no root in GF({p}^{k})")
    return FieldEmbedding(source, target, rts[0])


_GF_RE = re.compile(r"^GF\((\d+)(?:\^(\d+))?\)$")
_ZLOC_RE = re.compile(r"^Z\[1/(\d+)\]$")


def parse_ring(text: str) -> ScalarRing:
    """Parse a field descriptor: ``GF(5)``, ``GF(2^6)``, ``Z``, ``Z[1/30]``, ``Q``."""
    t = text.strip().replace(" ", "")
    if t == "Z":
        return ZZ
    if t == "Q":
        return QQ
    m = _ZLOC_RE.match(t)
    if m:
        return Rationals(frozenset(prime_factors(int(m.group(1)))))
    m = _GF_RE.match(t)
    if m:
        p = int(m.group(1))
        k = int(m.group(2) or 1)
        if not is_prime(p):
            raise NotPrime(p)
        return build_extension(p, k)
    raise ParseError(f"unrecognised ring descriptor {text!r}")


def parse_scalar(text: str, ring: ScalarRing) -> ScalarValue:
    """Parse ``"3"``, ``"3/7"`` or ``"[1,0,1]@GF(2^3)"`` into ``ring``."""
    t = str(text).strip()
    if "@" in t:
        coeffs, desc = t.split("@", 1)
        src = parse_ring(desc)
        if src != ring:
            raise RingMismatch(f"literal for {src} used in {ring}")
        try:
            c = [int(x) for x in coeffs.strip()[1:-1].split(",") if x.strip()]
        except ValueError as exc:
            raise ParseError(f"bad coefficient list in {text!r}") from exc
        return ScalarValue(ring, ring.canon(tuple(c)))
    try:
        q = Fraction(t)
    except ValueError as exc:
        raise ParseError(f"bad scalar literal {text!r}") from exc
    if q.denominator == 1:
        return ScalarValue(ring, ring.canon(q.numerator) if not isinstance(ring, Rationals) else ring.canon(q))
    if isinstance(ring, Rationals):
        return ScalarValue(ring, ring.canon(q))
    num = ring.from_int(q.numerator)
    den = ring.from_int(q.denominator)
    if ring.is_zero(den):
        raise NonInvertible(f"{text} has no image in {ring}")
    return ScalarValue(ring, ring.mul(num, ring.inv(den)))


def format_scalar(ring: ScalarRing, raw) -> str:
    return ring.format_raw(raw)
