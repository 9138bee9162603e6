"""Dense univariate polynomials over a prime field F_p.

A polynomial is a tuple of residues, lowest degree first, with no trailing
zeros; the zero polynomial is the empty tuple.
"""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence

Poly = tuple


def trim(coeffs: Sequence[int], p: int) -> Poly:
    c = [x % p for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def degree(f: Poly) -> int:
    return len(f) - 1


def add(f: Poly, g: Poly, p: int) -> Poly:
    n = max(len(f), len(g))
    return trim([(f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(n)], p)


def sub(f: Poly, g: Poly, p: int) -> Poly:
    n = max(len(f), len(g))
    return trim([(f[i] if i < len(f) else 0) - (g[i] if i < len(g) else 0) for i in range(n)], p)


def scale(f: Poly, c: int, p: int) -> Poly:
    return trim([c * x for x in f], p)


def mul(f: Poly, g: Poly, p: int) -> Poly:
    if not f or not g:
        return ()
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return trim(out, p)


def divmod_poly(f: Poly, g: Poly, p: int) -> tuple[Poly, Poly]:
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(f)
    dg = len(g) - 1
    inv_lead = pow(g[-1], p - 2, p)
    q = [0] * max(len(f) - dg, 0)
    for k in range(len(f) - 1 - dg, -1, -1):
        c = (r[k + dg] * inv_lead) % p
        q[k] = c
        if c:
            for j, b in enumerate(g):
                r[k + j] = (r[k + j] - c * b) % p
    return trim(q, p), trim(r[:dg], p)


def mod(f: Poly, g: Poly, p: int) -> Poly:
    return divmod_poly(f, g, p)[1]


def monic(f: Poly, p: int) -> Poly:
    if not f:
        return f
    return scale(f, pow(f[-1], p - 2, p), p)


def gcd(f: Poly, g: Poly, p: int) -> Poly:
    while g:
        f, g = g, mod(f, g, p)
    return monic(f, p)


def ext_gcd(f: Poly, g: Poly, p: int) -> tuple[Poly, Poly, Poly]:
    """Return (d, s, t) with s*f + t*g = d, d monic."""
    r0, r1 = f, g
    s0, s1 = (1,), ()
    t0, t1 = (), (1,)
    while r1:
        q, r = divmod_poly(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, sub(s0, mul(q, s1, p), p)
        t0, t1 = t1, sub(t0, mul(q, t1, p), p)
    if not r0:
        return (), s0, t0
    c = pow(r0[-1], p - 2, p)
    return scale(r0, c, p), scale(s0, c, p), scale(t0, c, p)


def inverse_mod(f: Poly, m: Poly, p: int) -> Poly:
    d, s, _ = ext_gcd(f, m, p)
    if d != (1,):
        raise ArithmeticError("polynomial not invertible modulo m")
    return mod(s, m, p)


def derivative(f: Poly, p: int) -> Poly:
    return trim([i * f[i] for i in range(1, len(f))], p)


def evaluate(f: Poly, x: int, p: int) -> int:
    acc = 0
    for c in reversed(f):
        acc = (acc * x + c) % p
    return acc


def compose_mod(f: Poly, g: Poly, m: Poly, p: int) -> Poly:
    """f(g) reduced modulo m."""
    acc: Poly = ()
    for c in reversed(f):
        acc = mod(add(mul(acc, g, p), (c,) if c else (), p), m, p)
    return acc


def monic_polys(d: int, p: int) -> Iterator[Poly]:
    """All monic polynomials of degree d, lexicographic in (c0, ..., c_{d-1})."""
    for lower in itertools.product(range(p), repeat=d):
        yield tuple(lower) + (1,)


def is_irreducible(f: Poly, p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg(f)//2."""
    n = degree(f)
    if n < 1:
        return False
    for d in range(1, n // 2 + 1):
        for g in monic_polys(d, p):
            if not mod(f, g, p):
                return False
    return True


def roots(f: Poly, p: int) -> list[int]:
    return [x for x in range(p) if evaluate(f, x, p) == 0]


def factor(f: Poly, p: int) -> list[tuple[Poly, int]]:
    """Factor into monic irreducibles with multiplicities by trial division.

    Exhaustive, intended for the degree <= 5 characteristic polynomials of
    small matrices.
    """
    f = monic(f, p)
    out: list[tuple[Poly, int]] = []
    d = 1
    while degree(f) >= 2 * d:
        for g in monic_polys(d, p):
            if not is_irreducible(g, p):
                continue
            k = 0
            while True:
                q, r = divmod_poly(f, g, p)
                if r:
                    break
                f = q
                k += 1
            if k:
                out.append((g, k))
        d += 1
    if degree(f) >= 1:
        for i, (g, k) in enumerate(out):
            if g == f:
                out[i] = (g, k + 1)
                break
        else:
            out.append((f, 1))
    out.sort(key=lambda gk: (len(gk[0]), gk[0]))
    return out


def radical(f: Poly, p: int) -> Poly:
    r: Poly = (1,)
    for g, _ in factor(f, p):
        r = mul(r, g, p)
    return r
