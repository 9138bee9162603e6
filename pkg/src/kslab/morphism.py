"""Morphisms of partial algebras from Kochen-Specker colorings.

Given a KS coloring of the idempotents of a finite partial subalgebra
A of M_3(F_p), build phi: A -> GF(p^6) by
  * dropping the nilpotent Jordan-Chevalley part,
  * sending sum t_i p_i (split spectral part) to sum t_i c(p_i),
  * sending the purely non-diagonalizable remainder y through a fixed field
    embedding <y> = GF(p^d) -> GF(p^6) when its support is white, else to 0.
"""
from __future__ import annotations

import functools
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import polynomials as poly
from .boolean import Coloring, PartialBooleanAlgebra
from .errors import ClosureViolation, InvalidColoring, NotSemisimple, RingMismatch
from .matrices import SquareMatrix, _encode, _lookup, entrywise_hom
from .scalars import ExtensionField, PrimeField, build_extension, embed_subfield, field_roots

TARGET_DEGREE = 6


# ---------------------------------------------------------------------------
# polynomial helpers over a prime field

def _prime_field(x: SquareMatrix) -> PrimeField:
    if not isinstance(x.ring, PrimeField):
        raise RingMismatch(f"expected a prime field, got {x.ring}")
    return x.ring


def char_poly(x: SquareMatrix) -> tuple:
    """det(tI - x), monic, by cofactor expansion over F_p[t]."""
    p = _prime_field(x).p
    n = x.n
    entries = [[poly.trim((-x.rows[i][j], 1 if i == j else 0), p) for j in range(n)]
               for i in range(n)]

    def det(rows: list[int], cols: list[int]) -> tuple:
        if len(rows) == 1:
            return entries[rows[0]][cols[0]]
        acc: tuple = ()
        r0, rest = rows[0], rows[1:]
        for k, c in enumerate(cols):
            e = entries[r0][c]
            if not e:
                continue
            term = poly.mul(e, det(rest, cols[:k] + cols[k + 1:]), p)
            acc = poly.add(acc, term, p) if k % 2 == 0 else poly.sub(acc, term, p)
        return acc

    return det(list(range(n)), list(range(n)))


def eval_matrix_poly(f: Sequence[int], x: SquareMatrix) -> SquareMatrix:
    """f(x) by Horner's rule; f lowest degree first."""
    ring = x.ring
    one = SquareMatrix.identity(ring, x.n)
    acc = SquareMatrix.zero(ring, x.n)
    for c in reversed(tuple(f)):
        acc = acc * x + one.scale(ring.from_int(c))
    return acc


def _no_constant(f: tuple, chi: tuple, p: int) -> tuple:
    """A polynomial agreeing with f at x (chi(x) = 0) and with zero constant term.

    If chi(0) = 0 any representative mod chi already vanishes at 0 exactly
    when it should; otherwise 1 = -(chi(t) - chi(0))/chi(0) at x replaces the
    constant.
    """
    f = poly.mod(f, chi, p)
    if not f or f[0] == 0:
        return f
    c0 = chi[0] if chi else 0
    if c0 == 0:
        # f(0) != 0 with chi(0) = 0 would contradict x being singular; keep as is
        return f
    inv = pow(-c0, p - 2, p)
    unit = poly.scale(poly.sub(chi, (c0,), p), inv, p)  # equals I at x
    return poly.add(poly.sub(f, (f[0],), p), poly.scale(unit, f[0], p), p)


# ---------------------------------------------------------------------------
# Jordan-Chevalley

@dataclass(frozen=True)
class JordanChevalleyPair:
    semisimple_part: SquareMatrix
    nilpotent_part: SquareMatrix
    semisimple_poly: tuple
    nilpotent_poly: tuple


def jordan_chevalley(x: SquareMatrix) -> JordanChevalleyPair:
    """x = x_s + x_n over F_p, both parts polynomials in x without constant term.

    Newton iteration s <- s - f(s)/f'(s) in F_p[t]/(chi) with f the squarefree
    part of chi, started at s = t.
    """
    p = _prime_field(x).p
    chi = char_poly(x)
    f = poly.radical(chi, p)
    df = poly.derivative(f, p)
    s: tuple = poly.mod((0, 1), chi, p)
    for _ in range(2 * x.n + 2):
        fs = poly.compose_mod(f, s, chi, p)
        if not fs:
            break
        step = poly.mul(fs, poly.inverse_mod(poly.compose_mod(df, s, chi, p), chi, p), p)
        s = poly.mod(poly.sub(s, step, p), chi, p)
    else:  # pragma: no cover - Newton converges in O(log n) steps
        raise RuntimeError("Jordan-Chevalley iteration did not converge")
    s = _no_constant(s, chi, p)
    nil = _no_constant(poly.sub((0, 1), s, p), chi, p)
    xs = eval_matrix_poly(s, x)
    xn = eval_matrix_poly(nil, x)
    if xs + xn != x or not (xn ** x.n).is_zero() or not xs.commutes_with(xn):
        raise AssertionError("Jordan-Chevalley invariants failed")  # pragma: no cover
    if not eval_matrix_poly(f, xs).is_zero():
        raise AssertionError("semisimple part is not annihilated by the radical")  # pragma: no cover
    return JordanChevalleyPair(xs, xn, s, nil)


def minimal_radical(x: SquareMatrix) -> tuple:
    """Squarefree part of chi(x); it annihilates x iff x is semisimple."""
    return poly.radical(char_poly(x), _prime_field(x).p)


def is_semisimple(x: SquareMatrix) -> bool:
    return eval_matrix_poly(minimal_radical(x), x).is_zero()


# ---------------------------------------------------------------------------
# spectral parts

@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: tuple[int, ...]
    idempotents: tuple[SquareMatrix, ...]
    idempotent_polys: tuple[tuple, ...]
    diagonalizable_part: SquareMatrix
    residual: SquareMatrix
    support: SquareMatrix
    residual_support: SquareMatrix


def _spectral_idempotent(m: tuple, t: int, x: SquareMatrix, chi: tuple, p: int):
    g, r = poly.divmod_poly(m, (-t % p, 1), p)
    assert not r
    c = poly.evaluate(g, t, p)
    f = _no_constant(poly.scale(g, pow(c, p - 2, p), p), chi, p) if t else poly.scale(g, pow(c, p - 2, p), p)
    return eval_matrix_poly(f, x), f


def support(x: SquareMatrix) -> SquareMatrix:
    """Idempotent with the range and kernel of a semisimple x: I minus the 0-eigenprojection."""
    p = _prime_field(x).p
    m = minimal_radical(x)
    one = SquareMatrix.identity(x.ring, x.n)
    if poly.evaluate(m, 0, p) != 0:
        return one
    if m == (0, 1):
        return SquareMatrix.zero(x.ring, x.n)
    p0, _ = _spectral_idempotent(m, 0, x, char_poly(x), p)
    return one - p0


def spectral_parts(x: SquareMatrix) -> SpectralDecomposition:
    """Split a semisimple x into F_p-rational eigenparts and a purely non-diagonalizable rest."""
    p = _prime_field(x).p
    chi = char_poly(x)
    m = poly.radical(chi, p)
    if not eval_matrix_poly(m, x).is_zero():
        raise NotSemisimple(f"{x.key} is not semisimple")
    ts = tuple(t for t in poly.roots(m, p) if t)
    ids, polys = [], []
    xd = SquareMatrix.zero(x.ring, x.n)
    for t in ts:
        e, f = _spectral_idempotent(m, t, x, chi, p)
        ids.append(e)
        polys.append(f)
        xd = xd + e.scale(t)
    xnd = x - xd
    return SpectralDecomposition(ts, tuple(ids), tuple(polys), xd, xnd, support(x), support(xnd))


def is_purely_non_diagonalizable(y: SquareMatrix) -> bool:
    """Nonzero semisimple with no nonzero F_p eigenvalue."""
    if y.is_zero() or not is_semisimple(y):
        return False
    m = minimal_radical(y)
    return all(t == 0 for t in poly.roots(m, _prime_field(y).p))


# ---------------------------------------------------------------------------
# Step 3 table

@dataclass(frozen=True)
class SubfieldEntry:
    """One generated subalgebra L = <y> = GF(p^d) and its chosen embedding."""

    generator: SquareMatrix
    degree: int
    generator_image: tuple  # raw GF(p^6) element
    coordinates: dict  # element of L -> (c_1..c_d) with element = sum c_k g^k

    def to_json(self, target: ExtensionField) -> dict:
        return {"generator": self.generator.key, "degree": self.degree,
                "generator_image": list(self.generator_image)}


def generated_subalgebra(y: SquareMatrix) -> list[SquareMatrix]:
    """All no-constant-term polynomials in y (the non-unital subalgebra <y>)."""
    p = _prime_field(y).p
    powers = [y]
    while True:
        nxt = powers[-1] * y
        # linear dependence detected by span size
        if len(powers) >= y.n or _span_contains(powers, nxt, p):
            break
        powers.append(nxt)
    return sorted(_span(powers, p), key=_flat)


def _flat(m: SquareMatrix) -> tuple:
    return tuple(c for r in m.rows for c in r)


def _span(vs: Sequence[SquareMatrix], p: int) -> set[SquareMatrix]:
    ring = vs[0].ring
    out = set()
    for coeffs in itertools.product(range(p), repeat=len(vs)):
        acc = SquareMatrix.zero(ring, vs[0].n)
        for c, v in zip(coeffs, vs):
            if c:
                acc = acc + v.scale(c)
        out.add(acc)
    return out


def _span_contains(vs, w, p) -> bool:
    return w in _span(vs, p)


def _subfield_entry(y: SquareMatrix, target: ExtensionField) -> SubfieldEntry:
    p = _prime_field(y).p
    L = generated_subalgebra(y)
    gens = [z for z in L if is_purely_non_diagonalizable(z)]
    g = min(gens, key=_flat)
    m = minimal_radical(g)
    h = m if poly.evaluate(m, 0, p) else poly.divmod_poly(m, (0, 1), p)[0]
    d = poly.degree(h)
    if d < 2 or not poly.is_irreducible(h, p):
        raise AssertionError(f"unexpected minimal polynomial {h} for {g.key}")  # pragma: no cover
    local = build_extension(p, d)
    alpha = field_roots(local, h)[0]
    image = embed_subfield(d, target.k, p)(alpha)
    coords = {}
    powers = [g]
    for _ in range(d - 1):
        powers.append(powers[-1] * g)
    for cs in itertools.product(range(p), repeat=d):
        acc = SquareMatrix.zero(g.ring, g.n)
        for c, v in zip(cs, powers):
            if c:
                acc = acc + v.scale(c)
        coords.setdefault(acc, cs)
    return SubfieldEntry(g, d, image, coords)


# ---------------------------------------------------------------------------
# the morphism

@dataclass
class PartialAlgebraMorphism:
    p: int
    target: ExtensionField
    coloring: dict  # idempotent matrix -> 0/1
    domain: list[SquareMatrix] | None = None
    values: dict = field(default_factory=dict)
    table: dict = field(default_factory=dict)  # generator -> SubfieldEntry
    _gen_of: dict = field(default_factory=dict, repr=False)

    def color(self, e: SquareMatrix) -> int:
        if e.is_zero():
            return 0
        if e not in self.coloring:
            raise ClosureViolation(f"idempotent {e.key} is not in the colored algebra")
        return self.coloring[e]

    def psi(self, y: SquareMatrix) -> tuple:
        F = self.target
        if y.is_zero():
            return F.zero()
        g = self._gen_of.get(y)
        if g is None:
            entry = _subfield_entry(y, F)
            existing = self.table.get(entry.generator)
            if existing is None:
                self.table[entry.generator] = entry
            else:
                entry = existing
            for z in entry.coordinates:
                self._gen_of.setdefault(z, entry.generator)
            g = entry.generator
        entry = self.table[g]
        acc = F.zero()
        a = entry.generator_image
        power = a
        for c in entry.coordinates[y]:
            acc = F.add(acc, F.mul(F.from_int(c), power))
            power = F.mul(power, a)
        return acc

    def __call__(self, x: SquareMatrix) -> tuple:
        if x in self.values:
            return self.values[x]
        if x.ring != PrimeField(self.p):
            raise RingMismatch(f"{x.ring} is not GF({self.p})")
        F = self.target
        jc = jordan_chevalley(x)
        sp = spectral_parts(jc.semisimple_part)
        val = F.zero()
        for t, e in zip(sp.eigenvalues, sp.idempotents):
            if self.color(e):
                val = F.add(val, F.from_int(t))
        y = sp.residual
        if not y.is_zero() and self.color(sp.residual_support):
            val = F.add(val, self.psi(y))
        self.values[x] = val
        return val

    def kernel_idempotents(self) -> set[SquareMatrix]:
        return {e for e in self.coloring if not any(self(e))}

    def to_json(self) -> dict:
        dom = self.domain if self.domain is not None else list(self.values)
        return {
            "p": self.p,
            "target": str(self.target),
            "target_modulus": list(self.target.modulus),
            "values": {x.key: list(self(x)) for x in dom},
            "embedding_table": [e.to_json(self.target) for e in
                                sorted(self.table.values(), key=lambda e: _flat(e.generator))],
        }


def extend_coloring(domain: Sequence[SquareMatrix], algebra: PartialBooleanAlgebra,
                    coloring: Coloring | Iterable[int], check_closure: bool = True) -> PartialAlgebraMorphism:
    """Build phi on ``domain`` from a KS coloring of ``algebra`` (the idempotents of the domain)."""
    white = coloring.white if isinstance(coloring, Coloring) else frozenset(coloring)
    ok, witness = algebra.is_ks_coloring(white)
    if not ok:
        raise InvalidColoring(f"not a Kochen-Specker coloring: {witness}")
    if not domain:
        raise ValueError("empty domain")
    ring = domain[0].ring
    if not isinstance(ring, PrimeField):
        raise RingMismatch("domain must be over a prime field")
    if ring.p not in (2, 3):
        warnings.warn(f"p = {ring.p} is outside the guaranteed range (2, 3)", stacklevel=2)
    target = build_extension(ring.p, TARGET_DEGREE)
    colors = {e: (1 if i in white else 0) for i, e in enumerate(algebra.elements)}
    phi = PartialAlgebraMorphism(ring.p, target, colors, list(domain))
    members = set(domain)
    for x in domain:
        phi(x)
        if check_closure:
            jc = jordan_chevalley(x)
            sp = spectral_parts(jc.semisimple_part)
            needed = [jc.semisimple_part, sp.diagonalizable_part, sp.residual, *sp.idempotents]
            for z in needed:
                if z not in members:
                    raise ClosureViolation(f"{z.key} (a part of {x.key}) is not in the domain")
    return phi


# ---------------------------------------------------------------------------
# verification

@dataclass
class VerificationReport:
    domain_size: int
    ordered_pairs: int
    commuting_pairs: int
    additive_failures: int
    multiplicative_failures: int
    closure_failures: int
    unit_ok: bool
    scalar_ok: bool
    first_failure: tuple | None

    @property
    def passed(self) -> bool:
        return (self.unit_ok and self.scalar_ok and not self.additive_failures
                and not self.multiplicative_failures and not self.closure_failures)

    def to_json(self) -> dict:
        return {
            "domain_size": self.domain_size,
            "ordered_pairs": self.ordered_pairs,
            "commuting_pairs": self.commuting_pairs,
            "additive_failures": self.additive_failures,
            "multiplicative_failures": self.multiplicative_failures,
            "closure_failures": self.closure_failures,
            "unit_ok": self.unit_ok,
            "scalar_ok": self.scalar_ok,
            "first_failure": list(self.first_failure) if self.first_failure else None,
            "passed": self.passed,
        }


@functools.lru_cache(maxsize=4)
def _field_tables(F: ExtensionField) -> tuple[np.ndarray, np.ndarray]:
    q = F.order
    elems = [F.decode(i) for i in range(q)]
    add = np.array([[F.encode(F.add(a, b)) for b in elems] for a in elems], dtype=np.int64)
    mul = np.array([[F.encode(F.mul(a, b)) for b in elems] for a in elems], dtype=np.int64)
    return add, mul


def verify_morphism(phi: PartialAlgebraMorphism | Callable, domain: Sequence[SquareMatrix] | None = None,
                    target: ExtensionField | None = None) -> VerificationReport:
    """Exhaustive check of phi(0)=0, phi(1)=1, phi(cI)=c and, for every commuting
    ordered pair (x, y), phi(x+y) = phi(x)+phi(y) and phi(xy) = phi(x)phi(y).

    The first failure reported is the least pair (i, j) in domain order.
    """
    if domain is None:
        domain = phi.domain
    if target is None:
        target = phi.target
    dom = list(domain)
    ring = dom[0].ring
    p, n = ring.p, dom[0].n
    N = len(dom)
    A = np.array([m.rows for m in dom], dtype=np.int64)
    codes = _encode(A, p)
    vals = np.array([target.encode(phi(x)) for x in dom], dtype=np.int64)
    add_t, mul_t = _field_tables(target)

    one = SquareMatrix.identity(ring, n)
    zero = SquareMatrix.zero(ring, n)
    unit_ok = not any(phi(zero)) if zero in set(dom) else True
    unit_ok = unit_ok and (phi(one) == target.one() if one in set(dom) else True)
    scalar_ok = all(phi(one.scale(c)) == target.from_int(c) for c in range(p) if one.scale(c) in set(dom))

    commuting = add_fail = mul_fail = closure_fail = 0
    first = None
    chunk = max(1, 1_000_000 // max(1, N * n * n))
    for s in range(0, N, chunk):
        block = A[s:s + chunk]
        P = np.einsum("aij,bjk->abik", block, A) % p
        Q = np.einsum("aij,bjk->abik", A, block) % p  # Q[b, a] = A_b A_{s+a}
        pc = _encode(P, p)
        qc = _encode(Q, p).T
        comm = pc == qc
        sc = _encode((block[:, None] + A[None, :]) % p, p)
        si = _lookup(sc, codes)
        pi = _lookup(pc, codes)
        vi = vals[s:s + chunk][:, None]
        vj = vals[None, :]
        closure_bad = comm & ((si < 0) | (pi < 0))
        add_bad = comm & (si >= 0) & (vals[np.maximum(si, 0)] != add_t[vi, vj])
        mul_bad = comm & (pi >= 0) & (vals[np.maximum(pi, 0)] != mul_t[vi, vj])
        commuting += int(comm.sum())
        closure_fail += int(closure_bad.sum())
        add_fail += int(add_bad.sum())
        mul_fail += int(mul_bad.sum())
        if first is None:
            for kind, bad in (("closure", closure_bad), ("additive", add_bad), ("multiplicative", mul_bad)):
                idx = np.argwhere(bad)
                if len(idx):
                    i, j = idx[0]
                    cand = (int(i) + s, int(j), kind)
                    if first is None or cand[:2] < first[:2]:
                        first = cand
    if first is not None:
        i, j, kind = first
        first = (i, j, kind, dom[i].key, dom[j].key)
    return VerificationReport(N, N * N, commuting, add_fail, mul_fail, closure_fail,
                              unit_ok, scalar_ok, first)


# ---------------------------------------------------------------------------
# the integer composite

def symmetric_domain(p: int, n: int = 3) -> list[SquareMatrix]:
    from .enumeration import all_matrices

    return sorted(all_matrices(p, n, symmetric=True), key=_flat)


@dataclass
class IntegerComposite:
    """x over Z (symmetric) -> reduce mod p -> phi."""

    phi: PartialAlgebraMorphism

    @property
    def p(self) -> int:
        return self.phi.p

    def __call__(self, x: SquareMatrix) -> tuple:
        return self.phi(entrywise_hom(x, PrimeField(self.p)))

    def kernel_contains(self, x: SquareMatrix) -> bool:
        return not any(self(x))

    def check_pair(self, x: SquareMatrix, y: SquareMatrix) -> dict:
        """Additivity/multiplicativity on one commuting pair, plus the prime-ideal
        conditions for the kernel phi^-1(0) on that pair."""
        if not x.commutes_with(y):
            raise ValueError("pair does not commute")
        F = self.phi.target
        fx, fy = self(x), self(y)
        ker = self.kernel_contains
        return {
            "additive": self(x + y) == F.add(fx, fy),
            "multiplicative": self(x * y) == F.mul(fx, fy),
            "ideal_sum": not (ker(x) and ker(y)) or ker(x + y),
            "ideal_product": not ker(x) or ker(x * y),
            "prime": not ker(x * y) or ker(x) or ker(y),
        }


def default_morphism(p: int, coloring_index: int = 0) -> tuple[PartialAlgebraMorphism, PartialBooleanAlgebra]:
    """phi on M_3(F_p)_sym from the ``coloring_index``-th KS coloring of Proj(M_3(F_p))."""
    from .enumeration import enumerate_projections

    B = PartialBooleanAlgebra.from_idempotents(enumerate_projections(p).all(), closed=True)
    cols = B.ks_colorings()
    if not cols:
        raise InvalidColoring(f"Proj(M_3(F_{p})) has no Kochen-Specker coloring")
    return extend_coloring(symmetric_domain(p), B, cols[coloring_index]), B


def integer_composite(p: int, coloring_index: int = 0) -> IntegerComposite:
    if p not in (2, 3):
        raise ValueError("integer composite is built for p in (2, 3)")
    phi, _ = default_morphism(p, coloring_index)
    return IntegerComposite(phi)
