import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kslab import polynomials as poly
from kslab.errors import DivisionByZero, NonInvertible, NotPrime, ParseError, RingMismatch
from kslab.scalars import (
    ALL,
    ExtensionField,
    FieldEmbedding,
    PrimeField,
    QQ,
    Rationals,
    ScalarValue,
    ZZ,
    build_extension,
    embed_subfield,
    evaluate_in,
    field_arith,
    in_localization,
    parse_ring,
    parse_scalar,
)


def _poly_products(d, p):
    """Every product of two monic polynomials of degrees a + b = d, a, b >= 1 (reducibility oracle)."""
    out = set()
    for a in range(1, d // 2 + 1):
        for f in itertools.product(range(p), repeat=a):
            for g in itertools.product(range(p), repeat=d - a):
                out.add(poly.mul(f + (1,), g + (1,), p))
    return out


def _irreducible_oracle(f, p):
    return f not in _poly_products(len(f) - 1, p)


# --- field_arith -----------------------------------------------------------

def test_inverse_of_two_in_f5():
    F = PrimeField(5)
    assert F(2).inverse().raw == 3
    assert field_arith(F(1), F(2), "div").raw == 3


def test_one_plus_one_in_f2():
    F = PrimeField(2)
    assert (F(1) + F(1)).raw == 0


def test_sixth_times_five_in_z_1_30():
    R = parse_ring("Z[1/30]")
    v = R(Fraction(1, 6)) * R(5)
    assert v.raw == Fraction(5, 6)
    # oracle: every prime factor of 6 lies in {2, 3, 5}
    assert all(6 % q == 0 for q in (2, 3)) and {2, 3} <= {2, 3, 5}


def test_division_errors():
    with pytest.raises(DivisionByZero):
        field_arith(PrimeField(5)(1), PrimeField(5)(0), "div")
    with pytest.raises(NonInvertible):
        field_arith(ZZ(1), ZZ(2), "div")
    with pytest.raises(RingMismatch):
        field_arith(PrimeField(5)(1), PrimeField(3)(1), "add")
    with pytest.raises(DivisionByZero):
        QQ(0).inverse()


def test_not_prime():
    with pytest.raises(NotPrime):
        PrimeField(6)
    with pytest.raises(NotPrime):
        build_extension(4, 2)


# --- localization ------------------------------------------------------------

@pytest.mark.parametrize("q,inv,expected", [
    (Fraction(1, 30), {2, 3, 5}, True),
    (7, set(), True),
    (Fraction(1, 7), {2, 3, 5}, False),
    (Fraction(3, 4), {2}, True),
    (Fraction(5, 9), {2}, False),
    (Fraction(1, 7), ALL, True),
])
def test_in_localization(q, inv, expected):
    assert in_localization(q, inv) is expected


def _factor_oracle(n):
    return {d for d in range(2, n + 1) if n % d == 0 and all(d % e for e in range(2, d))}


def test_localization_closed_under_ring_ops():
    rng = random.Random(7)
    S = {2, 3, 5}
    corpus = []
    while len(corpus) < 100:
        den = rng.choice([1, 2, 3, 4, 5, 6, 8, 9, 10, 15, 25, 30, 7, 11, 14])
        q = Fraction(rng.randint(-50, 50), den)
        if _factor_oracle(q.denominator) <= S:
            corpus.append(q)
    for a in corpus:
        assert in_localization(a, S)
    for a, b in zip(corpus, corpus[1:]):
        assert in_localization(a * b, S) and in_localization(a + b, S)


def test_rationals_canonical_form():
    R = Rationals(frozenset({2}))
    v = R(Fraction(6, 4))
    assert v.raw.numerator == 3 and v.raw.denominator == 2
    with pytest.raises(NonInvertible):
        R(Fraction(1, 3))
    assert str(parse_ring("Z[1/30]")) == "Z[1/30]"
    assert parse_ring("Z") == ZZ and parse_ring("Q") == QQ


# --- extensions ----------------------------------------------------------------

def test_build_extension_degree_one_is_prime_field():
    assert build_extension(2, 1) == PrimeField(2)


@pytest.mark.parametrize("p,k", [(2, 2), (2, 3), (2, 6), (3, 2), (3, 3), (3, 6), (5, 2), (5, 3)])
def test_modulus_is_least_irreducible(p, k):
    F = build_extension(p, k)
    assert isinstance(F, ExtensionField) and F.order == p ** k
    assert _irreducible_oracle(F.modulus, p)
    # every lexicographically smaller monic polynomial (low-to-high) is reducible
    reducible = _poly_products(k, p)
    for coeffs in itertools.product(range(p), repeat=k):
        f = coeffs + (1,)
        if f == F.modulus:
            break
        assert f in reducible


def test_extension_degree_bounds():
    with pytest.raises(ValueError):
        build_extension(2, 7)


def _field_axioms_exhaustive(F):
    els = list(F.elements())
    z, o = F.zero(), F.one()
    for a in els:
        assert F.add(a, z) == a and F.mul(a, o) == a
        assert F.add(a, F.neg(a)) == z
        if a != z:
            assert F.mul(a, F.inv(a)) == o
        assert F.canon(F.canon(a)) == F.canon(a)
    for a, b in itertools.product(els, repeat=2):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)


@pytest.mark.parametrize("F", [PrimeField(2), PrimeField(5), build_extension(2, 2),
                               build_extension(2, 3), build_extension(3, 2), build_extension(3, 3),
                               build_extension(2, 6), build_extension(3, 4)])
def test_field_axioms_small(F):
    _field_axioms_exhaustive(F)
    els = list(F.elements())
    if len(els) <= 27:
        for a, b, c in itertools.product(els, repeat=3):
            assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
            assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))


def test_field_axioms_large_random():
    F = build_extension(3, 6)
    rng = random.Random(1)
    els = list(F.elements())
    slow = F._slow_mul
    for _ in range(10_000):
        a, b, c = rng.choice(els), rng.choice(els), rng.choice(els)
        assert F.mul(a, b) == slow(a, b)
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


def test_large_field_without_tables():
    F = build_extension(5, 6)  # 15625 elements, still tabled; check slow path agrees
    rng = random.Random(3)
    for _ in range(300):
        a = tuple(rng.randrange(5) for _ in range(6))
        b = tuple(rng.randrange(5) for _ in range(6))
        assert F.mul(a, b) == F._slow_mul(a, b)
        if any(a):
            assert F.mul(a, F.inv(a)) == F.one()


# --- embeddings ----------------------------------------------------------------

def test_embed_prime_subfield():
    e = embed_subfield(1, 6, 2)
    F64 = build_extension(2, 6)
    assert e(1) == F64.one() and e(0) == F64.zero()


@pytest.mark.parametrize("d,k,p", [(2, 6, 2), (3, 6, 2), (2, 6, 3), (3, 6, 3), (2, 4, 3), (3, 6, 5)])
def test_embedding_is_hom_and_least_root(d, k, p):
    emb = embed_subfield(d, k, p)
    src, tgt = build_extension(p, d), build_extension(p, k)
    # independent root scan over the whole target
    rts = [x for x in tgt.elements() if not any(evaluate_in(tgt, src.modulus, x))]
    assert rts and emb.image_of_generator == min(rts)
    els = list(src.elements())
    if len(els) <= 81:
        for a, b in itertools.product(els, repeat=2):
            assert emb(src.add(a, b)) == tgt.add(emb(a), emb(b))
            assert emb(src.mul(a, b)) == tgt.mul(emb(a), emb(b))
        assert len({emb(a) for a in els}) == len(els)


def test_embedding_rejects_non_root():
    src, tgt = build_extension(2, 2), build_extension(2, 6)
    with pytest.raises(ValueError):
        FieldEmbedding(src, tgt, tgt.one())


def test_embedding_requires_divisibility():
    with pytest.raises(ValueError):
        embed_subfield(4, 6, 2)


# --- parsing -------------------------------------------------------------------

def test_parse_scalars():
    F8 = parse_ring("GF(2^3)")
    assert parse_scalar("[1,0,1]@GF(2^3)", F8).raw == (1, 0, 1)
    assert parse_scalar("3/7", QQ).raw == Fraction(3, 7)
    assert parse_scalar("3", PrimeField(5)).raw == 3
    assert parse_scalar("1/2", PrimeField(5)).raw == 3
    with pytest.raises(ParseError):
        parse_ring("GF(x)")
    with pytest.raises(ParseError):
        parse_scalar("abc", QQ)
    with pytest.raises(NonInvertible):
        parse_scalar("1/5", PrimeField(5))
    with pytest.raises(NotPrime):
        parse_ring("GF(4)")


@given(st.integers(-10**6, 10**6), st.integers(1, 10**4))
def test_canon_idempotent_rationals(a, b):
    q = QQ.canon(Fraction(a, b))
    assert QQ.canon(q) == q and q.denominator >= 1


@given(st.integers(0, 63), st.integers(0, 63))
def test_scalarvalue_ops_f64(a, b):
    F = build_extension(2, 6)
    x, y = ScalarValue(F, F.decode(a)), ScalarValue(F, F.decode(b))
    assert (x + y) - y == x
    if b:
        assert (x * y) / y == x
