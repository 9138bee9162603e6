"""Exact square matrices and column vectors over a :class:`ScalarRing`."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    DenominatorNotInvertible,
    IsotropicVector,
    NonInvertible,
    NotABasis,
    NotIdempotent,
    NotInCorner,
    RingMismatch,
    ShapeMismatch,
    ZeroVector,
)
from .scalars import (
    ExtensionField,
    PrimeField,
    QQ,
    Rationals,
    ScalarRing,
    ScalarValue,
    parse_ring,
    parse_scalar,
)


def _coerce(ring: ScalarRing, x) -> Any:
    if isinstance(x, ScalarValue):
        if x.ring != ring:
            raise RingMismatch(f"{x.ring} vs {ring}")
        return x.raw
    if isinstance(x, str):
        return parse_scalar(x, ring).raw
    return ring.canon(x)


@dataclass(frozen=True)
class ColumnVector:
    ring: ScalarRing
    coords: tuple

    @classmethod
    def of(cls, ring: ScalarRing, coords: Iterable) -> "ColumnVector":
        return cls(ring, tuple(_coerce(ring, c) for c in coords))

    @property
    def n(self) -> int:
        return len(self.coords)

    def dot(self, other: "ColumnVector") -> Any:
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")
        if other.n != self.n:
            raise ShapeMismatch("vector lengths differ")
        return self.ring.dot(self.coords, other.coords)

    def is_zero(self) -> bool:
        return all(self.ring.is_zero(c) for c in self.coords)

    def scale(self, c) -> "ColumnVector":
        return ColumnVector(self.ring, tuple(self.ring.mul(c, x) for x in self.coords))

    def to_json(self) -> dict:
        return {"ring": str(self.ring), "coords": [self.ring.format_raw(c) for c in self.coords]}

    @classmethod
    def from_json(cls, obj: dict) -> "ColumnVector":
        ring = parse_ring(obj["ring"])
        return cls.of(ring, obj["coords"])


@dataclass(frozen=True)
class SquareMatrix:
    ring: ScalarRing
    rows: tuple

    # construction -----------------------------------------------------
    @classmethod
    def of(cls, ring: ScalarRing, rows: Sequence[Sequence]) -> "SquareMatrix":
        n = len(rows)
        out = []
        for r in rows:
            if len(r) != n:
                raise ShapeMismatch("matrix must be square")
            out.append(tuple(_coerce(ring, x) for x in r))
        return cls(ring, tuple(out))

    @classmethod
    def identity(cls, ring: ScalarRing, n: int) -> "SquareMatrix":
        z, o = ring.zero(), ring.one()
        return cls(ring, tuple(tuple(o if i == j else z for j in range(n)) for i in range(n)))

    @classmethod
    def zero(cls, ring: ScalarRing, n: int) -> "SquareMatrix":
        z = ring.zero()
        return cls(ring, tuple((z,) * n for _ in range(n)))

    @classmethod
    def from_columns(cls, cols: Sequence[ColumnVector]) -> "SquareMatrix":
        ring = cols[0].ring
        n = len(cols)
        for c in cols:
            if c.ring != ring:
                raise RingMismatch("columns over different rings")
            if c.n != n:
                raise ShapeMismatch("need n columns of length n")
        return cls(ring, tuple(tuple(c.coords[i] for c in cols) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> ScalarValue:
        return ScalarValue(self.ring, self.rows[i][j])

    def column(self, j: int) -> ColumnVector:
        return ColumnVector(self.ring, tuple(r[j] for r in self.rows))

    @property
    def key(self) -> str:
        """Compact canonical text form, usable as a dictionary/JSON key."""
        f = self.ring.format_raw
        return ";".join(",".join(f(x) for x in r) for r in self.rows)

    def __str__(self):
        return self.key

    # arithmetic -------------------------------------------------------
    def _check(self, other: "SquareMatrix") -> None:
        if not isinstance(other, SquareMatrix):
            raise TypeError(f"expected SquareMatrix, got {type(other).__name__}")
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")
        if other.n != self.n:
            raise ShapeMismatch(f"{self.n}x{self.n} vs {other.n}x{other.n}")

    def __add__(self, other: "SquareMatrix") -> "SquareMatrix":
        self._check(other)
        add = self.ring.add
        return SquareMatrix(self.ring, tuple(tuple(add(a, b) for a, b in zip(r, s))
                                             for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other: "SquareMatrix") -> "SquareMatrix":
        self._check(other)
        sub = self.ring.sub
        return SquareMatrix(self.ring, tuple(tuple(sub(a, b) for a, b in zip(r, s))
                                             for r, s in zip(self.rows, other.rows)))

    def __neg__(self) -> "SquareMatrix":
        neg = self.ring.neg
        return SquareMatrix(self.ring, tuple(tuple(neg(a) for a in r) for r in self.rows))

    def __mul__(self, other):
        if isinstance(other, SquareMatrix):
            self._check(other)
            cols = tuple(zip(*other.rows))
            dot = self.ring.dot
            return SquareMatrix(self.ring, tuple(tuple(dot(r, c) for c in cols) for r in self.rows))
        if isinstance(other, ColumnVector):
            if other.ring != self.ring:
                raise RingMismatch(f"{self.ring} vs {other.ring}")
            if other.n != self.n:
                raise ShapeMismatch("vector length mismatch")
            return ColumnVector(self.ring, tuple(self.ring.dot(r, other.coords) for r in self.rows))
        return self.scale(_coerce(self.ring, other))

    def __rmul__(self, other):
        return self.scale(_coerce(self.ring, other))

    def scale(self, c) -> "SquareMatrix":
        mul = self.ring.mul
        return SquareMatrix(self.ring, tuple(tuple(mul(c, a) for a in r) for r in self.rows))

    def transpose(self) -> "SquareMatrix":
        return SquareMatrix(self.ring, tuple(zip(*self.rows)))

    @property
    def T(self) -> "SquareMatrix":
        return self.transpose()

    def __pow__(self, k: int) -> "SquareMatrix":
        out = SquareMatrix.identity(self.ring, self.n)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def trace(self) -> Any:
        acc = self.ring.zero()
        for i in range(self.n):
            acc = self.ring.add(acc, self.rows[i][i])
        return acc

    # predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return all(self.ring.is_zero(x) for r in self.rows for x in r)

    def is_identity(self) -> bool:
        return self == SquareMatrix.identity(self.ring, self.n)

    def is_idempotent(self) -> bool:
        return self * self == self

    def is_symmetric(self) -> bool:
        return self == self.transpose()

    def commutes_with(self, other: "SquareMatrix") -> bool:
        return self * other == other * self

    def is_orthogonal_idempotent_pair(self, other: "SquareMatrix") -> bool:
        if not (self.is_idempotent() and other.is_idempotent()):
            return False
        return (self * other).is_zero() and (other * self).is_zero()

    # linear algebra ---------------------------------------------------
    def _field_view(self) -> tuple[ScalarRing, list[list]]:
        """Entries in a field containing the ring (Q for localizations of Z)."""
        if isinstance(self.ring, Rationals):
            return QQ, [list(r) for r in self.rows]
        return self.ring, [list(r) for r in self.rows]

    def rank(self) -> int:
        F, m = self._field_view()
        n = self.n
        rank = 0
        for col in range(n):
            piv = next((r for r in range(rank, n) if not F.is_zero(m[r][col])), None)
            if piv is None:
                continue
            m[rank], m[piv] = m[piv], m[rank]
            inv = F.inv(m[rank][col])
            for r in range(n):
                if r != rank and not F.is_zero(m[r][col]):
                    f = F.mul(m[r][col], inv)
                    m[r] = [F.sub(a, F.mul(f, b)) for a, b in zip(m[r], m[rank])]
            rank += 1
        return rank

    def det(self) -> Any:
        F, m = self._field_view()
        n = self.n
        d = F.one()
        for col in range(n):
            piv = next((r for r in range(col, n) if not F.is_zero(m[r][col])), None)
            if piv is None:
                return F.zero()
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                d = F.neg(d)
            d = F.mul(d, m[col][col])
            inv = F.inv(m[col][col])
            for r in range(col + 1, n):
                if not F.is_zero(m[r][col]):
                    f = F.mul(m[r][col], inv)
                    m[r] = [F.sub(a, F.mul(f, b)) for a, b in zip(m[r], m[col])]
        return d

    def inverse(self) -> "SquareMatrix":
        """Inverse over the matrix's own ring; NonInvertible when det is not a unit."""
        det = self.det()
        if self.ring.is_zero(det):
            raise NonInvertible("singular matrix")
        self.ring.inv(det)  # raises NonInvertible for non-units of Z[1/n]
        F, m = self._field_view()
        n = self.n
        aug = [row + [F.one() if i == j else F.zero() for j in range(n)] for i, row in enumerate(m)]
        for col in range(n):
            piv = next(r for r in range(col, n) if not F.is_zero(aug[r][col]))
            aug[col], aug[piv] = aug[piv], aug[col]
            inv = F.inv(aug[col][col])
            aug[col] = [F.mul(inv, x) for x in aug[col]]
            for r in range(n):
                if r != col and not F.is_zero(aug[r][col]):
                    f = aug[r][col]
                    aug[r] = [F.sub(a, F.mul(f, b)) for a, b in zip(aug[r], aug[col])]
        return SquareMatrix(self.ring, tuple(tuple(self.ring.canon(x) for x in r[n:]) for r in aug))

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        f = self.ring.format_raw
        return {"ring": str(self.ring), "n": self.n, "rows": [[f(x) for x in r] for r in self.rows]}

    @classmethod
    def from_json(cls, obj: dict) -> "SquareMatrix":
        ring = parse_ring(obj["ring"])
        m = cls.of(ring, obj["rows"])
        if "n" in obj and obj["n"] != m.n:
            raise ShapeMismatch("declared n does not match rows")
        return m


def matrix_unit(ring: ScalarRing, n: int, i: int, j: int) -> SquareMatrix:
    """E_ij with 0-based indices."""
    z, o = ring.zero(), ring.one()
    return SquareMatrix(ring, tuple(tuple(o if (r, c) == (i, j) else z for c in range(n))
                                    for r in range(n)))


def diagonal(ring: ScalarRing, values: Sequence) -> SquareMatrix:
    n = len(values)
    z = ring.zero()
    vals = [_coerce(ring, v) for v in values]
    return SquareMatrix(ring, tuple(tuple(vals[i] if i == j else z for j in range(n))
                                    for i in range(n)))


def mat_arith(a: SquareMatrix, b: SquareMatrix, op: str) -> SquareMatrix:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def transpose(a: SquareMatrix) -> SquareMatrix:
    return a.transpose()


def predicates(a: SquareMatrix, b: SquareMatrix | None = None) -> dict:
    out = {"is_idempotent": a.is_idempotent(), "is_symmetric": a.is_symmetric()}
    if b is not None:
        out["commutes_with"] = a.commutes_with(b)
        out["is_orthogonal_idempotent_pair"] = a.is_orthogonal_idempotent_pair(b)
    return out


def outer(u: ColumnVector, v: ColumnVector) -> SquareMatrix:
    mul = u.ring.mul
    return SquareMatrix(u.ring, tuple(tuple(mul(a, b) for b in v.coords) for a in u.coords))


def project_vector(v: ColumnVector) -> SquareMatrix:
    """The symmetric idempotent (v^T v)^-1 v v^T with range Span(v)."""
    if v.is_zero():
        raise ZeroVector("cannot project onto the zero vector")
    lam = v.dot(v)
    if v.ring.is_zero(lam):
        raise IsotropicVector(f"v^T v = 0 for {[v.ring.format_raw(c) for c in v.coords]}")
    return outer(v, v).scale(v.ring.inv(lam))


def idempotent_from_basis(range_vecs: Sequence[ColumnVector],
                          kernel_vecs: Sequence[ColumnVector]) -> SquareMatrix:
    """U diag(1..1, 0..0) U^-1 for U = [range | kernel]; the idempotent with that range and kernel."""
    cols = list(range_vecs) + list(kernel_vecs)
    if not cols:
        raise NotABasis("empty basis")
    n = cols[0].n
    if len(cols) != n:
        raise NotABasis(f"need {n} vectors, got {len(cols)}")
    u = SquareMatrix.from_columns(cols)
    ring = u.ring
    det = u.det()
    if ring.is_zero(det):
        raise NotABasis("columns are linearly dependent")
    try:
        ring.inv(det)
    except NonInvertible as exc:
        raise NotABasis(f"determinant {ring.format_raw(det)} is not a unit of {ring}") from exc
    d = diagonal(ring, [1] * len(range_vecs) + [0] * len(kernel_vecs))
    return u * d * u.inverse()


def rank_of_idempotent(e: SquareMatrix) -> int:
    if not e.is_idempotent():
        raise NotIdempotent(e.key)
    return e.rank()


def corner_compress(e: SquareMatrix, a: SquareMatrix) -> SquareMatrix:
    """Delete row/column i from ``a`` where ``e`` = 1 - E_ii and ``eae`` = ``a``."""
    n = e.n
    one = SquareMatrix.identity(e.ring, n)
    i = next((k for k in range(n) if e == one - matrix_unit(e.ring, n, k, k)), None)
    if i is None:
        raise NotInCorner("corner idempotent must be 1 - E_ii")
    if e * a * e != a:
        raise NotInCorner("matrix does not lie in the corner ring")
    keep = [k for k in range(n) if k != i]
    return SquareMatrix(a.ring, tuple(tuple(a.rows[r][c] for c in keep) for r in keep))


def corner_embed(a: SquareMatrix, i: int) -> SquareMatrix:
    """Inverse of :func:`corner_compress`: insert a zero row and column at index ``i``."""
    n = a.n + 1
    z = a.ring.zero()
    rows = []
    for r in range(n):
        if r == i:
            rows.append((z,) * n)
            continue
        src = a.rows[r if r < i else r - 1]
        rows.append(tuple(src[:i]) + (z,) + tuple(src[i:]))
    return SquareMatrix(a.ring, tuple(rows))


def _map_scalar(raw, source: ScalarRing, target: ScalarRing):
    if source == target:
        return raw
    if isinstance(source, Rationals):
        q = Fraction(raw)
        if isinstance(target, Rationals):
            if not target.contains(q):
                raise DenominatorNotInvertible(f"{q} does not lie in {target}")
            return q
        p = target.characteristic
        if q.denominator % p == 0:
            raise DenominatorNotInvertible(f"denominator of {q} is divisible by {p}")
        num = target.from_int(q.numerator)
        return target.mul(num, target.inv(target.from_int(q.denominator)))
    if isinstance(source, PrimeField) and isinstance(target, ExtensionField) and source.p == target.p:
        return target.from_int(raw)
    raise RingMismatch(f"no canonical map {source} -> {target}")


def entrywise_hom(a: SquareMatrix, target: ScalarRing) -> SquareMatrix:
    """Apply the canonical ring map (reduction mod p or inclusion) to every entry."""
    return SquareMatrix(target, tuple(tuple(_map_scalar(x, a.ring, target) for x in r)
                                      for r in a.rows))


def vector_hom(v: ColumnVector, target: ScalarRing) -> ColumnVector:
    return ColumnVector(target, tuple(_map_scalar(x, v.ring, target) for x in v.coords))


def permutation_matrix(ring: ScalarRing, perm: Sequence[int]) -> SquareMatrix:
    """Matrix sending basis vector e_j to e_perm[j]."""
    n = len(perm)
    z, o = ring.zero(), ring.one()
    return SquareMatrix(ring, tuple(tuple(o if perm[c] == r else z for c in range(n))
                                    for r in range(n)))


@dataclass(frozen=True)
class PairTables:
    """All-pairs relations of a list of same-shape matrices.

    ``zero[i, j]``: a_i a_j = 0; ``commute[i, j]``: a_i a_j = a_j a_i;
    ``absorb[i, j]``: a_i a_j = a_j a_i = a_i (for idempotents, a_i <= a_j);
    ``meet``/``join`` hold the index of a_i a_j and a_i + a_j - a_i a_j for
    commuting pairs when present in the list (else -1); ``neg[i]`` the index
    of 1 - a_i (else -1).
    """

    zero: np.ndarray
    commute: np.ndarray
    absorb: np.ndarray
    meet: np.ndarray
    join: np.ndarray
    neg: np.ndarray

    @property
    def orthogonal(self) -> np.ndarray:
        return self.zero & self.zero.T


def _encode(arr: np.ndarray, p: int) -> np.ndarray:
    """Base-p integer code of each matrix along the last two axes."""
    flat = arr.reshape(arr.shape[:-2] + (-1,)).astype(np.int64)
    weights = p ** np.arange(flat.shape[-1], dtype=np.int64)
    return flat @ weights


def _lookup(codes: np.ndarray, table_codes: np.ndarray) -> np.ndarray:
    order = np.argsort(table_codes)
    sorted_codes = table_codes[order]
    pos = np.searchsorted(sorted_codes, codes)
    pos = np.clip(pos, 0, len(sorted_codes) - 1)
    found = sorted_codes[pos] == codes
    return np.where(found, order[pos], -1)


def pair_tables(mats: Sequence[SquareMatrix]) -> PairTables:
    """Compute :class:`PairTables`; vectorized for prime fields."""
    N = len(mats)
    if N == 0:
        e = np.zeros((0, 0), dtype=bool)
        return PairTables(e, e, e, e.astype(np.int64), e.astype(np.int64), np.zeros(0, np.int64))
    ring, n = mats[0].ring, mats[0].n
    for m in mats:
        if m.ring != ring or m.n != n:
            raise RingMismatch("all matrices must share ring and dimension")
    if isinstance(ring, PrimeField) and ring.p ** (n * n) < 2 ** 62:
        return _pair_tables_numpy(mats, ring.p, n)
    return _pair_tables_generic(mats)


def _pair_tables_numpy(mats, p: int, n: int) -> PairTables:
    N = len(mats)
    A = np.array([m.rows for m in mats], dtype=np.int64)
    codes = _encode(A, p)
    prod_codes = np.empty((N, N), dtype=np.int64)
    join_codes = np.empty((N, N), dtype=np.int64)
    chunk = max(1, 2_000_000 // max(1, N * n * n))
    for s in range(0, N, chunk):
        P = np.einsum("aij,bjk->abik", A[s:s + chunk], A) % p
        prod_codes[s:s + chunk] = _encode(P, p)
        J = (A[s:s + chunk, None] + A[None, :] - P) % p
        join_codes[s:s + chunk] = _encode(J, p)
    zero = prod_codes == 0
    commute = prod_codes == prod_codes.T
    absorb = commute & (prod_codes == codes[:, None])
    meet = np.where(commute, _lookup(prod_codes, codes), -1)
    join = np.where(commute, _lookup(join_codes, codes), -1)
    eye = np.eye(n, dtype=np.int64)
    neg = _lookup(_encode((eye[None] - A) % p, p), codes)
    return PairTables(zero, commute, absorb, meet, join, neg)


def _pair_tables_generic(mats) -> PairTables:
    N = len(mats)
    index = {m: i for i, m in enumerate(mats)}
    one = SquareMatrix.identity(mats[0].ring, mats[0].n)
    zero = np.zeros((N, N), dtype=bool)
    commute = np.zeros((N, N), dtype=bool)
    absorb = np.zeros((N, N), dtype=bool)
    meet = np.full((N, N), -1, dtype=np.int64)
    join = np.full((N, N), -1, dtype=np.int64)
    prods = [[a * b for b in mats] for a in mats]
    for i, a in enumerate(mats):
        for j, b in enumerate(mats):
            ab = prods[i][j]
            zero[i, j] = ab.is_zero()
            if ab == prods[j][i]:
                commute[i, j] = True
                absorb[i, j] = ab == a
                meet[i, j] = index.get(ab, -1)
                join[i, j] = index.get(a + b - ab, -1)
    neg = np.array([index.get(one - a, -1) for a in mats], dtype=np.int64)
    return PairTables(zero, commute, absorb, meet, join, neg)
