"""Idempotent and projection census over small prime fields, plus bundled datasets."""
from __future__ import annotations

import itertools
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataValidationError, MissingExternalData, ZeroVector
from .matrices import (
    ColumnVector,
    SquareMatrix,
    idempotent_from_basis,
    project_vector,
    vector_hom,
)
from .scalars import PrimeField, ScalarRing, ZZ, is_prime, parse_ring

SUPPORTED_Q = (2, 3, 5)

SCHUTTE_FILENAME = "schutte_vectors.json"
SCHUTTE_ENV = "KSLAB_SCHUTTE"

SCHUTTE_HELP = (
    "The Schutte configuration of integer vectors is not reprinted in the source "
    "material and is not bundled. Transcribe it from Bub's account of Schutte's "
    "proof into a JSON file named schutte_vectors.json holding a list of integer "
    "coordinate triples (or {\"vectors\": [...]}) and pass it with --dataset <path> "
    f"or point ${SCHUTTE_ENV} at it. Every squared norm must divide 30."
)


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n."""
    if not 0 <= k <= n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** n - q ** i
        den *= q ** k - q ** i
    return num // den


def _rref_subspaces(q: int, n: int, k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Reduced row echelon bases of every k-dim subspace of F_q^n."""
    if k == 0:
        yield ()
        return
    for pivots in itertools.combinations(range(n), k):
        free = [(r, c) for r in range(k) for c in range(pivots[r] + 1, n) if c not in pivots]
        for vals in itertools.product(range(q), repeat=len(free)):
            rows = [[0] * n for _ in range(k)]
            for r, c in enumerate(pivots):
                rows[r][c] = 1
            for (r, c), v in zip(free, vals):
                rows[r][c] = v
            yield tuple(tuple(r) for r in rows)


def subspaces(q: int, n: int, k: int) -> list[tuple[tuple[int, ...], ...]]:
    return list(_rref_subspaces(q, n, k))


def span(basis, q: int) -> frozenset:
    n = len(basis[0]) if basis else 0
    out = set()
    for coeffs in itertools.product(range(q), repeat=len(basis)):
        out.add(tuple(sum(c * b[i] for c, b in zip(coeffs, basis)) % q for i in range(n)))
    return frozenset(out)


def _sort_key(m: SquareMatrix):
    return tuple(x for r in m.rows for x in r)


@dataclass
class IdempotentInventory:
    ring: ScalarRing
    n: int
    by_rank: dict[int, list[SquareMatrix]]
    symmetric_only: bool = False

    def all(self) -> list[SquareMatrix]:
        return [m for r in sorted(self.by_rank) for m in self.by_rank[r]]

    def count(self, rank: int) -> int:
        return len(self.by_rank.get(rank, []))

    def census(self) -> dict[int, int]:
        return {r: len(v) for r, v in sorted(self.by_rank.items())}


def _check_q(q: int) -> PrimeField:
    if not is_prime(q):
        raise ValueError(f"q = {q} must be prime (prime-power matrix enumeration is a non-goal)")
    if q not in SUPPORTED_Q:
        warnings.warn(f"enumeration over GF({q}) is not in the guaranteed range {SUPPORTED_Q}",
                      stacklevel=3)
    return PrimeField(q)


def enumerate_idempotents(q: int, n: int = 3) -> IdempotentInventory:
    """Every idempotent of M_n(F_q), as a projection onto R along K for R + K = F_q^n."""
    F = _check_q(q)
    by_rank: dict[int, list[SquareMatrix]] = {}
    for r in range(n + 1):
        found = []
        for rb in _rref_subspaces(q, n, r):
            for kb in _rref_subspaces(q, n, n - r):
                cols = [ColumnVector.of(F, v) for v in rb + kb]
                u = SquareMatrix.from_columns(cols) if cols else None
                if u is not None and F.is_zero(u.det()):
                    continue
                found.append(idempotent_from_basis(cols[:r], cols[r:]))
        by_rank[r] = sorted(found, key=_sort_key)
    return IdempotentInventory(F, n, by_rank, symmetric_only=False)


def canonical_vector(v: ColumnVector) -> ColumnVector:
    """Scale so the first nonzero coordinate is 1."""
    lead = next((c for c in v.coords if not v.ring.is_zero(c)), None)
    if lead is None:
        raise ZeroVector("zero vector has no canonical representative")
    return v.scale(v.ring.inv(lead))


def canonical_lines(q: int, n: int = 3) -> list[ColumnVector]:
    F = PrimeField(q)
    out = []
    for coords in itertools.product(range(q), repeat=n):
        if any(coords):
            v = ColumnVector(F, coords)
            if canonical_vector(v) == v:
                out.append(v)
    return out


def nonisotropic_lines(q: int, n: int = 3) -> list[ColumnVector]:
    return [v for v in canonical_lines(q, n) if not v.ring.is_zero(v.dot(v))]


def enumerate_projections(q: int, n: int = 3) -> IdempotentInventory:
    """Symmetric idempotents of M_n(F_q).

    Rank 1 comes from canonical non-isotropic vectors; every other rank is
    generated by orthogonal sums of rank-1 projections and complements,
    iterated to a fixed point. For n = 3 this is complete (rank 2 is exactly
    the complements of rank 1).
    """
    F = _check_q(q)
    one = SquareMatrix.identity(F, n)
    rank1 = [project_vector(v) for v in nonisotropic_lines(q, n)]
    found = {SquareMatrix.zero(F, n), one, *rank1}
    changed = True
    while changed:
        changed = False
        current = list(found)
        for e in current:
            c = one - e
            if c not in found:
                found.add(c)
                changed = True
        for e, f in itertools.combinations(current, 2):
            if (e * f).is_zero() and (f * e).is_zero():
                s = e + f
                if s not in found:
                    found.add(s)
                    changed = True
    by_rank: dict[int, list[SquareMatrix]] = {r: [] for r in range(n + 1)}
    for e in found:
        by_rank[e.rank()].append(e)
    for r in by_rank:
        by_rank[r].sort(key=_sort_key)
    return IdempotentInventory(F, n, by_rank, symmetric_only=True)


# ---------------------------------------------------------------------------
# datasets

@dataclass
class VectorConfiguration:
    ring: ScalarRing
    vectors: list[ColumnVector]
    name: str = ""
    source: str = ""
    labels: list[str] = field(default_factory=list)

    def projections(self, ring: ScalarRing | None = None) -> list[SquareMatrix]:
        """P_v for each vector, computed over ``ring`` (default: the configuration's ring)."""
        target = ring or self.ring
        return [project_vector(vector_hom(v, target) if target != self.ring else v)
                for v in self.vectors]


def _data_text(filename: str) -> str:
    return (Path(__file__).parent / "data" / filename).read_text()


def load_vector_file(path: str | os.PathLike, ring: ScalarRing | None = None,
                     name: str | None = None) -> VectorConfiguration:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, list):
        obj = {"vectors": obj}
    r = ring or parse_ring(obj.get("ring", "Z"))
    vecs = [ColumnVector.of(r, v) for v in obj["vectors"]]
    labels = obj.get("labels") or [f"v{i + 1}" for i in range(len(vecs))]
    return VectorConfiguration(r, vecs, name or obj.get("name", Path(path).stem),
                               obj.get("source", str(path)), labels)


def validate_schutte(cfg: VectorConfiguration) -> None:
    """Integer triples, pairwise non-proportional, every squared norm dividing 30."""
    if cfg.ring != ZZ:
        raise DataValidationError("Schutte vectors must be integer")
    seen: dict[tuple, int] = {}
    for i, v in enumerate(cfg.vectors):
        if v.n != 3:
            raise DataValidationError(f"vector {i + 1} is not a triple")
        if any(c.denominator != 1 for c in v.coords):
            raise DataValidationError(f"vector {i + 1} has non-integer coordinates")
        if v.is_zero():
            raise DataValidationError(f"vector {i + 1} is zero")
        norm = int(v.dot(v))
        if 30 % norm:
            raise DataValidationError(f"vector {i + 1} has squared norm {norm}, which does not divide 30")
        ints = [int(c) for c in v.coords]
        g = 0
        for c in ints:
            g = math.gcd(g, c)
        prim = [c // g for c in ints]
        lead = next(c for c in prim if c)
        if lead < 0:
            prim = [-c for c in prim]
        key = tuple(prim)
        if key in seen:
            raise DataValidationError(f"vectors {seen[key] + 1} and {i + 1} are proportional")
        seen[key] = i


def find_schutte_file(path: str | os.PathLike | None = None) -> Path:
    candidates = []
    if path:
        candidates.append(Path(path))
    if os.environ.get(SCHUTTE_ENV):
        candidates.append(Path(os.environ[SCHUTTE_ENV]))
    candidates.append(Path.cwd() / SCHUTTE_FILENAME)
    for c in candidates:
        if c.is_file():
            return c
    raise MissingExternalData(SCHUTTE_HELP)


def z28_basis_form() -> list[dict]:
    return json.loads(_data_text("z28.json"))["idempotents"]


def z28_labels() -> list[str]:
    return [d["label"] for d in z28_basis_form()]


def load_bundled(name: str, path: str | os.PathLike | None = None):
    """Load one of the bundled datasets.

    ``f5_25`` and ``schutte`` give a :class:`VectorConfiguration`; ``z28`` the
    list of 28 integer idempotents; ``z28_triples`` a dict of named triples
    and pairs (1-based member indices).
    """
    if name == "f5_25":
        obj = json.loads(_data_text("f5_25.json"))
        F = parse_ring(obj["ring"])
        return VectorConfiguration(F, [ColumnVector.of(F, v) for v in obj["vectors"]],
                                   obj["name"], obj["source"], obj["labels"])
    if name == "z28":
        out = []
        for d in z28_basis_form():
            rng = [ColumnVector.of(ZZ, v) for v in d["range"]]
            ker = [ColumnVector.of(ZZ, v) for v in d["kernel"]]
            out.append(idempotent_from_basis(rng, ker))
        return out
    if name == "z28_triples":
        obj = json.loads(_data_text("z28_triples.json"))
        return {
            "triples": [(t["name"], tuple(t["members"])) for t in obj["triples"]],
            "pairs": [(t["name"], tuple(t["members"])) for t in obj["pairs"]],
        }
    if name == "schutte":
        cfg = load_vector_file(find_schutte_file(path), ring=ZZ, name="schutte")
        validate_schutte(cfg)
        return cfg
    raise KeyError(f"unknown dataset {name!r}")


def z28_constraint_names() -> dict[frozenset, str]:
    """Map 0-based member sets of the bundled z28 triples/pairs to their names."""
    data = load_bundled("z28_triples")
    names = {}
    for n, members in data["triples"] + data["pairs"]:
        names[frozenset(i - 1 for i in members)] = n
    return names


def all_matrices(q: int, n: int = 3, symmetric: bool = False) -> Iterable[SquareMatrix]:
    """Every matrix (or every symmetric matrix) of M_n(F_q); brute-force helper."""
    F = PrimeField(q)
    if not symmetric:
        for ent in itertools.product(range(q), repeat=n * n):
            yield SquareMatrix(F, tuple(tuple(ent[i * n:(i + 1) * n]) for i in range(n)))
        return
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    for ent in itertools.product(range(q), repeat=len(idx)):
        rows = [[0] * n for _ in range(n)]
        for (i, j), v in zip(idx, ent):
            rows[i][j] = rows[j][i] = v
        yield SquareMatrix(F, tuple(tuple(r) for r in rows))
