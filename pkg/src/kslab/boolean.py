"""Finite partial Boolean algebras: Kochen-Specker colorings, prime partial
ideals, partial ultrafilters and the correspondence between them."""
from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CarrierNotClosed, NotClosed, NotIdempotent, RingMismatch
from .matrices import SquareMatrix, pair_tables
from .solver import ConstraintSystem, enumerate_colorings, unit_families

HOM_BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True, eq=False)
class PartialBooleanAlgebra:
    """A finite partial Boolean algebra given by explicit tables.

    ``meet``/``join`` are indices for commeasurable pairs (``-1`` when the
    result falls outside a bare subset); ``weights`` are additive on
    orthogonal families (ranks or atom counts) so that a pairwise orthogonal
    family joins to 1 exactly when its weights sum to ``capacity``.
    """

    elements: tuple
    commute: np.ndarray
    orthogonal: np.ndarray
    leq_table: np.ndarray
    meet: np.ndarray
    join: np.ndarray
    neg: np.ndarray
    zero: int
    one: int
    closed: bool
    weights: tuple[int, ...]
    capacity: int
    labels: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, element) -> int:
        return self.elements.index(element)

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_idempotents(cls, matrices: Iterable[SquareMatrix], closed: bool = False,
                         labels: Sequence[str] | None = None) -> "PartialBooleanAlgebra":
        """Idempotents with commuting as commeasurability; 0 and 1 appended if absent.

        With ``closed=True`` the carrier must contain e v f, e ^ f and -e for
        every commeasurable pair, else :class:`NotClosed`.
        """
        mats: list[SquareMatrix] = []
        labs: list[str] = []
        seen = set()
        for k, m in enumerate(matrices):
            if m in seen:
                continue
            seen.add(m)
            mats.append(m)
            labs.append(labels[k] if labels else str(len(labs)))
        if not mats:
            raise ValueError("need at least one matrix to fix ring and dimension")
        ring, n = mats[0].ring, mats[0].n
        for m in mats:
            if m.ring != ring or m.n != n:
                raise RingMismatch("all idempotents must share ring and dimension")
            if not m.is_idempotent():
                raise NotIdempotent(f"{m.key} is not idempotent")
        for special, name in ((SquareMatrix.zero(ring, n), "0"), (SquareMatrix.identity(ring, n), "1")):
            if special not in seen:
                seen.add(special)
                mats.append(special)
                labs.append(name)
        t = pair_tables(mats)
        zero = mats.index(SquareMatrix.zero(ring, n))
        one = mats.index(SquareMatrix.identity(ring, n))
        if closed:
            bad = np.argwhere(t.commute & ((t.meet < 0) | (t.join < 0)))
            if len(bad):
                i, j = bad[0]
                raise NotClosed(f"meet/join of {mats[i].key} and {mats[j].key} is not in the carrier")
            missing = np.flatnonzero(t.neg < 0)
            if len(missing):
                raise NotClosed(f"complement of {mats[missing[0]].key} is not in the carrier")
        weights = tuple(m.rank() for m in mats)
        return cls(tuple(mats), t.commute, t.orthogonal, t.absorb, t.meet, t.join, t.neg,
                   zero, one, closed, weights, n, tuple(labs))

    @classmethod
    def power_set(cls, atoms: int | Sequence) -> "PartialBooleanAlgebra":
        """The total Boolean algebra of subsets of ``atoms``."""
        names = list(range(atoms)) if isinstance(atoms, int) else list(atoms)
        k = len(names)
        subsets = sorted((frozenset(c) for r in range(k + 1) for c in itertools.combinations(range(k), r)),
                         key=lambda s: (len(s), sorted(s)))
        idx = {s: i for i, s in enumerate(subsets)}
        N = len(subsets)
        full = frozenset(range(k))
        meet = np.array([[idx[a & b] for b in subsets] for a in subsets], dtype=np.int64)
        join = np.array([[idx[a | b] for b in subsets] for a in subsets], dtype=np.int64)
        orth = np.array([[not (a & b) for b in subsets] for a in subsets], dtype=bool)
        leq = np.array([[a <= b for b in subsets] for a in subsets], dtype=bool)
        neg = np.array([idx[full - a] for a in subsets], dtype=np.int64)
        labels = tuple("{" + ",".join(str(names[i]) for i in sorted(s)) + "}" for s in subsets)
        return cls(tuple(subsets), np.ones((N, N), dtype=bool), orth, leq, meet, join, neg,
                   idx[frozenset()], idx[full], True, tuple(len(s) for s in subsets), k, labels)

    @classmethod
    def trivial(cls) -> "PartialBooleanAlgebra":
        """The one-element algebra, 0 = 1."""
        t = np.ones((1, 1), dtype=bool)
        z = np.zeros((1, 1), dtype=np.int64)
        return cls(("0=1",), t, t, t, z, z, np.zeros(1, dtype=np.int64), 0, 0, True, (0,), 0, ("0=1",))

    # -- relations --------------------------------------------------------

    def commeasurable(self, i: int, j: int) -> bool:
        return bool(self.commute[i, j])

    def leq(self, i: int, j: int) -> bool:
        return bool(self.leq_table[i, j])

    def is_orthogonal(self, i: int, j: int) -> bool:
        return bool(self.orthogonal[i, j])

    def partial_order_and_orthogonality(self, i: int, j: int) -> dict:
        """``leq`` (i <= j), ``geq``, ``orthogonal`` and ``incomparable`` for a pair."""
        leq, geq = self.leq(i, j), self.leq(j, i)
        return {
            "commeasurable": self.commeasurable(i, j),
            "leq": leq,
            "geq": geq,
            "orthogonal": self.is_orthogonal(i, j),
            "incomparable": not (leq or geq),
        }

    def orthogonal_pairs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(self.orthogonal)))]

    def unit_decompositions(self) -> list[tuple[int, ...]]:
        """Every pairwise orthogonal family whose join is 1."""
        orth = [set(np.flatnonzero(row).tolist()) - {i} for i, row in enumerate(self.orthogonal)]
        return unit_families(self.size, orth, self.weights, self.capacity)

    def constraint_system(self) -> ConstraintSystem:
        return ConstraintSystem(self.size, self.orthogonal_pairs(), self.unit_decompositions(),
                                [self.label(i) for i in range(self.size)])

    # -- colorings --------------------------------------------------------

    def is_ks_coloring(self, coloring: "Coloring | Iterable[int]") -> tuple[bool, tuple | None]:
        """Check a coloring; returns (ok, witness) with the first violated family."""
        white = coloring.white if isinstance(coloring, Coloring) else frozenset(coloring)
        for i, j in self.orthogonal_pairs():
            if i in white and j in white:
                return False, ("pair", (i, j))
        for fam in self.unit_decompositions():
            if sum(1 for v in fam if v in white) != 1:
                return False, ("decomposition", fam)
        return True, None

    def ks_colorings(self) -> list["Coloring"]:
        out = []
        for col in enumerate_colorings(self.constraint_system()):
            out.append(Coloring(self, frozenset(i for i, c in enumerate(col) if c == 1)))
        return out

    # -- ideals and filters -----------------------------------------------

    def _require_closed(self) -> None:
        if not self.closed:
            raise CarrierNotClosed("prime partial ideals need an operation-closed carrier")

    def _commeasurable_pairs(self) -> np.ndarray:
        return np.argwhere(np.triu(self.commute))

    def ideal_violation(self, members: Iterable[int]) -> str | None:
        """First failed condition of the prime partial ideal definition, or None."""
        self._require_closed()
        s = frozenset(members)
        if self.zero not in s:
            return "(i) 0 not in I"
        for i, j in self._commeasurable_pairs():
            i, j = int(i), int(j)
            for a, b in ((i, j), (j, i)):
                if b in s and self.leq(a, b) and a not in s:
                    return f"(ii) {self.label(b)} in I, {self.label(a)} <= it, not in I"
            if i in s and j in s and int(self.join[i, j]) not in s:
                return f"(iii) join of {self.label(i)}, {self.label(j)} not in I"
        if self.one in s:
            return "(iv) 1 in I"
        for i, j in self._commeasurable_pairs():
            i, j = int(i), int(j)
            if int(self.meet[i, j]) in s and i not in s and j not in s:
                return f"(iv) meet of {self.label(i)}, {self.label(j)} in I, neither factor is"
        return None

    def filter_violation(self, members: Iterable[int]) -> str | None:
        """First failed condition of the partial ultrafilter definition, or None."""
        self._require_closed()
        s = frozenset(members)
        if self.one not in s:
            return "(i) 1 not in F"
        for i, j in self._commeasurable_pairs():
            i, j = int(i), int(j)
            for a, b in ((i, j), (j, i)):
                if a in s and self.leq(a, b) and b not in s:
                    return f"(ii) {self.label(a)} in F, {self.label(b)} >= it, not in F"
            if i in s and j in s and int(self.meet[i, j]) not in s:
                return f"(iii) meet of {self.label(i)}, {self.label(j)} not in F"
        if self.zero in s:
            return "(iv) 0 in F"
        for i, j in self._commeasurable_pairs():
            i, j = int(i), int(j)
            if int(self.join[i, j]) in s and i not in s and j not in s:
                return f"(iv) join of {self.label(i)}, {self.label(j)} in F, neither factor is"
        return None

    def is_prime_partial_ideal(self, members: Iterable[int]) -> bool:
        return self.ideal_violation(members) is None

    def is_partial_ultrafilter(self, members: Iterable[int]) -> bool:
        return self.filter_violation(members) is None

    def negate_set(self, members: Iterable[int]) -> frozenset[int]:
        return frozenset(int(self.neg[i]) for i in members)

    def complement_set(self, members: Iterable[int]) -> frozenset[int]:
        return frozenset(range(self.size)) - frozenset(members)

    def prime_partial_ideals(self) -> list[frozenset[int]]:
        """pSpec(B) by a clause search over the ideal axioms (independent of the KS solver)."""
        self._require_closed()
        sols = _all_models(self.size, self._ideal_clauses())
        return sorted((frozenset(i for i, v in enumerate(m) if v) for m in sols), key=sorted)

    def _ideal_clauses(self) -> list[tuple[int, ...]]:
        # literal +(i+1): element i in I; -(i+1): not in I
        def lit(i, positive=True):
            return (i + 1) if positive else -(i + 1)

        clauses = {(lit(self.zero),), (lit(self.one, False),)}
        for i in range(self.size):
            j = int(self.neg[i])
            clauses.add(tuple(sorted({lit(i), lit(j)})))
            clauses.add(tuple(sorted({lit(i, False), lit(j, False)})))
        for i, j in np.argwhere(self.commute):
            i, j = int(i), int(j)
            if self.leq(i, j) and i != j:
                clauses.add((lit(j, False), lit(i)))
            if i < j:
                clauses.add(tuple(sorted({lit(i, False), lit(j, False), lit(int(self.join[i, j]))})))
                clauses.add(tuple(sorted({lit(int(self.meet[i, j]), False), lit(i), lit(j)})))
        return sorted(c for c in clauses if not any(-x in c for x in c))

    def homomorphisms(self) -> list[tuple[int, ...]]:
        """Two-valued morphisms B -> 2, as 0/1 tuples indexed by element.

        Brute force over all 2^|B| maps up to ``HOM_BRUTE_FORCE_LIMIT``
        elements; above that, obtained from the KS colorings.
        """
        self._require_closed()
        N = self.size
        if N > HOM_BRUTE_FORCE_LIMIT:
            return sorted(tuple(1 if i in c.white else 0 for i in range(N)) for c in self.ks_colorings())
        masks = np.arange(1 << N, dtype=np.int64)

        def bit(i):
            return (masks >> i) & 1

        # filter progressively; each condition shrinks the candidate set
        masks = masks[(bit(self.zero) == 0) & (bit(self.one) == 1)]
        for i in range(N):
            masks = masks[bit(int(self.neg[i])) == 1 - bit(i)]
        for i, j in self._commeasurable_pairs():
            i, j = int(i), int(j)
            masks = masks[(bit(int(self.meet[i, j])) == (bit(i) & bit(j)))
                          & (bit(int(self.join[i, j])) == (bit(i) | bit(j)))]
        return sorted(tuple(int(x) for x in ((m >> np.arange(N)) & 1)) for m in masks)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        out_el = []
        for i, e in enumerate(self.elements):
            entry = {"index": i, "label": self.label(i), "rank": self.weights[i]}
            if isinstance(e, SquareMatrix):
                entry["matrix"] = e.to_json()
            out_el.append(entry)
        return {
            "elements": out_el,
            "zero": self.zero,
            "one": self.one,
            "closed": self.closed,
            "commeasurable": [[int(i), int(j)] for i, j in self._commeasurable_pairs()],
        }


@dataclass(frozen=True)
class Coloring:
    algebra: PartialBooleanAlgebra
    white: frozenset[int]

    def color(self, i: int) -> str:
        return "white" if i in self.white else "black"

    @property
    def black(self) -> frozenset[int]:
        return frozenset(range(self.algebra.size)) - self.white

    def to_json(self) -> dict:
        return {"white": sorted(self.white)}

    @classmethod
    def from_json(cls, algebra: PartialBooleanAlgebra, obj: dict) -> "Coloring":
        return cls(algebra, frozenset(obj["white"]))


@dataclass(frozen=True)
class PartialIdealCandidate:
    algebra: PartialBooleanAlgebra
    members: frozenset[int]

    def __post_init__(self):
        bad = [i for i in self.members if not 0 <= i < self.algebra.size]
        if bad:
            raise IndexError(f"indices {bad} outside the carrier")

    def is_prime_partial_ideal(self) -> bool:
        return self.algebra.is_prime_partial_ideal(self.members)

    def is_partial_ultrafilter(self) -> bool:
        return self.algebra.is_partial_ultrafilter(self.members)


@dataclass
class BijectionReport:
    homs: list[tuple[int, ...]]
    colorings: list[frozenset[int]]
    ideals: list[frozenset[int]]
    round_trips_ok: bool
    counts_agree: bool

    @property
    def count(self) -> int:
        return len(self.colorings)

    def to_json(self) -> dict:
        return {"hom": len(self.homs), "KS": len(self.colorings), "pSpec": len(self.ideals),
                "round_trips_ok": self.round_trips_ok, "counts_agree": self.counts_agree}


def hom_to_ideal(h: Sequence[int]) -> frozenset[int]:
    return frozenset(i for i, v in enumerate(h) if v == 0)


def ideal_to_coloring(ideal: frozenset[int], size: int) -> frozenset[int]:
    """White set of the coloring whose black elements are the ideal."""
    return frozenset(range(size)) - ideal


def coloring_to_hom(white: frozenset[int], size: int) -> tuple[int, ...]:
    return tuple(1 if i in white else 0 for i in range(size))


def bijection_triple(B: PartialBooleanAlgebra) -> BijectionReport:
    """Enumerate hom(B,2), KS(B) and pSpec(B) independently and check the maps between them."""
    if not B.closed:
        raise CarrierNotClosed("bijection_triple needs an operation-closed carrier")
    N = B.size
    homs = B.homomorphisms()
    cols = sorted((c.white for c in B.ks_colorings()), key=sorted)
    ideals = B.prime_partial_ideals()
    hom_set, col_set, ideal_set = set(homs), set(cols), set(ideals)
    ok = True
    for h in homs:
        i = hom_to_ideal(h)
        c = ideal_to_coloring(i, N)
        ok &= i in ideal_set and c in col_set and coloring_to_hom(c, N) == h
    for c in cols:
        h = coloring_to_hom(c, N)
        ok &= h in hom_set and ideal_to_coloring(hom_to_ideal(h), N) == c
    for i in ideals:
        c = ideal_to_coloring(i, N)
        ok &= c in col_set and hom_to_ideal(coloring_to_hom(c, N)) == i
    agree = len(homs) == len(cols) == len(ideals)
    return BijectionReport(homs, cols, ideals, bool(ok), agree)


# ---------------------------------------------------------------------------
# small clause search (used for pSpec, deliberately separate from the KS solver)

def _all_models(nvars: int, clauses: Sequence[tuple[int, ...]]) -> Iterator[list[bool]]:
    occurs: list[list[int]] = [[] for _ in range(2 * nvars + 1)]
    for k, c in enumerate(clauses):
        for x in c:
            occurs[x].append(k)
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * nvars + 1000))

    def value(assign, x):
        v = assign[abs(x) - 1]
        if v is None:
            return None
        return v if x > 0 else not v

    def propagate(assign, queue) -> bool:
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            # literal -x just became false; revisit clauses containing it
            for k in occurs[-x]:
                unassigned = None
                n_open = 0
                sat = False
                for y in clauses[k]:
                    v = value(assign, y)
                    if v:
                        sat = True
                        break
                    if v is None:
                        n_open += 1
                        unassigned = y
                if sat:
                    continue
                if n_open == 0:
                    return False
                if n_open == 1:
                    assign[abs(unassigned) - 1] = unassigned > 0
                    queue.append(unassigned)
        return True

    def set_lit(assign, x) -> bool:
        cur = value(assign, x)
        if cur is not None:
            return cur
        assign[abs(x) - 1] = x > 0
        return propagate(assign, [x])

    assign: list = [None] * nvars
    for c in clauses:
        if len(c) == 1 and not set_lit(assign, c[0]):
            return
    for c in clauses:
        if all(value(assign, y) is False for y in c):
            return

    def search(assign):
        var = next((i for i, a in enumerate(assign) if a is None), None)
        if var is None:
            yield [bool(a) for a in assign]
            return
        for val in (True, False):
            child = list(assign)
            if set_lit(child, (var + 1) if val else -(var + 1)):
                yield from search(child)

    yield from search(assign)
