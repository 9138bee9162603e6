"""Kochen-Specker colorability: constraint extraction, a complete backtracking
solver with replayable certificates, and the set constructions used in the
integer-matrix obstructions (lift to M_{n+1}, permutation closure, counting).
"""
from __future__ import annotations

import itertools
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import CertificateError, DimensionCap, NotIdempotent, TooLarge
from .matrices import (SquareMatrix, corner_embed, matrix_unit, pair_tables,
                       permutation_matrix)

log = logging.getLogger(__name__)

WHITE = 1
BLACK = 0
COLOR_NAME = {WHITE: "white", BLACK: "black"}
COLOR_VALUE = {"white": WHITE, "black": BLACK}

MAX_DIM = 5
COUNT_LIMIT = 40


@dataclass
class ConstraintSystem:
    """Orthogonal pairs (at most one white) and unit decompositions (exactly one white).

    Constraint ids are ``p<k>`` for the k-th pair and ``d<k>`` for the k-th
    decomposition; ``names`` optionally maps ids to display names.
    """

    size: int
    ortho_pairs: list[tuple[int, int]]
    unit_decompositions: list[tuple[int, ...]]
    labels: list[str] = field(default_factory=list)
    names: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.labels:
            self.labels = [str(i) for i in range(self.size)]
        pairs = set(self.ortho_pairs)
        for d in self.unit_decompositions:
            for a, b in itertools.combinations(d, 2):
                if (min(a, b), max(a, b)) not in pairs:
                    raise ValueError(f"decomposition {d} has non-orthogonal members {a}, {b}")

    def constraint(self, cid: str) -> tuple[str, tuple[int, ...]]:
        kind, k = cid[0], int(cid[1:])
        if kind == "p":
            return "pair", self.ortho_pairs[k]
        if kind == "d":
            return "dec", self.unit_decompositions[k]
        raise KeyError(cid)

    def display(self, cid: str) -> str:
        return self.names.get(cid, cid)

    def restrict(self, keep: Sequence[int]) -> "ConstraintSystem":
        """Subsystem on the variables ``keep`` (constraints entirely inside it)."""
        idx = {v: i for i, v in enumerate(keep)}
        pairs = [(idx[a], idx[b]) for a, b in self.ortho_pairs if a in idx and b in idx]
        decs = [tuple(idx[v] for v in d) for d in self.unit_decompositions if all(v in idx for v in d)]
        return ConstraintSystem(len(keep), [tuple(sorted(p)) for p in pairs], decs,
                                [self.labels[v] for v in keep])

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "labels": self.labels,
            "ortho_pairs": [list(p) for p in self.ortho_pairs],
            "unit_decompositions": [list(d) for d in self.unit_decompositions],
            "names": self.names,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConstraintSystem":
        return cls(obj["size"], [tuple(p) for p in obj["ortho_pairs"]],
                   [tuple(d) for d in obj["unit_decompositions"]],
                   list(obj.get("labels", [])), dict(obj.get("names", {})))


def unit_families(size: int, orthogonal: Sequence[set[int]], weights: Sequence[int],
                  capacity: int) -> list[tuple[int, ...]]:
    """Every set of pairwise orthogonal elements whose weights sum to ``capacity``.

    Weights are ranks (matrix case) or atom counts (set case); for pairwise
    orthogonal idempotents the sum is the identity exactly when the ranks
    add up to n, so this enumerates unit decompositions. Branches whose
    weight already exceeds the capacity are cut.
    """
    out: list[tuple[int, ...]] = []

    def extend(family: list[int], total: int, cands: list[int]) -> None:
        if total == capacity and family:
            out.append(tuple(family))
        for pos, v in enumerate(cands):
            w = total + weights[v]
            if w > capacity:
                continue
            rest = [u for u in cands[pos + 1:] if u in orthogonal[v]]
            family.append(v)
            extend(family, w, rest)
            family.pop()

    extend([], 0, list(range(size)))
    return out


def _dedupe(matrices: Sequence[SquareMatrix], labels: Sequence[str] | None):
    seen: dict[SquareMatrix, int] = {}
    keep, keep_labels = [], []
    for i, m in enumerate(matrices):
        if m in seen:
            continue
        seen[m] = len(keep)
        keep.append(m)
        keep_labels.append(labels[i] if labels else str(i))
    if len(keep) != len(matrices):
        warnings.warn(f"removed {len(matrices) - len(keep)} duplicate element(s)", stacklevel=3)
    return keep, keep_labels


def extract_constraints(matrices: Sequence[SquareMatrix], labels: Sequence[str] | None = None,
                        named: dict[frozenset, str] | None = None) -> ConstraintSystem:
    """Orthogonal pairs and unit decompositions of a set of idempotents.

    ``named`` maps member sets (0-based, post-dedup indices) to display names
    used in certificates.
    """
    mats, labs = _dedupe(list(matrices), labels)
    if not mats:
        return ConstraintSystem(0, [], [], [])
    n = mats[0].n
    if n > MAX_DIM:
        raise DimensionCap(f"dimension {n} exceeds {MAX_DIM}")
    for i, m in enumerate(mats):
        if not m.is_idempotent():
            raise NotIdempotent(f"element {labs[i]} is not idempotent")
    size = len(mats)
    ranks = [m.rank() for m in mats]
    orth_table = pair_tables(mats).orthogonal
    pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(orth_table)))]
    orth = [set(np.flatnonzero(row).tolist()) - {i} for i, row in enumerate(orth_table)]
    decs = unit_families(size, orth, ranks, n)
    one = SquareMatrix.identity(mats[0].ring, n)
    for d in decs:
        total = SquareMatrix.zero(mats[0].ring, n)
        for v in d:
            total = total + mats[v]
        if total != one:
            raise AssertionError(f"decomposition {d} does not sum to the identity")
    names = {}
    if named:
        for k, p in enumerate(pairs):
            nm = named.get(frozenset(p))
            if nm:
                names[f"p{k}"] = nm
        for k, d in enumerate(decs):
            nm = named.get(frozenset(d))
            if nm:
                names[f"d{k}"] = nm
    return ConstraintSystem(size, pairs, decs, labs, names)


# ---------------------------------------------------------------------------
# solver

class _Search:
    def __init__(self, cs: ConstraintSystem):
        self.cs = cs
        self.pair_adj: list[list[tuple[int, str]]] = [[] for _ in range(cs.size)]
        for k, (a, b) in enumerate(cs.ortho_pairs):
            self.pair_adj[a].append((b, f"p{k}"))
            if a != b:
                self.pair_adj[b].append((a, f"p{k}"))
        self.dec_of: list[list[int]] = [[] for _ in range(cs.size)]
        for k, d in enumerate(cs.unit_decompositions):
            for v in d:
                self.dec_of[v].append(k)

    def propagate(self, assign: list, queue: list[int], steps: list) -> str | None:
        """Unit propagation; appends (var, color, cid) to ``steps``; returns a conflict id or None."""
        decs = self.cs.unit_decompositions
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            if assign[v] == WHITE:
                for u, cid in self.pair_adj[v]:
                    if u == v or assign[u] == WHITE:
                        return cid
                    if assign[u] is None:
                        assign[u] = BLACK
                        steps.append((u, BLACK, cid))
                        queue.append(u)
            else:
                for k in self.dec_of[v]:
                    whites = 0
                    open_vars = []
                    for u in decs[k]:
                        if assign[u] == WHITE:
                            whites += 1
                        elif assign[u] is None:
                            open_vars.append(u)
                    if whites:
                        continue
                    if not open_vars:
                        return f"d{k}"
                    if len(open_vars) == 1:
                        u = open_vars[0]
                        assign[u] = WHITE
                        steps.append((u, WHITE, f"d{k}"))
                        queue.append(u)
        return None

    def initial(self, assign: list, steps: list) -> str | None:
        queue = []
        for k, d in enumerate(self.cs.unit_decompositions):
            if len(d) == 1:
                v = d[0]
                if assign[v] is None:
                    assign[v] = WHITE
                    steps.append((v, WHITE, f"d{k}"))
                    queue.append(v)
        for k, (a, b) in enumerate(self.cs.ortho_pairs):
            if a == b and assign[a] is None:
                assign[a] = BLACK
                steps.append((a, BLACK, f"p{k}"))
                queue.append(a)
            elif a == b and assign[a] == WHITE:
                return f"p{k}"
        return self.propagate(assign, queue, steps)

    def decide(self, assign: list, var: int, color: int, steps: list) -> str | None:
        assign[var] = color
        return self.propagate(assign, [var], steps)


def _node(decision, steps, conflict=None, children=None) -> dict:
    return {
        "decision": None if decision is None else {"var": decision[0], "color": COLOR_NAME[decision[1]]},
        "propagations": [[v, COLOR_NAME[c], cid] for v, c, cid in steps],
        "conflict": conflict,
        "children": children or [],
    }


@dataclass
class Certificate:
    verdict: str  # "SAT" | "UNSAT"
    size: int
    coloring: list[int] | None = None
    refutation: dict | None = None
    labels: list[str] = field(default_factory=list)
    names: dict[str, str] = field(default_factory=dict)

    @property
    def white(self) -> list[int]:
        return [i for i, c in enumerate(self.coloring or []) if c == WHITE]

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "size": self.size, "labels": self.labels,
               "constraint_names": self.names}
        if self.verdict == "SAT":
            out["coloring"] = {"white": self.white}
        else:
            out["refutation"] = self.refutation
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "Certificate":
        size = obj["size"]
        coloring = None
        if obj["verdict"] == "SAT":
            white = set(obj["coloring"]["white"])
            coloring = [WHITE if i in white else BLACK for i in range(size)]
        return cls(obj["verdict"], size, coloring, obj.get("refutation"),
                   list(obj.get("labels", [])), dict(obj.get("constraint_names", {})))


def solve(cs: ConstraintSystem) -> Certificate:
    """Complete, deterministic search.

    Branches on the lowest-index undecided variable, white before black, so a
    SAT answer is the lexicographically least coloring under white < black.
    """
    search = _Search(cs)
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * cs.size + 1000))
    assign: list = [None] * cs.size
    steps: list = []
    conflict = search.initial(assign, steps)

    def recurse(assign: list, decision, steps, conflict):
        if conflict is not None:
            return None, _node(decision, steps, conflict)
        var = next((i for i, a in enumerate(assign) if a is None), None)
        if var is None:
            return list(assign), _node(decision, steps)
        children = []
        for color in (WHITE, BLACK):
            child = list(assign)
            child_steps: list = []
            c = search.decide(child, var, color, child_steps)
            sat, node = recurse(child, (var, color), child_steps, c)
            if sat is not None:
                return sat, None
            children.append(node)
        return None, _node(decision, steps, None, children)

    sat, tree = recurse(assign, None, steps, conflict)
    if sat is not None:
        return Certificate("SAT", cs.size, sat, None, list(cs.labels), dict(cs.names))
    return Certificate("UNSAT", cs.size, None, tree, list(cs.labels), dict(cs.names))


def enumerate_colorings(cs: ConstraintSystem) -> Iterator[list[int]]:
    """All valid colorings, in lexicographic order (white < black)."""
    search = _Search(cs)
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * cs.size + 1000))
    assign: list = [None] * cs.size
    if search.initial(assign, []) is not None:
        return

    def recurse(assign):
        var = next((i for i, a in enumerate(assign) if a is None), None)
        if var is None:
            yield list(assign)
            return
        for color in (WHITE, BLACK):
            child = list(assign)
            if search.decide(child, var, color, []) is None:
                yield from recurse(child)

    yield from recurse(assign)


def count_colorings(cs: ConstraintSystem, override: bool = False) -> int:
    if cs.size > COUNT_LIMIT and not override:
        raise TooLarge(f"{cs.size} variables exceeds {COUNT_LIMIT}; pass override=True")
    return sum(1 for _ in enumerate_colorings(cs))


# ---------------------------------------------------------------------------
# independent certificate checking

def check_coloring(cs: ConstraintSystem, coloring: Sequence[int]) -> str | None:
    """Return the id of the first violated constraint, or None."""
    if len(coloring) != cs.size:
        return "size"
    for k, (a, b) in enumerate(cs.ortho_pairs):
        if coloring[a] == WHITE and coloring[b] == WHITE:
            return f"p{k}"
    for k, d in enumerate(cs.unit_decompositions):
        if sum(1 for v in d if coloring[v] == WHITE) != 1:
            return f"d{k}"
    return None


def _check_constraints_against(cs: ConstraintSystem, matrices: Sequence[SquareMatrix]) -> None:
    if len(matrices) != cs.size:
        raise CertificateError("matrix list does not match the constraint system")
    for k, (a, b) in enumerate(cs.ortho_pairs):
        x, y = matrices[a], matrices[b]
        if not ((x * y).is_zero() and (y * x).is_zero()):
            raise CertificateError(f"p{k}: {cs.labels[a]}, {cs.labels[b]} are not orthogonal")
    for k, d in enumerate(cs.unit_decompositions):
        total = SquareMatrix.zero(matrices[0].ring, matrices[0].n)
        for v in d:
            total = total + matrices[v]
        if not total.is_identity():
            raise CertificateError(f"d{k} does not sum to the identity")


def check_certificate(cert: Certificate, cs: ConstraintSystem,
                      matrices: Sequence[SquareMatrix] | None = None) -> bool:
    """Replay a certificate against ``cs`` without using the solver.

    SAT: the coloring satisfies every constraint. UNSAT: every propagation is
    forced by the constraint it cites, every split is exhaustive, and every
    leaf cites a violated constraint. With ``matrices`` the cited constraints
    are themselves re-verified (orthogonality, sums to the identity).
    Raises :class:`CertificateError` on failure.
    """
    if cert.size != cs.size:
        raise CertificateError("certificate size does not match")
    if matrices is not None:
        _check_constraints_against(cs, matrices)
    if cert.verdict == "SAT":
        bad = check_coloring(cs, cert.coloring or [])
        if bad is not None:
            raise CertificateError(f"coloring violates {bad}")
        return True
    if cert.verdict != "UNSAT" or cert.refutation is None:
        raise CertificateError("malformed certificate")

    def color_of(name: str) -> int:
        if name not in COLOR_VALUE:
            raise CertificateError(f"unknown color {name!r}")
        return COLOR_VALUE[name]

    def lookup(cid: str):
        try:
            return cs.constraint(cid)
        except (KeyError, IndexError, ValueError) as exc:
            raise CertificateError(f"unknown constraint {cid!r}") from exc

    def violated(cid: str, assign: dict) -> bool:
        kind, members = lookup(cid)
        if kind == "pair":
            a, b = members
            return assign.get(a) == WHITE and assign.get(b) == WHITE
        whites = sum(1 for v in members if assign.get(v) == WHITE)
        blacks = sum(1 for v in members if assign.get(v) == BLACK)
        return whites > 1 or blacks == len(members)

    def forced(var: int, color: int, cid: str, assign: dict) -> bool:
        kind, members = lookup(cid)
        if var not in members:
            return False
        if kind == "pair":
            a, b = members
            other = b if var == a else a
            return color == BLACK and (other == var or assign.get(other) == WHITE)
        others = [v for v in members if v != var]
        return color == WHITE and all(assign.get(v) == BLACK for v in others)

    stack = [(cert.refutation, {}, True)]
    while stack:
        node, parent, is_root = stack.pop()
        assign = dict(parent)
        dec = node.get("decision")
        if is_root:
            if dec is not None:
                raise CertificateError("root node must not carry a decision")
        else:
            if dec is None:
                raise CertificateError("inner node without a decision")
            v = dec["var"]
            if v in assign:
                raise CertificateError(f"decision on already assigned variable {v}")
            assign[v] = color_of(dec["color"])
        for v, cname, cid in node.get("propagations", []):
            c = color_of(cname)
            if v in assign:
                raise CertificateError(f"propagation re-assigns variable {v}")
            if not forced(v, c, cid, assign):
                raise CertificateError(f"{cid} does not force variable {v} to {cname}")
            assign[v] = c
        children = node.get("children", [])
        if node.get("conflict") is not None:
            if children:
                raise CertificateError("conflict node has children")
            if not violated(node["conflict"], assign):
                raise CertificateError(f"leaf conflict {node['conflict']} is not violated")
            continue
        if len(children) != 2:
            raise CertificateError("open leaf in refutation")
        d0, d1 = children[0].get("decision"), children[1].get("decision")
        if not d0 or not d1 or d0["var"] != d1["var"] or {d0["color"], d1["color"]} != {"white", "black"}:
            raise CertificateError("split is not an exhaustive two-way case split")
        if not 0 <= d0["var"] < cs.size:
            raise CertificateError("split on unknown variable")
        for ch in children:
            stack.append((ch, assign, False))
    return True


def refutation_stats(tree: dict) -> dict:
    nodes = leaves = props = depth = 0
    stack = [(tree, 0)]
    while stack:
        n, d = stack.pop()
        nodes += 1
        props += len(n["propagations"])
        depth = max(depth, d)
        if not n["children"]:
            leaves += 1
        stack.extend((c, d + 1) for c in n["children"])
    return {"nodes": nodes, "leaves": leaves, "propagations": props, "depth": depth}


def explain(cert: Certificate, limit: int = 200) -> list[str]:
    """Human-readable lines for a refutation, using constraint display names."""
    lines: list[str] = []
    labels = cert.labels or [str(i) for i in range(cert.size)]

    def name(cid):
        return cert.names.get(cid, cid)

    def walk(node, depth):
        if len(lines) >= limit:
            return
        pad = "  " * depth
        if node["decision"]:
            d = node["decision"]
            lines.append(f"{pad}case {labels[d['var']]} {d['color']}")
        for v, c, cid in node["propagations"]:
            lines.append(f"{pad}  {labels[v]} {c} by {name(cid)}")
        if node["conflict"]:
            lines.append(f"{pad}  contradiction in {name(node['conflict'])}")
        for ch in node["children"]:
            walk(ch, depth + 1)

    if cert.refutation:
        walk(cert.refutation, 0)
    return lines


# ---------------------------------------------------------------------------
# DIMACS

def to_dimacs(cs: ConstraintSystem) -> str:
    """CNF with variable i+1 true meaning element i is white."""
    clauses = []
    for a, b in cs.ortho_pairs:
        clauses.append([-(a + 1)] if a == b else [-(a + 1), -(b + 1)])
    for d in cs.unit_decompositions:
        clauses.append([v + 1 for v in d])
    lines = [f"c kslab KS coloring: {cs.size} elements", f"p cnf {cs.size} {len(clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in clauses]
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    nvars = 0
    clauses: list[list[int]] = []
    cur: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            nvars = int(line.split()[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
    return nvars, clauses


# ---------------------------------------------------------------------------
# set constructions

def lift_uncolorable(matrices: Sequence[SquareMatrix]) -> tuple[list[SquareMatrix], list[tuple]]:
    """S+ in M_{n+1}: the diagonal matrix units plus a copy of S in each corner (1-E_ii)M(1-E_ii).

    Returns the deduplicated list and its provenance: ``("unit", i)`` or
    ``("corner", i, k)`` for the k-th element of S placed in corner i.
    """
    if not matrices:
        raise ValueError("empty set")
    n = matrices[0].n
    if n + 1 > MAX_DIM:
        raise DimensionCap(f"lifting to dimension {n + 1} exceeds {MAX_DIM}")
    ring = matrices[0].ring
    out: list[SquareMatrix] = []
    prov: list[tuple] = []
    seen = set()
    for i in range(n + 1):
        e = matrix_unit(ring, n + 1, i, i)
        seen.add(e)
        out.append(e)
        prov.append(("unit", i))
    for i in range(n + 1):
        for k, m in enumerate(matrices):
            x = corner_embed(m, i)
            if x not in seen:
                seen.add(x)
                out.append(x)
                prov.append(("corner", i, k))
    return out, prov


def permutation_closure(matrices: Sequence[SquareMatrix]) -> tuple[list[SquareMatrix], list[tuple]]:
    """Close under conjugation by all permutation matrices.

    Returns the closed list (originals first) and provenance ``(perm, k)``
    meaning ``P_perm S[k] P_perm^-1``.
    """
    if not matrices:
        return [], []
    n = matrices[0].n
    ring = matrices[0].ring
    out: list[SquareMatrix] = []
    prov: list[tuple] = []
    seen = set()
    perms = list(itertools.permutations(range(n)))
    for perm in perms:
        p = permutation_matrix(ring, perm)
        pinv = p.transpose()
        for k, m in enumerate(matrices):
            x = p * m * pinv
            if x not in seen:
                seen.add(x)
                out.append(x)
                prov.append((perm, k))
    return out, prov


@dataclass
class CountingReport:
    p: int
    rank1_count: int
    triple_count: int
    triples_per_idempotent: dict[int, int]
    triples_per_idempotent_constant: bool
    N: int | None
    divisible_by_3: bool
    divisibility_verdict: str

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "rank1_count": self.rank1_count,
            "triple_count": self.triple_count,
            "triples_per_idempotent_constant": self.triples_per_idempotent_constant,
            "N": self.N,
            "divisible_by_3": self.divisible_by_3,
            "divisibility_verdict": self.divisibility_verdict,
        }


def rank1_triples(rank1: Sequence[SquareMatrix]) -> list[tuple[int, int, int]]:
    """Unordered triples of pairwise orthogonal rank-1 idempotents summing to I."""
    index = {m: i for i, m in enumerate(rank1)}
    if not rank1:
        return []
    one = SquareMatrix.identity(rank1[0].ring, rank1[0].n)
    out = set()
    for i, j in itertools.combinations(range(len(rank1)), 2):
        a, b = rank1[i], rank1[j]
        if not ((a * b).is_zero() and (b * a).is_zero()):
            continue
        k = index.get(one - a - b)
        if k is not None and k not in (i, j):
            out.add(tuple(sorted((i, j, k))))
    return sorted(out)


def counting_obstruction_check(p: int) -> CountingReport:
    from .enumeration import enumerate_idempotents

    rank1 = enumerate_idempotents(p).by_rank[1]
    triples = rank1_triples(rank1)
    per = {i: 0 for i in range(len(rank1))}
    for t in triples:
        for i in t:
            per[i] += 1
    values = set(per.values())
    constant = len(values) == 1
    N = values.pop() if constant else None
    count = len(rank1)
    div = count % 3 == 0
    verdict = "no obstruction from counting" if div else "uncolorable"
    return CountingReport(p, count, len(triples), per, constant, N, div, verdict)
