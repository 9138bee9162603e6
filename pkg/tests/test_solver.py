import copy
import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from kslab.enumeration import enumerate_idempotents, enumerate_projections, load_bundled, z28_constraint_names
from kslab.errors import CertificateError, DimensionCap, NotIdempotent, TooLarge
from kslab.matrices import SquareMatrix, entrywise_hom, matrix_unit
from kslab.scalars import PrimeField, ZZ
from kslab.solver import (
    BLACK,
    WHITE,
    Certificate,
    ConstraintSystem,
    check_certificate,
    check_coloring,
    count_colorings,
    counting_obstruction_check,
    enumerate_colorings,
    explain,
    extract_constraints,
    lift_uncolorable,
    parse_dimacs,
    permutation_closure,
    rank1_triples,
    refutation_stats,
    solve,
    to_dimacs,
    unit_families,
)

from ks_corpus import brute_force, corpus

F2, F5 = PrimeField(2), PrimeField(5)
CORPUS = corpus()


@pytest.fixture(scope="module")
def z28():
    return load_bundled("z28")


@pytest.fixture(scope="module")
def z28_cs(z28):
    return extract_constraints(z28, named=z28_constraint_names())


# --- extraction --------------------------------------------------------------

def test_diagonal_frame():
    units = [matrix_unit(F5, 3, i, i) for i in range(3)]
    cs = extract_constraints(units)
    assert cs.unit_decompositions == [(0, 1, 2)]
    assert cs.ortho_pairs == [(0, 1), (0, 2), (1, 2)]


def test_rank_two_decompositions():
    one = SquareMatrix.identity(F5, 3)
    e1 = matrix_unit(F5, 3, 0, 0)
    cs = extract_constraints([e1, one - e1, one])
    assert sorted(cs.unit_decompositions) == [(0, 1), (2,)]


def test_z28_constraints(z28_cs):
    assert len(z28_cs.unit_decompositions) == 20
    triples = {frozenset(i + 1 for i in d) for d in z28_cs.unit_decompositions}
    assert triples == {frozenset(t) for _, t in load_bundled("z28_triples")["triples"]}
    named = set(z28_cs.names.values())
    assert {f"O{i}" for i in range(1, 21)} <= named
    assert "O21a" in named and "O24b" in named


def test_mod_two_image_has_more_decompositions(z28, z28_cs):
    mod2 = [entrywise_hom(m, F2) for m in z28]
    cs2 = extract_constraints(mod2)
    assert len(cs2.unit_decompositions) > len(z28_cs.unit_decompositions)
    assert len(cs2.ortho_pairs) >= len(z28_cs.ortho_pairs)


def test_extraction_rejects_non_idempotent():
    with pytest.raises(NotIdempotent):
        extract_constraints([matrix_unit(F5, 3, 0, 1)])


def test_extraction_dedupes_with_warning():
    e = matrix_unit(F5, 3, 0, 0)
    with pytest.warns(UserWarning):
        cs = extract_constraints([e, e])
    assert cs.size == 1


def test_extraction_dimension_cap():
    with pytest.raises(DimensionCap):
        extract_constraints([SquareMatrix.identity(F2, 6)])


def test_decomposition_requires_listed_pairs():
    with pytest.raises(ValueError):
        ConstraintSystem(3, [(0, 1)], [(0, 1, 2)])


def test_unit_families_against_brute_force():
    # weights 1 with capacity 3 and complete orthogonality: all 3-subsets
    orth = [set(range(5)) - {i} for i in range(5)]
    got = sorted(unit_families(5, orth, [1] * 5, 3))
    assert got == list(itertools.combinations(range(5), 3))


@pytest.mark.parametrize("p", [2, 3])
def test_extraction_against_direct_search(p):
    inv = enumerate_projections(p)
    mats = inv.all()
    cs = extract_constraints(mats)
    one = SquareMatrix.identity(inv.ring, 3)
    expected = set()
    for r in range(1, 4):
        for fam in itertools.combinations(range(len(mats)), r):
            ok = all((mats[a] * mats[b]).is_zero() for a, b in itertools.permutations(fam, 2))
            total = SquareMatrix.zero(inv.ring, 3)
            for v in fam:
                total = total + mats[v]
            if ok and total == one and all(not mats[v].is_zero() for v in fam):
                expected.add(fam)
    got = {d for d in cs.unit_decompositions if all(not mats[v].is_zero() for v in d)}
    assert got == expected


# --- solver vs brute force -----------------------------------------------------

def test_corpus_shape():
    assert len(CORPUS) >= 20
    verdicts = set()
    for _, cs in CORPUS:
        assert cs.size <= 22
        verdicts.add(brute_force(cs)[0] > 0)
    assert verdicts == {True, False}


@pytest.mark.parametrize("name,cs", CORPUS, ids=[n for n, _ in CORPUS])
def test_solver_matches_oracle(name, cs):
    count, least = brute_force(cs)
    cert = solve(cs)
    assert cert.verdict == ("SAT" if count else "UNSAT")
    assert check_certificate(cert, cs)
    if count:
        assert cert.coloring == least
    if cs.size <= 22:
        assert count_colorings(cs) == count
        cols = list(enumerate_colorings(cs))
        assert len({tuple(c) for c in cols}) == count
        assert all(check_coloring(cs, c) is None for c in cols)
        if cols:
            assert cols[0] == least


def test_known_verdicts():
    by_name = dict(CORPUS)
    assert solve(by_name["parity-triangle"]).verdict == "UNSAT"
    assert solve(by_name["fano-exact-cover"]).verdict == "UNSAT"
    cert = solve(by_name["self-orthogonal"])
    assert cert.coloring == [BLACK, WHITE]


def test_f5_25_unsat_and_certificate():
    mats = load_bundled("f5_25").projections()
    cs = extract_constraints(mats)
    cert = solve(cs)
    assert cert.verdict == "UNSAT"
    assert check_certificate(cert, cs, mats)
    # JSON round trip preserves checkability
    again = Certificate.from_json(json.loads(cert.dumps()))
    assert check_certificate(again, cs)


def test_z28_named_refutation(z28, z28_cs):
    cert = solve(z28_cs)
    assert cert.verdict == "UNSAT"
    assert check_certificate(cert, z28_cs, z28)
    text = "\n".join(explain(cert))
    assert "contradiction in O" in text or "by O" in text
    stats = refutation_stats(cert.refutation)
    assert stats["leaves"] >= 1 and stats["nodes"] >= stats["leaves"]


def test_determinism(z28_cs):
    a, b = solve(z28_cs).dumps(), solve(z28_cs).dumps()
    assert a == b
    cs2 = extract_constraints(load_bundled("z28"), named=z28_constraint_names())
    assert solve(cs2).dumps() == a


# --- certificate tampering ------------------------------------------------------

def _leaves(node):
    if not node["children"]:
        yield node
    for c in node["children"]:
        yield from _leaves(c)


def test_tampered_unsat_certificates_rejected(z28_cs):
    cert = solve(z28_cs)
    base = cert.to_json()

    def rejected(mutate):
        obj = copy.deepcopy(base)
        mutate(obj)
        with pytest.raises(CertificateError):
            check_certificate(Certificate.from_json(obj), z28_cs)

    def drop_child(o):
        stack = [o["refutation"]]
        while stack:
            n = stack.pop()
            if n["children"]:
                n["children"].pop()
                return
        raise AssertionError("no inner node")

    def flip_propagation(o):
        stack = [o["refutation"]]
        while stack:
            n = stack.pop()
            if n["propagations"]:
                v, c, cid = n["propagations"][0]
                n["propagations"][0] = [v, "white" if c == "black" else "black", cid]
                return
            stack.extend(n["children"])
        raise AssertionError("no propagation")

    def unknown_constraint(o):
        leaf = next(_leaves(o["refutation"]))
        leaf["conflict"] = "p9999"

    def remove_conflict(o):
        leaf = next(_leaves(o["refutation"]))
        leaf["conflict"] = None

    for mutate in (drop_child, flip_propagation, unknown_constraint, remove_conflict):
        rejected(mutate)


def test_tampered_sat_certificate_rejected():
    cs = dict(CORPUS)["single-frame"]
    cert = solve(cs)
    assert cert.verdict == "SAT" and check_certificate(cert, cs)
    bad = Certificate("SAT", cs.size, [WHITE, WHITE, BLACK])
    with pytest.raises(CertificateError):
        check_certificate(bad, cs)
    forged = Certificate("UNSAT", cs.size, None, {"decision": None, "propagations": [],
                                                 "conflict": None, "children": []})
    with pytest.raises(CertificateError):
        check_certificate(forged, cs)


def test_certificate_rejects_wrong_matrices(z28, z28_cs):
    cert = solve(z28_cs)
    shuffled = list(reversed(z28))
    with pytest.raises(CertificateError):
        check_certificate(cert, z28_cs, shuffled)


# --- DIMACS ----------------------------------------------------------------------

@pytest.mark.parametrize("name,cs", CORPUS[:10], ids=[n for n, _ in CORPUS[:10]])
def test_dimacs_models_match(name, cs):
    nvars, clauses = parse_dimacs(to_dimacs(cs))
    assert nvars == cs.size
    models = 0
    for bits in itertools.product((0, 1), repeat=nvars):
        if all(any((lit > 0) == bool(bits[abs(lit) - 1]) for lit in cl) for cl in clauses):
            models += 1
    assert models == brute_force(cs)[0]


def test_dimacs_header():
    text = to_dimacs(dict(CORPUS)["parity-triangle"])
    assert "p cnf 3 6" in text and text.endswith("0\n")


# --- count limit -------------------------------------------------------------------

def test_count_limit():
    cs = ConstraintSystem(41, [], [])
    with pytest.raises(TooLarge):
        count_colorings(cs)
    assert count_colorings(ConstraintSystem(41, [], [(0,)] + [(i,) for i in range(1, 41)]),
                           override=True) == 1


# --- monotonicity ----------------------------------------------------------------

@settings(max_examples=25)
@given(st.data())
def test_monotone_under_subsets(data):
    """A coloring of a set restricts to a coloring of every subset, so uncolorability only grows."""
    mats = enumerate_idempotents(2).by_rank[1]
    big = sorted(data.draw(st.sets(st.integers(0, 27), min_size=3, max_size=18)))
    small = sorted(data.draw(st.sets(st.sampled_from(big), min_size=1)))
    cs_big = extract_constraints([mats[i] for i in big])
    cs_small = extract_constraints([mats[i] for i in small])
    cert = solve(cs_big)
    if cert.verdict == "SAT":
        pos = {v: k for k, v in enumerate(big)}
        restricted = [cert.coloring[pos[v]] for v in small]
        assert check_coloring(cs_small, restricted) is None
    if solve(cs_small).verdict == "UNSAT":
        assert cert.verdict == "UNSAT"


def test_restrict_matches_extraction(z28, z28_cs):
    keep = [0, 1, 2, 3, 4, 6, 9, 13, 19, 23]
    a = z28_cs.restrict(keep)
    b = extract_constraints([z28[i] for i in keep])
    assert sorted(a.ortho_pairs) == sorted(b.ortho_pairs)
    assert sorted(a.unit_decompositions) == sorted(b.unit_decompositions)


# --- lift and closure --------------------------------------------------------------

def test_lift_of_uncolorable_is_uncolorable():
    f5 = load_bundled("f5_25").projections()
    lifted, prov = lift_uncolorable(f5)
    assert all(m.n == 4 and m.is_idempotent() for m in lifted)
    assert len(lifted) == len(prov) == len(set(lifted))
    assert prov[:4] == [("unit", i) for i in range(4)]
    cs = extract_constraints(lifted)
    cert = solve(cs)
    assert cert.verdict == "UNSAT" and check_certificate(cert, cs, lifted)


def test_lift_dimension_cap():
    with pytest.raises(DimensionCap):
        lift_uncolorable([SquareMatrix.identity(F2, 5)])


def test_permutation_closure():
    e11 = matrix_unit(ZZ, 3, 0, 0)
    closed, prov = permutation_closure([e11])
    assert set(closed) == {matrix_unit(ZZ, 3, i, i) for i in range(3)}
    again, _ = permutation_closure(closed)
    assert set(again) == set(closed)
    assert all(k == 0 for _, k in prov)


def test_closure_of_z28_stays_uncolorable(z28):
    closed, _ = permutation_closure(z28)
    assert set(z28) <= set(closed)
    assert solve(extract_constraints(closed)).verdict == "UNSAT"


# --- counting ----------------------------------------------------------------------

@pytest.mark.parametrize("p,count,N,verdict", [
    (2, 28, 3, "uncolorable"),
    (3, 117, 6, "no obstruction from counting"),
    (5, 775, 15, "uncolorable"),
])
def test_counting_check(p, count, N, verdict):
    rep = counting_obstruction_check(p)
    assert rep.rank1_count == count and rep.N == N
    assert rep.triples_per_idempotent_constant
    assert rep.triple_count * 3 == count * N
    assert rep.divisibility_verdict == verdict


def test_rank1_triples_brute_force_f2():
    rank1 = enumerate_idempotents(2).by_rank[1]
    one = SquareMatrix.identity(F2, 3)
    expected = set()
    for t in itertools.combinations(range(28), 3):
        a, b, c = (rank1[i] for i in t)
        pairs_ok = all((x * y).is_zero() for x, y in itertools.permutations((a, b, c), 2))
        if pairs_ok and a + b + c == one:
            expected.add(t)
    assert set(rank1_triples(rank1)) == expected
