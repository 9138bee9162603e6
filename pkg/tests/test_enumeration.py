import itertools
import json

import numpy as np
import pytest

from kslab.enumeration import (
    SCHUTTE_ENV,
    VectorConfiguration,
    canonical_lines,
    canonical_vector,
    enumerate_idempotents,
    enumerate_projections,
    find_schutte_file,
    gaussian_binomial,
    load_bundled,
    load_vector_file,
    span,
    subspaces,
    validate_schutte,
    z28_basis_form,
)
from kslab.errors import DataValidationError, MissingExternalData, ZeroVector
from kslab.matrices import ColumnVector, SquareMatrix, entrywise_hom, matrix_unit, permutation_matrix, project_vector
from kslab.scalars import PrimeField, ZZ


def _codes(ms, p):
    w = p ** np.arange(9)
    return {int(np.array(m.rows).reshape(9) @ w) for m in ms}


def brute_force_idempotent_codes(p, symmetric=False):
    """Codes of every idempotent in M_3(F_p) by scanning all q^9 (or q^6 symmetric) matrices."""
    if symmetric:
        idx = [(i, j) for i in range(3) for j in range(i, 3)]
        vals = np.array(list(itertools.product(range(p), repeat=6)), dtype=np.int64)
        A = np.zeros((len(vals), 3, 3), dtype=np.int64)
        for k, (i, j) in enumerate(idx):
            A[:, i, j] = vals[:, k]
            A[:, j, i] = vals[:, k]
    else:
        n = p ** 9
        codes = np.arange(n, dtype=np.int64)
        A = np.stack([(codes // p ** k) % p for k in range(9)], axis=1).reshape(n, 3, 3)
    out = set()
    for s in range(0, len(A), 200_000):
        B = A[s:s + 200_000]
        sq = np.einsum("aij,ajk->aik", B, B) % p
        keep = B[(sq == B).all(axis=(1, 2))]
        out |= set((keep.reshape(-1, 9) @ (p ** np.arange(9))).tolist())
    return out


# --- Gaussian binomials ------------------------------------------------------

def test_gaussian_binomial_examples():
    assert gaussian_binomial(3, 1, 2) == 7
    assert gaussian_binomial(3, 0, 5) == 1
    # brute force: distinct spans of pairs of independent vectors in F_3^3
    planes = set()
    vecs = [v for v in itertools.product(range(3), repeat=3) if any(v)]
    for a, b in itertools.combinations(vecs, 2):
        s = span([a, b], 3)
        if len(s) == 9:
            planes.add(s)
    assert len(planes) == gaussian_binomial(3, 2, 3) == 13


@pytest.mark.parametrize("q", [2, 3, 5])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_subspace_enumeration_matches_formula(q, k):
    subs = subspaces(q, 3, k)
    assert len(subs) == gaussian_binomial(3, k, q)
    assert len({span(list(b), q) if b else frozenset({(0, 0, 0)}) for b in subs}) == len(subs)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_lines_and_planes_avoiding_a_line(p):
    assert len(canonical_lines(p)) == gaussian_binomial(3, 1, p) == p * p + p + 1
    line = span([(1, 0, 0)], p)
    avoiding = [b for b in subspaces(p, 3, 2) if not line <= span(list(b), p)]
    assert len(avoiding) == p * p


# --- idempotents -----------------------------------------------------------------

@pytest.mark.parametrize("p", [2, 3, 5])
def test_idempotent_census(p):
    inv = enumerate_idempotents(p)
    assert inv.count(1) == (p * p + p + 1) * p * p
    assert inv.count(0) == inv.count(3) == 1
    assert inv.count(2) == inv.count(1)
    allm = inv.all()
    assert len(set(allm)) == len(allm)
    for m in allm:
        assert m.is_idempotent()
    # closed under complement, swapping ranks r and 3 - r
    one = SquareMatrix.identity(inv.ring, 3)
    assert {one - m for m in inv.by_rank[1]} == set(inv.by_rank[2])


@pytest.mark.parametrize("p", [2, 3, 5])
def test_idempotents_match_brute_force(p):
    ours = _codes(enumerate_idempotents(p).all(), p)
    assert ours == brute_force_idempotent_codes(p)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_projections_match_brute_force(p):
    inv = enumerate_projections(p)
    assert _codes(inv.all(), p) == brute_force_idempotent_codes(p, symmetric=True)
    assert inv.count(1) == {2: 4, 3: 9, 5: 25}[p]
    # rank-1 projections are exactly P_v over canonical non-isotropic lines, no collisions
    pv = [project_vector(v) for v in canonical_lines(p) if v.dot(v) != 0]
    assert len(set(pv)) == len(pv) == inv.count(1)
    assert set(pv) == set(inv.by_rank[1])


@pytest.mark.parametrize("p", [2, 3, 5])
def test_inventory_conjugation_stable(p):
    inv = enumerate_idempotents(p)
    F = PrimeField(p)
    for perm in itertools.permutations(range(3)):
        P = permutation_matrix(F, perm)
        Pi = P.transpose()
        for r, ms in inv.by_rank.items():
            assert {P * m * Pi for m in ms} == set(ms)


def test_unsupported_q_warns():
    with pytest.warns(UserWarning):
        enumerate_projections(7)
    with pytest.raises(ValueError):
        enumerate_idempotents(4)


# --- canonical vectors -------------------------------------------------------------

def test_canonical_vector_examples():
    F = PrimeField(5)
    assert canonical_vector(ColumnVector.of(F, (2, 0, 1))).coords == (1, 0, 3)
    assert canonical_vector(ColumnVector.of(F, (0, 0, 4))).coords == (0, 0, 1)
    for c in itertools.product(range(5), repeat=3):
        if any(c):
            v = ColumnVector.of(F, c)
            cv = canonical_vector(v)
            assert canonical_vector(cv) == cv
            # proportional to v: scan for the scalar
            assert any(v.scale(s) == cv for s in range(1, 5))
    with pytest.raises(ZeroVector):
        canonical_vector(ColumnVector.of(F, (0, 0, 0)))


# --- bundled data ----------------------------------------------------------------

def test_f5_25_transcription():
    cfg = load_bundled("f5_25")
    assert len(cfg.vectors) == 25
    assert cfg.vectors[13].coords == (2, 1, 1)
    canon = {canonical_vector(v) for v in cfg.vectors}
    assert len(canon) == 25  # pairwise non-proportional
    assert all(v.dot(v) != 0 for v in cfg.vectors)
    assert set(cfg.projections()) == set(enumerate_projections(5).by_rank[1])


def test_z28_transcription_audit():
    P = load_bundled("z28")
    assert len(P) == 28 and P[0] == matrix_unit(ZZ, 3, 0, 0)
    for d in z28_basis_form():
        cols = [ColumnVector.of(ZZ, v) for v in d["range"] + d["kernel"]]
        assert abs(SquareMatrix.from_columns(cols).det()) == 1
    for m in P:
        assert m.is_idempotent() and m.rank() == 1
    assert len(set(P)) == 28
    images = [entrywise_hom(m, PrimeField(2)) for m in P]
    assert set(images) == set(enumerate_idempotents(2).by_rank[1]) and len(set(images)) == 28


def test_z28_triples_file():
    data = load_bundled("z28_triples")
    assert [n for n, _ in data["triples"]] == [f"O{i}" for i in range(1, 21)]
    assert data["triples"][0][1] == (1, 2, 3) and data["triples"][19][1] == (19, 22, 28)
    assert len(data["pairs"]) == 16 and data["pairs"][0][1] == (7, 24)


def test_p26_repair_criterion():
    """Only the stored entry (0) reproduces both the mod-2 bijection and the 20 listed triples."""
    from kslab.matrices import idempotent_from_basis
    from kslab.solver import extract_constraints

    triples = {frozenset(t) for _, t in load_bundled("z28_triples")["triples"]}
    base = z28_basis_form()
    results = {}
    for cand in (0, 1, 2, -1):
        mats = []
        for k, d in enumerate(base):
            rng_v, ker = d["range"], [list(v) for v in d["kernel"]]
            if k == 25:
                ker[1][0] = cand
            try:
                mats.append(idempotent_from_basis([ColumnVector.of(ZZ, rng_v[0])],
                                                  [ColumnVector.of(ZZ, v) for v in ker]))
            except Exception:
                mats = None
                break
        if mats is None:
            results[cand] = None
            continue
        imgs = {entrywise_hom(m, PrimeField(2)) for m in mats}
        cs = extract_constraints(mats)
        got = {frozenset(i + 1 for i in d) for d in cs.unit_decompositions if len(d) == 3}
        results[cand] = (len(imgs) == 28, got == triples)
    assert results[0] == (True, True)
    for cand, r in results.items():
        if cand != 0:
            assert r is None or r != (True, True)


def test_schutte_missing(tmp_path, monkeypatch):
    monkeypatch.delenv(SCHUTTE_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    with pytest.raises(MissingExternalData) as exc:
        load_bundled("schutte")
    assert "schutte_vectors.json" in str(exc.value)


def test_schutte_validation(tmp_path, monkeypatch):
    good = tmp_path / "s.json"
    good.write_text(json.dumps({"vectors": [[1, 0, 0], [1, 1, 0], [1, 2, 5], [1, 1, 2]]}))
    monkeypatch.setenv(SCHUTTE_ENV, str(good))
    cfg = load_bundled("schutte")
    assert len(cfg.vectors) == 4 and find_schutte_file() == good
    for bad in ([[1, 0, 0], [2, 0, 0]], [[1, 1, 1, 1]], [[2, 2, 0]], [[0, 0, 0]], [[1, 1, 3]]):
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(bad))
        with pytest.raises(DataValidationError):
            validate_schutte(load_vector_file(f, ring=ZZ))


def test_vector_configuration_projections_over_other_ring():
    cfg = VectorConfiguration(ZZ, [ColumnVector.of(ZZ, (1, 2, 0))])
    P = cfg.projections(PrimeField(7))[0]
    assert P.is_idempotent() and P.is_symmetric()
