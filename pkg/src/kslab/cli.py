"""Command-line interface: ``kslab <command> ...``.

Every command prints a JSON run report on stdout and writes certificates
and reports under ``--out``. Exit codes: 0 success, 1 verdict mismatch,
2 input error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .boolean import PartialBooleanAlgebra, bijection_triple
from .enumeration import (
    enumerate_idempotents,
    enumerate_projections,
    gaussian_binomial,
    load_bundled,
    load_vector_file,
    z28_constraint_names,
    z28_labels,
)
from .errors import KSLabError, MissingExternalData
from .matrices import SquareMatrix, entrywise_hom, idempotent_from_basis, ColumnVector
from .scalars import PrimeField, parse_ring
from .solver import (
    check_certificate,
    count_colorings,
    counting_obstruction_check,
    explain,
    extract_constraints,
    lift_uncolorable,
    permutation_closure,
    refutation_stats,
    solve,
    to_dimacs,
)

log = logging.getLogger("kslab")

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    input_digest: str
    verdicts: dict
    certificates: list[str]
    wall_time: float
    tool_version: str = __version__
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class Dataset:
    name: str
    matrices: list[SquareMatrix]
    labels: list[str] | None = None
    named: dict | None = None
    closed: bool = False

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.name.encode())
        for m in self.matrices:
            h.update(f"{m.ring}|{m.key}\n".encode())
        return h.hexdigest()


# ---------------------------------------------------------------------------
# dataset resolution

_FAMILY_RE = re.compile(r"^(proj|idpt|rank1|proj1)-F(\d+)$")


def _matrices_from_file(path: Path, ring_text: str | None) -> Dataset:
    obj = json.loads(path.read_text())
    if isinstance(obj, list) or "vectors" in obj:
        cfg = load_vector_file(path)
        ring = parse_ring(ring_text) if ring_text else cfg.ring
        return Dataset(path.stem, cfg.projections(ring), cfg.labels)
    ring = parse_ring(ring_text or obj.get("ring", "Z"))
    if "matrices" in obj:
        mats = [SquareMatrix.of(ring, m["rows"] if isinstance(m, dict) else m) for m in obj["matrices"]]
        return Dataset(path.stem, mats, obj.get("labels"))
    if "idempotents" in obj:
        mats = [idempotent_from_basis([ColumnVector.of(ring, v) for v in d["range"]],
                                      [ColumnVector.of(ring, v) for v in d["kernel"]])
                for d in obj["idempotents"]]
        return Dataset(path.stem, mats, [d.get("label", str(i)) for i, d in enumerate(obj["idempotents"])])
    raise InputError(f"{path}: expected 'vectors', 'matrices' or 'idempotents'")


def resolve_dataset(name: str, ring_text: str | None = None, schutte_path: str | None = None) -> Dataset:
    """Bundled names, generated families (``proj-F3``, ``idpt-F2``, ``rank1-F2``,
    ``proj1-F3``), ``schutte`` or a JSON file path."""
    if name == "f5_25":
        cfg = load_bundled("f5_25")
        ring = parse_ring(ring_text) if ring_text else cfg.ring
        return Dataset("f5_25", cfg.projections(ring), cfg.labels)
    if name in ("z28", "z28-mod2"):
        mats = load_bundled("z28")
        if name == "z28-mod2" or ring_text:
            target = PrimeField(2) if name == "z28-mod2" else parse_ring(ring_text)
            mats = [entrywise_hom(m, target) for m in mats]
            return Dataset(name, mats, z28_labels())
        return Dataset("z28", mats, z28_labels(), z28_constraint_names())
    if name == "schutte":
        cfg = load_bundled("schutte", schutte_path)
        ring = parse_ring(ring_text) if ring_text else parse_ring("Z[1/30]")
        return Dataset(f"schutte@{ring}", cfg.projections(ring), cfg.labels)
    m = _FAMILY_RE.match(name)
    if m:
        kind, q = m.group(1), int(m.group(2))
        if kind == "proj":
            return Dataset(name, enumerate_projections(q).all(), closed=True)
        if kind == "idpt":
            return Dataset(name, enumerate_idempotents(q).all(), closed=True)
        if kind == "rank1":
            return Dataset(name, enumerate_idempotents(q).by_rank[1])
        return Dataset(name, enumerate_projections(q).by_rank[1])
    path = Path(name)
    if path.is_file():
        return _matrices_from_file(path, ring_text)
    raise InputError(f"unknown dataset {name!r} (not a bundled name and not a file)")


# ---------------------------------------------------------------------------
# helpers

def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def _write_json(path: Path, obj) -> str:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")
    return str(path)


def _solve_and_write(ds: Dataset, out: Path, tag: str, cnf: str | None = None):
    cs = extract_constraints(ds.matrices, ds.labels, ds.named)
    cert = solve(cs)
    check_certificate(cert, cs, ds.matrices[:cs.size] if cs.size == len(ds.matrices) else None)
    path = out / f"{_slug(tag)}.cert.json"
    path.write_text(cert.dumps() + "\n")
    if cnf:
        Path(cnf).write_text(to_dimacs(cs))
    info = {"elements": cs.size, "ortho_pairs": len(cs.ortho_pairs),
            "unit_decompositions": len(cs.unit_decompositions)}
    if cert.verdict == "UNSAT":
        info["refutation"] = refutation_stats(cert.refutation)
    else:
        info["white"] = cert.white
    return cert, str(path), info


def _emit(report: RunReport, out: Path) -> None:
    _write_json(out / f"{_slug(report.command)}.report.json", report.to_json())
    print(json.dumps(report.to_json(), sort_keys=True, indent=1))


# ---------------------------------------------------------------------------
# commands

def cmd_count(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    qs = [args.q] if args.q else [2, 3, 5]
    result = {}
    for q in qs:
        inv = enumerate_idempotents(q)
        proj = enumerate_projections(q)
        result[f"F{q}"] = {
            "gaussian_binomials": {k: gaussian_binomial(3, k, q) for k in range(4)},
            "idempotents_by_rank": inv.census(),
            "projections_by_rank": proj.census(),
            "rank1_formula": (q * q + q + 1) * q * q,
        }
    path = _write_json(out / "count.json", result)
    ok = all(v["idempotents_by_rank"][1] == v["rank1_formula"] for v in result.values())
    _emit(RunReport("count", hashlib.sha256(str(qs).encode()).hexdigest(),
                    {"rank1_formula_matches": ok}, [path], time.perf_counter() - t0,
                    details=result), out)
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_enumerate(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    inv = enumerate_projections(args.q) if args.symmetric else enumerate_idempotents(args.q)
    dump = {"ring": f"GF({args.q})", "symmetric": args.symmetric,
            "by_rank": {str(r): [m.to_json()["rows"] for m in ms] for r, ms in inv.by_rank.items()}}
    kind = "projections" if args.symmetric else "idempotents"
    path = _write_json(out / f"{kind}-F{args.q}.json", dump)
    _emit(RunReport("enumerate", hashlib.sha256(path.encode()).hexdigest(),
                    {"census": inv.census()}, [path], time.perf_counter() - t0), out)
    return EXIT_OK


def cmd_color(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    ds = resolve_dataset(args.dataset, args.ring, args.schutte)
    cert, path, info = _solve_and_write(ds, out, f"color-{ds.name}", args.cnf)
    verdicts = {ds.name: cert.verdict}
    if args.count and cert.verdict == "SAT":
        cs = extract_constraints(ds.matrices, ds.labels)
        info["count"] = count_colorings(cs, override=True)
    if args.explain and cert.verdict == "UNSAT":
        info["explanation"] = explain(cert)
    _emit(RunReport("color", ds.digest(), verdicts, [path], time.perf_counter() - t0,
                    seed=args.seed, details=info), out)
    if args.expect and args.expect != cert.verdict:
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_lift(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    ds = resolve_dataset(args.dataset, args.ring, args.schutte)
    lifted, prov = lift_uncolorable(ds.matrices)
    lds = Dataset(f"{ds.name}+lift", lifted)
    cert, path, info = _solve_and_write(lds, out, f"lift-{ds.name}", args.cnf)
    info["lifted_size"] = len(lifted)
    info["before_dedup"] = (ds.matrices[0].n + 1) * (1 + len(ds.matrices))
    _emit(RunReport("lift", ds.digest(), {lds.name: cert.verdict}, [path],
                    time.perf_counter() - t0, details=info), out)
    return EXIT_OK


def cmd_closure(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    ds = resolve_dataset(args.dataset, args.ring, args.schutte)
    closed, prov = permutation_closure(ds.matrices)
    cds = Dataset(f"{ds.name}+perm", closed)
    cert, path, info = _solve_and_write(cds, out, f"closure-{ds.name}", args.cnf)
    info["closure_size"] = len(closed)
    prov_path = _write_json(out / f"closure-{_slug(ds.name)}.provenance.json",
                            [{"matrix": m.key, "perm": list(pr[0]), "original": pr[1]}
                             for m, pr in zip(closed, prov)])
    _emit(RunReport("closure", ds.digest(), {cds.name: cert.verdict}, [path, prov_path],
                    time.perf_counter() - t0, details=info), out)
    return EXIT_OK


def cmd_morphism(args) -> int:
    from .morphism import default_morphism, verify_morphism

    t0 = time.perf_counter()
    out = _out_dir(args)
    if args.p not in (2, 3):
        raise InputError("--p must be 2 or 3")
    phi, B = default_morphism(args.p, args.coloring)
    rep = verify_morphism(phi)
    dump = phi.to_json()
    dump["verification"] = rep.to_json()
    path = _write_json(out / f"morphism-F{args.p}.json", dump)
    _emit(RunReport("morphism", hashlib.sha256(f"{args.p}:{args.coloring}".encode()).hexdigest(),
                    {f"M3(F{args.p})_sym": "PASS" if rep.passed else "FAIL"}, [path],
                    time.perf_counter() - t0, details=rep.to_json()), out)
    return EXIT_OK if rep.passed else EXIT_MISMATCH


def _parse_members(text: str) -> list[int]:
    try:
        return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]
    except ValueError as exc:
        raise InputError(f"bad member list {text!r}") from exc


def cmd_check_ideal(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    ds = resolve_dataset(args.dataset, args.ring, args.schutte)
    B = PartialBooleanAlgebra.from_idempotents(ds.matrices, closed=True)
    if args.members_file:
        obj = json.loads(Path(args.members_file).read_text())
        members = obj["members"] if isinstance(obj, dict) else obj
    else:
        members = _parse_members(args.members or "")
    bad = [i for i in members if not 0 <= i < B.size]
    if bad:
        raise InputError(f"indices {bad} outside 0..{B.size - 1}")
    result = {
        "prime_partial_ideal": B.is_prime_partial_ideal(members),
        "ideal_violation": B.ideal_violation(members),
        "partial_ultrafilter": B.is_partial_ultrafilter(members),
        "filter_violation": B.filter_violation(members),
        "members": sorted(set(members)),
        "algebra_size": B.size,
    }
    path = _write_json(out / f"check-ideal-{_slug(ds.name)}.json", result)
    alg_path = _write_json(out / f"algebra-{_slug(ds.name)}.json", B.to_json())
    _emit(RunReport("check-ideal", ds.digest(),
                    {"prime_partial_ideal": result["prime_partial_ideal"],
                     "partial_ultrafilter": result["partial_ultrafilter"]},
                    [path, alg_path], time.perf_counter() - t0, details=result), out)
    return EXIT_OK


def cmd_export_cnf(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    ds = resolve_dataset(args.dataset, args.ring, args.schutte)
    cs = extract_constraints(ds.matrices, ds.labels, ds.named)
    target = Path(args.cnf) if args.cnf else out / f"{_slug(ds.name)}.cnf"
    target.write_text(to_dimacs(cs))
    _emit(RunReport("export-cnf", ds.digest(), {}, [str(target)], time.perf_counter() - t0,
                    details={"variables": cs.size,
                             "clauses": len(cs.ortho_pairs) + len(cs.unit_decompositions)}), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Table 1

EXPECTED_TABLE1 = {
    "M3(F_p)_sym, p=2,3": ("colorable", "nonempty"),
    "M3(Z)_sym": ("colorable", "nonempty"),
    "M3(F_p)_sym, p>=5": ("uncolorable", "empty"),
    "M3(Z[1/30])_sym": ("uncolorable", "empty"),
    "M3(Q)_sym": ("uncolorable", "empty"),
    "M3(Z)": ("uncolorable", "empty"),
}


def _row_finite_colorable(out: Path, certs: list) -> tuple[str, str, dict]:
    detail = {}
    colorable, nonempty = True, True
    for q in (2, 3):
        ds = Dataset(f"proj-F{q}", enumerate_projections(q).all(), closed=True)
        cert, path, info = _solve_and_write(ds, out, f"table1-proj-F{q}")
        certs.append(path)
        B = PartialBooleanAlgebra.from_idempotents(ds.matrices, closed=True)
        bij = bijection_triple(B)
        colorable &= cert.verdict == "SAT"
        nonempty &= len(bij.ideals) > 0
        detail[f"F{q}"] = {"verdict": cert.verdict, "bijection": bij.to_json()}
    return ("colorable" if colorable else "uncolorable"), ("nonempty" if nonempty else "empty"), detail


def _row_integer_sym(out: Path, certs: list, seed: int) -> tuple[str, str, dict]:
    from .morphism import default_morphism, verify_morphism

    phi, B = default_morphism(2)
    rep = verify_morphism(phi)
    dump = phi.to_json()
    dump["verification"] = rep.to_json()
    certs.append(_write_json(out / "table1-morphism-F2.json", dump))
    ok = rep.passed
    # the pulled-back coloring of Idpt(M3(Z)_sym): black set = kernel idempotents of phi
    kernel_ok = {e for e in phi.kernel_idempotents()} == {e for e, c in phi.coloring.items() if c == 0}
    detail = {"morphism_verification": rep.to_json(), "kernel_equals_black_set": kernel_ok}
    good = ok and kernel_ok
    return ("colorable" if good else "unknown"), ("nonempty" if good else "unknown"), detail


def _row_finite_uncolorable(out: Path, certs: list) -> tuple[str, str, dict]:
    ds = resolve_dataset("f5_25")
    cert, path, info = _solve_and_write(ds, out, "table1-f5_25")
    certs.append(path)
    B = PartialBooleanAlgebra.from_idempotents(enumerate_projections(5).all(), closed=True)
    bij = bijection_triple(B)
    detail = {"f5_25": info | {"verdict": cert.verdict}, "proj-F5_bijection": bij.to_json(),
              "checked_prime": 5}
    col = "uncolorable" if cert.verdict == "UNSAT" else "colorable"
    return col, ("empty" if not bij.ideals else "nonempty"), detail


def _row_schutte(out: Path, certs: list, ring_text: str, schutte: str | None) -> tuple[str, str, dict]:
    try:
        ds = resolve_dataset("schutte", ring_text, schutte)
    except MissingExternalData:
        return "SKIPPED (external data required)", "SKIPPED (external data required)", {}
    cert, path, info = _solve_and_write(ds, out, f"table1-{ds.name}")
    certs.append(path)
    if cert.verdict == "UNSAT":
        # the bijection theorem: no KS coloring of a subset => none of Idpt(R) => pSpec(R) empty
        return "uncolorable", "empty", info | {"pspec": "implied by uncolorability"}
    return "colorable", "unknown", info


def _row_integer(out: Path, certs: list) -> tuple[str, str, dict]:
    ds = resolve_dataset("z28")
    cert, path, info = _solve_and_write(ds, out, "table1-z28")
    certs.append(path)
    counting = counting_obstruction_check(2)
    detail = info | {"verdict": cert.verdict, "counting_p2": counting.to_json(),
                     "pspec": "implied by uncolorability"}
    col = "uncolorable" if cert.verdict == "UNSAT" else "colorable"
    return col, ("empty" if col == "uncolorable" else "unknown"), detail


def cmd_verify_table1(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    certs: list[str] = []
    rows: dict[str, dict] = {}
    runners: dict[str, Callable[[], tuple]] = {
        "M3(F_p)_sym, p=2,3": lambda: _row_finite_colorable(out, certs),
        "M3(Z)_sym": lambda: _row_integer_sym(out, certs, args.seed),
        "M3(F_p)_sym, p>=5": lambda: _row_finite_uncolorable(out, certs),
        "M3(Z[1/30])_sym": lambda: _row_schutte(out, certs, "Z[1/30]", args.schutte),
        "M3(Q)_sym": lambda: _row_schutte(out, certs, "Q", args.schutte),
        "M3(Z)": lambda: _row_integer(out, certs),
    }
    mismatch = False
    for name, run in runners.items():
        r0 = time.perf_counter()
        col, spec, detail = run()
        expected = EXPECTED_TABLE1[name]
        skipped = col.startswith("SKIPPED")
        match = skipped or (col, spec) == expected
        mismatch |= not match
        rows[name] = {"Idpt": col, "pSpec": spec, "expected": list(expected),
                      "status": "SKIPPED" if skipped else ("MATCH" if match else "MISMATCH"),
                      "seconds": round(time.perf_counter() - r0, 3), "detail": detail}
    verdicts = {k: v["status"] for k, v in rows.items()}
    _emit(RunReport("verify-table1", hashlib.sha256(json.dumps(EXPECTED_TABLE1, sort_keys=True).encode()).hexdigest(),
                    verdicts, certs, time.perf_counter() - t0, seed=args.seed, details=rows), out)
    for k, v in rows.items():
        print(f"{v['status']:8s} {k:22s} Idpt: {v['Idpt']:12s} pSpec: {v['pSpec']}", file=sys.stderr)
    return EXIT_MISMATCH if mismatch else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kslab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="kslab_out", help="directory for certificates and reports")
    common.add_argument("--seed", type=int, default=0, help="seed recorded in reports")
    common.add_argument("--parallel", type=int, default=1,
                        help="worker count (accepted for compatibility; runs are single-threaded and deterministic)")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dataset", required=True,
                      help="f5_25, z28, z28-mod2, schutte, proj-F<q>, idpt-F<q>, rank1-F<q>, proj1-F<q>, or a JSON path")
    data.add_argument("--ring", help="ring descriptor, e.g. GF(5), Z, Z[1/30], Q")
    data.add_argument("--schutte", help="path to schutte_vectors.json")
    data.add_argument("--cnf", help="also write the constraint system as DIMACS CNF")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="Gaussian binomials and idempotent census")
    p.add_argument("--q", type=int)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("enumerate", parents=[common], help="dump idempotents or projections of M3(F_q)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--symmetric", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("color", parents=[common, data], help="solve KS colorability of a dataset")
    p.add_argument("--expect", choices=["SAT", "UNSAT"])
    p.add_argument("--count", action="store_true", help="also count colorings when SAT")
    p.add_argument("--explain", action="store_true", help="include a readable refutation")
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("verify-table1", parents=[common], help="reproduce Table 1")
    p.add_argument("--schutte", help="path to schutte_vectors.json")
    p.set_defaults(func=cmd_verify_table1)

    p = sub.add_parser("lift", parents=[common, data], help="lift S to M_{n+1} and solve")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("closure", parents=[common, data], help="permutation closure and solve")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("morphism", parents=[common], help="build and verify phi on M3(F_p)_sym")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--coloring", type=int, default=0, help="index of the KS coloring to extend")
    p.set_defaults(func=cmd_morphism)

    p = sub.add_parser("check-ideal", parents=[common, data], help="prime partial ideal predicate")
    p.add_argument("--members", help="comma-separated element indices")
    p.add_argument("--members-file", help="JSON list (or {'members': [...]})")
    p.set_defaults(func=cmd_check_ideal)

    p = sub.add_parser("export-cnf", parents=[common, data], help="write DIMACS CNF")
    p.set_defaults(func=cmd_export_cnf)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MissingExternalData as exc:
        print(f"error: missing external data\n{exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, KSLabError, json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
