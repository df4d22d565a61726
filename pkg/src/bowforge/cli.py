"""Command-line interface: thin wrappers over the library operations.

Exit codes: 0 all checks pass, 1 a validation check failed, 2 structural
or I/O error (unreadable file, shape mismatch, bad arguments).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bowfile
from ._linalg import DEFAULT_TOL, DERIVED_TOL
from .bowdata import (
    ValidationReport,
    check_chain_invariants,
    check_exactness_all,
    validate_relations,
)
from .errors import (
    BowforgeError,
    ParseError,
    RankIndeterminate,
    StructuralError,
    ValidationFailure,
)
from .export import export_bow_complex
from .generator import generate
from .monad import ScanConfig, SurfacePoint, fiber_at, is_locally_free_at, scan_local_freeness
from .orthosymplectic import verify_pairing_relations
from .topology import chern_summary, compute_dimensions, validate_topology

PASS_EXIT, FAIL_EXIT, ERROR_EXIT = 0, 1, 2


def _default_tol() -> float:
    env = os.environ.get("BOWFORGE_TOL")
    return float(env) if env else DEFAULT_TOL


def _emit(document: dict, fmt: str) -> None:
    if fmt == "machine":
        sys.stdout.write(bowfile.canonical_dumps(document))
        return
    _emit_human(document)


def _emit_human(document: dict, indent: int = 0) -> None:
    pad = "  " * indent
    for key, value in document.items():
        if isinstance(value, dict):
            print(f"{pad}{key}:")
            _emit_human(value, indent + 1)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{pad}{key}:")
            for item in value:
                parts = "  ".join(f"{k}={_short(v)}" for k, v in item.items())
                print(f"{pad}  - {parts}")
        else:
            print(f"{pad}{key}: {_short(value)}")


def _short(value):
    if isinstance(value, float):
        return f"{value:.3e}"
    if isinstance(value, list) and len(value) > 8:
        return f"[{len(value)} entries]"
    return value


def _report_doc(report: ValidationReport) -> dict:
    return {
        "verdict": report.verdict,
        "tolerance": report.tol,
        "checks": [
            {"name": c.name, "residual": c.residual, "pass": c.passed}
            for c in report.checks
        ],
    }


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _load_bow(path: str):
    bf = bowfile.parse(_read(path))
    return bf, bf.require_datum()


def cmd_dims(args) -> int:
    topo = bowfile.parse_topology(_read(args.file))
    problems = validate_topology(topo)
    if problems:
        _emit({"verdict": "fail", "violations": [str(p) for p in problems]}, args.format)
        return FAIL_EXIT
    dims = compute_dimensions(topo)
    chern = chern_summary(topo)
    _emit(
        {
            "d": list(dims.d),
            "dn": list(dims.dn),
            "c1": list(chern.c1),
            "c2": chern.c2,
            "flag_degrees": list(chern.flag_degrees),
        },
        args.format,
    )
    return PASS_EXIT


def cmd_validate(args) -> int:
    _, datum = _load_bow(args.file)
    problems = validate_topology(datum.topo)
    report = validate_relations(datum, tol=args.tol)
    doc = _report_doc(report)
    doc["topology_violations"] = [str(p) for p in problems]
    _emit(doc, args.format)
    return PASS_EXIT if report.passed and not problems else FAIL_EXIT


def cmd_exactness(args) -> int:
    _, datum = _load_bow(args.file)
    results = check_exactness_all(datum, tol=args.tol)
    doc = {
        "verdict": "pass" if all(r.passed for r in results) else "fail",
        "steps": [
            {
                "index": r.index,
                "status": r.status,
                "witness_etas": [
                    [complex(w.eta).real, complex(w.eta).imag] for w in r.witnesses
                ],
            }
            for r in results
        ],
    }
    _emit(doc, args.format)
    return PASS_EXIT if all(r.passed for r in results) else FAIL_EXIT


def cmd_invariants(args) -> int:
    _, datum = _load_bow(args.file)
    report = check_chain_invariants(datum, tol=max(args.tol, DERIVED_TOL))
    _emit(_report_doc(report), args.format)
    return PASS_EXIT if report.passed else FAIL_EXIT


def cmd_gen(args) -> int:
    topo = bowfile.parse_topology(_read(args.file))
    datum = generate(topo, seed=args.seed)
    out = bowfile.BowFile(
        topo=topo, datum=datum, metadata={"seed": args.seed, "provenance": "bowforge gen"}
    )
    Path(args.output).write_bytes(bowfile.serialize(out))
    _emit({"written": args.output, "d": list(datum.dims.d), "dn": list(datum.dims.dn)}, args.format)
    return PASS_EXIT


def cmd_fiber(args) -> int:
    _, datum = _load_bow(args.file)
    xi = complex(args.xi)
    eta = complex(args.eta)
    if xi == 0:
        raise ParseError("--xi must be nonzero (psi is derived from the surface equation)")
    point = SurfacePoint.from_xi_eta(datum.topo.z, xi, eta)
    basis = fiber_at(datum, point)
    free = is_locally_free_at(datum, point)
    _emit(
        {
            "point": {
                "xi": bowfile.complex_to_doc(point.xi),
                "psi": bowfile.complex_to_doc(point.psi),
                "eta": bowfile.complex_to_doc(point.eta),
            },
            "rank": basis.shape[1],
            "locally_free": free.passed,
            "expected_rank": datum.topo.n,
        },
        args.format,
    )
    ok = free.passed and basis.shape[1] == datum.topo.n
    return PASS_EXIT if ok else FAIL_EXIT


def cmd_scan(args) -> int:
    _, datum = _load_bow(args.file)
    report = scan_local_freeness(datum, ScanConfig(n_random=args.n, seed=args.seed))
    doc = {
        "points": len(report.points),
        "failures": len(report.failures),
        "indeterminate": len(report.indeterminate),
        "expected_rank": report.expected_rank,
        "ranks_all_expected": report.ranks_all_expected,
        "verdict": "pass" if report.all_pass and report.ranks_all_expected else "fail",
        "failed_points": [
            {
                "eta": bowfile.complex_to_doc(p.point.eta),
                "xi": bowfile.complex_to_doc(p.point.xi),
                "kind": p.kind,
            }
            for p in report.failures
        ],
    }
    _emit(doc, args.format)
    return PASS_EXIT if doc["verdict"] == "pass" else FAIL_EXIT


def cmd_pairing(args) -> int:
    bf, datum = _load_bow(args.file)
    if bf.pairing is None:
        raise ParseError("file carries no pairing data")
    report = verify_pairing_relations(datum, bf.pairing, tol=args.tol)
    _emit(_report_doc(report), args.format)
    return PASS_EXIT if report.passed else FAIL_EXIT


def cmd_export_bow(args) -> int:
    _, datum = _load_bow(args.file)
    report = validate_relations(datum, tol=args.tol)
    if not report.passed:
        _emit(_report_doc(report), args.format)
        return FAIL_EXIT
    Path(args.output).write_text(bowfile.canonical_dumps(export_bow_complex(datum)))
    _emit({"written": args.output}, args.format)
    return PASS_EXIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bowforge", description="bow complexes and instanton monads"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=func)
        p.add_argument("--tol", type=float, default=_default_tol())
        p.add_argument("--format", choices=("human", "machine"), default="human")
        return p

    p = add("dims", cmd_dims, help="dimension vector and Chern summary of a topology")
    p.add_argument("file")
    p = add("validate", cmd_validate, help="check the defining matrix relations")
    p.add_argument("file")
    p = add("exactness", cmd_exactness, help="pointwise exactness of each chain step")
    p.add_argument("file")
    p = add("invariants", cmd_invariants, help="derived chain invariants")
    p.add_argument("file")
    p = add("gen", cmd_gen, help="generate a random datum for a topology")
    p.add_argument("file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p = add("fiber", cmd_fiber, help="fiber rank at a surface point")
    p.add_argument("file")
    p.add_argument("--xi", required=True)
    p.add_argument("--eta", required=True)
    p = add("scan", cmd_scan, help="local-freeness scan over sampled points")
    p.add_argument("file")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p = add("pairing", cmd_pairing, help="verify SO/Sp pairing identities")
    p.add_argument("file")
    p = add("export-bow", cmd_export_bow, help="emit the bow-complex document")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return ERROR_EXIT if exc.code not in (0, None) else PASS_EXIT
    try:
        return args.func(args)
    except (StructuralError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR_EXIT
    except RankIndeterminate as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return FAIL_EXIT
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return FAIL_EXIT
    except BowforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR_EXIT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
