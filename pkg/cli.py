#!/usr/bin/env python3
"""
kaehler - command line front end
================================
    python cli.py report --exponents 2,2,2
    python cli.py verify --exponents 2,3,2 --suite curvature
    python cli.py jets --exponents 2,2,2 --l 1 --k 1
    python cli.py mcm --m 2 --n 2 --k 1 --l 1

Reports go to stdout; logs go to stderr. Exit codes: 0 pass, 1 failed
check, 2 bad input, 3 Gröbner degree cap hit.
"""

import os
import sys
import json
import asyncio
import argparse
import logging
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv

# Load environment variables first
load_dotenv()

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import KaehlerError, ResourceError, VerificationFailure
from exactpoly import DEFAULT_DEGREE_CAP
from linalg import charpoly3
from ellipsoid import build_kaehler, build_ring, free_module, tangent_generators, validate_exponents
from connection import chern_report, curvature, delta_of_M, projectivity_report
from jets import free_connection, lk_curvature, projective_basis_connection
from mcm import build_factorization, factorization_sweep, verify_factorization
from observability import get_prometheus_metrics, setup_json_logging, verification_tracker
from reports import render_report
from verification import SUITES, SuiteConfig, run_suites

logger = logging.getLogger("cli")

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


def _env_flag(name: str, default: bool) -> bool:
    return os.getenv(name, str(default)).strip().lower() in ("1", "true", "yes", "on")


def parse_exponents(text: str) -> List[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"exponents must be comma-separated integers, got '{text}'")


def print_startup_banner(args: argparse.Namespace):
    """Log the effective configuration."""
    logger.info("Starting kaehler %s", args.command)
    logger.info("  Exponents:    %s", ",".join(map(str, getattr(args, "exponents", []) or [])) or "-")
    logger.info("  Degree cap:   %s", args.cap if args.cap is not None else DEFAULT_DEGREE_CAP)
    logger.info("  Seed:         %s", getattr(args, "seed", "-"))
    logger.info("  Samples:      %s", getattr(args, "samples", "-"))
    logger.info("  Parallel:     %s", not getattr(args, "sequential", True))
    logger.info("  Log file:     %s", os.getenv("KAEHLER_LOG_FILE") or "Disabled")


def _emit(args: argparse.Namespace, payload: Dict[str, Any], text: str):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        print(text)


# =====================================================
# COMMANDS
# =====================================================

def cmd_report(args: argparse.Namespace) -> int:
    exps = validate_exponents(args.exponents)
    ring = build_ring(exps, args.cap)
    km = build_kaehler(ring)
    fields = tangent_generators(ring)

    by_name = {f.name: f for f in fields}
    pairs = []
    for row in chern_report(km):
        a, b = (by_name[name] for name in row["pair"].split(","))
        R = curvature(a, b, km)
        entry = dict(row, curvature=R.to_text())
        if ring.k == 3:
            cp = charpoly3(R)
            entry["charpoly3"] = {
                "trace": ring.format(cp.trace),
                "p_A": ring.format(cp.p_A),
                "minor_sum": ring.format(cp.minor_sum),
                "det": ring.format(cp.det),
            }
        pairs.append(entry)

    projectivity = projectivity_report(km)
    payload = {
        "ring": ring.label,
        "H": ring.format(ring.H),
        "G": km.G.to_text(),
        "M": km.M.to_text(),
        "tangent_generators": {f.name: f.format() for f in fields},
        "connection_matrices": {f.name: delta_of_M(f, km).to_text() for f in fields},
        "curvature": pairs,
        "projectivity": projectivity.model_dump(),
    }

    lines = [f"ring: Q[x1..x{ring.k}] / ({payload['H']})", "", "M ="]
    lines += ["  [" + ", ".join(r) + "]" for r in payload["M"]]
    lines += ["", "tangent generators:"]
    lines += [f"  {name} = {text}" for name, text in payload["tangent_generators"].items()]
    for name, mat in payload["connection_matrices"].items():
        lines += ["", f"{name}(M) ="] + ["  [" + ", ".join(r) + "]" for r in mat]
    for entry in pairs:
        lines += ["", f"R({entry['pair']}) ="] + ["  [" + ", ".join(r) + "]" for r in entry["curvature"]]
        lines.append(f"  routes agree: {entry['routes_agree']}  flat: {entry['flat']}")
        lines.append(f"  matrix trace: {entry['matrix_trace']}  module trace: {entry['module_trace_formula']}"
                     f" / {entry['module_trace_definitional']}")
        if "charpoly3" in entry:
            cp = entry["charpoly3"]
            lines.append(f"  charpoly3: trace {cp['trace']}, p_A {cp['p_A']}, minor sum {cp['minor_sum']}, det {cp['det']}")
    lines += ["", render_report(projectivity)]
    _emit(args, payload, "\n".join(lines))

    ok = projectivity.success and all(e["routes_agree"] and e["module_traces_agree"] for e in pairs)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    config = SuiteConfig(
        exponents=validate_exponents(args.exponents),
        seed=args.seed,
        samples=args.samples,
        degree_cap=args.cap,
        corrupt=args.corrupt,
    )
    names = [args.suite] if args.suite else list(SUITES)
    verification_tracker.reset()
    reports = asyncio.run(run_suites(config, names, parallel=not args.sequential, timing=args.timing))

    success = all(r.success for r in reports)
    payload: Dict[str, Any] = {"reports": [r.model_dump() for r in reports], "success": success}
    text = "\n\n".join(render_report(r) for r in reports)
    if args.timing:
        payload["summary"] = verification_tracker.get_summary()
        text += "\n\n" + json.dumps(payload["summary"], indent=2)
    _emit(args, payload, text)
    return EXIT_OK if success else EXIT_FAILED


def cmd_jets(args: argparse.Namespace) -> int:
    ring = build_ring(validate_exponents(args.exponents), args.cap)
    L = args.l + args.k
    if args.free:
        module = free_module(ring, args.free)
        conn = free_connection(module, L)
    else:
        module = build_kaehler(ring)
        conn = projective_basis_connection(module, L)

    values = []
    witness = None
    for j, e in enumerate(module.generators()):
        K = lk_curvature(conn, args.l, args.k, e)
        values.append({"generator": j + 1, "zero": K.is_zero(), "value": K.to_text()})
        if not K.is_zero() and witness is None:
            witness = f"K^{{{args.l},{args.k}}}(e{j + 1}) = ({', '.join(K.to_text())})"
    flat = witness is None

    payload = {"module": module.label, "connection": conn.name, "l": args.l, "k": args.k,
               "flat": flat, "witness": witness, "values": values}
    lines = [f"module: {module.label}", f"connection: {conn.name}",
             f"K^{{{args.l},{args.k}}}: {'flat' if flat else 'non-flat'}"]
    if witness:
        lines.append(f"witness: {witness}")
    for entry in values:
        lines.append(f"  e{entry['generator']}: " + ("0" if entry["zero"] else "(" + ", ".join(entry["value"]) + ")"))
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_mcm(args: argparse.Namespace) -> int:
    if args.sweep:
        report = factorization_sweep((2, 3), (2, 3))
        payload = {"report": report.model_dump()}
        _emit(args, payload, render_report(report))
        return EXIT_OK if report.success else EXIT_FAILED

    pair = build_factorization(args.m, args.n, args.k, args.l)
    if args.corrupt:
        pair = pair.perturbed(0, 0)
    report = verify_factorization(pair)
    ctx = pair.phi.ctx
    payload = {
        "f": ctx.format(pair.f),
        "phi": pair.phi.to_text(),
        "psi": pair.psi.to_text(),
        "report": report.model_dump(),
    }
    lines = [f"f = {payload['f']}", "phi ="]
    lines += ["  [" + ", ".join(r) + "]" for r in payload["phi"]]
    lines += ["psi ="] + ["  [" + ", ".join(r) + "]" for r in payload["psi"]]
    lines += [render_report(report)]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if report.success else EXIT_FAILED


# =====================================================
# ENTRY POINT
# =====================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kaehler", description="Connections, curvature and jets on ellipsoid rings")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON instead of text")
    common.add_argument("--cap", type=int, default=None, help="Gröbner degree cap (KAEHLER_DEGREE_CAP)")
    common.add_argument("--metrics-file", default=None, help="write Prometheus metrics here after the run")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", parents=[common], help="M, tangent fields, curvature and traces")
    p.add_argument("--exponents", type=parse_exponents, required=True)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("verify", parents=[common], help="run the verification suites")
    p.add_argument("--exponents", type=parse_exponents, default=[2, 2, 2])
    p.add_argument("--seed", type=int, default=int(os.getenv("KAEHLER_SEED", 0)))
    p.add_argument("--samples", type=int, default=int(os.getenv("KAEHLER_SAMPLES", 20)))
    p.add_argument("--suite", choices=list(SUITES), default=None)
    p.add_argument("--corrupt", action="store_true", help="perturb M[1][1] (negative control)")
    p.add_argument("--sequential", action="store_true",
                   default=not _env_flag("KAEHLER_PARALLEL_SUITES", True))
    p.add_argument("--timing", action="store_true", help="include durations and the check summary")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("jets", parents=[common], help="(l,k)-curvature of an infinity-connection")
    p.add_argument("--exponents", type=parse_exponents, default=[2, 2, 2])
    p.add_argument("--free", type=int, default=None, help="use the free module of this rank instead of Omega")
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(handler=cmd_jets)

    p = sub.add_parser("mcm", parents=[common], help="matrix factorization of x^m + y^n + z^2")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--sweep", action="store_true", help="every (k,l) for m, n in {2,3}")
    p.add_argument("--corrupt", action="store_true", help="perturb phi[1][1] (negative control)")
    p.set_defaults(handler=cmd_mcm)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_json_logging("kaehler")
    print_startup_banner(args)

    try:
        code = args.handler(args)
    except ResourceError as exc:
        logger.error("Resource cap reached: %s", exc, extra={'degree_cap': exc.cap, 'error_type': "ResourceError"})
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_RESOURCE
    except VerificationFailure as exc:
        logger.error("Self check failed: %s", exc, extra={'witness': exc.witness, 'error_type': "VerificationFailure"})
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_FAILED
    except KaehlerError as exc:
        logger.error("Input rejected: %s", exc, extra={'error_type': type(exc).__name__})
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT

    if args.metrics_file:
        with open(args.metrics_file, "w") as fh:
            fh.write(get_prometheus_metrics())
    return code


if __name__ == "__main__":
    sys.exit(main())
