"""Command-line front end.

Exit codes: 0 affirmative, 1 negative verdict, 2 inconclusive, 3 input error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from .basis import dissect, emit_protocol
from .certify import (
    PreconditionError,
    SearchConfig,
    closed_form_certificate,
    max_residual,
    orthogonal_triple,
    precondition_check,
    scan_chi,
    search_certificate,
    verify_certificate,
)
from .deviation import DeviationKind, d_ce, d_finite, d_mf, evaluate, outcome_distribution
from .protocol import simulate
from .splitting import SplitConfig, SplitError, equivalence_check, split_protocol

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("locclab")

CLOSED_FORMS = {"triple": closed_form_certificate}


class Reporter:
    def __init__(self, args, command: str):
        self.args = args
        self.report = {
            "command": command,
            "argv": list(args.argv),
            "inputs": {},
            "results": {},
            "tolerances": {},
            "seed": args.seed,
        }

    def input(self, name: str, path):
        self.report["inputs"][name] = {"path": str(path), "sha256": formats.digest(path)}
        return formats.read_json(path)

    def emit(self, code: int) -> int:
        self.report["exit_code"] = code
        if self.args.json:
            sys.stdout.write(formats.to_json(self.report))
        else:
            for key, value in self.report["results"].items():
                print(f"{key}: {_human(value)}")
        return code


def _human(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, list) and value and isinstance(value[0], list):
        return "\n  " + "\n  ".join(" ".join(f"{x:.6f}" for x in row) for row in value)
    return str(value)


def _write(path, obj) -> None:
    Path(path).write_text(formats.to_json(obj))


def _load_measurement(rep: Reporter):
    if rep.args.protocol is None:
        raise formats.FormatError("--protocol is required")
    data = rep.input("protocol", rep.args.protocol)
    if "effects" in data:
        return formats.load_povm(data), None
    return None, formats.load_protocol(data)


def _table(povm, tree, family):
    if povm is not None:
        return outcome_distribution(povm, family)
    return simulate(tree, family)


def cmd_deviation(args) -> int:
    rep = Reporter(args, "deviation")
    family = formats.load_states(rep.input("states", args.states))
    povm, tree = _load_measurement(rep)
    p = _table(povm, tree, family)
    kind = DeviationKind.parse(args.measure)
    rep.report["results"] = {"measure": kind.value, "deviation": evaluate(kind, p), "outcome_table": p.tolist()}
    if kind is DeviationKind.CONDITIONAL_ENTROPY:
        rep.report["results"]["deviation_bits"] = evaluate(kind, p) / np.log(2)
    return rep.emit(EXIT_OK)


def cmd_simulate(args) -> int:
    rep = Reporter(args, "simulate")
    family = formats.load_states(rep.input("states", args.states))
    _, tree = _load_measurement(rep)
    if tree is None:
        raise formats.FormatError("simulate needs a protocol tree, not a POVM")
    p = simulate(tree, family)
    rep.report["results"] = {
        "leaves": p.shape[1],
        "d_mf": d_mf(p),
        "d_ce": d_ce(p),
        "d_finite": d_finite(p),
        "outcome_table": p.tolist(),
    }
    return rep.emit(EXIT_OK)


def cmd_split(args) -> int:
    rep = Reporter(args, "split")
    family = formats.load_states(rep.input("states", args.states))
    _, tree = _load_measurement(rep)
    if tree is None or args.delta is None:
        raise formats.FormatError("split needs --protocol (a tree) and --delta")
    config = SplitConfig(args.delta, args.measure, level_tol=args.tol or 1e-6)
    rep.report["tolerances"] = {"level_tol": config.level_tol}
    try:
        result = split_protocol(tree, config, family)
    except SplitError as exc:
        rep.report["results"] = {"error": str(exc)}
        return rep.emit(EXIT_INCONCLUSIVE)
    residual = equivalence_check(tree, result, family)
    rep.report["results"] = {
        "iterations": result.iterations,
        "stage_one_leaves": len(result.stage_one.leaves()),
        "boundary_leaves": len(result.s_delta),
        "stage_one_deviations": result.stage_one_deviations,
        "equivalence_residual": residual,
    }
    if args.out:
        _write(args.out, {
            "modified": formats.dump_protocol(result.modified),
            "stage_one": formats.dump_protocol(result.stage_one),
            "forget_map": result.forget_map.tolist(),
            "equivalence_residual": residual,
        })
    return rep.emit(EXIT_OK)


def cmd_verify_cert(args) -> int:
    rep = Reporter(args, "verify-cert")
    family = formats.load_states(rep.input("states", args.states))
    if args.cert is None or args.chi is None:
        raise formats.FormatError("verify-cert needs --cert and --chi")
    cert_op = formats.load_product_operator(rep.input("cert", args.cert))
    tol = args.tol or 1e-8
    rep.report["tolerances"] = {"tol": tol, "psd_tol": 1e-9}
    cert = verify_certificate(cert_op, family, args.chi, tol=tol)
    rep.report["results"] = {"passed": cert.passed, "chi": args.chi, "traces": cert.traces, **cert.residuals}
    return rep.emit(EXIT_OK if cert.passed else EXIT_NEGATIVE)


def _search_config(args) -> SearchConfig:
    return SearchConfig(restarts=args.restarts, seed=args.seed, verify_tol=args.tol or 1e-8)


def cmd_search_cert(args) -> int:
    rep = Reporter(args, "search-cert")
    family = formats.load_states(rep.input("states", args.states))
    if args.chi is None:
        raise formats.FormatError("search-cert needs --chi")
    config = _search_config(args)
    rep.report["tolerances"] = {"verify_tol": config.verify_tol, "convergence": config.tol}
    try:
        result = search_certificate(family, args.chi, config)
    except PreconditionError as exc:
        rep.report["results"] = {"precondition": False, "error": str(exc)}
        return rep.emit(EXIT_NEGATIVE)
    cert = result.certificate
    rep.report["results"] = {
        "status": result.status,
        "restarts_used": result.restarts_used,
        "objective": result.objective,
        "traces": cert.traces,
        **cert.residuals,
        "certificate": formats.dump_product_operator(cert.E),
    }
    if args.out:
        _write(args.out, formats.dump_product_operator(cert.E))
    return rep.emit(EXIT_OK if result.status == "found" else EXIT_INCONCLUSIVE)


def cmd_scan_chi(args) -> int:
    rep = Reporter(args, "scan-chi")
    family = formats.load_states(rep.input("states", args.states))
    config = _search_config(args)
    rep.report["tolerances"] = {"verify_tol": config.verify_tol}
    builder = CLOSED_FORMS[args.closed_form] if args.closed_form else None
    try:
        scan = scan_chi(family, args.grid, config, closed_form=builder)
    except PreconditionError as exc:
        rep.report["results"] = {"precondition": False, "error": str(exc)}
        return rep.emit(EXIT_NEGATIVE)
    rep.report["results"] = {
        "verdict": "condition satisfied on grid" if scan.verdict == "satisfied" else "inconclusive",
        "inconclusive_at": scan.inconclusive_at,
        "points": scan.points,
    }
    return rep.emit(EXIT_OK if scan.verdict == "satisfied" else EXIT_INCONCLUSIVE)


def cmd_precheck(args) -> int:
    rep = Reporter(args, "precheck")
    family = formats.load_states(rep.input("states", args.states))
    pre = precondition_check(family, restarts=args.restarts, seed=args.seed)
    rep.report["tolerances"] = {"overlap_margin": 1e-6, "kernel_tol": 1e-9}
    rep.report["results"] = {"passed": pre.passed, "kernel_dim": pre.kernel_dim, "max_product_overlap": pre.max_overlap}
    if pre.witness is not None:
        rep.report["results"]["product_kernel_vector"] = [formats.complex_vec(v) for v in pre.witness]
    return rep.emit(EXIT_OK if pre.passed else EXIT_NEGATIVE)


def cmd_appendix_e(args) -> int:
    rep = Reporter(args, "appendix-e")
    if args.chi is None:
        raise formats.FormatError("appendix-e needs --chi")
    cert = closed_form_certificate(args.chi)
    data = formats.dump_product_operator(cert)
    if args.out:
        _write(args.out, data)
    check = verify_certificate(cert, orthogonal_triple(), args.chi)
    rep.report["tolerances"] = {"verify_tol": 1e-8}
    rep.report["results"] = {"chi": args.chi, "max_residual": max_residual(check), "certificate": data}
    return rep.emit(EXIT_OK)


def cmd_dissect(args) -> int:
    rep = Reporter(args, "dissect")
    if args.basis is None:
        raise formats.FormatError("dissect needs --basis")
    basis = formats.load_basis(rep.input("basis", args.basis))
    result = dissect(basis, tol=args.tol or 1e-9)
    rep.report["tolerances"] = {"overlap_tol": args.tol or 1e-9}
    rep.report["results"] = {"decision": result.decision.value}
    if result.discriminable:
        tree = emit_protocol(result, basis)
        p = simulate(tree, basis.family())
        rep.report["results"].update({"protocol_depth": tree.depth(), "d_mf": d_mf(p)})
        if args.out:
            _write(args.out, formats.dump_protocol(tree))
        return rep.emit(EXIT_OK)
    rep.report["results"]["witness"] = result.witness
    rep.report["results"]["note"] = (
        "complete product basis: no finite protocol, hence no asymptotically perfect LOCC protocol either"
    )
    return rep.emit(EXIT_NEGATIVE)


COMMANDS = {
    "deviation": cmd_deviation,
    "simulate": cmd_simulate,
    "split": cmd_split,
    "verify-cert": cmd_verify_cert,
    "search-cert": cmd_search_cert,
    "scan-chi": cmd_scan_chi,
    "precheck": cmd_precheck,
    "appendix-e": cmd_appendix_e,
    "dissect": cmd_dissect,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--states")
    common.add_argument("--protocol", "--povm", dest="protocol", help="protocol tree or POVM JSON file")
    common.add_argument("--basis")
    common.add_argument("--cert")
    common.add_argument("--chi", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--measure", choices=["mf", "ce", "finite"], default="mf")
    common.add_argument("--grid", type=int, default=11)
    common.add_argument("--restarts", type=int, default=64)
    common.add_argument("--seed", type=int, default=int(os.environ.get("LOCCLAB_SEED", "0")))
    common.add_argument("--tol", type=float)
    common.add_argument("--json", action="store_true", help="print the full machine-readable report")
    common.add_argument("--out")
    common.add_argument("--closed-form", choices=sorted(CLOSED_FORMS), help="closed-form certificate builder for scan-chi")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="locclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    args.argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.states is None and args.command not in ("appendix-e", "dissect"):
        print(f"{args.command}: --states is required", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (formats.FormatError, ValueError, KeyError, TypeError, IndexError) as exc:
        print(f"{args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
