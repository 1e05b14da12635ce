"""Command-line front end: ``ptq {oracle,estimate,verify,complexity,circuit}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import circuit as cir
from .builders import AUX_KINDS, build_term_circuit
from .complexity import scaling_report
from .estimator import MODES, EstimationError, estimate_all, fmt, round_floats
from .oracle import pt_corrections
from .synthesis import parse_backend
from .system import ProblemError, load_system

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``"2..10"``, ``"3"`` or ``"2,4,6"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad N range {text!r}") from None
    if not out or min(out) < 1:
        raise ConfigError(f"N range {text!r} must be nonempty and positive")
    return out


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", help="problem JSON file")
    common.add_argument("--mode", default="linearized", choices=MODES)
    common.add_argument("--ue-variant", default="improved", choices=("standard", "improved"))
    common.add_argument("--uv-backend", default="exact", help="exact | trotter:R")
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", default="json", choices=("json", "csv"))
    common.add_argument("--n", default="2..10", help="N range for complexity, e.g. 2..10")

    p = argparse.ArgumentParser(prog="ptq", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("oracle", parents=[common], help="classical corrections E^(1..4) and constituent sums")
    sub.add_parser("estimate", parents=[common], help="estimate every term from circuit runs")
    sub.add_parser("verify", parents=[common], help="run the invariant suite on the problem")
    sub.add_parser("complexity", parents=[common], help="gate-count scaling report")
    c = sub.add_parser("circuit", parents=[common], help="serialize a term circuit")
    c.add_argument("--term", required=True, help=f"eps<m> or one of {', '.join(AUX_KINDS)}")
    return p


def _load(args):
    if not args.problem:
        raise ConfigError("--problem is required for this command")
    try:
        return load_system(Path(args.problem))
    except OSError as exc:
        raise ConfigError(f"cannot read problem file: {exc}") from None


def _check_config(args, system) -> None:
    try:
        name, _ = parse_backend(args.uv_backend)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if name == "linearized":
        raise ConfigError("--uv-backend must be exact or trotter:R")
    if name == "trotter" and system.pauli_terms is None:
        raise ConfigError("trotter backend needs pauli_terms in the problem file")
    if (args.mode == "sampling") != (args.shots is not None):
        raise ConfigError("--shots is required with --mode sampling and only then")
    if args.shots is not None and args.shots <= 0:
        raise ConfigError("--shots must be positive")


def cmd_oracle(args) -> int:
    system = _load(args)
    corr = pt_corrections(system)
    d = corr.as_dict()
    d.pop("max_imag")
    d.pop("m_a_imag")
    if args.format == "csv":
        text = "quantity,value\n" + "".join(f"{k},{fmt(float(v))}\n" for k, v in d.items())
    else:
        text = json.dumps(round_floats({k: float(v) for k, v in d.items()}), indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    system = _load(args)
    _check_config(args, system)
    report = estimate_all(system, args.mode, args.ue_variant, args.uv_backend, args.shots, args.seed)
    _emit(report.to_csv() if args.format == "csv" else report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    system = _load(args)
    results = run_checks(system)
    if args.format == "csv":
        text = "check,ok,detail\n" + "".join(f"\"{r.name}\",{int(r.ok)},\"{r.detail}\"\n" for r in results)
    else:
        text = "".join(f"{'PASS' if r.ok else 'FAIL'}  {r.name}" + (f"  ({r.detail})" if r.detail else "") + "\n"
                       for r in results)
    _emit(text, args.out)
    failed = [r for r in results if not r.ok]
    for r in failed:
        _error("verification", f"{r.name}: {r.detail}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_complexity(args) -> int:
    report = scaling_report(parse_range(args.n))
    text = report.to_csv() if args.format == "csv" else json.dumps(
        [dict(N=r.N, M=r.M, standard_ue=r.standard_ue, improved_ue=r.improved_ue, circuit_e3=r.circuit_e3,
              circuit_e4=r.circuit_e4, ratio=float(fmt(r.ratio))) for r in report.rows], indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_circuit(args) -> int:
    system = _load(args)
    _check_config(args, system)
    backend = "linearized" if args.mode == "linearized" else args.uv_backend
    try:
        tc = build_term_circuit(system, args.term, args.ue_variant, backend)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    doc = cir.circuit_to_dict(tc.circuit)
    doc["term"] = {"name": tc.term, "post_select": tc.post_select, "signal_order": tc.signal_order,
                   "prefactor": [tc.prefactor.real, tc.prefactor.imag], "fragments": list(tc.fragments)}
    _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"oracle": cmd_oracle, "estimate": cmd_estimate, "verify": cmd_verify,
            "complexity": cmd_complexity, "circuit": cmd_circuit}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ProblemError, EstimationError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
