"""Batch command line: solve, generate, certify, project, best-response, sweep.

Exit codes: 0 success, 1 validation/usage error, 2 nonconvergence or
solver failure, 3 enumeration size limit.
"""

from __future__ import annotations

import argparse
import csv
import io as _stringio
import json
import sys
import time

import numpy as np

from .best_response import (
    DEFAULT_ENUMERATION_CAP,
    exact_best_response,
    curvature,
    forward_greedy,
    greedy_alpha_bound,
    reverse_greedy,
)
from .colgen import ColGenConfig, solve_colgen
from .errors import (
    DomainError,
    EnumerationCapError,
    GameError,
    GenerationError,
    InfeasibleMarginalError,
    NonconvergenceError,
    NumericalInconsistencyError,
    SolverFailureError,
    ValidationError,
)
from .game import MixedDefenderStrategy, expected_undetection, worst_case_attack_value
from .io import (
    generate_geometric,
    parse_result,
    read_instance,
    rho_from_document,
    serialize_instance,
    serialize_result,
    sigma_from_document,
)
from .mwu import MWUConfig, solve_mwu
from .projection import project_linear, project_sorted

_METHODS = ("cg-exact", "cg-fg", "cg-rg", "mwu-fg", "mwu-rg", "mwu-exact")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_vector(path: str, *keys: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
    if isinstance(doc, dict):
        for key in keys:
            if key in doc:
                doc = doc[key]
                break
        else:
            raise ValidationError(f"{path}: expected an array or one of {keys}")
    vec = np.asarray(doc, dtype=float)
    if vec.ndim != 1 or vec.size == 0:
        raise ValidationError(f"{path}: expected a nonempty 1-d array")
    return vec


def build_parser() -> _Parser:
    parser = _Parser(prog="inspection-game", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    solve = sub.add_parser("solve", help="compute an equilibrium strategy profile")
    solve.add_argument("--method", choices=_METHODS, required=True)
    solve.add_argument("--instance", required=True)
    solve.add_argument("--epsilon", type=float, default=None,
                       help="termination/accuracy target; default 0.001 * m")
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--out", default="-")
    solve.add_argument("--trace", default=None,
                       help="write one CSV line per iteration to this path")
    solve.add_argument("--exact-br-cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    solve.add_argument("--threads", type=int, default=1,
                       help="accepted for compatibility; evaluation is vectorized "
                            "and results do not depend on this value")
    solve.set_defaults(func=_cmd_solve)

    gen = sub.add_parser("generate", help="generate a synthetic geometric instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, required=True, help="target component count")
    gen.add_argument("--radius", type=float, default=0.08)
    gen.add_argument("--p-low", type=float, default=0.5)
    gen.add_argument("--p-high", type=float, default=1.0)
    gen.add_argument("--r-a-fraction", type=float, default=0.02)
    gen.add_argument("--r-d", type=int, default=None)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", default="-")
    gen.set_defaults(func=_cmd_generate)

    cert = sub.add_parser("certify", help="bound the quality of a stored strategy")
    cert.add_argument("--instance", required=True)
    cert.add_argument("--strategy", required=True, help="result document to certify")
    cert.add_argument("--exact-br-cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    cert.add_argument("--out", default="-")
    cert.set_defaults(func=_cmd_certify)

    proj = sub.add_parser("project", help="entropy-project a positive vector")
    proj.add_argument("--rho-tilde", required=True)
    proj.add_argument("--r-a", type=int, required=True)
    proj.add_argument("--algo", choices=("sorted", "linear"), default="linear")
    proj.add_argument("--out", default="-")
    proj.set_defaults(func=_cmd_project)

    br = sub.add_parser("best-response", help="defender best response to marginals")
    br.add_argument("--instance", required=True)
    br.add_argument("--rho", required=True)
    br.add_argument("--algo", choices=("exact", "fg", "rg"), default="exact")
    br.add_argument("--exact-br-cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    br.add_argument("--out", default="-")
    br.set_defaults(func=_cmd_best_response)

    sweep = sub.add_parser("sweep", help="run one method across detector budgets")
    sweep.add_argument("--instance", required=True)
    sweep.add_argument("--method", choices=_METHODS, required=True)
    sweep.add_argument("--r-d-values", required=True,
                       help="comma-separated detector budgets, e.g. 1,2,4")
    sweep.add_argument("--epsilon", type=float, default=None)
    sweep.add_argument("--max-iter", type=int, default=None)
    sweep.add_argument("--exact-br-cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    sweep.add_argument("--out", default="-")
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def _run_method(instance, method, epsilon, max_iter, exact_br_cap, trace_path=None):
    if epsilon is None:
        epsilon = 0.001 * instance.m
    if method.startswith("cg-"):
        mode = {"cg-exact": "exact", "cg-fg": "forward_greedy", "cg-rg": "reverse_greedy"}[method]
        config = ColGenConfig(
            pricing_mode=mode,
            epsilon=epsilon,
            max_iterations=max_iter if max_iter is not None else 10_000,
            exact_br_cap=exact_br_cap,
        )
        result = solve_colgen(instance, config)
        if trace_path is not None:
            lines = ["iteration,value,term\n"]
            for it, value, rc in result.diagnostics["trace"]:
                lines.append(f"{it},{value!r},{rc!r}\n")
            _write_text("".join(lines), trace_path)
        return result

    mode = {"mwu-fg": "forward_greedy", "mwu-rg": "reverse_greedy", "mwu-exact": "exact"}[method]
    config = MWUConfig(
        epsilon=epsilon,
        tau=max_iter,
        best_response_mode=mode,
        exact_br_cap=exact_br_cap,
        record_trace=trace_path is not None,
    )
    result = solve_mwu(instance, config)
    if trace_path is not None:
        lines = ["iteration,value,term\n"]
        running = 0.0
        for t, _key, played, _mass in result.diagnostics["trace"].entries:
            running += played
            lines.append(f"{t},{running / t!r},{played!r}\n")
        _write_text("".join(lines), trace_path)
    return result


def _cmd_solve(args) -> int:
    instance = read_instance(args.instance)
    try:
        result = _run_method(
            instance, args.method, args.epsilon, args.max_iter,
            args.exact_br_cap, trace_path=args.trace,
        )
    except NonconvergenceError as exc:
        if exc.incumbent is not None:
            _write_text(serialize_result(exc.incumbent), args.out)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_text(serialize_result(result), args.out)
    return 0


def _cmd_generate(args) -> int:
    instance = generate_geometric(
        n=args.n,
        m_edges_target=args.m,
        radius=args.radius,
        p_low=args.p_low,
        p_high=args.p_high,
        r_A_fraction=args.r_a_fraction,
        seed=args.seed,
        r_D=args.r_d,
    )
    _write_text(serialize_instance(instance), args.out)
    return 0


def _cmd_certify(args) -> int:
    instance = read_instance(args.instance)
    with open(args.strategy, "r", encoding="utf-8") as fh:
        doc = parse_result(fh.read())
    sigma = sigma_from_document(doc, instance)
    sigma.validate_for(instance)
    attack_value, attack_rho = worst_case_attack_value(instance, sigma)
    out = {
        "attacker_best_response": attack_value,
        "attacker_rho": [float(x) for x in attack_rho.rho],
        "alpha": greedy_alpha_bound(instance)
        if np.isfinite(greedy_alpha_bound(instance)) else "infinity",
    }
    rho = rho_from_document(doc, instance)
    if rho is not None:
        try:
            _, value = exact_best_response(instance, rho, cap=args.exact_br_cap)
            out["defender_best_response"] = {"value": value, "exact": True}
        except EnumerationCapError:
            report = curvature(instance, rho)
            rg = reverse_greedy(instance, rho)
            rg_value = expected_undetection(
                instance, MixedDefenderStrategy.point_mass(rg), rho
            )
            out["defender_best_response"] = {
                "value": rg_value * (1.0 - report.c),
                "exact": False,
                "note": "bound, not exact",
            }
    _write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_project(args) -> int:
    vec = _load_vector(args.rho_tilde, "rho_tilde", "rho")
    algo = project_sorted if args.algo == "sorted" else project_linear
    projected = algo(vec, args.r_a)
    _write_text(json.dumps([float(x) for x in projected.rho]) + "\n", args.out)
    return 0


def _cmd_best_response(args) -> int:
    instance = read_instance(args.instance)
    vec = _load_vector(args.rho, "rho", "rho_A")
    if vec.size != instance.m:
        raise ValidationError("marginal vector length does not match the instance")
    if args.algo == "exact":
        placement, value = exact_best_response(instance, vec, cap=args.exact_br_cap)
    else:
        placement = (forward_greedy if args.algo == "fg" else reverse_greedy)(instance, vec)
        value = float(instance.undetection_row(placement) @ vec)
    doc = {
        "set": [instance.locations[v] for v in placement.key()],
        "value": value,
    }
    _write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_sweep(args) -> int:
    instance = read_instance(args.instance)
    try:
        budgets = [int(tok) for tok in args.r_d_values.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad --r-d-values: {exc}") from exc
    if not budgets:
        raise ValidationError("--r-d-values must name at least one budget")
    buf = _stringio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "r_D", "value_estimate", "worst_case_attacker", "wall_ms"])
    for r_d in budgets:
        inst = instance.with_budgets(r_D=r_d)
        start = time.perf_counter()
        result = _run_method(inst, args.method, args.epsilon, args.max_iter, args.exact_br_cap)
        wall_ms = (time.perf_counter() - start) * 1000.0
        writer.writerow([
            args.method, r_d, repr(result.value),
            repr(result.certificates.attacker_best_response), repr(round(wall_ms, 3)),
        ])
    _write_text(buf.getvalue(), args.out)
    return 0


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        print(parser.format_usage(), file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NonconvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverFailureError, NumericalInconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, DomainError, InfeasibleMarginalError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
