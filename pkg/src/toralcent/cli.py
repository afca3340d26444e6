"""Command-line front end.

Every subcommand prints one JSON report to stdout (or ``--output``).  Reports
carry ``schema_version``, the subcommand name and a SHA-256 hash of the
canonicalized input plus options, so identical runs give identical bytes.
Wall-clock timings are included only with ``--timing``.

Exit codes: 0 success, 1 usage/parse error, 2 precondition violation,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import centralizer, constructor, dynamics, polyalg, spectrum
from .errors import NumericalFailure, ParseError, PreconditionError, ToralError
from .exact import IntMatrix, parse_matrix

SCHEMA_VERSION = 1
EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# input and output

def _load_json(path: str) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_matrix(path: str) -> IntMatrix:
    """A matrix file is a JSON array of rows, or an object with a "matrix" or "linear" entry."""
    obj = _load_json(path)
    if isinstance(obj, dict):
        obj = obj.get("matrix", obj.get("linear"))
    try:
        return parse_matrix(obj)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_map(path: str) -> dynamics.TorusMap:
    obj = _load_json(path)
    if isinstance(obj, list):
        obj = {"linear": obj}
    return dynamics.TorusMap.from_json(obj)


def _jsonable(x: Any) -> Any:
    """Floats become 17-significant-digit strings; numpy scalars and tuples are unwrapped."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return spectrum.repr_float(float(x))
    return x


def config_hash(inputs: Any, options: dict) -> str:
    blob = json.dumps({"inputs": inputs, "options": options}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _options(args: argparse.Namespace) -> dict:
    skip = {"func", "output", "timing", "threads", "file", "map", "g"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def render(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def schema_path() -> Path:
    return Path(str(resources.files("toralcent") / "schemas" / "report.schema.json"))


# ---------------------------------------------------------------------------
# subcommands

def cmd_analyze(args) -> tuple[Any, dict]:
    L = load_matrix(args.file)
    sp = spectrum.classify(L)
    pp = spectrum.has_property_p(L, sp)
    irreducible = polyalg.is_irreducible_q(sp.char_poly)
    result = {
        "matrix": L.to_json(),
        "dim": L.dim,
        "det": str(sp.det),
        "char_poly": [str(c) for c in sp.char_poly.coeffs],
        "char_poly_text": str(sp.char_poly),
        "irreducible": irreducible,
        "ergodic": spectrum.is_ergodic(L),
        "property_p": pp.to_json(),
        "no_three_same_modulus": spectrum.no_three_same_modulus(L, sp),
        "poly_in_tn": polyalg.poly_in_tn(sp.char_poly).n,
        "r1": sp.r1,
        "r2": sp.r2,
        "circle_pairs": sp.circle_pairs,
        "center_dim": sp.center_dim,
        "exponents": [c.to_json() for c in sp.exponents],
        "exponent_values": sp.values(),
        "rank_bound": sp.r1 + sp.r2 - 1,
    }
    spread = {}
    for r in args.spread or []:
        spread[str(r)] = spectrum.spread_spectrum(L, r, sp) if pp.holds else None
    result["spread"] = spread
    return L.to_json(), result


def cmd_centralizer(args) -> tuple[Any, dict]:
    L = load_matrix(args.file)
    if args.radius < 0:
        raise _UsageError("--radius must be non-negative")
    cl = centralizer.unit_search(centralizer.commutant_basis(L), args.radius)
    result = cl.to_json()
    result["generators"] = [u.name for u in cl.generators]
    result["hyperbolic"] = {u.name: u.hyperbolic for u in cl.units}
    if args.cone:
        cone = centralizer.cone_search_center_dominating(cl)
        result["cone"] = cone.to_json() if cone else None
    if args.subgroup:
        r, Q = int(args.subgroup[0]), float(args.subgroup[1])
        result["bounded_subgroup"] = centralizer.bounded_centralizer_subgroup(cl, r, Q).to_json()
    return L.to_json(), result


def cmd_construct(args) -> tuple[Any, dict]:
    budget = constructor.Budget(max_coeff=args.max_coeff, max_candidates=args.max_candidates,
                                seconds=args.seconds, max_power=args.max_power)
    res = constructor.construct_spread(args.dim, args.spread, budget)
    result = res.to_json()
    result["budget"] = budget.to_json()
    result["symplectic"] = constructor.symplectic_form(res.matrix).to_json()
    if args.matrix_out:
        Path(args.matrix_out).write_text(json.dumps(res.matrix.to_json()) + "\n", encoding="utf-8")
    return None, result


def cmd_dynamics(args) -> tuple[Any, dict]:
    f = load_map(args.map)
    inputs: dict[str, Any] = {"map": f.to_json()}
    result: dict[str, Any] = {"seed": args.seed}
    if args.cocycle is not None:
        sol = dynamics.solve_twisted_cocycle(f, args.cocycle, tol=args.tol, per_axis=args.per_axis, seed=args.seed)
        fresh = dynamics.stratified_sample(f.linear.dim, max(args.per_axis // 2, 2), args.seed + 7)
        result["cocycle"] = sol.to_json()
        result["cocycle"]["fresh_residual_sup"] = float(np.max(np.linalg.norm(sol.residual(fresh), axis=-1)))
        result["cocycle"]["holder_estimate"] = dynamics.holder_estimate(sol)
    if args.lyapunov:
        est = dynamics.lyapunov_spectrum(f, n_steps=args.steps, n_orbits=args.orbits, seed=args.seed)
        result["lyapunov"] = est.to_json()
        result["lyapunov"]["certified"] = spectrum.classify(f.linear).values()
    if args.fixed_points:
        result["fixed_points"] = dynamics.fixed_point_count(f).to_json()
    if args.semiconjugacy:
        H = dynamics.franks_manning(f, tol=args.tol, per_axis=args.per_axis, seed=args.seed)
        result["semiconjugacy"] = H.to_json()
        result["semiconjugacy"]["square_check"] = dynamics.commuting_pair_check(f.power(2), f, H)
    if args.volume_growth:
        g = f
        if args.g:
            g = load_map(args.g)
            inputs["g"] = g.to_json()
        vg = dynamics.center_volume_growth(f, g, n=args.steps_volume, c=args.bound_c, bound_eps=args.bound_eps,
                                           seed=args.seed)
        result["volume_growth"] = vg.to_json()
    if len(result) == 1:
        raise _UsageError("choose at least one of --cocycle, --lyapunov, --fixed-points, "
                          "--semiconjugacy, --volume-growth")
    return inputs, result


# ---------------------------------------------------------------------------
# parser and entry point

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall-clock seconds in the report")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (accepted for interface stability; results never depend on it)")

    p = _Parser(prog="toralcent", description="Centralizers and perturbations of toral automorphisms.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="spectral and arithmetic report for a matrix")
    a.add_argument("file", help="JSON matrix file")
    a.add_argument("--spread", type=int, action="append", metavar="R", help="test r-spread (repeatable)")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("centralizer", parents=[common], help="commutant, units and cone search")
    c.add_argument("file", help="JSON matrix file")
    c.add_argument("--radius", type=int, default=3, help="coefficient radius of the unit search")
    c.add_argument("--cone", action="store_true", help="search for a center-dominating element")
    c.add_argument("--subgroup", nargs=2, metavar=("R", "Q"), help="bounded subgroup for rank r and ratio Q")
    c.set_defaults(func=cmd_centralizer)

    k = sub.add_parser("construct", parents=[common], help="build a property-(P) matrix with r-spread spectrum")
    k.add_argument("--dim", type=int, required=True)
    k.add_argument("--spread", type=int, default=1)
    k.add_argument("--max-coeff", type=int, default=constructor.Budget.max_coeff)
    k.add_argument("--max-candidates", type=int, default=constructor.Budget.max_candidates)
    k.add_argument("--seconds", type=float, default=constructor.Budget.seconds)
    k.add_argument("--max-power", type=int, default=constructor.Budget.max_power)
    k.add_argument("--matrix-out", help="also write the matrix as a JSON file")
    k.set_defaults(func=cmd_construct)

    d = sub.add_parser("dynamics", parents=[common], help="numerical solvers for a perturbed automorphism")
    d.add_argument("map", help="JSON map config")
    d.add_argument("--cocycle", type=int, metavar="CLASS", help="solve the twisted equation for this exponent class")
    d.add_argument("--lyapunov", action="store_true")
    d.add_argument("--fixed-points", action="store_true")
    d.add_argument("--semiconjugacy", action="store_true")
    d.add_argument("--volume-growth", action="store_true")
    d.add_argument("--g", help="second map for --volume-growth (default: the map itself)")
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--per-axis", type=int, default=64, help="sample points per axis (up to three axes)")
    d.add_argument("--steps", type=int, default=100_000, help="Lyapunov orbit length")
    d.add_argument("--orbits", type=int, default=16)
    d.add_argument("--steps-volume", type=int, default=50, help="orbit length for --volume-growth")
    d.add_argument("--bound-c", type=float)
    d.add_argument("--bound-eps", type=float)
    d.add_argument("--seed", type=int, default=dynamics.DEFAULT_SEED)
    d.set_defaults(func=cmd_dynamics)
    return p


def _error_report(command: str | None, kind: str, exc: BaseException) -> dict:
    err = {"type": kind, "message": str(exc)}
    clause = getattr(exc, "clause", None)
    if clause:
        err["clause"] = clause
    return {"schema_version": SCHEMA_VERSION, "command": command, "error": err}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    command = None
    try:
        args = parser.parse_args(argv)
        command = args.command
        threads = args.threads if args.threads is not None else os.environ.get("THREADS")
        if threads is not None and int(threads) < 1:
            raise _UsageError("--threads must be positive")
        t0 = time.perf_counter()
        inputs, result = args.func(args)
        report = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config_hash": config_hash(inputs, _options(args)),
            "options": _options(args),
            "result": result,
        }
        if args.timing:
            report["timing_seconds"] = time.perf_counter() - t0
        text = render(report)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except (_UsageError, ParseError, ValueError) as exc:
        error, code, kind = exc, EXIT_PARSE, "parse"
        if isinstance(exc, PreconditionError):
            code, kind = EXIT_PRECONDITION, "precondition"
    except (NumericalFailure, ToralError) as exc:
        error, code, kind = exc, EXIT_NUMERICAL, "numerical"
    sys.stdout.write(render(_error_report(command, kind, error)))
    print(f"toralcent: {kind} error: {error}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
