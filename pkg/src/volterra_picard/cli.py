"""Command-line front end.

Subcommands::

    volterra-picard run-example <id>   [solver flags]
    volterra-picard solve <config>     [solver flags]
    volterra-picard bounds <id|config> --eps EPS

Exit status is 0 on success, 1 on a numeric failure and 2 on a usage or
configuration error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from volterra_picard import exprlang
from volterra_picard.bounds import (
    DEFAULT_DENSITY,
    ContractionParams,
    ErrorReport,
    build_report,
    choose_m,
    estimate_residual_norm,
    mu,
    tail_sum,
)
from volterra_picard.errors import DomainError
from volterra_picard.problems import example, standard_points
from volterra_picard.quadrature import QuadratureRule
from volterra_picard.volterra import InitialGuess, Problem

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(Exception):
    """Invalid problem configuration or command-line values (exit 2)."""


class NumericError(Exception):
    """The computation itself failed (exit 1)."""


# key -> positional variables the expression may use
EXPR_FIELDS = {
    "a": ("x", "t"),
    "g": ("x", "t"),
    "K": ("x", "t", "y", "s", "u"),
    "u0": ("x",),
    "exact": ("x", "t"),
}
DEFAULT_NP = 3
NUMBER_FIELDS = ("alpha", "beta", "T", "M", "N")
REQUIRED = ("alpha", "beta", "T", "a", "g", "K", "u0", "M")


@dataclass
class ProblemSource:
    problem: Problem
    exact: Optional[Callable]
    label: str


def _number(key: str, raw) -> float:
    if isinstance(raw, bool):
        raise ConfigError(f"field {key!r}: expected a number, got {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            tree = exprlang.parse(raw)
            if exprlang.variables(tree):
                raise ConfigError(f"field {key!r}: constant expression must not use variables")
            return float(exprlang.eval_expr(tree, {}))
        except exprlang.ExprError as exc:
            raise ConfigError(f"field {key!r}: {exc}") from None
    raise ConfigError(f"field {key!r}: expected a number, got {raw!r}")


def load_config(path) -> ProblemSource:
    """Read a flat TOML problem file into a :class:`Problem`."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return problem_from_mapping(data, label=str(path))


def problem_from_mapping(data: dict, label: str = "config") -> ProblemSource:
    unknown = sorted(set(data) - set(EXPR_FIELDS) - set(NUMBER_FIELDS))
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}")
    missing = [key for key in REQUIRED if key not in data]
    if missing:
        raise ConfigError(f"missing required field {missing[0]!r}")

    fns = {}
    for key, args in EXPR_FIELDS.items():
        if key not in data:
            continue
        raw = data[key]
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            raw = repr(float(raw))
        if not isinstance(raw, str):
            raise ConfigError(f"field {key!r}: expected an expression string")
        try:
            fns[key] = exprlang.compile_expr(raw, args)
        except exprlang.UnknownIdentifierError as exc:
            raise ConfigError(f"field {key!r}: unknown identifier {exc.name!r}") from None
        except exprlang.ParseError as exc:
            raise ConfigError(f"field {key!r}: {exc}") from None

    nums = {key: _number(key, data[key]) for key in NUMBER_FIELDS if key in data}
    try:
        problem = Problem(
            nums["alpha"], nums["beta"], nums["T"],
            a=fns["a"], g=fns["g"], K=fns["K"], u0=fns["u0"],
            M=nums["M"], N=nums.get("N"),
        )
    except DomainError as exc:
        raise ConfigError(f"invalid problem: {exc}") from None
    except exprlang.EvalError as exc:
        raise ConfigError(f"field 'a': {exc}") from None
    return ProblemSource(problem, fns.get("exact"), label)


def resolve_source(text: str) -> ProblemSource:
    """A built-in example id ("1".."4") or a config file path."""
    if text.strip() in {"1", "2", "3", "4"}:
        ex = example(int(text))
        return ProblemSource(ex.problem, ex.exact, f"example {ex.id}")
    return load_config(text)


def parse_points(text: str):
    if text == "standard":
        return standard_points()
    points = []
    for item in text.split(","):
        try:
            x, t = item.split(":")
            points.append((float(x), float(t)))
        except ValueError:
            raise ConfigError(f"bad point {item!r}; expected x:t") from None
    if not points:
        raise ConfigError("no evaluation points given")
    return points


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _n_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 2 for v in values):
        raise argparse.ArgumentTypeError("every entry of --n-list must be >= 2")
    return values


def _fmt(value: float) -> str:
    return f"{value:.5e}"


def report_csv(report: ErrorReport) -> str:
    """``x,t,e_1..e_m`` (or ``u_1..u_m`` without an exact solution)."""
    table = report.errors if report.errors is not None else report.values
    prefix = "e" if report.errors is not None else "u"
    buf = io.StringIO()
    header = ["x", "t"] + [f"{prefix}_{d}" for d in range(1, report.m + 1)]
    buf.write(",".join(header) + "\n")
    for k, (x, t) in enumerate(report.points):
        row = [_fmt(x), _fmt(t)] + [_fmt(table[d, k]) for d in range(report.m)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def bounds_dict(report: ErrorReport) -> dict:
    return {
        "m": report.m,
        "n_list": list(report.n_list),
        "residual_norm_estimate": report.residual_norm,
        "mu_tail_sum": report.tail,
        "apriori_bound": report.apriori_bound,
        "aposteriori_estimate": report.aposteriori_bound,
        "total_bound_estimate": report.total_bound,
        "stages": [
            {"n": s.n, "q_error": s.q_error, "r_error": s.r_error, "mu_weight": s.weight, "contribution": s.contribution}
            for s in report.stage_terms
        ],
    }


def report_json(report: ErrorReport) -> str:
    out = {"points": report.points.tolist()}
    out["values"] = {f"u_{d + 1}": report.values[d].tolist() for d in range(report.m)}
    if report.errors is not None:
        out["errors"] = {f"e_{d + 1}": report.errors[d].tolist() for d in range(report.m)}
    out["bounds"] = bounds_dict(report)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _sidecar_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".bounds.json")


def _solve_and_report(source: ProblemSource, args) -> int:
    m = args.m
    n_list = args.n_list if args.n_list is not None else [args.np or DEFAULT_NP] * m
    if len(n_list) != m:
        raise ConfigError(f"--n-list has {len(n_list)} entries but --m is {m}")
    points = parse_points(args.points)
    try:
        source.problem.check_point([x for x, _ in points], [t for _, t in points])
    except DomainError as exc:
        raise ConfigError(f"--points: {exc}") from None
    rule = QuadratureRule(args.quad_order, args.quad_panels)
    report = build_report(
        source.problem, m, n_list, points, exact=source.exact, g_rule=rule, density=args.bound_density
    )
    if not np.all(np.isfinite(report.values)):
        raise NumericError("iterate values are not finite")

    if args.format == "json":
        _emit(report_json(report), args.out)
    else:
        _emit(report_csv(report), args.out)
        if args.out is not None:
            _sidecar_path(args.out).write_text(json.dumps(bounds_dict(report), indent=2, sort_keys=True) + "\n")
    b = bounds_dict(report)
    print(
        f"# {source.label}: m={m} n_list={n_list} "
        f"residual~{b['residual_norm_estimate']:.3e} tail={b['mu_tail_sum']:.3e} "
        f"a-priori={b['apriori_bound']:.3e} a-posteriori~{b['aposteriori_estimate']:.3e}",
        file=sys.stderr,
    )
    return 0


def cmd_run_example(args) -> int:
    try:
        ex = example(args.id)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return _solve_and_report(ProblemSource(ex.problem, ex.exact, f"example {ex.id}"), args)


def cmd_solve(args) -> int:
    return _solve_and_report(load_config(args.config), args)


def cmd_bounds(args) -> int:
    if not args.eps > 0:
        raise ConfigError("--eps must be positive")
    source = resolve_source(args.source)
    p = source.problem
    params = ContractionParams.of(p)
    guess = InitialGuess.from_u0(p)
    residual = estimate_residual_norm(p, guess, density=args.bound_density)
    m = choose_m(args.eps, residual, params)
    lines = [
        f"# {source.label}",
        f"residual_norm_estimate,{residual:.6e}",
        f"eps,{args.eps:.6e}",
        f"target_tail,{(args.eps / (2 * residual) if residual > 0 else math.inf):.6e}",
        f"chosen_m,{m}",
        "n,mu_n,tail_sum_n",
    ]
    for n in range(1, max(m, args.table) + 1):
        lines.append(f"{n},{mu(n, params):.6e},{tail_sum(n, params):.6e}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--m", type=_positive_int, default=3, help="number of projected steps")
    grid = p.add_mutually_exclusive_group()
    # default None: argparse ignores an explicit value identical to the default in its exclusivity check
    grid.add_argument("--np", type=int, default=None, help="nodes per axis, used at every step (default 3)")
    grid.add_argument("--n-list", type=_n_list, default=None, help="nodes per axis for each step, e.g. 3,5,9")
    p.add_argument("--points", default="standard", help="'standard' or x1:t1,x2:t2,...")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--quad-order", type=_positive_int, default=5, help="Gauss points per panel for the g integral")
    p.add_argument("--quad-panels", type=_positive_int, default=8)
    p.add_argument("--bound-density", type=int, default=DEFAULT_DENSITY, help="grid points per axis for sup-norm sampling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volterra-picard",
        description="Projected Picard iterations for nonlinear partial Volterra integro-differential equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run-example", help="solve a built-in example and report errors")
    run.add_argument("id", type=int, choices=(1, 2, 3, 4))
    _add_solver_flags(run)
    run.set_defaults(func=cmd_run_example)

    solve = sub.add_parser("solve", help="solve a problem defined in a config file")
    solve.add_argument("config")
    _add_solver_flags(solve)
    solve.set_defaults(func=cmd_solve)

    bnd = sub.add_parser("bounds", help="residual estimate, mu tail table and iteration count")
    bnd.add_argument("source", help="example id 1..4 or config path")
    bnd.add_argument("--eps", type=float, required=True)
    bnd.add_argument("--bound-density", type=int, default=DEFAULT_DENSITY)
    bnd.add_argument("--table", type=_positive_int, default=10, help="rows of the mu table")
    bnd.add_argument("--out", default=None)
    bnd.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "np", None) is not None and args.np < 2:
        parser.error("--np must be >= 2")
    if getattr(args, "bound_density", 2) < 2:
        parser.error("--bound-density must be >= 2")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, exprlang.EvalError, FloatingPointError, DomainError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
