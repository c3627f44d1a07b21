"""Command-line front end (``lipspec``)."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import AdmissibilityError, NumericalError, ParameterError, ProblemFileError
from .free import is_sum_metric
from .instances import random_instance
from .metric import validate_metric
from .operator import build
from .problem import dump_problem, generated_problem, load_problem, problem_dict
from .report import analyze, render_text, validation_dict
from .shift import Grid, resolvent_scan

EXIT_OK, EXIT_SCHEMA, EXIT_METRIC, EXIT_ADMISSIBILITY, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load_valid(path):
    """Parse and validate; returns (problem, validation) or an exit code."""
    try:
        prob = load_problem(path)
    except ProblemFileError as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    val = validate_metric(prob.space)
    if not val.ok:
        _err("invalid metric")
        print(json.dumps(validation_dict(prob.space, val), indent=2))
        return EXIT_METRIC
    return prob, val


def cmd_validate(args) -> int:
    res = _load_valid(args.path)
    if isinstance(res, int):
        return res
    prob, val = res
    print(json.dumps(validation_dict(prob.space, val), indent=2))
    return EXIT_OK


def cmd_analyze(args) -> int:
    res = _load_valid(args.path)
    if isinstance(res, int):
        return res
    prob, val = res
    try:
        op = build(prob.space, prob.f, prob.w)
        rep = analyze(op, val, oracle=args.oracle == "on", gelfand=args.gelfand)
    except AdmissibilityError as exc:
        _err(str(exc))
        return EXIT_ADMISSIBILITY
    except NumericalError as exc:
        _err(f"{exc} {exc.diagnostics}")
        return EXIT_NUMERICAL
    if args.report == "json":
        sys.stdout.write(json.dumps(rep, indent=2, allow_nan=False) + "\n")
    else:
        sys.stdout.write(render_text(rep))
    return EXIT_OK


def cmd_pseudospectrum(args) -> int:
    res = _load_valid(args.path)
    if isinstance(res, int):
        return res
    prob, _ = res
    try:
        re0, re1, im0, im1, n = args.grid
        if n != int(n):
            raise ParameterError("grid resolution must be an integer")
        grid = Grid(re0, re1, im0, im1, int(n))
    except ParameterError as exc:
        _err(f"bad grid: {exc}")
        return EXIT_SCHEMA
    try:
        op = build(prob.space, prob.f, prob.w)
        A = op.matrix
        if is_sum_metric(prob.space):
            # coefficients in the isometric weighted ℓ₁ picture
            r = prob.space.radii[prob.space.nonbase]
            A = (r[:, None] * A) / r[None, :]
        else:
            print("note: not a sum metric; scanning the δ-basis matrix", file=sys.stderr)
        scan = resolvent_scan(A, grid)
    except AdmissibilityError as exc:
        _err(str(exc))
        return EXIT_ADMISSIBILITY
    except NumericalError as exc:
        _err(str(exc))
        return EXIT_NUMERICAL
    if args.out:
        scan.write_csv(args.out)
    else:
        scan.write_rows(sys.stdout)
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        if args.kind == "shift":
            data = generated_problem("shift", args.map, n=args.n)
        elif args.kind == "geometric":
            data = generated_problem("geometric", args.map, lambda_abs=abs(args.lam), n=args.n)
        elif args.kind == "sum_radial":
            rho = [float(x) for x in args.rho.split(",")]
            data = generated_problem("sum_radial", args.map, rho=rho)
        else:
            inst = random_instance(args.seed, max_points=args.n, min_points=args.n)
            data = problem_dict(inst.space, inst.f, inst.w)
    except (ParameterError, ValueError) as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    text = dump_problem(data, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _analyze_flags(p):
    p.add_argument("path")
    p.add_argument("--report", choices=("json", "text"), default="json")
    p.add_argument("--oracle", choices=("on", "off"), default="on")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lipspec", description="Spectra of weighted Lipschitz operators on finite pointed metric spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a problem file and its metric")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="full spectral report")
    _analyze_flags(p)
    p.add_argument("--gelfand", type=int, metavar="N_MAX")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gelfand", help="analyze with the Gelfand sequence")
    _analyze_flags(p)
    p.add_argument("--n-max", dest="gelfand", type=int, default=8)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pseudospectrum", help="smallest singular value of T - λI on a grid, as CSV")
    p.add_argument("path")
    p.add_argument("--grid", nargs=5, type=float, metavar=("RE0", "RE1", "IM0", "IM1", "RES"),
                   default=(-0.8, 0.8, -0.8, 0.8, 81))
    p.add_argument("--out")
    p.set_defaults(func=cmd_pseudospectrum)

    p = sub.add_parser("gen", help="write a problem file for a generated space")
    p.add_argument("kind", choices=("shift", "geometric", "sum_radial", "random"))
    p.add_argument("--n", type=int, default=5, help="number of non-base points (points for random)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--rho", default="1,2,3")
    p.add_argument("--map", choices=("shift", "identity", "zero"), default="shift")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
