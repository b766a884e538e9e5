"""Command-line interface.

Exit codes: 0 success, 1 the copula (or its projection) is not valid,
2 usage error or malformed input file, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

from . import montecarlo
from .copula import VALID, CopulaModel, diagonal_model, new_model, star, validate
from .dependence import measures_report
from .descriptors import family_for_size, parse_family
from .errors import CopulaError, InvalidArgumentError, NumericError
from .partition import discretize_copula, make_partition, to_copula_model
from .projection import convergence_study, p_phi, write_convergence_csv
from .reference import parse_reference
from .serialization import load_model, parse_matrix, save_model, write_grid_csv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _emit_json(obj, path=None) -> None:
    with _output(path) as fh:
        fh.write(json.dumps(obj, indent=2) + "\n")


def _family_from_args(args):
    return parse_family(args.family, harmonics=args.harmonics, size=args.size)


def _invalid_message(model: CopulaModel) -> str:
    report = model.validation
    if model.family.descriptor["kind"] == "fgm":
        return "invalid: |rho| > 1/3"
    u, v = report.argmin
    return f"{report.verdict}: density reaches {report.min_value:.6g} at (u, v)=({u:.6g}, {v:.6g})"


def _finish(model: CopulaModel) -> int:
    if model.validation.verdict == VALID:
        print("valid")
        return EXIT_OK
    print(_invalid_message(model))
    return EXIT_INVALID


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_construct(args) -> int:
    kind = args.family.split(":")[0].lower()
    if args.source is not None:
        if kind not in ("checkerboard", "bernstein"):
            raise InvalidArgumentError("--from is only meaningful for checkerboard and bernstein families")
        size = args.size
        if ":" in args.family:
            size = int(args.family.split(":")[1])
        if size is None:
            raise InvalidArgumentError(f"{kind} family needs a size, e.g. '{kind}:8'")
        pf = make_partition(kind, size)
        model = to_copula_model(pf, discretize_copula(parse_reference(args.source), size))
    else:
        family = _family_from_args(args)
        if (args.diag_theta is None) == (args.matrix is None):
            raise InvalidArgumentError("give exactly one of --diag-theta, --matrix or --from")
        if args.diag_theta is not None:
            model = diagonal_model(family, args.diag_theta)
        else:
            try:
                value = json.loads(args.matrix)
            except json.JSONDecodeError as exc:
                raise InvalidArgumentError(f"--matrix is not valid JSON: {exc}") from exc
            model = new_model(family, parse_matrix(value, family.size, "--matrix"))
    model = model.with_validation(validate(model, resolution=args.resolution))
    save_model(model, args.out)
    return _finish(model)


def cmd_validate(args) -> int:
    model = load_model(args.model)
    model = model.with_validation(validate(model, resolution=args.resolution))
    _emit_json(model.validation.to_dict())
    return EXIT_OK if model.validation.verdict == VALID else EXIT_INVALID


def cmd_measures(args) -> int:
    model = load_model(args.model)
    _emit_json(measures_report(model), args.out)
    return EXIT_OK


def cmd_project(args) -> int:
    target = parse_reference(args.target)
    family = _family_from_args(args)
    model, _ = p_phi(target, family, resolution=args.resolution)
    if args.out:
        save_model(model, args.out)
    return _finish(model)


def cmd_star(args) -> int:
    m1, m2 = load_model(args.left), load_model(args.right)
    product = star(m1, m2)
    product = product.with_validation(validate(product, resolution=args.resolution))
    save_model(product, args.out)
    return _finish(product)


def cmd_sample(args) -> int:
    model = load_model(args.model)
    if model.validation is None:
        model = model.validated()
    if model.validation.verdict != VALID:
        print(f"refusing to sample: {_invalid_message(model)}")
        return EXIT_INVALID
    samples = montecarlo.sample(model, args.n, args.seed)
    with _output(args.out) as fh:
        montecarlo.write_samples_csv(samples, fh)
    return EXIT_OK


def cmd_estimate(args) -> int:
    family = _family_from_args(args)
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            samples = montecarlo.read_samples_csv(fh, source_label=args.input)
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read sample file {args.input}: {exc.strerror}") from exc
    result = montecarlo.estimate(samples, family, args.estimator)
    _emit_json(result.to_dict(), args.out)
    return EXIT_OK


def cmd_density_grid(args) -> int:
    model = load_model(args.model)
    with _output(args.out) as fh:
        write_grid_csv(model, args.resolution, fh, "cdf" if args.cdf else "density")
    return EXIT_OK


def cmd_convergence(args) -> int:
    target = parse_reference(args.target)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise InvalidArgumentError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from exc
    kind = args.family.split(":")[0].lower()
    rows = convergence_study(target, lambda p: family_for_size(kind, p), sizes)
    with _output(args.out) as fh:
        write_convergence_csv(rows, fh)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_family(p, required=True):
    p.add_argument("--family", required=required, help="family descriptor, e.g. trig, trig:2, haar:8, fgm, bernstein:16")
    p.add_argument("--harmonics", type=int, help="number of harmonics for the trig family")
    p.add_argument("--size", type=int, help="family size when the descriptor has none")


def _add_resolution(p, default=512):
    p.add_argument("--resolution", type=int, default=default, help="validation grid resolution")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phicopula", description="Copulas of the form phi(u)^T A phi(v).")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="build and validate a model")
    _add_family(p)
    p.add_argument("--diag-theta", type=float, help="matrix diag(1, theta, ..., theta)")
    p.add_argument("--matrix", help="matrix as JSON, nested or row-major flat")
    p.add_argument("--from", dest="source", help="reference copula to discretize, e.g. fgm:1.0")
    p.add_argument("--out", required=True)
    _add_resolution(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("validate", help="nonnegativity check of a model file")
    p.add_argument("model")
    _add_resolution(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("measures", help="Spearman rho, Kendall tau and tail profile")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("project", help="L2 projection of a reference copula onto a family")
    p.add_argument("--target", required=True, help="e.g. clayton:1.0, frank:3, fgm:0.5")
    _add_family(p)
    p.add_argument("--out")
    _add_resolution(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("star", help="Markov product of two models")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--out", required=True)
    _add_resolution(p)
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("sample", help="draw pairs from a valid model")
    p.add_argument("model")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="moment estimate of the matrix from samples")
    _add_family(p)
    p.add_argument("--estimator", choices=montecarlo.ESTIMATORS, default="a2")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("density-grid", help="export density (or CDF) values on a uniform grid")
    p.add_argument("model")
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--cdf", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_density_grid)

    p = sub.add_parser("convergence", help="projection error over family sizes")
    p.add_argument("--target", required=True)
    p.add_argument("--family", required=True, help="family kind, e.g. haar")
    p.add_argument("--sizes", required=True, help="comma-separated sizes, e.g. 2,4,8,16")
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CopulaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
