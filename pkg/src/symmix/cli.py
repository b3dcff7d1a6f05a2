"""Command line interface.

Subcommands: fit, fit-lambda, em-baseline, curves, simulate, montecarlo.
Exit codes: 0 success, 2 usage or input errors, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .em import EmConfig, em_fit
from .empirical import Bandwidth, Sample, default_bandwidth
from .estimate import (
    default_grid,
    default_space,
    estimate_component_cdf,
    estimate_component_density,
    fit_lambda,
    fit_theta,
    jackknife_se,
    moment_lambda,
)
from .operators import MixtureParams
from .optimize import OptimConfig, default_starts
from .simulate import (
    load_scenario,
    run_monte_carlo,
    sample_gaussian_mixture,
)

__all__ = ["main"]

_SCHEMA_VERSION = 1


class CliError(Exception):
    """Input or usage error carrying the exit code."""

    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _fmt(v) -> str:
    """Shortest exact decimal for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _py(obj):
    """Coerce numpy scalars/arrays to plain Python; map non-finite to None."""
    if isinstance(obj, dict):
        return {k: _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def _write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_json(obj: dict, path: str | None) -> None:
    _write_text(json.dumps(_py(obj), indent=2, allow_nan=False) + "\n", path)


def _tsv(comments: list[tuple], header: list[str], rows: list[list]) -> str:
    lines = [f"# {key}\t{_fmt(val)}" for key, val in comments]
    lines.append("\t".join(header))
    lines.extend("\t".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def read_values(path: str, column: str | None = None) -> np.ndarray:
    """Read one numeric series from a text/CSV file.

    Lines starting with '#' and blank lines are skipped.  Without
    ``column`` each remaining line must hold a single number.  With
    ``column`` the file is parsed as CSV: a name selects a header column
    (the first data line must then be a header), a positive integer
    selects the 1-based column, skipping a leading non-numeric header
    line if present.  Errors carry 1-based physical line numbers.
    """
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        numbered = [
            (ln, line.strip())
            for ln, line in enumerate(fh, start=1)
            if line.strip() and not line.strip().startswith("#")
        ]
    if column is None:
        values = []
        for ln, line in numbered:
            try:
                values.append(float(line))
            except ValueError:
                raise CliError(
                    f"{path}:{ln}: expected a single number per line, got {line!r}"
                ) from None
            if not np.isfinite(values[-1]):
                raise CliError(f"{path}:{ln}: non-finite value {line!r}")
        return _check_series(values, path)

    rows = [(ln, next(csv.reader([line]))) for ln, line in numbered]
    if not rows:
        raise CliError(f"{path}: no data rows")
    first_ln, first = rows[0]
    first = [c.strip() for c in first]
    if column.isdigit():
        idx = int(column) - 1
        if idx < 0 or int(column) == 0:
            raise CliError(f"invalid column index {column!r} (1-based)")
        start = 0
        if idx < len(first) and not _is_number(first[idx]):
            start = 1  # leading header line
    else:
        if column not in first:
            raise CliError(
                f"{path}:{first_ln}: column {column!r} not found in header {first}"
            )
        idx = first.index(column)
        start = 1
    values = []
    for ln, cells in rows[start:]:
        cells = [c.strip() for c in cells]
        if idx >= len(cells):
            raise CliError(f"{path}:{ln}: fewer than {idx + 1} columns")
        cell = cells[idx]
        if not _is_number(cell):
            raise CliError(f"{path}:{ln}: not a number: {cell!r}")
        v = float(cell)
        if not np.isfinite(v):
            raise CliError(f"{path}:{ln}: non-finite value {cell!r}")
        values.append(v)
    return _check_series(values, path)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _check_series(values: list, path: str) -> np.ndarray:
    if len(values) < 2:
        raise CliError(f"{path}: need at least 2 observations, got {len(values)}")
    return np.asarray(values, dtype=float)


def _load_sample(args) -> Sample:
    return Sample.from_values(read_values(args.input, args.column))


def _bandwidth(args, n: int) -> Bandwidth:
    if args.bandwidth is None:
        return default_bandwidth(n)
    if not args.bandwidth > 0:
        raise CliError("--bandwidth must be positive")
    return Bandwidth(args.bandwidth, rule="fixed")


def _optim_cfg(args) -> OptimConfig:
    if args.starts < 1:
        raise CliError("--starts must be >= 1")
    return OptimConfig(n_starts=args.starts)


def cmd_fit(args) -> int:
    sample = _load_sample(args)
    space = default_space(sample, args.d)
    b = _bandwidth(args, sample.n)
    cfg = _optim_cfg(args)
    res = fit_theta(sample, space, b, cfg)
    lam, mu1, mu2 = res.as_triple()
    out = {
        "schema_version": _SCHEMA_VERSION,
        "command": "fit",
        "n": sample.n,
        "bandwidth": b.value,
        "d": args.d,
        "lambda": lam,
        "mu1": mu1,
        "mu2": mu2,
        "contrast": res.objective,
        "converged": res.diagnostics.converged,
        "n_iters": res.diagnostics.n_iters,
        "n_evals": res.diagnostics.n_evals,
        "se": None,
    }
    if args.jackknife:

        def refit(s: Sample) -> np.ndarray:
            r = fit_theta(s, default_space(s, args.d), _bandwidth(args, s.n), cfg)
            return np.asarray(r.as_triple())

        se = jackknife_se(sample, refit)
        out["se"] = {"lambda": se[0], "mu1": se[1], "mu2": se[2]}
    _write_json(out, args.output)
    if not res.diagnostics.converged:
        print("fit: optimizer did not converge", file=sys.stderr)
        return 3
    return 0


def cmd_fit_lambda(args) -> int:
    if args.mu1 == args.mu2:
        raise CliError("--mu1 and --mu2 must differ")
    sample = _load_sample(args)
    space = default_space(sample, args.d)
    cfg = _optim_cfg(args)
    res = fit_lambda(sample, args.mu1, args.mu2, space, cfg)
    out = {
        "schema_version": _SCHEMA_VERSION,
        "command": "fit-lambda",
        "n": sample.n,
        "d": args.d,
        "mu1": args.mu1,
        "mu2": args.mu2,
        "lambda": res.as_triple()[0],
        "moment_lambda": moment_lambda(sample, args.mu1, args.mu2, space),
        "contrast": res.objective,
        "converged": res.diagnostics.converged,
        "n_iters": res.diagnostics.n_iters,
        "n_evals": res.diagnostics.n_evals,
        "se": None,
    }
    if args.jackknife:

        def refit(s: Sample) -> np.ndarray:
            r = fit_lambda(s, args.mu1, args.mu2, default_space(s, args.d), cfg)
            return np.asarray([r.as_triple()[0]])

        out["se"] = {"lambda": jackknife_se(sample, refit)[0]}
    _write_json(out, args.output)
    if not res.diagnostics.converged:
        print("fit-lambda: optimizer did not converge", file=sys.stderr)
        return 3
    return 0


def cmd_em_baseline(args) -> int:
    sample = _load_sample(args)
    if not args.sigma > 0:
        raise CliError("--sigma must be positive")
    cfg = EmConfig(sigma=args.sigma, estimate_sigma=args.estimate_sigma)
    init = default_starts(default_space(sample), sample, 1)[0]
    res = em_fit(sample, init, cfg)
    lam, mu1, mu2 = res.as_triple()
    out = {
        "schema_version": _SCHEMA_VERSION,
        "command": "em-baseline",
        "n": sample.n,
        "lambda": lam,
        "mu1": mu1,
        "mu2": mu2,
        "sigma": res.sigma,
        "loglik": float(res.loglik_trace[-1]),
        "converged": res.diagnostics.converged,
        "n_iters": res.diagnostics.n_iters,
    }
    _write_json(out, args.output)
    if not res.diagnostics.converged:
        print("em-baseline: EM did not converge", file=sys.stderr)
        return 3
    return 0


def cmd_curves(args) -> int:
    sample = _load_sample(args)
    space = default_space(sample, args.d)
    b = _bandwidth(args, sample.n)
    cfg = _optim_cfg(args)
    res = fit_theta(sample, space, b, cfg)
    lam, mu1, mu2 = res.as_triple()
    theta = MixtureParams(lam, mu1, mu2)
    if args.grid_points < 2:
        raise CliError("--grid-points must be >= 2")
    grid = default_grid(sample, theta, b, args.grid_points)
    cdf = estimate_component_cdf(sample, theta, grid)
    try:
        dens = estimate_component_density(sample, theta, b, grid)
    except ValueError as exc:
        print(f"curves: {exc}", file=sys.stderr)
        return 3
    comments = [
        ("schema_version", _SCHEMA_VERSION),
        ("command", "curves"),
        ("n", sample.n),
        ("bandwidth", b.value),
        ("lambda", lam),
        ("mu1", mu1),
        ("mu2", mu2),
        ("contrast", res.objective),
        ("converged", res.diagnostics.converged),
    ]
    _write_text(
        _tsv(comments, ["x", "cdf"], [[x, y] for x, y in zip(cdf.x, cdf.y)]),
        f"{args.output}_cdf.tsv",
    )
    _write_text(
        _tsv(
            comments,
            ["x", "density"],
            [[x, y] for x, y in zip(dens.curve.x, dens.curve.y)],
        ),
        f"{args.output}_density.tsv",
    )
    lo = float(sample.values[0]) - 3.0 * b.value
    hi = float(sample.values[-1]) + 3.0 * b.value
    xm = np.linspace(lo, hi, args.grid_points)
    fz = dens.curve
    mix = lam * np.interp(xm - mu1, fz.x, fz.y, left=0.0, right=0.0) + (
        1.0 - lam
    ) * np.interp(xm - mu2, fz.x, fz.y, left=0.0, right=0.0)
    _write_text(
        _tsv(comments, ["x", "mixture_density"], [[x, y] for x, y in zip(xm, mix)]),
        f"{args.output}_mixture.tsv",
    )
    if not res.diagnostics.converged:
        print("curves: optimizer did not converge", file=sys.stderr)
        return 3
    return 0


def cmd_simulate(args) -> int:
    sc = _load_scenario_arg(args)
    seed = sc.seed if args.seed is None else args.seed
    smp = sample_gaussian_mixture(sc.theta0, sc.sigma, sc.n, seed, stream=args.stream)
    lines = [
        f"# schema_version\t{_SCHEMA_VERSION}",
        "# command\tsimulate",
        f"# lambda\t{_fmt(sc.theta0.lam)}",
        f"# mu1\t{_fmt(sc.theta0.mu1)}",
        f"# mu2\t{_fmt(sc.theta0.mu2)}",
        f"# sigma\t{_fmt(sc.sigma)}",
        f"# n\t{sc.n}",
        f"# seed\t{seed}",
        f"# stream\t{args.stream}",
    ]
    lines.extend(_fmt(v) for v in smp.values)
    _write_text("\n".join(lines) + "\n", args.output)
    return 0


def cmd_montecarlo(args) -> int:
    sc = _load_scenario_arg(args)
    if args.seed is not None:
        from dataclasses import replace

        sc = replace(sc, seed=args.seed)
    if args.workers is not None and args.workers < 1:
        raise CliError("--workers must be >= 1")
    report = run_monte_carlo(sc, max_workers=args.workers)
    names = ["lambda"] if sc.problem == "P1" else ["lambda", "mu1", "mu2"]
    comments = [
        ("schema_version", _SCHEMA_VERSION),
        ("command", "montecarlo"),
        ("problem", sc.problem),
        ("lambda0", sc.theta0.lam),
        ("mu1_0", sc.theta0.mu1),
        ("mu2_0", sc.theta0.mu2),
        ("sigma", sc.sigma),
        ("n", sc.n),
        ("reps", sc.reps),
        ("seed", sc.seed),
        ("bandwidth", "auto" if sc.bandwidth is None else sc.bandwidth),
        ("failures", report.failures),
        ("std_undefined", report.std_undefined),
    ]
    rows = [
        [name, report.mean[i], report.std[i]] for i, name in enumerate(names)
    ]
    _write_text(_tsv(comments, ["param", "mean", "std"], rows), args.output)
    if report.failures == sc.reps:
        print("montecarlo: all replications failed", file=sys.stderr)
        return 3
    return 0


def _load_scenario_arg(args):
    try:
        return load_scenario(args.scenario)
    except OSError as exc:
        raise CliError(f"cannot read {args.scenario}: {exc.strerror}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CliError(f"bad scenario file {args.scenario}: {exc}") from exc


def _add_input_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", "-i", required=True, help="input data file (CSV/text)")
    p.add_argument(
        "--column",
        default=None,
        help="CSV column holding the data: a header name or 1-based index "
        "(default: one value per line)",
    )


def _add_fit_opts(p: argparse.ArgumentParser, bandwidth: bool = True) -> None:
    p.add_argument(
        "--d",
        type=float,
        default=0.05,
        help="margin keeping the weight below 1/2 (default 0.05)",
    )
    p.add_argument(
        "--starts",
        type=int,
        default=8,
        help="number of optimizer starts (default 8)",
    )
    if bandwidth:
        p.add_argument(
            "--bandwidth",
            type=float,
            default=None,
            help="kernel bandwidth (default: n**-0.25)",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symmix",
        description="Semiparametric two-component mixture estimation "
        "(symmetric component, two location shifts).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate (lambda, mu1, mu2) from data")
    _add_input_opts(p)
    _add_fit_opts(p)
    p.add_argument("--jackknife", action="store_true", help="leave-one-out SEs")
    p.add_argument("--output", "-o", default=None, help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fit-lambda", help="estimate the weight, locations known")
    _add_input_opts(p)
    p.add_argument("--mu1", type=float, required=True, help="first location")
    p.add_argument("--mu2", type=float, required=True, help="second location")
    _add_fit_opts(p, bandwidth=False)
    p.add_argument("--jackknife", action="store_true", help="leave-one-out SEs")
    p.add_argument("--output", "-o", default=None, help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_fit_lambda)

    p = sub.add_parser("em-baseline", help="Gaussian-mixture EM baseline")
    _add_input_opts(p)
    p.add_argument("--sigma", type=float, default=1.0, help="component scale (default 1)")
    p.add_argument(
        "--estimate-sigma", action="store_true", help="estimate the common scale"
    )
    p.add_argument("--output", "-o", default=None, help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_em_baseline)

    p = sub.add_parser(
        "curves", help="fit, then tabulate component CDF/density and mixture density"
    )
    _add_input_opts(p)
    _add_fit_opts(p)
    p.add_argument(
        "--grid-points", type=int, default=512, help="grid size (default 512)"
    )
    p.add_argument(
        "--output",
        "-o",
        required=True,
        help="output prefix; writes <prefix>_cdf.tsv, <prefix>_density.tsv, "
        "<prefix>_mixture.tsv",
    )
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("simulate", help="draw one sample from a scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.add_argument("--stream", type=int, default=0, help="stream index (default 0)")
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="run a scenario's replications and aggregate")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.add_argument(
        "--workers", type=int, default=None, help="thread count (default serial)"
    )
    p.add_argument("--output", "-o", default=None, help="TSV output path (default stdout)")
    p.set_defaults(func=cmd_montecarlo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
