"""Command-line experiment runner.

Subcommands: ``simulate``, ``converge``, ``wick-check`` and ``theorem3-check``.
Exit codes: 0 ok, 1 usage or configuration error, 2 a check failed,
3 a solver produced a non-finite state.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_from_dict, load_config
from .errors import ConfigError, DomainError, NonFiniteStateError
from .grid import TimeGrid, sample_brownian_batch
from .kernels import make_kernel
from .models import ITO, STRATONOVICH
from .rates import (
    ITO_VS_WICK,
    ErrorCurve,
    bound_check,
    closed_form_curve,
    fit_rate,
    mc_error,
)
from .solvers import closed_form, exact_ito, exact_stratonovich, wz_pointwise, wz_wick
from .wick import translate
from .wick_checks import IDENTITY_NAMES, run_identity_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK = 2
EXIT_NUMERIC = 3

DATA_HEADER = "pair,epsilon,delta,p,error,stderr,n_samples"
SUMMARY_HEADER = "#summary,pair,slope,intercept,r2,fitted_C,q"
THEOREM3_TOL = 1e-4


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _row(*values) -> str:
    return ",".join(fmt(v) for v in values)


def write_csv(lines, path, command: str):
    """Write ``lines`` after a ``#`` timestamp comment; atomic for files."""
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = f"# generated {stamp} by wzlab {__version__} {command}\n" + "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".wzlab-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_seed(args, cfg: ExperimentConfig) -> int:
    if args.seed is not None:
        return args.seed
    if cfg.seed is not None:
        return cfg.seed
    env = os.environ.get("WZLAB_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError("WZLAB_SEED", f"not an integer: {env!r}") from None
        if seed < 0:
            raise ConfigError("WZLAB_SEED", "must be nonnegative")
        return seed
    return 0


def _load(args) -> ExperimentConfig:
    return load_config(args.config) if args.config else config_from_dict({})


def _kernels(cfg: ExperimentConfig):
    grid = cfg.grid
    try:
        return [make_kernel(cfg.kernel_family, grid, e) for e in cfg.epsilons]
    except DomainError as exc:
        raise ConfigError("kernel.epsilons", str(exc)) from None


def _say(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


# ----------------------------------------------------------------------------


def run_converge(args) -> int:
    cfg = _load(args)
    seed = _resolve_seed(args, cfg)
    kernels = _kernels(cfg)
    out = args.out or cfg.csv
    svg = args.svg or cfg.svg
    lines = [DATA_HEADER]
    summaries = []
    curves = {}
    fits = []
    ok = True
    for pair in cfg.pairs:
        if cfg.estimator == "closed_form":
            curve = closed_form_curve(pair, cfg.sde(), kernels)
        else:
            sub = cfg.subsample if pair == ITO_VS_WICK else 1
            curve = ErrorCurve(pair, cfg.p, [
                mc_error(pair, cfg.sde(), k, cfg.p, cfg.n_samples, seed, args.jobs, sub) for k in kernels
            ])
        for pt in curve.points:
            lines.append(_row(pair, pt.epsilon, pt.delta, cfg.p, pt.error, pt.stderr, pt.n_samples))
        report = bound_check(curve, cfg.q)
        fit = None
        slope = intercept = r2 = float("nan")
        usable = len(curve.points) >= 3 and np.all(curve.errors > 0)
        if usable:
            fit = fit_rate(curve, cfg.q)
            slope, intercept, r2 = fit.slope, fit.intercept, fit.r2
        summaries.append(_row("#summary", pair, slope, intercept, r2, report.fitted_C, cfg.q))
        curves[pair] = curve
        fits.append(fit)
        pair_ok = report.all_points_within
        if cfg.slope_range is not None:
            lo, hi = cfg.slope_range
            pair_ok = pair_ok and usable and lo <= slope <= hi
        ok = ok and pair_ok
        _say(args, f"{pair}: slope={slope:.4f} r2={r2:.4f} C={report.fitted_C:.4g} "
                   f"{'ok' if pair_ok else 'FAILED'}")
    lines.append(SUMMARY_HEADER)
    lines.extend(summaries)
    write_csv(lines, out, "converge")
    if svg:
        from .plotting import plot_curves

        plot_curves(curves, fits, svg, cfg.q)
    return EXIT_OK if ok else EXIT_CHECK


def run_simulate(args) -> int:
    cfg = _load(args)
    seed = _resolve_seed(args, cfg)
    kernels = _kernels(cfg)
    paths = sample_brownian_batch(cfg.grid, seed, np.arange(cfg.n_samples))
    sde = cfg.sde()
    lines = ["sample,route,epsilon,t,value"]
    if cfg.interpretation == STRATONOVICH:
        sols = [(0.0, exact_stratonovich(sde, paths))]
        sols += [(k.epsilon, wz_pointwise(sde, k, paths)) for k in kernels]
    else:
        sols = [(0.0, exact_ito(sde, paths))]
        sols += [(k.epsilon, wz_wick(sde, k, paths, cfg.subsample)) for k in kernels]
    for eps, sol in sols:
        t = sol.times
        for j in range(sol.values.shape[0]):
            for tk, v in zip(t, sol.values[j]):
                lines.append(_row(j, sol.provenance, eps, tk, v))
    write_csv(lines, args.out or cfg.csv, "simulate")
    _say(args, f"wrote {len(sols)} routes x {cfg.n_samples} paths")
    return EXIT_OK


def _faulty_translate(a, g):
    # test hook: a 1% error in the shift must be caught by the suite
    return translate(a, g * 1.01)


def run_wick_check(args) -> int:
    cfg = _load(args)
    seed = _resolve_seed(args, cfg)
    grid = cfg.grid if args.config else TimeGrid(1.0, 256)
    only = args.only or None
    if only:
        bad = [o for o in only if o not in IDENTITY_NAMES]
        if bad:
            raise ConfigError("--only", f"unknown identities {bad}; known: {', '.join(IDENTITY_NAMES)}")
    translate_fn = _faulty_translate if args.inject_fault == "translate" else translate
    results = run_identity_suite(grid, seed=seed, only=only, translate_fn=translate_fn)
    lines = ["identity,discrepancy,tolerance,passed,detail"]
    for r in results:
        lines.append(_row(r.name, r.discrepancy, r.tolerance, r.passed, r.detail))
        _say(args, f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.discrepancy:.3e} (tol {r.tolerance:g})")
    write_csv(lines, args.out or cfg.csv, "wick-check")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def theorem3_discrepancy(sde, kernel, paths, subsample: int = 1) -> float:
    """Max relative gap between the translated-``S`` routes and the closed-form Wick solution.

    Both the factored and the direct integration of the ``S`` equation are
    compared; the larger discrepancy is returned.
    """
    sde = replace(sde, interpretation=ITO)
    c = closed_form(sde, paths, kernel, wick=True).values
    scale = np.maximum(np.abs(c), np.finfo(float).tiny)
    worst = 0.0
    for method in ("gram", "direct"):
        w = wz_wick(sde, kernel, paths, subsample, method=method)
        idx = w.node_indices
        worst = max(worst, float(np.max(np.abs(w.values - c[..., idx]) / scale[..., idx])))
    return worst


def run_theorem3_check(args) -> int:
    cfg = _load(args)
    if not cfg.drift.is_linear:
        raise ConfigError("sde.drift.family",
                          f"{cfg.drift.family!r} has no closed-form Wick solution to compare against")
    seed = _resolve_seed(args, cfg)
    kernels = _kernels(cfg)
    paths = sample_brownian_batch(cfg.grid, seed, np.arange(cfg.n_samples))
    lines = ["kernel,epsilon,drift,n_paths,max_rel_discrepancy,tolerance,passed"]
    ok = True
    for k in kernels:
        d = theorem3_discrepancy(cfg.sde(ITO), k, paths, cfg.subsample)
        passed = d <= THEOREM3_TOL
        ok = ok and passed
        lines.append(_row(k.family, k.epsilon, cfg.drift.family, cfg.n_samples, d, THEOREM3_TOL, passed))
        _say(args, f"{'PASS' if passed else 'FAIL'} {k!r}: {d:.3e}")
    write_csv(lines, args.out or cfg.csv, "theorem3-check")
    return EXIT_OK if ok else EXIT_CHECK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment file")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--seed", type=int, help="overrides mc.seed and WZLAB_SEED")
    common.add_argument("--out", help="CSV path (default: output.csv of the config, else stdout)")
    common.add_argument("--svg", help="SVG plot path (converge only)")
    common.add_argument("--quiet", action="store_true", help="suppress progress on stderr")

    parser = argparse.ArgumentParser(prog="wzlab", description="Wong-Zakai approximation experiments")
    parser.add_argument("--version", action="version", version=f"wzlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="dump exact and approximate trajectories")
    sub.add_parser("converge", parents=[common], help="measure L^p error curves and rates")
    wc = sub.add_parser("wick-check", parents=[common], help="run the Wick-calculus identity suite")
    wc.add_argument("--only", action="append", metavar="NAME",
                    help=f"run only this identity (repeatable): {', '.join(IDENTITY_NAMES)}")
    wc.add_argument("--inject-fault", choices=["translate"], help=argparse.SUPPRESS)
    sub.add_parser("theorem3-check", parents=[common], help="compare the two Wick solution routes")
    return parser


COMMANDS = {
    "simulate": run_simulate,
    "converge": run_converge,
    "wick-check": run_wick_check,
    "theorem3-check": run_theorem3_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteStateError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
