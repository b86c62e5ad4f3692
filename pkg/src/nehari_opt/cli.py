"""Command-line front end.

Subcommands: ``solve`` (one ground-state computation), ``bisect`` (critical
exponent of symmetry breaking for one p), ``sweep-fit`` (bisections over a
p-grid followed by a law fit), ``check`` (the self-verification suite).

Exit codes: 0 success / converged, 1 configuration or bracket error,
2 iteration budget exhausted, 3 solver failure, 4 failed checks.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .analysis import (
    ASYMMETRY_THRESHOLD,
    asymmetry,
    bisect_critical_l,
    fit_exp_law,
    fit_inverse_law,
    morse_index_check,
)
from .checks import run_checks
from .config import RunConfig, parse_config
from .errors import ConfigError, InvalidBracket, SolverError
from .manifold import manifold_point
from .optimizer import STATUS_CONVERGED, STATUS_MAX_ITER, nehari_descent

THREADS_ENV_VAR = "NEHARI_OPT_THREADS"


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _problem_meta(rc: RunConfig) -> dict:
    meta = {"preset": rc.preset, "domain": rc.domain, "seed": rc.seed_kind, "rng_seed": rc.rng_seed}
    if rc.preset == "nls":
        meta["omega"] = fileio.fmt(rc.omega)
        meta["lambda"] = fileio.fmt(rc.lam)
    else:
        if rc.henon_l is not None:
            meta["l"] = fileio.fmt(rc.henon_l)
        meta["p"] = fileio.fmt(rc.henon_p)
    return meta


def cmd_solve(rc: RunConfig, out, quiet: bool, plot: bool) -> int:
    mesh = rc.build_mesh()
    problem = rc.build_problem(mesh)
    seed = rc.build_seed(mesh)
    record = nehari_descent(problem, seed, rc.solver)

    fileio.write_convergence_csv(record, out / "convergence.csv", _problem_meta(rc))
    fileio.write_field(record.solution, out / "solution.txt")

    mu = asymmetry(record.solution)
    summary = {
        "status": record.status,
        "iterations": record.iterations,
        "energy": record.final_energy,
        "grad_norm": record.final_grad_norm,
        "free_grad_norm": record.final_grad_e_norm,
        "peak_value": float(np.max(np.abs(record.solution.coeffs))),
        "mu": mu.mu,
        "symmetric": str(mu.symmetric).lower(),
    }
    if rc.morse_check and record.converged:
        morse = morse_index_check(problem, manifold_point(problem, record.solution), k=2)
        summary["morse_theta1"] = float(morse.thetas[0])
        summary["morse_theta2"] = float(morse.thetas[1])
        summary["morse_index"] = morse.morse_index
    fileio.write_summary(out / "summary.txt", summary)

    if plot:
        from . import plotting

        plotting.save_convergence_plot(record, out / "convergence.png")
        plotting.save_field_plot(record.solution, out / "solution.png")

    for key, value in summary.items():
        _say(quiet, f"{key}={fileio.fmt(value) if isinstance(value, float) else value}")
    if record.status == STATUS_CONVERGED:
        return 0
    if record.status == STATUS_MAX_ITER:
        return 2
    return 3


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def cmd_bisect(rc: RunConfig, out, quiet: bool, plot: bool) -> int:
    _require(rc.preset == "henon", "bisect requires problem.preset=henon")
    _require(rc.domain in ("interval", "disk"), "bisect supports interval and disk domains")
    _require(
        rc.bracket_lo is not None and rc.bracket_hi is not None,
        "experiment.bracket_lo and experiment.bracket_hi are required for bisect",
    )
    mesh = rc.build_mesh()
    result = bisect_critical_l(
        mesh,
        rc.henon_p,
        rc.bracket_lo,
        rc.bracket_hi,
        rc.bisect_tol,
        rc.solver,
        warm_start=rc.warm_start,
        lin_tol=rc.lin_tol,
    )
    fileio.write_bisect_csv(result, out / "bisect.csv", out / "bisect_evaluations.csv")
    if plot:
        from . import plotting

        plotting.save_bisect_plot(result, ASYMMETRY_THRESHOLD[rc.domain], out / "bisect.png")
    _say(quiet, f"l_star={fileio.fmt(result.l_star_estimate)}")
    _say(quiet, f"bracket=[{fileio.fmt(result.bracket_lo)},{fileio.fmt(result.bracket_hi)}]")
    _say(quiet, f"n_evals={result.n_bisection_evals} total_iters={result.total_iterations}")
    return 0


def cmd_sweep_fit(rc: RunConfig, out, quiet: bool, plot: bool, threads: int) -> int:
    _require(rc.preset == "henon", "sweep-fit requires problem.preset=henon")
    _require(rc.domain in ("interval", "disk"), "sweep-fit supports interval and disk domains")
    _require(bool(rc.p_grid), "experiment.p_grid is required for sweep-fit")
    mesh = rc.build_mesh()

    def one(p: float):
        lo, hi = rc.sweep_bracket(p)
        return bisect_critical_l(
            mesh,
            p,
            lo,
            hi,
            rc.bisect_tol,
            rc.solver,
            warm_start=rc.warm_start,
            lin_tol=rc.lin_tol,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, rc.p_grid))
    else:
        results = [one(p) for p in rc.p_grid]
    results.sort(key=lambda r: r.p)
    fileio.write_sweep_csv(results, out / "sweep.csv")

    points = [(r.p, r.l_star_estimate) for r in results]
    fit_kind = rc.fit or ("inverse" if rc.domain == "interval" else "exp")
    if fit_kind == "inverse":
        fit = fit_inverse_law(points)
        extra = {"k0_minus_quarter_pi_sq": abs(fit.params[0] - np.pi ** 2 / 4.0)}
    else:
        fit = fit_exp_law(points)
        extra = {}
    lines = fileio.fit_summary_lines(fit, extra)
    with open(out / "fit.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        _say(quiet, line)
    if plot:
        from . import plotting

        plotting.save_fit_plot(results, fit, out / "sweep_fit.png")
    return 0


def cmd_check(rc: RunConfig, out, quiet: bool) -> int:
    results = run_checks(rc)
    lines = [res.line() for res in results]
    with open(out / "checks.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        _say(quiet, line)
    n_failed = sum(1 for res in results if not res.passed)
    if n_failed:
        print(f"{n_failed} check(s) failed", file=sys.stderr)
        return 4
    _say(quiet, f"all {len(results)} checks passed")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nehari-opt",
        description="Unstable ground states of semilinear elliptic PDEs via "
        "energy descent on the Nehari manifold",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "compute one ground state and dump the trace and solution"),
        ("bisect", "bisection for the symmetry-breaking exponent at one p"),
        ("sweep-fit", "bisections over a p-grid followed by a law fit"),
        ("check", "run the self-verification suite"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", required=True, help="path to the run configuration")
        cmd.add_argument("--out", default="./out", help="output directory (default ./out)")
        cmd.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        cmd.add_argument("--quiet", action="store_true", help="suppress informational output")
        cmd.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = args.threads
    if os.environ.get(THREADS_ENV_VAR):
        try:
            threads = int(os.environ[THREADS_ENV_VAR])
        except ValueError:
            print(f"{THREADS_ENV_VAR} must be an integer", file=sys.stderr)
            return 1
    try:
        rc = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out = fileio.ensure_dir(args.out)
    plot = not args.no_plot
    try:
        if args.command == "solve":
            return cmd_solve(rc, out, args.quiet, plot)
        if args.command == "bisect":
            return cmd_bisect(rc, out, args.quiet, plot)
        if args.command == "sweep-fit":
            return cmd_sweep_fit(rc, out, args.quiet, plot, threads)
        return cmd_check(rc, out, args.quiet)
    except (ConfigError, InvalidBracket) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
