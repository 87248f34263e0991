"""``panoc-bench``: run solvers on the benchmark problems and write CSV traces.

Two subcommands:

``solve``
    One solve with any solver/direction combination; writes the full trace
    (one row per forward-backward evaluation) and prints a summary line.
``case``
    Scripted comparisons (``divergence``, ``fig1``, ``fig3``, ``custom``) that
    write CSV traces and check pass/fail assertions.

Exit codes: 0 pass, 1 failed assertion or solver error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bench import BENCH_IDS, build_bench_problem
from .directions import (LBFGSDirection, NewtonFBEDirection, NominalDirection,
                         PaperDivergenceDirection)
from .exceptions import PanocError
from .problem import SolverConfig, phi
from .prox import InexactProxWrapper
from .solvers import Status, solve_adaptive_pg, solve_panoc_classic, solve_panoc_plus

DIRECTIONS = ("nominal", "lbfgs", "paper-divergence", "newton-fbe")
SOLVERS = ("panoc", "panoc+", "pg")
CASES = ("divergence", "fig1", "fig3", "custom")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    return "%.17e" % float(v)


def make_direction(name, mu=1e-6, saturation=math.inf):
    if name in (None, "nominal"):
        return NominalDirection()
    if name == "lbfgs":
        return LBFGSDirection()
    if name == "paper-divergence":
        return PaperDivergenceDirection(saturation)
    if name == "newton-fbe":
        return NewtonFBEDirection(mu)
    raise UsageError(f"unknown direction {name!r}")


def write_trace_csv(path, report, dimension):
    """Full trace: ``eval,k,x_0..,xbar_0..,gamma,tau,phi,residual,cost``."""
    header = (["eval", "k"] + [f"x_{i}" for i in range(dimension)]
              + [f"xbar_{i}" for i in range(dimension)]
              + ["gamma", "tau", "phi", "residual", "cost"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in report.trace:
            w.writerow([r.tgamma_eval_index, r.k] + [_fmt(v) for v in r.x]
                       + [_fmt(v) for v in r.x_bar]
                       + [_fmt(r.gamma), _fmt(r.tau), _fmt(r.phi), _fmt(r.residual_norm),
                          _fmt(r.cost_phi)])


def write_case_csv(path, report, x_star=0.0):
    """Scalar case trace: ``eval,k,abs_x,abs_xbar_err,residual,phi,cost,gamma``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eval", "k", "abs_x", "abs_xbar_err", "residual", "phi", "cost", "gamma"])
        for r in report.trace:
            w.writerow([r.tgamma_eval_index, r.k, _fmt(np.linalg.norm(r.x)),
                        _fmt(np.linalg.norm(r.x_bar - x_star)), _fmt(r.residual_norm),
                        _fmt(r.phi), _fmt(r.cost_phi), _fmt(r.gamma)])


def run_solver(solver, problem, x0, config, direction=None, inexact=None):
    if solver == "pg":
        return solve_adaptive_pg(problem, x0, config, inexact=inexact)
    if solver == "panoc":
        if inexact is not None:
            raise UsageError("--inexact-delta is not supported by --solver panoc")
        return solve_panoc_classic(problem, x0, config, direction)
    return solve_panoc_plus(problem, x0, config, direction, inexact=inexact)


def _config_from(args, **override) -> SolverConfig:
    kw = dict(gamma0=args.gamma0, alpha=args.alpha, beta=args.beta, direction_cap=args.cap_D,
              epsilon=args.eps, max_tgamma_evals=args.max_evals,
              nonmonotone_weights=args.nonmonotone_p)
    kw.update(override)
    return SolverConfig(**kw)


def _x0(args, problem):
    if args.x0 is None:
        return np.ones(problem.dimension)
    x0 = np.asarray(args.x0, dtype=float)
    if x0.size == 1:
        return np.full(problem.dimension, x0[0])
    return problem.as_vector(x0)


def summary_line(report, inexact=None, epsilon=None) -> str:
    line = (f"status={report.status.value} residual={report.final_residual:.6e} "
            f"evals={report.tgamma_evals} iterations={report.iterations} "
            f"x_bar={np.array2string(report.final_point, precision=10)}")
    if inexact is not None and report.status is Status.CONVERGED:
        bound = inexact.tolerance(report.history[-1].k) + epsilon
        ok = report.stationarity <= bound
        line += (f"\nstationarity ||v + grad f(x_bar)|| = {report.stationarity:.6e} "
                 f"{'<=' if ok else '>'} delta + eps = {bound:.6e}: "
                 f"{'certified' if ok else 'NOT certified'}")
    return line


def cmd_solve(args) -> int:
    if args.solver == "pg" and args.direction is not None:
        raise UsageError("--direction cannot be combined with --solver pg")
    problem = build_bench_problem(args.problem, B=args.B, dimension=args.dimension,
                                  seed=args.seed)
    config = _config_from(args)
    direction = None if args.solver == "pg" else make_direction(
        args.direction, mu=args.mu, saturation=args.saturation)
    inexact = None
    if args.inexact_delta is not None:
        inexact = InexactProxWrapper(problem.nonsmooth, delta=args.inexact_delta)
    report = run_solver(args.solver, problem, _x0(args, problem), config, direction, inexact)
    if args.out:
        write_trace_csv(args.out, report, problem.dimension)
    print(summary_line(report, inexact, config.epsilon))
    if report.message and report.status is not Status.CONVERGED:
        print(report.message)
    return EXIT_FAIL if report.status is Status.ORACLE_ERROR else EXIT_PASS


class _Checks:
    def __init__(self, name):
        self.name = name
        self.failed = []

    def check(self, label, ok, detail=""):
        suffix = f" ({detail})" if detail else ""
        print(f"{'PASS' if ok else 'FAIL'} {self.name}: {label}{suffix}")
        if not ok:
            self.failed.append(label)
        return ok


def _monotone_merit(report, tol=1e-12):
    """First accepted iteration where the merit increases, or None."""
    hist = report.history
    for a, b in zip(hist, hist[1:]):
        if b.phi > a.phi + tol * (1.0 + abs(a.phi)):
            return b
    return None


def _sublevel_breach(report, problem, tol=1e-12):
    phi0 = report.history[0].phi
    for s in report.history:
        if phi(problem, s.x_bar) > phi0 + tol * (1.0 + abs(phi0)):
            return s
    return None


def _case_eps(args, default):
    return default if args.eps is None else args.eps


def _case_cap(args, default):
    return default if args.cap_D is None else args.cap_D


def case_divergence(args, out_dir: Path) -> int:
    checks = _Checks("divergence")
    problem = build_bench_problem("cubic")
    alpha = float(Fraction(16, 27))
    config = SolverConfig(gamma0=1.0, alpha=alpha, beta=0.5, direction_cap=18.0,
                          epsilon=_case_eps(args, 1e-8), max_tgamma_evals=args.max_evals,
                          max_iter=10)
    rep = solve_panoc_classic(problem, [1.0], config, PaperDivergenceDirection())
    write_case_csv(out_dir / "divergence_panoc.csv", rep)
    xs = [float(s.x[0]) for s in rep.history]
    bad = None
    for k in range(1, 11):
        if k >= len(xs) or abs(xs[k] - 4.0**k) > 1e-12 * 4.0**k:
            bad = (k, xs[k] if k < len(xs) else None)
            break
    detail = (f"x_10 = {xs[10]:.17g}" if bad is None
              else f"first mismatch at k={bad[0]}: {bad[1]}")
    checks.check("x_k = 4^k for k = 1..10", bad is None, detail)
    costs = [phi(problem, [x]) for x in xs[:11]]
    checks.check("phi(x_k) strictly increasing", all(b > a for a, b in zip(costs, costs[1:])))
    return EXIT_FAIL if checks.failed else EXIT_PASS


def _compare(args, out_dir, tag, problem, x0, config, make_dir, x_star=0.0):
    classic = solve_panoc_classic(problem, x0, config, make_dir())
    plus = solve_panoc_plus(problem, x0, config, make_dir())
    write_case_csv(out_dir / f"{tag}_panoc.csv", classic, x_star)
    write_case_csv(out_dir / f"{tag}_panoc_plus.csv", plus, x_star)
    for name, rep in (("classic", classic), ("plus", plus)):
        print(f"{tag} {name}: " + summary_line(rep))
    return classic, plus


def _common_plus_checks(checks, problem, classic, plus):
    step = _monotone_merit(plus)
    checks.check("PANOC+ merit non-increasing", step is None,
                 "" if step is None else f"first increase at k={step.k}, Phi={step.phi!r}")
    step = _sublevel_breach(plus, problem)
    checks.check("PANOC+ x_bar stays in the initial sublevel set", step is None,
                 "" if step is None else f"k={step.k}, x_bar={step.x_bar}")
    checks.check("PANOC+ evals <= classic evals", plus.tgamma_evals <= classic.tgamma_evals,
                 f"{plus.tgamma_evals} vs {classic.tgamma_evals}")


def case_fig1(args, out_dir: Path) -> int:
    checks = _Checks("fig1")
    B = 100.0
    problem = build_bench_problem("cubic_box", B=B)
    config = SolverConfig(gamma0=1.0, alpha=0.95, beta=0.5, direction_cap=_case_cap(args, 18.0),
                          epsilon=_case_eps(args, 1e-8), max_tgamma_evals=args.max_evals)
    classic, plus = _compare(args, out_dir, "fig1", problem, [1.0], config,
                             lambda: PaperDivergenceDirection(saturation=B))
    hit = next((r.tgamma_eval_index for r in classic.trace if abs(r.x[0]) >= B), None)
    small = next((r.tgamma_eval_index for r in classic.trace if r.residual_norm < 1e-2), None)
    checks.check("classic reaches |x| = B before residual < 1e-2",
                 hit is not None and (small is None or hit < small),
                 f"|x| = B at eval {hit}, residual < 1e-2 at eval {small}")
    _common_plus_checks(checks, problem, classic, plus)
    return EXIT_FAIL if checks.failed else EXIT_PASS


def case_fig3(args, out_dir: Path) -> int:
    checks = _Checks("fig3")
    problem = build_bench_problem("cubic_box_smooth", B=100.0)
    # near 0 the residual behaves like x^2, so |x| <= 1e-6 needs a tight tolerance
    config = SolverConfig(gamma0=1.0, alpha=0.95, beta=0.5, direction_cap=_case_cap(args, 1e6),
                          epsilon=_case_eps(args, 1e-13), max_tgamma_evals=args.max_evals)
    classic, plus = _compare(args, out_dir, "fig3", problem, [1.0], config,
                             lambda: NewtonFBEDirection(args.mu))
    early = [abs(float(s.x[0])) for s in classic.history[:6]]
    checks.check("classic |x| exceeds |x0| early on", max(early) > 1.0,
                 f"max |x| over the first iterations = {max(early):.6g}")
    _common_plus_checks(checks, problem, classic, plus)
    xf = float(np.abs(plus.final_point).max())
    checks.check("PANOC+ converges to |x*| <= 1e-6",
                 plus.status is Status.CONVERGED and xf <= 1e-6, f"|x_bar| = {xf:.3e}")
    return EXIT_FAIL if checks.failed else EXIT_PASS


def case_custom(args, out_dir: Path) -> int:
    checks = _Checks("custom")
    problem = build_bench_problem(args.problem, B=args.B, dimension=args.dimension,
                                  seed=args.seed)
    config = _config_from(args, epsilon=_case_eps(args, 1e-8),
                          direction_cap=_case_cap(args, 1e6))
    saturation = args.saturation
    classic, plus = _compare(args, out_dir, "custom", problem, _x0(args, problem), config,
                             lambda: make_direction(args.direction, args.mu, saturation))
    for name, rep in (("classic", classic), ("plus", plus)):
        checks.check(f"{name} finished without oracle error", rep.status is not Status.ORACLE_ERROR,
                     rep.message)
    return EXIT_FAIL if checks.failed else EXIT_PASS


def cmd_case(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return {"divergence": case_divergence, "fig1": case_fig1, "fig3": case_fig3,
            "custom": case_custom}[args.case](args, out_dir)


def _add_solver_flags(p, eps_default=1e-8, cap_default=1e6):
    p.add_argument("--problem", choices=BENCH_IDS, default="cubic")
    p.add_argument("--direction", choices=DIRECTIONS, default=None)
    p.add_argument("--gamma0", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--cap-D", dest="cap_D", type=float, default=cap_default,
                   help="direction cap D (cases pick their own when omitted)")
    p.add_argument("--eps", type=float, default=eps_default,
                   help="termination tolerance (cases pick their own when omitted)")
    p.add_argument("--max-evals", type=int, default=500)
    p.add_argument("--nonmonotone-p", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=float, nargs="+", default=None,
                   help="start point (a single value is broadcast); default all ones")
    p.add_argument("--B", type=float, default=100.0, help="box half-width for the cubic problems")
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--mu", type=float, default=1e-6, help="Hessian floor for newton-fbe")
    p.add_argument("--saturation", type=float, default=math.inf,
                   help="norm bound E for paper-divergence directions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panoc-bench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run one solver and write its trace")
    ps.add_argument("--solver", choices=SOLVERS, default="panoc+")
    _add_solver_flags(ps)
    ps.add_argument("--inexact-delta", type=float, default=None)
    ps.add_argument("--out", default=None, help="trace CSV path")

    pc = sub.add_parser("case", help="run a scripted comparison")
    pc.add_argument("case", choices=CASES)
    _add_solver_flags(pc, eps_default=None, cap_default=None)
    pc.add_argument("--out-dir", default=".")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_case(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"panoc-bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PanocError as exc:
        if isinstance(exc, ValueError):
            print(f"panoc-bench: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"panoc-bench: solver error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
