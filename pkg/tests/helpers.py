"""Shared oracles and checked solver wrappers for the test suite."""

import math

import numpy as np

from panocplus import solve_adaptive_pg, solve_panoc_plus, verify_descent

ACCEPTANCE_LINES = []

# every PANOC+/PG run made through the wrappers below is checked for the
# sufficient-decrease chain; failures are collected here as well as raised
DESCENT_LOG = []


def record(criterion, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} [{criterion}] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _checked(report, config, problem):
    violations = verify_descent(report, config, problem.inf_phi)
    DESCENT_LOG.append((problem.name, len(report.history), violations))
    assert not violations, violations[:3]
    return report


def plus_checked(problem, x0, config, direction=None, inexact=None):
    rep = solve_panoc_plus(problem, x0, config, direction, inexact=inexact)
    return _checked(rep, config, problem)


def pg_checked(problem, x0, config, inexact=None):
    rep = solve_adaptive_pg(problem, x0, config, inexact=inexact)
    return _checked(rep, config, problem)


def grid_argmin(objective, lo, hi, step=1e-4, extra=()):
    """Brute-force minimum of a vectorized 1-D objective on a uniform grid."""
    w = np.concatenate([np.arange(lo, hi + step / 2, step), np.asarray(extra, dtype=float)])
    vals = objective(w)
    i = int(np.argmin(vals))
    return w[i], float(vals[i])


def fd_derivative(fun, x, h=1e-5):
    return (fun(x + h) - fun(x - h)) / (2 * h)


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b)) if math.isfinite(a) else a == b
