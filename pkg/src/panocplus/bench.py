"""Benchmark problems, including the cubic counterexamples."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, UnknownProblem
from .problem import CompositeProblem, SmoothOracle
from .prox import BoxIndicator, L1Norm, ZeroFunction, ZeroNorm

BENCH_IDS = ("cubic", "cubic_box", "cubic_box_smooth", "quadratic", "quadratic_box",
             "l1_lasso_small", "l0_small")


def _cubic_oracle():
    return SmoothOracle(
        eval=lambda x: 2.0 / 9.0 * abs(x[0]) ** 3,
        grad=lambda x: np.array([2.0 / 3.0 * x[0] * abs(x[0])]),
        hess_1d=lambda t: 4.0 / 3.0 * abs(t),
        third_1d=lambda t: 4.0 / 3.0 * float(np.sign(t)),
    )


def _cubic_smooth_oracle(B):
    # cubic inside [-B, B], extended linearly with matching slope 2/3 B^2
    slope = 2.0 / 3.0 * B * B

    def f(x):
        a = abs(x[0])
        return 2.0 / 9.0 * a ** 3 if a <= B else slope * (a - 2.0 / 3.0 * B)

    def grad(x):
        t = x[0]
        return np.array([2.0 / 3.0 * t * abs(t) if abs(t) <= B else slope * np.sign(t)])

    def hess(t):
        return 4.0 / 3.0 * abs(t) if abs(t) <= B else 0.0

    def third(t):
        return 4.0 / 3.0 * float(np.sign(t)) if abs(t) <= B else 0.0

    return SmoothOracle(eval=f, grad=grad, hess_1d=hess, third_1d=third)


def _least_squares(A, b):
    def f(x):
        r = A @ x - b
        return 0.5 * float(r @ r)

    return SmoothOracle(eval=f, grad=lambda x: A.T @ (A @ x - b))


def _quadratic_oracle(center):
    c = np.asarray(center, dtype=float)

    def f(x):
        r = x - c
        return 0.5 * float(r @ r)

    scalar = c.size == 1
    return SmoothOracle(eval=f, grad=lambda x: x - c,
                        hess_1d=(lambda t: 1.0) if scalar else None,
                        third_1d=(lambda t: 0.0) if scalar else None)


def _sparse_data(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    x_true[: max(1, n // 3)] = rng.standard_normal(max(1, n // 3)) * 2
    b = A @ x_true + 0.1 * rng.standard_normal(m)
    return A, b


def build_bench_problem(problem_id: str, B: float = 100.0, dimension: int = 1,
                        weight: float = 0.5, seed: int = 0) -> CompositeProblem:
    """Construct one of the catalogue problems.

    ======================  ============================================  ===========
    id                      phi                                           inf phi
    ======================  ============================================  ===========
    ``cubic``               ``2/9 |x|^3``                                 0
    ``cubic_box``           ``2/9 |x|^3`` s.t. ``|x| <= B``               0
    ``cubic_box_smooth``    cubic on the box, linear outside, s.t. box    0
    ``quadratic``           ``1/2 ||x||^2``                               0
    ``quadratic_box``       ``1/2 ||x - 3||^2`` s.t. ``x in [-1, 1]^n``   ``2 n``
    ``l1_lasso_small``      ``1/2 ||Ax - b||^2 + w ||x||_1``              0 (bound)
    ``l0_small``            ``1/2 ||Ax - b||^2 + w ||x||_0``              0 (bound)
    ======================  ============================================  ===========

    The cubic problems are scalar; ``dimension`` applies to the others
    (``l1_lasso_small`` and ``l0_small`` default to 6 variables when
    ``dimension`` is 1). ``seed`` only affects the random least-squares data.
    """
    if problem_id == "cubic":
        return CompositeProblem(_cubic_oracle(), ZeroFunction(), 1, inf_phi=0.0, name=problem_id)
    if problem_id in ("cubic_box", "cubic_box_smooth"):
        if not B >= 0:
            raise ConfigError("B must be nonnegative")
        smooth = _cubic_oracle() if problem_id == "cubic_box" else _cubic_smooth_oracle(B)
        return CompositeProblem(smooth, BoxIndicator.symmetric(B), 1, inf_phi=0.0, name=problem_id)
    if problem_id == "quadratic":
        return CompositeProblem(_quadratic_oracle(np.zeros(dimension)), ZeroFunction(), dimension,
                                inf_phi=0.0, name=problem_id)
    if problem_id == "quadratic_box":
        return CompositeProblem(_quadratic_oracle(np.full(dimension, 3.0)),
                                BoxIndicator.symmetric(1.0, dimension), dimension,
                                inf_phi=2.0 * dimension, name=problem_id)
    if problem_id in ("l1_lasso_small", "l0_small"):
        n = dimension if dimension > 1 else 6
        A, b = _sparse_data(seed, 2 * n, n)
        g = L1Norm(weight) if problem_id == "l1_lasso_small" else ZeroNorm(weight)
        return CompositeProblem(_least_squares(A, b), g, n, inf_phi=0.0, name=problem_id)
    raise UnknownProblem(problem_id)


def sample_points(problem: CompositeProblem, rng, count: int, scale: float = 2.0):
    """Random points for property checks, feasible for box problems."""
    n = problem.dimension
    g = problem.nonsmooth
    if isinstance(g, BoxIndicator):
        lo = np.maximum(g.lower, -scale * 50)
        hi = np.minimum(g.upper, scale * 50)
        return [rng.uniform(lo, hi) for _ in range(count)]
    return [rng.standard_normal(n) * scale for _ in range(count)]
