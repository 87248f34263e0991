"""Forward-backward step, envelope, augmented Lagrangian and linesearch tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import OracleFailure, ProxBoundViolation
from .problem import CompositeProblem, ProxResult


def scaled_norm(v: np.ndarray) -> float:
    """Euclidean norm that does not underflow for tiny entries."""
    m = float(np.max(np.abs(v))) if v.size else 0.0
    if m == 0.0 or not math.isfinite(m):
        return m
    return m * float(np.linalg.norm(v / m))


@dataclass
class PgStep:
    """One evaluation of the forward-backward operator ``T_gamma`` at ``base``.

    ``fbe_value`` is computed as
    ``f(x) + <grad f(x), x_bar - x> + g(x_bar) + ||x_bar - x||^2 / (2 gamma)``,
    which is the forward-backward envelope for an exact prox and the
    augmented Lagrangian value ``L(x, x_bar, -grad f(x))`` otherwise.
    """

    base: np.ndarray
    candidate: np.ndarray
    gamma: float
    g_at_candidate: float
    f_at_base: float
    grad_at_base: np.ndarray
    fbe_value: float
    residual_norm: float
    inner: float  # <grad f(x), x_bar - x>
    dist_sq: float  # ||x_bar - x||^2
    prox: ProxResult

    @property
    def residual(self) -> np.ndarray:
        return (self.base - self.candidate) / self.gamma

    @property
    def is_fixed_point(self) -> bool:
        return bool(np.array_equal(self.base, self.candidate))

    @property
    def delta(self) -> float:
        """Unscaled sufficient-decrease quantity ``||x_bar - x||^2 / (2 gamma)``."""
        return self.dist_sq / (2 * self.gamma)


def pg_step(problem: CompositeProblem, x, gamma: float,
            warm_start: Optional[ProxResult] = None, inexact=None,
            k: int = 0) -> PgStep:
    """Evaluate ``x_bar in T_gamma(x) = prox_{gamma g}(x - gamma grad f(x))``.

    Parameters
    ----------
    problem : CompositeProblem
    x : array_like
    gamma : float
        Stepsize, strictly below the prox-boundedness threshold of ``g``.
    warm_start : ProxResult, optional
        Previous prox point; required in inexact mode, where the returned
        point must not increase the prox subproblem objective relative to it.
    inexact : InexactProxWrapper, optional
        When given, the prox subproblem is solved approximately by this
        wrapper instead of calling ``problem.nonsmooth.prox``.
    k : int
        Outer iteration index, forwarded to the wrapper's tolerance schedule.
    """
    x = np.asarray(x, dtype=float)
    if not gamma < problem.nonsmooth.prox_bound_threshold:
        raise ProxBoundViolation(f"gamma = {gamma} is not below the prox-boundedness threshold")
    fx = problem.f(x)
    gx = problem.grad(x)
    if inexact is None:
        res = problem.nonsmooth.prox(x - gamma * gx, gamma)
    else:
        if warm_start is None:
            warm_start = ProxResult(point=x.copy(), g_value=problem.g(x))
        res = inexact.solve(x, gx, gamma, warm_start, k=k)
    xbar = np.asarray(res.point, dtype=float)
    if not (math.isfinite(res.g_value) and np.all(np.isfinite(xbar))):
        raise OracleFailure("prox returned a point outside dom g")
    diff = xbar - x
    inner = float(gx @ diff)
    dist_sq = float(diff @ diff)
    fbe_value = fx + inner + res.g_value + dist_sq / (2 * gamma)
    return PgStep(
        base=x,
        candidate=xbar,
        gamma=gamma,
        g_at_candidate=res.g_value,
        f_at_base=fx,
        grad_at_base=gx,
        fbe_value=fbe_value,
        residual_norm=scaled_norm(diff) / gamma,
        inner=inner,
        dist_sq=dist_sq,
        prox=res,
    )


def fbe_moreau_form(problem: CompositeProblem, x, gamma: float,
                    moreau_of_g: Optional[Callable[[np.ndarray, float], float]] = None) -> float:
    """Envelope value via ``f(x) - gamma/2 ||grad f(x)||^2 + g^gamma(x - gamma grad f(x))``.

    Only used to cross-check :func:`pg_step`; ``moreau_of_g`` defaults to the
    oracle's analytic Moreau envelope.
    """
    x = np.asarray(x, dtype=float)
    if moreau_of_g is None:
        moreau_of_g = problem.nonsmooth.moreau
    fx = problem.f(x)
    gx = problem.grad(x)
    return fx - 0.5 * gamma * float(gx @ gx) + moreau_of_g(x - gamma * gx, gamma)


def aug_lagrangian(problem: CompositeProblem, x, z, y, beta_pen: float) -> float:
    """``f(x) + g(z) + <y, x - z> + beta/2 ||x - z||^2`` (``inf`` off ``dom g``)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    gz = problem.g(z)
    if gz == math.inf:
        return math.inf
    diff = x - z
    return problem.f(x) + gz + float(np.asarray(y) @ diff) + 0.5 * beta_pen * float(diff @ diff)


def gamma_condition_violated(step: PgStep, problem: CompositeProblem, alpha: float) -> bool:
    """True iff ``f(x_bar) > f(x) + <grad f(x), x_bar - x> + alpha/(2 gamma) ||x_bar - x||^2``.

    Compared strictly in working precision, without slack.
    """
    f_bar = problem.f(step.candidate)
    return f_bar > step.f_at_base + step.inner + alpha / (2 * step.gamma) * step.dist_sq


def gradient_gap_violated(step: PgStep, problem: CompositeProblem) -> bool:
    """True iff ``||grad f(x) - grad f(x_bar)|| > ||x - x_bar|| / gamma``."""
    gap = np.linalg.norm(step.grad_at_base - problem.grad(step.candidate))
    return gap > step.residual_norm


def tau_condition_violated(phi_new: float, phi_prev: float, prev_residual_sq_over_gamma: float,
                           alpha: float, beta: float) -> bool:
    """True iff ``phi_new > phi_prev - beta (1 - alpha) / 2 * prev_quantity``.

    ``prev_quantity`` is ``||x_bar_prev - x_prev||^2 / gamma_prev``.
    """
    return phi_new > phi_prev - 0.5 * beta * (1 - alpha) * prev_residual_sq_over_gamma
