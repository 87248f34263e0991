"""Update-direction providers for the PANOC-type solvers.

A provider is asked for ``d`` at the previous accepted pair ``(x, x_bar)``.
Solvers enforce the cap ``||d|| <= D ||x_bar - x||`` themselves, so providers
may return anything finite.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .exceptions import DomainError
from .prox import BoxIndicator, ZeroFunction


class DirectionProvider:
    """Base provider.

    Hooks
    -----
    start(problem)
        Called once before a solve.
    propose(x, x_bar, gamma_prev, gamma)
        ``x_bar`` was computed from ``x`` with ``gamma_prev``; ``gamma`` is the
        stepsize currently in force (it differs from ``gamma_prev`` after a
        stepsize reduction within the iteration).
    notify_gamma_changed(gamma)
        The residual mapping changed; curvature memory must be discarded.
    update(x, x_bar, gamma)
        Called with every accepted pair.
    """

    def start(self, problem):
        self.problem = problem

    def propose(self, x, x_bar, gamma_prev, gamma):
        raise NotImplementedError

    def notify_gamma_changed(self, gamma):
        pass

    def update(self, x, x_bar, gamma):
        pass


def nominal_direction(x, x_bar):
    return np.asarray(x_bar, dtype=float) - np.asarray(x, dtype=float)


class NominalDirection(DirectionProvider):
    """``d = x_bar - x``: turns PANOC+ into the adaptive proximal gradient method."""

    def propose(self, x, x_bar, gamma_prev, gamma):
        return nominal_direction(x, x_bar)


class ZeroDirection(DirectionProvider):
    def propose(self, x, x_bar, gamma_prev, gamma):
        return np.zeros_like(x)


def cap_direction(d, x, x_bar, cap):
    """Radially shrink ``d`` so that ``||d|| <= cap * ||x_bar - x||``."""
    bound = cap * np.linalg.norm(np.asarray(x_bar) - np.asarray(x))
    norm = np.linalg.norm(d)
    if norm <= bound:
        return d
    if bound == 0:
        return np.zeros_like(d)
    d = d * (bound / norm)
    while np.linalg.norm(d) > bound:
        d = d * (1 - 2.0**-52)
    return d


class LBFGSDirection(DirectionProvider):
    """L-BFGS on the fixed-point residual ``R(x) = (x - x_bar) / gamma``.

    Pairs ``(s, y) = (x+ - x, R(x+) - R(x))`` are only formed between accepted
    points sharing the same stepsize; a pair is stored when
    ``<s, y> > 1e-12 ||s|| ||y||``.
    """

    def __init__(self, memory: int = 10):
        self.memory = memory
        self.pairs = deque(maxlen=memory)
        self._last = None

    def start(self, problem):
        super().start(problem)
        self.pairs.clear()
        self._last = None

    def notify_gamma_changed(self, gamma):
        self.pairs.clear()
        self._last = None

    def push(self, s, y) -> bool:
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            self.pairs.append((s, y, 1.0 / sy))
            return True
        return False

    def update(self, x, x_bar, gamma):
        x = np.asarray(x, dtype=float)
        r = (x - x_bar) / gamma
        if self._last is not None and self._last[2] == gamma:
            self.push(x - self._last[0], r - self._last[1])
        elif self._last is not None:
            self.pairs.clear()
        self._last = (x, r, gamma)

    def apply(self, residual, gamma):
        """Two-loop recursion returning ``-H residual`` (``H0 = <s,y>/<y,y>``)."""
        if not self.pairs:
            return -gamma * residual
        q = np.array(residual, dtype=float)
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        s, y, rho = self.pairs[-1]
        q *= 1.0 / (rho * float(y @ y))
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q

    def propose(self, x, x_bar, gamma_prev, gamma):
        if not self.pairs:
            return nominal_direction(x, x_bar)
        return self.apply((np.asarray(x) - x_bar) / gamma_prev, gamma_prev)


def paper_divergence_direction(x_prev, x_bar_prev, gamma_prev, saturation=np.inf):
    """``d = 9 / (2 gamma x) (x - x_bar)`` for the scalar cubic, saturated at norm ``saturation``.

    Built to make the original PANOC diverge on ``f(x) = 2/9 |x|^3``.
    """
    x = np.asarray(x_prev, dtype=float)
    if x.size != 1:
        raise DomainError("this direction is defined for scalar problems only")
    if x[0] == 0:
        raise DomainError("direction undefined at x = 0")
    d = 9.0 / (2.0 * gamma_prev * x) * (x - np.asarray(x_bar_prev, dtype=float))
    norm = np.linalg.norm(d)
    if norm > saturation:
        d = d * (saturation / norm)
    return d


class PaperDivergenceDirection(DirectionProvider):
    def __init__(self, saturation: float = np.inf):
        self.saturation = saturation

    def propose(self, x, x_bar, gamma_prev, gamma):
        return paper_divergence_direction(x, x_bar, gamma_prev, self.saturation)


def _projection_slope(nonsmooth, u):
    if isinstance(nonsmooth, ZeroFunction):
        return 1.0
    if isinstance(nonsmooth, BoxIndicator):
        lo, hi = float(nonsmooth.lower[0]), float(nonsmooth.upper[0])
        # boundary counts as interior (one admissible Clarke element)
        return 1.0 if lo <= u <= hi else 0.0
    raise DomainError("Newton-on-FBE directions need g = 0 or a box indicator")


def fbe_derivatives_1d(problem, x: float, gamma: float):
    """First and generalized second derivative of the envelope of a 1-D problem.

    With ``u = x - gamma f1(x)``, ``x_bar = P(u)`` and ``m = 1 - gamma f2(x)``
    (``f1, f2, f3`` the derivatives of ``f``)::

        grad = m (x - x_bar) / gamma
        hess = m (1 - P'(u) m) / gamma - f3(x) (x - x_bar)

    ``P'`` is 1 inside the box (boundary included) and 0 outside. When the
    oracle has no ``third_1d`` the ``f3`` term is dropped, which is still exact
    at fixed points and for quadratic ``f``.
    """
    if problem.dimension != 1 or problem.smooth.hess_1d is None:
        raise DomainError("Newton-on-FBE needs a 1-D problem with hess_1d")
    xf = float(x)
    fp = float(problem.grad(np.array([xf]))[0])
    fpp = float(problem.smooth.hess_1d(xf))
    u = xf - gamma * fp
    xbar = float(problem.nonsmooth.prox(np.array([u]), gamma).point[0])
    m = 1.0 - gamma * fpp
    grad = m * (xf - xbar) / gamma
    hess = m * (1.0 - _projection_slope(problem.nonsmooth, u) * m) / gamma
    if problem.smooth.third_1d is not None:
        hess -= float(problem.smooth.third_1d(xf)) * (xf - xbar)
    return grad, hess


def newton_fbe_direction_1d(problem, x: float, gamma: float, mu: float) -> float:
    """``d = -grad / max(mu, hess)`` on the forward-backward envelope."""
    grad, hess = fbe_derivatives_1d(problem, x, gamma)
    return -grad / max(mu, hess)


class NewtonFBEDirection(DirectionProvider):
    def __init__(self, mu: float = 1e-6):
        self.mu = mu

    def start(self, problem):
        if problem.dimension != 1 or problem.smooth.hess_1d is None:
            raise DomainError("Newton-on-FBE needs a 1-D problem with hess_1d")
        super().start(problem)

    def propose(self, x, x_bar, gamma_prev, gamma):
        return np.array([newton_fbe_direction_1d(self.problem, float(x[0]), gamma, self.mu)])
