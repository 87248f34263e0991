"""Composite problem abstraction ``phi = f + g`` and shared solver types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .exceptions import ConfigError, OracleFailure


@dataclass(frozen=True)
class Exact:
    """The prox point is a global minimizer of the prox subproblem."""


@dataclass(frozen=True)
class DeltaStationary:
    """The prox point is ``delta``-stationary for the prox subproblem."""

    delta: float


@dataclass(frozen=True)
class UniformLocal:
    """The prox point is an ``eps``-minimizer on a ball of radius ``r``.

    Exposed for completeness; none of the shipped oracles can certify a finite
    radius, so only ``Exact`` (``r = inf``, ``eps = 0``) arises in practice.
    """

    r: float
    eps: float = 0.0


Exactness = Union[Exact, DeltaStationary, UniformLocal]


@dataclass
class ProxResult:
    """Output of a (possibly inexact) proximal oracle.

    Attributes
    ----------
    point : ndarray
        The candidate ``x_bar``.
    g_value : float
        ``g(x_bar)``, always finite.
    witness : ndarray or None
        An element of the subdifferential of ``g`` at ``x_bar`` if known.
    exactness : Exact | DeltaStationary | UniformLocal
        Quality certificate of ``point``.
    """

    point: np.ndarray
    g_value: float
    witness: Optional[np.ndarray] = None
    exactness: Exactness = field(default_factory=Exact)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.exactness, Exact)


@dataclass(frozen=True)
class SmoothOracle:
    """Value and gradient of the smooth term ``f``.

    ``grad`` must be locally Lipschitz; this is a caller contract and is not
    checked. ``hess_1d`` and ``third_1d`` are the scalar second and third
    derivatives (a.e.); they are only used by the 1-D Newton direction on the
    forward-backward envelope.
    """

    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess_1d: Optional[Callable[[float], float]] = None
    third_1d: Optional[Callable[[float], float]] = None


class ProxOracle:
    """Base class for the nonsmooth term ``g`` and its proximal mapping.

    Subclasses implement :meth:`g_eval` and :meth:`prox`, and may implement
    :meth:`moreau` when the Moreau envelope has a closed form.
    """

    #: threshold of prox-boundedness; prox is only valid for gamma below it
    prox_bound_threshold: float = math.inf

    def g_eval(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, p: np.ndarray, gamma: float) -> ProxResult:
        raise NotImplementedError

    def moreau(self, u: np.ndarray, gamma: float) -> float:
        raise NotImplementedError(f"{type(self).__name__} has no analytic Moreau envelope")

    @property
    def has_moreau(self) -> bool:
        return type(self).moreau is not ProxOracle.moreau


@dataclass(frozen=True)
class CompositeProblem:
    """Minimize ``phi(x) = f(x) + g(x)`` over ``R^n``.

    ``inf_phi`` is an optional declared lower bound on ``phi`` used by
    invariant checks; leave it as ``None`` when unknown.
    """

    smooth: SmoothOracle
    nonsmooth: ProxOracle
    dimension: int
    inf_phi: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")

    def as_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.dimension,):
            raise ConfigError(f"expected a vector of length {self.dimension}, got {x.shape[0]}")
        return x

    def f(self, x: np.ndarray) -> float:
        val = float(self.smooth.eval(x))
        if not math.isfinite(val):
            raise OracleFailure(f"f returned {val}")
        return val

    def grad(self, x: np.ndarray) -> np.ndarray:
        gx = np.asarray(self.smooth.grad(x), dtype=float).reshape(-1)
        if gx.shape != (self.dimension,):
            raise OracleFailure("gradient has the wrong dimension")
        if not np.all(np.isfinite(gx)):
            raise OracleFailure("gradient is not finite")
        return gx

    def g(self, x: np.ndarray) -> float:
        val = float(self.nonsmooth.g_eval(x))
        if math.isnan(val):
            raise OracleFailure("g returned NaN")
        return val


NonmonotoneRule = Union[None, float, Callable[[int], float]]


@dataclass
class SolverConfig:
    """Everything a solve needs apart from the problem and the start point.

    Parameters
    ----------
    gamma0 : float
        Initial proximal stepsize, strictly below the prox-boundedness
        threshold of ``g``.
    alpha, beta : float
        Linesearch parameters in ``(0, 1)``.
    direction_cap : float
        ``D >= 0``; directions are radially scaled so that
        ``||d|| <= D ||x_bar - x||``.
    epsilon : float
        Termination tolerance; a solve stops once the fixed-point residual is
        at most ``epsilon / 2``.
    max_tgamma_evals : int
        Budget counted in forward-backward steps.
    max_iter : int or None
        Optional cap on accepted iterations; hitting it is reported as
        ``BudgetExhausted``.
    nonmonotone_weights : None, float or callable
        Averaging weight ``p_k`` in ``(0, 1]`` for the nonmonotone merit, either
        a constant or a function of ``k``. ``None`` means monotone (``p = 1``).
    strengthened_termination : bool
        After the residual test first passes, additionally require
        ``||grad f(x) - grad f(x_bar)|| <= ||x - x_bar|| / gamma`` in the
        stepsize linesearch and stop when the residual test passes again.
    """

    gamma0: float = 1.0
    alpha: float = 0.95
    beta: float = 0.5
    direction_cap: float = 1e6
    epsilon: float = 1e-8
    max_tgamma_evals: int = 10_000
    max_iter: Optional[int] = None
    nonmonotone_weights: NonmonotoneRule = None
    strengthened_termination: bool = False

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ConfigError("gamma0 must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if not self.direction_cap >= 0:
            raise ConfigError("direction_cap must be nonnegative")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.max_tgamma_evals < 1:
            raise ConfigError("max_tgamma_evals must be positive")
        w = self.nonmonotone_weights
        if w is not None and not callable(w) and not 0 < w <= 1:
            raise ConfigError("nonmonotone weight must lie in (0, 1]")

    def weight(self, k: int) -> float:
        w = self.nonmonotone_weights
        if w is None:
            return 1.0
        p = float(w(k)) if callable(w) else float(w)
        if not 0 < p <= 1:
            raise ConfigError(f"nonmonotone weight p_{k} = {p} outside (0, 1]")
        return p

    def validate_for(self, problem: CompositeProblem) -> None:
        if not self.gamma0 < problem.nonsmooth.prox_bound_threshold:
            raise ConfigError("gamma0 must be below the prox-boundedness threshold of g")


def phi(problem: CompositeProblem, x) -> float:
    """Cost ``f(x) + g(x)``; ``inf`` exactly when ``x`` is outside ``dom g``."""
    x = problem.as_vector(x)
    gx = problem.g(x)
    if gx == math.inf:
        return math.inf
    return problem.f(x) + gx


def check_gradient(problem: CompositeProblem, x, h: Optional[float] = None) -> float:
    """Largest componentwise error between ``grad f`` and central differences.

    The error of component ``i`` is ``|fd_i - g_i| / max(1, |g_i|)``.
    """
    x = problem.as_vector(x)
    if h is None:
        h = 1e-6 * (np.linalg.norm(x) + 1.0)
    g = problem.grad(x)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd = (problem.f(x + e) - problem.f(x - e)) / (2 * h)
        worst = max(worst, abs(fd - g[i]) / max(1.0, abs(g[i])))
    return worst
