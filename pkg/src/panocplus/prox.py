"""Closed-form proximal oracles and an inexact (delta-stationary) prox wrapper."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .exceptions import ConfigError, InnerBudgetExhausted
from .problem import DeltaStationary, Exact, ProxOracle, ProxResult


def _exact(p, point, g_value, gamma):
    # prox optimality: (p - x_bar) / gamma is a regular subgradient of g at x_bar
    return ProxResult(point=point, g_value=g_value, witness=(p - point) / gamma, exactness=Exact())


def prox_zero(p, gamma: float) -> ProxResult:
    p = np.asarray(p, dtype=float)
    return ProxResult(point=p.copy(), g_value=0.0, witness=np.zeros_like(p), exactness=Exact())


def prox_box(box: "BoxIndicator", p, gamma: float) -> ProxResult:
    p = np.asarray(p, dtype=float)
    point = np.clip(p, box.lower, box.upper)
    return _exact(p, point, 0.0, gamma)


def prox_l1(weight: float, p, gamma: float) -> ProxResult:
    p = np.asarray(p, dtype=float)
    point = np.sign(p) * np.maximum(np.abs(p) - gamma * weight, 0.0)
    return _exact(p, point, weight * float(np.abs(point).sum()), gamma)


def prox_l0(zn: "ZeroNorm", p, gamma: float) -> ProxResult:
    """Hard thresholding at ``sqrt(2 gamma weight)``; ties go to zero."""
    p = np.asarray(p, dtype=float)
    keep = np.abs(p) > math.sqrt(2 * gamma * zn.weight)
    point = np.where(keep, p, 0.0)
    return _exact(p, point, zn.weight * float(np.count_nonzero(point)), gamma)


class ZeroFunction(ProxOracle):
    """``g = 0``."""

    def g_eval(self, x):
        return 0.0

    def prox(self, p, gamma):
        return prox_zero(p, gamma)

    def moreau(self, u, gamma):
        return 0.0


class BoxIndicator(ProxOracle):
    """Indicator of ``{x : lower <= x <= upper}``; bounds may be infinite."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower > self.upper):
            raise ConfigError("box has lower > upper")

    @classmethod
    def symmetric(cls, bound: float, dimension: int = 1) -> "BoxIndicator":
        b = np.full(dimension, float(bound))
        return cls(-b, b)

    def g_eval(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.all(x >= self.lower) and np.all(x <= self.upper)
        return 0.0 if inside else math.inf

    def prox(self, p, gamma):
        return prox_box(self, p, gamma)

    def moreau(self, u, gamma):
        u = np.asarray(u, dtype=float)
        d = u - np.clip(u, self.lower, self.upper)
        return float(d @ d) / (2 * gamma)


class L1Norm(ProxOracle):
    """``g = weight * ||x||_1``."""

    def __init__(self, weight: float = 1.0):
        if not weight > 0:
            raise ConfigError("weight must be positive")
        self.weight = float(weight)

    def g_eval(self, x):
        return self.weight * float(np.abs(x).sum())

    def prox(self, p, gamma):
        return prox_l1(self.weight, p, gamma)

    def moreau(self, u, gamma):
        a = np.abs(np.asarray(u, dtype=float))
        t = gamma * self.weight
        huber = np.where(a > t, self.weight * (a - 0.5 * t), a * a / (2 * gamma))
        return float(huber.sum())


class ZeroNorm(ProxOracle):
    """``g = weight * ||x||_0`` (number of nonzeros); nonconvex and lsc."""

    def __init__(self, weight: float = 1.0):
        if not weight > 0:
            raise ConfigError("weight must be positive")
        self.weight = float(weight)

    def g_eval(self, x):
        return self.weight * float(np.count_nonzero(x))

    def prox(self, p, gamma):
        return prox_l0(self, p, gamma)

    def moreau(self, u, gamma):
        u = np.asarray(u, dtype=float)
        return float(np.minimum(self.weight, u * u / (2 * gamma)).sum())

    @staticmethod
    def subdifferential_contains(x, v) -> bool:
        """Membership in ``E_1 x ... x E_n`` with ``E_i = R`` if ``x_i = 0`` else ``{0}``."""
        x = np.asarray(x)
        v = np.asarray(v)
        return bool(np.all((x == 0) | (v == 0)))


@dataclass
class InexactProxWrapper:
    """Approximate prox via proximal-gradient descent on the prox subproblem.

    For a base point ``x`` with gradient ``grad_fx`` and stepsize ``gamma`` the
    subproblem is ``min_z g(z) + <grad_fx, z - x> + ||z - x||^2 / (2 gamma)``.
    Starting from the warm start, inner steps of size ``inner_ratio * gamma``
    are taken until the subgradient witness ``v`` produced by the last inner
    step satisfies ``||v + grad_fx + (z - x) / gamma|| <= delta``.

    Every inner step decreases the subproblem objective because the inner
    stepsize is below ``gamma`` (the inverse curvature of the quadratic part),
    so the result never does worse than the warm start.

    ``delta`` may be a constant or a schedule ``k -> delta_k``.
    """

    inner: ProxOracle
    delta: Union[float, Callable[[int], float]] = 1e-4
    inner_ratio: float = 0.5
    max_inner_iters: int = 10_000

    def __post_init__(self):
        if not 0 < self.inner_ratio < 1:
            raise ConfigError("inner_ratio must lie in (0, 1)")

    @property
    def prox_bound_threshold(self):
        return self.inner.prox_bound_threshold

    def tolerance(self, k: int = 0) -> float:
        d = float(self.delta(k)) if callable(self.delta) else float(self.delta)
        if not d >= 0:
            raise ConfigError("delta must be nonnegative")
        return d

    def subproblem_value(self, x, grad_fx, gamma, z) -> float:
        gz = float(self.inner.g_eval(z))
        if gz == math.inf:
            return math.inf
        diff = z - x
        return gz + float(grad_fx @ diff) + float(diff @ diff) / (2 * gamma)

    def solve(self, x, grad_fx, gamma: float, warm_start: ProxResult, k: int = 0) -> ProxResult:
        delta = self.tolerance(k)
        sigma = self.inner_ratio * gamma
        z = np.asarray(warm_start.point, dtype=float)
        for _ in range(self.max_inner_iters):
            u = z - sigma * (grad_fx + (z - x) / gamma)
            r = self.inner.prox(u, sigma)
            z = np.asarray(r.point, dtype=float)
            v = (u - z) / sigma
            if np.linalg.norm(v + grad_fx + (z - x) / gamma) <= delta:
                return ProxResult(point=z, g_value=r.g_value, witness=v,
                                  exactness=DeltaStationary(delta))
        raise InnerBudgetExhausted(
            f"no {delta:g}-stationary point after {self.max_inner_iters} inner steps")


def inexact_prox(wrapper: InexactProxWrapper, x, grad_fx, gamma: float,
                 warm_start: ProxResult, k: int = 0) -> ProxResult:
    return wrapper.solve(np.asarray(x, dtype=float), np.asarray(grad_fx, dtype=float),
                         gamma, warm_start, k=k)
