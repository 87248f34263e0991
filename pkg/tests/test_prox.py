import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panocplus import (BoxIndicator, ConfigError, DeltaStationary, InexactProxWrapper, L1Norm,
                       ProxResult, ZeroFunction, ZeroNorm)
from panocplus.exceptions import InnerBudgetExhausted
from panocplus.prox import inexact_prox

from helpers import grid_argmin


def prox_objective(oracle, p, gamma):
    def obj(w):
        return _g_vec(oracle, w) + (w - p) ** 2 / (2 * gamma)
    return obj


def _g_vec(oracle, w):
    if isinstance(oracle, ZeroFunction):
        return np.zeros_like(w)
    if isinstance(oracle, L1Norm):
        return oracle.weight * np.abs(w)
    return oracle.weight * (w != 0)


def _box_obj(lo, hi, p, gamma):
    def obj(w):
        return np.where((w >= lo) & (w <= hi), 0.0, np.inf) + (w - p) ** 2 / (2 * gamma)
    return obj


def test_zero_prox():
    res = ZeroFunction().prox(np.array([1.0, -2.0]), 0.1)
    assert np.array_equal(res.point, [1.0, -2.0])
    assert ZeroFunction().prox(np.zeros(1), 1.0).point[0] == 0.0
    assert ZeroFunction().moreau(np.array([5.0]), 0.3) == 0.0


def test_box_prox_examples():
    box = BoxIndicator.symmetric(100.0)
    assert box.prox(np.array([150.0]), 1.0).point[0] == 100.0
    inside = box.prox(np.array([3.0]), 1.0)
    assert inside.point[0] == 3.0 and inside.witness[0] == 0.0
    assert BoxIndicator.symmetric(0.0).prox(np.array([-42.0]), 1.0).point[0] == 0.0


def test_box_witness_in_normal_cone():
    box = BoxIndicator(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
    res = box.prox(np.array([3.0, -1.0]), 0.5)
    assert np.array_equal(res.point, [1.0, 0.0])
    assert res.witness[0] > 0 and res.witness[1] < 0


def test_l1_prox_examples():
    l1 = L1Norm(1.0)
    assert l1.prox(np.array([2.0]), 1.0).point[0] == 1.0
    assert l1.prox(np.array([0.0]), 1.0).point[0] == 0.0
    assert l1.prox(np.array([0.5]), 1.0).point[0] == 0.0
    w, _ = grid_argmin(lambda w: np.abs(w) + 0.5 * (w - 2.0) ** 2, -3, 3)
    assert w == pytest.approx(1.0, abs=1e-4)


def test_l1_witness_is_subgradient():
    l1 = L1Norm(0.7)
    res = l1.prox(np.array([2.0, 0.1, -3.0]), 1.0)
    v, x = res.witness, res.point
    assert np.allclose(v[x != 0], 0.7 * np.sign(x[x != 0]))
    assert np.all(np.abs(v[x == 0]) <= 0.7)


def test_l0_prox_examples():
    l0 = ZeroNorm(1.0)
    assert np.array_equal(l0.prox(np.array([2.0, 0.5]), 0.5).point, [2.0, 0.0])
    assert l0.prox(np.zeros(1), 0.5).point[0] == 0.0


@pytest.mark.parametrize("gamma,weight", [(0.5, 1.0), (0.37, 0.8), (2.0, 0.25)])
def test_l0_tie_goes_to_zero(gamma, weight):
    t = math.sqrt(2 * gamma * weight)
    res = ZeroNorm(weight).prox(np.array([t, -t]), gamma)
    assert np.array_equal(res.point, [0.0, 0.0])
    # both candidates attain (nearly) the same value
    assert weight == pytest.approx(t * t / (2 * gamma), rel=1e-15)


def test_l0_witness_membership():
    res = ZeroNorm(1.0).prox(np.array([3.0, 0.2, -5.0]), 0.5)
    assert ZeroNorm.subdifferential_contains(res.point, res.witness)
    assert not ZeroNorm.subdifferential_contains(np.array([1.0]), np.array([0.5]))


def test_bad_parameters():
    with pytest.raises(ConfigError):
        L1Norm(0.0)
    with pytest.raises(ConfigError):
        ZeroNorm(-1.0)
    with pytest.raises(ConfigError):
        BoxIndicator([1.0], [0.0])
    with pytest.raises(ConfigError):
        InexactProxWrapper(ZeroFunction(), inner_ratio=1.0)


def _random_oracle(rng):
    kind = rng.integers(4)
    if kind == 0:
        return ZeroFunction(), None
    if kind == 1:
        lo = rng.uniform(-2, 0)
        hi = lo + rng.uniform(0, 3)
        return BoxIndicator([lo], [hi]), (lo, hi)
    if kind == 2:
        return L1Norm(rng.uniform(0.1, 2)), None
    return ZeroNorm(rng.uniform(0.1, 2)), None


def test_exact_prox_matches_grid_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        oracle, box = _random_oracle(rng)
        p = rng.uniform(-4, 4)
        gamma = rng.uniform(0.05, 2)
        res = oracle.prox(np.array([p]), gamma)
        if box is None:
            obj = prox_objective(oracle, p, gamma)
        else:
            obj = _box_obj(*box, p, gamma)
        _, brute = grid_argmin(obj, -8.0, 8.0, extra=[0.0] if box is None else list(box))
        val = float(obj(res.point)[0])
        assert val == pytest.approx(brute, abs=1e-6), (type(oracle).__name__, p, gamma)


@pytest.mark.parametrize("oracle", [ZeroFunction(), L1Norm(0.8), ZeroNorm(0.6),
                                    BoxIndicator([-1.0], [0.5])])
def test_moreau_matches_grid(oracle):
    for u in (-3.0, -0.4, 0.0, 0.2, 2.5):
        gamma = 0.7
        if isinstance(oracle, BoxIndicator):
            obj = _box_obj(-1.0, 0.5, u, gamma)
            extra = [-1.0, 0.5]
        else:
            obj = prox_objective(oracle, u, gamma)
            extra = [0.0]
        _, brute = grid_argmin(obj, -8.0, 8.0, extra=extra)
        assert oracle.moreau(np.array([u]), gamma) == pytest.approx(brute, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.floats(1e-3, 10), st.floats(1e-2, 5))
def test_l1_prox_is_optimal(p, gamma, weight):
    l1 = L1Norm(weight)
    x = l1.prox(np.array([p]), gamma).point[0]
    val = weight * abs(x) + (x - p) ** 2 / (2 * gamma)
    for w in (x - 1e-3, x + 1e-3, 0.0, p):
        assert val <= weight * abs(w) + (w - p) ** 2 / (2 * gamma) + 1e-12 * (1 + abs(val))


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.floats(1e-3, 10), st.floats(1e-2, 5))
def test_l0_prox_is_optimal(p, gamma, weight):
    l0 = ZeroNorm(weight)
    x = l0.prox(np.array([p]), gamma).point[0]
    val = weight * (x != 0) + (x - p) ** 2 / (2 * gamma)
    # the only candidates are 0 and p
    assert val <= min(weight * (p != 0), p * p / (2 * gamma)) + 1e-12 * (1 + abs(val))


# inexact wrapper

def test_inexact_large_delta_one_step_improves():
    box = BoxIndicator.symmetric(1.0)
    w = InexactProxWrapper(box, delta=1e6)
    x, grad, gamma = np.array([0.0]), np.array([-3.0]), 1.0
    warm = ProxResult(np.array([0.0]), 0.0)
    res = w.solve(x, grad, gamma, warm)
    assert isinstance(res.exactness, DeltaStationary)
    assert w.subproblem_value(x, grad, gamma, res.point) <= w.subproblem_value(x, grad, gamma,
                                                                               warm.point)
    assert res.point[0] == pytest.approx(1.0)


def test_inexact_box_reaches_clamp():
    box = BoxIndicator.symmetric(1.0)
    w = InexactProxWrapper(box, delta=1e-8)
    x, grad = np.array([2.0]), np.array([0.0])
    res = inexact_prox(w, x, grad, 1.0, ProxResult(np.array([-1.0]), 0.0))
    assert res.point[0] == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.norm(res.witness + (res.point - x) / 1.0) <= 1e-8


def test_inexact_zero_function_matches_gradient_step():
    w = InexactProxWrapper(ZeroFunction(), delta=1e-10)
    x, grad, gamma = np.array([1.0, -2.0]), np.array([0.5, 0.25]), 0.8
    res = w.solve(x, grad, gamma, ProxResult(x.copy(), 0.0))
    assert np.allclose(res.point, x - gamma * grad, atol=1e-9)


def test_inexact_budget_exhausted():
    w = InexactProxWrapper(L1Norm(1.0), delta=1e-14, max_inner_iters=1)
    with pytest.raises(InnerBudgetExhausted):
        w.solve(np.array([5.0]), np.array([0.0]), 1.0, ProxResult(np.array([-5.0]), 5.0))


def test_inexact_delta_schedule():
    w = InexactProxWrapper(ZeroFunction(), delta=lambda k: 1.0 / (k + 1))
    assert w.tolerance(3) == 0.25
    with pytest.raises(ConfigError):
        InexactProxWrapper(ZeroFunction(), delta=-1.0).tolerance()
