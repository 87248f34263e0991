import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from panocplus import (DomainError, LBFGSDirection, NewtonFBEDirection, PaperDivergenceDirection,
                       build_bench_problem, pg_step)
from panocplus.directions import (cap_direction, fbe_derivatives_1d, newton_fbe_direction_1d,
                                  nominal_direction, paper_divergence_direction)

from helpers import fd_derivative


def test_nominal_direction():
    assert nominal_direction(np.array([1.0]), np.array([2 / 3]))[0] == pytest.approx(-1 / 3)
    assert np.array_equal(nominal_direction(np.ones(2), np.ones(2)), np.zeros(2))


def test_cap_zero_kills_direction():
    d = cap_direction(np.array([3.0, -4.0]), np.zeros(2), np.ones(2), 0.0)
    assert np.array_equal(d, np.zeros(2))


def test_cap_scales_radially():
    d = cap_direction(np.array([3.0, 4.0]), np.zeros(2), np.array([1.0, 0.0]), 2.0)
    assert np.linalg.norm(d) <= 2.0
    assert d[0] / d[1] == pytest.approx(0.75)


@settings(max_examples=200, deadline=None)
@given(arrays(float, 3, elements=st.floats(-1e6, 1e6)),
       arrays(float, 3, elements=st.floats(-10, 10)),
       st.floats(0, 1e3))
def test_cap_bound_holds_exactly(d, step, cap):
    x = np.zeros(3)
    out = cap_direction(d, x, step, cap)
    assert np.linalg.norm(out) <= cap * np.linalg.norm(step)


def test_lbfgs_empty_memory_is_nominal():
    lb = LBFGSDirection()
    lb.start(None)
    x, xbar = np.array([1.0, 2.0]), np.array([0.5, 1.0])
    assert np.array_equal(lb.propose(x, xbar, 0.5, 0.5), xbar - x)
    assert np.allclose(lb.apply((x - xbar) / 0.5, 0.5), xbar - x)


def _quadratic_pair(lb, p, gamma, xs):
    for x in xs:
        st_ = pg_step(p, [x], gamma)
        lb.update(st_.base, st_.candidate, gamma)
    return st_


def test_lbfgs_secant_on_linear_residual():
    p = build_bench_problem("quadratic")
    lb = LBFGSDirection()
    lb.start(p)
    last = _quadratic_pair(lb, p, 0.5, [2.0, 1.0])
    assert len(lb.pairs) == 1
    d = lb.propose(last.base, last.candidate, 0.5, 0.5)
    assert last.base[0] + d[0] == pytest.approx(0.0, abs=1e-15)


def test_lbfgs_rejects_negative_curvature():
    lb = LBFGSDirection()
    assert not lb.push(np.array([1.0]), np.array([-1.0]))
    assert not lb.push(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert len(lb.pairs) == 0
    assert lb.push(np.array([1.0]), np.array([2.0]))
    assert len(lb.pairs) == 1


def test_lbfgs_flushed_on_gamma_change():
    p = build_bench_problem("quadratic")
    lb = LBFGSDirection()
    lb.start(p)
    _quadratic_pair(lb, p, 0.5, [2.0, 1.0])
    lb.notify_gamma_changed(0.25)
    assert len(lb.pairs) == 0
    _quadratic_pair(lb, p, 0.25, [1.0])
    st_ = pg_step(p, [0.5], 0.125)
    lb.update(st_.base, st_.candidate, 0.125)
    assert len(lb.pairs) == 0


def test_lbfgs_memory_bound():
    lb = LBFGSDirection(memory=3)
    for i in range(6):
        lb.push(np.array([1.0 + i]), np.array([1.0]))
    assert len(lb.pairs) == 3


def test_lbfgs_two_loop_matches_dense_bfgs():
    rng = np.random.default_rng(1)
    lb = LBFGSDirection(memory=5)
    A = rng.standard_normal((4, 4))
    A = A @ A.T + 4 * np.eye(4)
    pairs = []
    for _ in range(3):
        s = rng.standard_normal(4)
        y = A @ s
        lb.push(s, y)
        pairs.append((s, y))
    s, y = pairs[-1]
    H = (s @ y) / (y @ y) * np.eye(4)
    for s, y in pairs:
        rho = 1 / (s @ y)
        V = np.eye(4) - rho * np.outer(y, s)
        H = V.T @ H @ V + rho * np.outer(s, s)
    r = rng.standard_normal(4)
    assert np.allclose(lb.apply(r, 1.0), -H @ r, rtol=1e-10)


def test_divergence_direction_quadruples():
    d = paper_divergence_direction(np.array([1.0]), np.array([2 / 3]), 0.5)
    assert d[0] == pytest.approx(3.0, rel=1e-15)
    assert 1.0 + d[0] == pytest.approx(4.0, rel=1e-15)


@pytest.mark.parametrize("x,gamma", [(1.0, 0.5), (3.0, 0.01), (0.2, 1.0)])
def test_divergence_direction_is_three_x(x, gamma):
    st_ = pg_step(build_bench_problem("cubic"), [x], gamma)
    d = paper_divergence_direction(st_.base, st_.candidate, gamma)
    assert d[0] == pytest.approx(3 * x, rel=1e-12)


def test_divergence_direction_saturation_and_fixed_point():
    d = paper_divergence_direction(np.array([100.0]), np.array([100.0 - 100 / 4.5 * 3]), 1 / 300,
                                   saturation=100.0)
    assert d[0] == pytest.approx(100.0)
    assert paper_divergence_direction(np.array([2.0]), np.array([2.0]), 0.5)[0] == 0.0
    assert PaperDivergenceDirection(1.0).propose(np.array([5.0]), np.array([4.0]), 0.5, 0.5)[0] \
        == pytest.approx(1.0)


def test_divergence_direction_domain():
    with pytest.raises(DomainError):
        paper_divergence_direction(np.array([0.0]), np.array([0.0]), 0.5)
    with pytest.raises(DomainError):
        paper_divergence_direction(np.ones(2), np.zeros(2), 0.5)


def test_newton_quadratic_one_step():
    p = build_bench_problem("quadratic")
    d = newton_fbe_direction_1d(p, 1.0, 0.5, 1e-6)
    assert 1.0 + d == pytest.approx(0.0, abs=1e-15)


def test_newton_fixed_point_gives_zero():
    p = build_bench_problem("cubic")
    assert newton_fbe_direction_1d(p, 0.0, 0.5, 1e-6) == 0.0


def test_newton_hessian_floor():
    # at y = gamma x = 1/2 the envelope curvature of the cubic vanishes
    p = build_bench_problem("cubic")
    grad, hess = fbe_derivatives_1d(p, 1.0, 0.5)
    assert hess == pytest.approx(0.0, abs=1e-14)
    assert newton_fbe_direction_1d(p, 1.0, 0.5, 1e-3) == pytest.approx(-grad / 1e-3)


@pytest.mark.parametrize("pid,x,gamma", [("cubic", 0.8, 0.3), ("cubic", -1.7, 0.1),
                                         ("cubic_box_smooth", 2.0, 0.2),
                                         ("cubic_box_smooth", 120.0, 1e-4),
                                         ("quadratic", 0.4, 0.7)])
def test_fbe_derivatives_match_finite_differences(pid, x, gamma):
    p = build_bench_problem(pid)
    fbe = lambda t: pg_step(p, [t], gamma).fbe_value
    grad, hess = fbe_derivatives_1d(p, x, gamma)
    h = 1e-6 * max(1.0, abs(x))
    assert grad == pytest.approx(fd_derivative(fbe, x, h), rel=1e-6, abs=1e-8)
    dgrad = fd_derivative(lambda t: fbe_derivatives_1d(p, t, gamma)[0], x, h)
    assert hess == pytest.approx(dgrad, rel=1e-5, abs=1e-6)


def test_newton_requires_scalar_smooth_problem():
    with pytest.raises(DomainError):
        NewtonFBEDirection().start(build_bench_problem("l1_lasso_small"))
