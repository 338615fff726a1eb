import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_gap import Domain, quadrature, tent
from nonlocal_gap.exceptions import EvaluationError


@pytest.mark.parametrize("order", [1, 2, 5, 16, 24])
def test_gauss_legendre_is_exact_to_degree_2n_minus_1(order):
    x, w = quadrature.gauss_legendre(order)
    assert np.all(w > 0)
    for d in range(2 * order):
        exact = 0.0 if d % 2 else 2.0 / (d + 1)
        assert math.fsum(w * x**d) == pytest.approx(exact, abs=1e-13)


def test_integrate_examples():
    assert quadrature.integrate(Domain.interval(-1, 1), lambda x: x[:, 0] ** 2) == pytest.approx(2 / 3, abs=1e-15)
    dom = Domain.from_boxes([[0, 0, 2, 1], [0, 1, 1, 2]])
    assert quadrature.integrate(dom, lambda x: np.ones(len(x))) == pytest.approx(dom.measure, rel=1e-14)
    sq = Domain.box([0, 0], [1, 1])
    assert quadrature.integrate(sq, lambda x: x[:, 0] * x[:, 1]) == pytest.approx(0.25, abs=1e-15)


def test_rule_weights_sum_to_measure():
    dom = Domain.from_boxes([[0, 0, 0, 1, 1, 1], [1, 0, 0, 3, 1, 0.5]])
    rule = quadrature.tensor_rule(dom)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(dom.measure, rel=1e-12)


def test_non_finite_integrand_reports_location():
    with pytest.raises(EvaluationError) as info, np.errstate(divide="ignore"):
        quadrature.integrate(Domain.interval(0, 1), lambda x: 1 / (x[:, 0] - x[3, 0]))
    assert info.value.location is not None


def test_order_doubling_plateau_on_smooth_integrand():
    dom = Domain.interval(0, 2)
    f = lambda x: np.exp(np.sin(3 * x[:, 0]))
    a = quadrature.integrate(dom, f, order=24)
    b = quadrature.integrate(dom, f, order=48)
    assert abs(a - b) < 1e-10 * abs(b)


def test_integrate_product_constant_and_symmetry():
    d1, d2 = Domain.interval(-1, 0), Domain.box([0], [2])
    assert quadrature.integrate_product(d1, d2, lambda x, y: np.ones(np.broadcast(x[..., 0], y[..., 0]).shape)) == pytest.approx(2.0)
    g = lambda x, y: np.exp(-((x[..., 0] - y[..., 0]) ** 2))
    assert quadrature.integrate_product(d1, d2, g) == pytest.approx(quadrature.integrate_product(d2, d1, g), abs=1e-12)


def test_tent_cross_mass_matches_one_dimensional_reduction():
    # iint_{(-1,0)x(0,1)} J(x-y) = int_0^1 z J(z) dz + int_1^2 (2-z) J(z) dz = 1/6 for a unit tent
    from scipy import integrate

    from nonlocal_gap.gap import pair_integral

    k = tent(1.0)
    oracle = integrate.quad(lambda z: z * (1 - z), 0, 1)[0]
    assert oracle == pytest.approx(1 / 6, abs=1e-15)
    d1, d2 = Domain.interval(-1, 0), Domain.interval(0, 1)
    assert pair_integral(k, d1, d2) == pytest.approx(oracle, abs=1e-12)
    # a plain tensor product rule does not see the kink on x - y = 0 and only gets close
    plain = quadrature.integrate_product(d1, d2, lambda x, y: k(x - y))
    assert plain == pytest.approx(oracle, abs=1e-3)


def test_local_rule_respects_window_and_domain():
    dom = Domain.interval(-1, 1)
    rule = quadrature.local_rule(dom, np.array([0.9]), np.array([0.0, 0.25]), 0.5, 8)
    assert rule.nodes.min() >= 0.4 and rule.nodes.max() <= 1.0
    assert rule.weights.sum() == pytest.approx(0.6)
    assert quadrature.local_rule(dom, np.array([5.0]), np.array([0.0]), 0.5, 8) is None


def test_minimize_on_closure_examples():
    x, v = quadrature.minimize_on_closure(Domain.interval(-1, 1), lambda p: p[:, 0] ** 2)
    assert v == pytest.approx(0.0, abs=1e-14) and abs(x[0]) < 1e-7
    sq = Domain.box([0, 0], [1, 2])
    x, v = quadrature.minimize_on_closure(sq, lambda p: p[:, 0] + p[:, 1])
    assert v == pytest.approx(0.0) and np.allclose(x, [0, 0])


@given(st.floats(-0.9, 0.9), st.floats(0.1, 5.0))
def test_minimum_never_exceeds_grid_values(c, scale):
    dom = Domain.interval(-1, 1)
    f = lambda p: scale * np.cos(4 * (p[:, 0] - c)) + p[:, 0]
    x, v, (pts, vals) = quadrature.minimize_on_closure(dom, f, return_samples=True)
    assert v <= vals.min() + 1e-15
    assert f(x[None, :])[0] == pytest.approx(v)


def disk_in_square_oracle():
    # exact areas of a radius-R disk clipped by the square (-1, 1)^2
    R = 0.5
    return [((0.0, 0.0), R, math.pi * R * R),
            ((1.0, 1.0), R, math.pi * R * R / 4),
            ((1.0, 0.0), R, math.pi * R * R / 2),
            ((0.0, 0.0), 5.0, 4.0)]


@pytest.mark.parametrize("center, radius, area", disk_in_square_oracle())
def test_polar_rule_clipped_disk_area(center, radius, area):
    rule = quadrature.polar_rule(Domain.box([-1, -1], [1, 1]), center, [0.0], radius, 12)
    assert rule.measure == pytest.approx(area, abs=1e-14)


@given(cx=st.floats(-1.3, 1.3), cy=st.floats(-1.3, 1.3))
def test_polar_rule_integrates_smooth_function_on_l_shape(cx, cy):
    dom = Domain.from_boxes([[0, 0, 2, 1], [0, 1, 1, 2]])
    rule = quadrature.polar_rule(dom, (cx + 0.5, cy + 0.5), [0.0, 0.3], 10.0, 12)
    f = lambda p: np.cos(p[:, 0]) * np.exp(p[:, 1])
    # int cos x e^y over [0,2]x[0,1] plus [0,1]x[1,2]
    exact = math.sin(2) * (math.e - 1) + math.sin(1) * (math.e**2 - math.e)
    assert rule.integrate(f(rule.nodes)) == pytest.approx(exact, abs=1e-12)
    assert np.all(dom.locate(rule.nodes) >= 0)


def test_polar_rule_misses_far_domain():
    assert quadrature.polar_rule(Domain.box([0, 0], [1, 1]), (5.0, 5.0), [0.0], 1.0, 8) is None
    with pytest.raises(Exception):
        quadrature.polar_rule(Domain.interval(0, 1), (0.5,), [0.0], 1.0, 8)
