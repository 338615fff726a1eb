import math

import numpy as np
import pytest
from scipy.special import erf

from nonlocal_gap import Domain, band, gaussian, generalized_exponential, tent


def tent_b(x, a, lo, hi):
    # int_lo^hi (1 - |x - y|/a)_+ / a dy in closed form
    def F(t):  # primitive of J(t) for |t| <= a, odd about 0
        t = np.clip(t, -a, a)
        return (t - np.sign(t) * t * t / (2 * a)) / a

    return F(x - lo) - F(x - hi)


def test_tent_retained_mass_examples():
    k, dom = tent(1.0), Domain.interval(-1, 1)
    assert band.retained_mass(k, dom, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert band.retained_mass(k, dom, 1.0) == pytest.approx(0.5, abs=1e-14)
    for x in np.linspace(-1, 1, 17):
        assert band.retained_mass(k, dom, x) == pytest.approx(tent_b(x, 1.0, -1, 1), abs=1e-13)


def test_full_support_retains_all_mass():
    k = gaussian(50.0)
    assert band.retained_mass(k, Domain.interval(-20, 20), 0.3) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_retained_mass_matches_erf():
    k, dom = gaussian(1.0), Domain.interval(-5, 5)
    for x in [-5.0, -2.0, 0.0, 4.5, 5.0]:
        exact = 0.5 * (erf(5 - x) + erf(5 + x))
        assert band.retained_mass(k, dom, x) == pytest.approx(exact, abs=1e-14)


def test_continuous_spectrum_tent():
    sp = band.continuous_spectrum(tent(1.0), Domain.interval(-1, 1))
    assert sp.sup_sigma_c == pytest.approx(-0.5, abs=1e-14)
    assert sp.inf_sigma_c == pytest.approx(-1.0, abs=1e-14)
    assert abs(sp.argmin_b[0]) == pytest.approx(1.0)
    assert sp.inf_sigma_c <= sp.sup_sigma_c < 0


def test_continuous_spectrum_gaussian_on_long_interval():
    sp = band.continuous_spectrum(gaussian(1.0), Domain.interval(-5, 5))
    assert sp.sup_sigma_c == pytest.approx(-0.5 * erf(10.0), abs=1e-14)
    assert sp.inf_sigma_c == pytest.approx(-erf(5.0), abs=1e-12)


def test_argmin_on_boundary_for_radially_decreasing_kernels():
    for k in [generalized_exponential(0.7, 2.0), gaussian(3.0), tent(0.8)]:
        sp = band.continuous_spectrum(k, Domain.interval(-1.3, 1.3))
        assert abs(sp.argmin_b[0]) == pytest.approx(1.3)


def test_b_is_monotone_under_inclusion(rng):
    k = gaussian(2.0, 2)
    small = Domain.box([0, 0], [1, 1])
    large = Domain.box([-0.5, 0], [1.5, 1.2])
    for x in rng.uniform(0, 1, size=(10, 2)):
        b_small = band.retained_mass(k, small, x)
        b_large = band.retained_mass(k, large, x)
        assert 0 < b_small <= b_large + 1e-14 <= 1 + 1e-12


def test_two_dimensional_corner_value():
    # the Gaussian factorizes, so b at a corner of a big square is a product of erf terms
    lam = 4.0
    k = gaussian(lam, 2)
    dom = Domain.box([0, 0], [3, 3])
    one_d = 0.5 * erf(3 * math.sqrt(lam))
    assert band.retained_mass(k, dom, np.array([0.0, 0.0])) == pytest.approx(one_d**2, abs=1e-10)


def test_tent_scaling_study_reaches_one_half():
    scales = [0.25, 0.5, 1, 2, 4, 8, 16]
    table = band.retained_mass_scaling_study(tent(1.0), Domain.interval(-0.5, 0.5), scales)
    mins = table[:, 1]
    exact = [tent_b(s / 2, 1.0, -s / 2, s / 2) for s in scales]
    np.testing.assert_allclose(mins, exact, atol=1e-13)
    assert np.all(np.diff(mins) >= -1e-15)
    # exactly 1/2 once the interval is at least as long as the support radius
    assert mins[0] < mins[1] < 0.5
    np.testing.assert_allclose(mins[2:], 0.5, atol=1e-14)


def test_scaling_study_rejects_unsorted_scales():
    with pytest.raises(ValueError):
        band.retained_mass_scaling_study(tent(1.0), Domain.interval(-0.5, 0.5), [2, 1])


@pytest.mark.parametrize("x", [(0.3, 1.7), (0.0, 2.5), (2.99, 0.01), (1.5, 1.5)])
def test_two_dimensional_gaussian_matches_erf_product(x):
    lam = 3.0
    k = gaussian(lam, 2)
    dom = Domain.box([0, 0], [3, 3])
    s = math.sqrt(lam)
    exact = math.prod(0.5 * (erf(s * (3 - xi)) + erf(s * xi)) for xi in x)
    assert band.retained_mass(k, dom, np.array(x)) == pytest.approx(exact, abs=1e-13)


@pytest.mark.parametrize("x, fraction", [((0.0, 0.0), 0.25), ((1.0, 0.0), 0.5), ((1.0, 1.0), 1.0),
                                         ((0.0, 2.0), 0.5)])
def test_two_dimensional_tent_sector_fractions(x, fraction):
    # the radial tent keeps the fraction of its disk that the square covers
    dom = Domain.box([0, 0], [2, 3])
    assert band.retained_mass(tent(0.5, 2), dom, np.array(x)) == pytest.approx(fraction, abs=1e-14)


def test_l_shape_tent_band_edge_is_the_convex_corner_quarter():
    dom = Domain.from_boxes([[0, 0, 2, 1], [0, 1, 1, 2]])
    spec = band.continuous_spectrum(tent(0.5, 2), dom)
    assert spec.sup_sigma_c == pytest.approx(-0.25, abs=1e-13)
