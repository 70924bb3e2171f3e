import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from braidlab import de
from braidlab.errors import NothingResidualError, ParameterError, StructuralError

KG_REF = (3, 4.233585)


def test_rho_closed_form():
    assert de.rho(1.0, 3.0) == 1.0
    assert de.rho(0.0, 1.0) == pytest.approx(math.exp(-1))
    assert de.rho(0.5, 2.0) == pytest.approx(math.exp(-1))


def test_g_values():
    assert de.g_func(0.0, 3, 4.0) == 0.0
    # independent evaluation of the nested formula
    inner = 1 - math.exp(-2 * (1 - 0))
    assert de.g_func(1.0, 2, 2.0) == pytest.approx(1 - math.exp(-2 * inner ** 1), rel=1e-14)
    assert de.g_func(1.0, 2, 2.0) == pytest.approx(0.8226, abs=1e-4)
    assert de.g_func(0.3, *KG_REF) < de.g_func(0.6, *KG_REF)


def test_g_prime_by_finite_difference():
    for x in (0.1, 0.4, 0.9):
        h = 1e-6
        fd = (de.g_func(x + h, 3, 5.0) - de.g_func(x - h, 3, 5.0)) / (2 * h)
        assert de.g_prime(x, 3, 5.0) == pytest.approx(fd, rel=1e-7)


def test_de_fixed_point_examples():
    assert de.de_fixed_point(3, 4.0, 0.0) == 0.0
    assert de.de_fixed_point(2, 3.0, 0.05) == 0.0
    assert de.de_fixed_point(6, 6 / 1.2, 2 ** -1.5) == 0.0
    x = de.de_fixed_point(*KG_REF, 0.6)
    assert x > 0
    assert x == pytest.approx(0.6 * de.g_func(x, *KG_REF) ** 2, abs=1e-12)


def test_eps_bp_two_routes():
    for k, g in [(3, 4.0), (3, 6.0), (4, 5.0), (6, 10.0)]:
        a = de.eps_bp(k, g, tol=1e-8)
        b, _ = de.eps_bp_curve(k, g)
        assert a == pytest.approx(b, abs=1e-6)


def test_eps_bp_k2_below_stability():
    assert de.eps_bp(2, 3.0) <= 1 / 9 + 1e-6


def test_beta_bp_orientation():
    b = de.beta_bp(6, 2 ** -1.5, tol=1e-5)
    assert de.de_fixed_point(6, 6 / (b + 0.01), 2 ** -1.5) == 0.0
    assert de.de_fixed_point(6, 6 / (b - 0.01), 2 ** -1.5) > 0.0


def test_ebp_curve_shape():
    pts = de.ebp_exit_curve(*KG_REF, np.linspace(0, 1, 2001))
    assert pts[0].h == 0.0
    assert pts[-1].eps > 1 and pts[-1].h < 1
    eps = np.array([p.eps for p in pts[1:]])
    # C shape: eps decreases then increases (one fold)
    s = np.sign(np.diff(eps))
    assert np.count_nonzero(np.diff(s) != 0) == 1
    with pytest.raises(ParameterError):
        de.ebp_exit_curve(3, 4.0, [1.5])


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.01, 1.0), k=st.integers(2, 6), gamma=st.floats(1.0, 10.0))
def test_trial_entropy_identities(x, k, gamma):
    P = de.trial_entropy(x, k, gamma)
    assert P + k * de.fixed_point_potential(x, k, gamma) == pytest.approx(0.0, abs=1e-10)
    assert P == pytest.approx(de.trial_entropy_direct(x, k, gamma), abs=1e-10)


def test_trial_entropy_derivative():
    k, g = 4, 6.0
    for x in (0.2, 0.5, 0.8):
        h = 1e-6
        fd = (de.trial_entropy(x + h, k, g) - de.trial_entropy(x - h, k, g)) / (2 * h)
        exact = float(de.g_func(x, k, g) ** k * de.eps_of_x_prime(x, k, g))
        assert fd == pytest.approx(exact, rel=1e-4)


def test_potential_at_zero():
    assert de.potential(0.0, 3, 4.0, 0.5) == 0.0
    assert de.trial_entropy(0.0, 3, 4.0) == 0.0


@pytest.mark.parametrize("gamma", [2.0, 3.0, 4.0, 6.0])
def test_area_threshold_k2(gamma):
    assert de.area_threshold(2, gamma).eps_bar == pytest.approx(1 / gamma ** 2, abs=1e-6)
    assert de.potential_threshold(2, gamma) == pytest.approx(1 / gamma ** 2, abs=1e-6)


def test_area_threshold_properties():
    a = de.area_threshold(*KG_REF)
    assert abs(de.trial_entropy(a.x_star, *KG_REF)) < 1e-12
    assert a.eps_bar == pytest.approx(float(de.eps_of_x(a.x_star, *KG_REF)))
    assert de.eps_bp(*KG_REF) < a.eps_bar


def test_area_threshold_structural_error():
    with pytest.raises(StructuralError):
        de.area_threshold(3, 2.0)


def test_potential_threshold_is_sup():
    k, g = KG_REF
    p = de.potential_threshold(k, g)
    xs = np.linspace(0.01, 1, 400)
    above = min(de.potential(x, k, g, p * 1.01) for x in xs)
    below = min(de.potential(x, k, g, p * 0.99) for x in xs)
    assert above < 0 < below


@pytest.mark.parametrize("k,gamma", [(2, 0.5), (3, 4.0), (6, 12.0)])
def test_ebp_area_finite(k, gamma):
    direct, rhs = de.ebp_area(k, gamma)
    assert math.isfinite(direct) and direct == pytest.approx(rhs, abs=1e-8)


def test_ebp_area_k2_small_gamma_positive():
    direct, rhs = de.ebp_area(2, 0.5)
    assert direct > 0 and rhs > 0


def test_residual_curve_endpoints():
    a = de.area_threshold(*KG_REF)
    x = de.de_fixed_point(*KG_REF, 0.6)
    assert de.rho_tilde(0.0, x, *KG_REF) == 0.0
    assert de.rho_tilde(1.0, x, *KG_REF) == pytest.approx(1.0)
    rc = de.residual_ebp_curve(*KG_REF, 0.6)
    assert rc.area == pytest.approx(rc.area_closed_form, abs=1e-10)
    assert rc.area > 0  # eps above the area threshold leaves positive area
    with pytest.raises(NothingResidualError):
        de.residual_ebp_curve(*KG_REF, 0.5 * a.eps_bar)


def test_residual_R_tilde_normalised():
    x = de.de_fixed_point(*KG_REF, 0.6)
    assert de.R_tilde(0.0, x, *KG_REF) == pytest.approx(0.0, abs=1e-14)
    assert de.R_tilde(1.0, x, *KG_REF) == pytest.approx(1.0, abs=1e-12)
    assert de.R_bar(1.0, *KG_REF) == pytest.approx(1.0)


def test_maxwell_de_cases():
    s = de.maxwell_de(*KG_REF, 0.0, 0.3)
    assert (s.x0, s.xstar, s.xg) == (1.0, 0.0, 0.0)
    s = de.maxwell_de(*KG_REF, 0.6, 0.0)
    assert s.xstar == pytest.approx(de.de_fixed_point(*KG_REF, 0.6), abs=1e-10)
    for delta in (0.1, 0.5, 0.9):
        s = de.maxwell_de(*KG_REF, 0.6, delta)
        assert s.x0 + s.xstar + s.xg == pytest.approx(1.0, abs=1e-12)
        assert min(s.x0, s.xstar, s.xg) >= 0
    with pytest.raises(ParameterError):
        de.maxwell_de(*KG_REF, 0.6, 1.5)


def test_maxwell_lower_bound_cases():
    k, g = KG_REF
    a = de.area_threshold(k, g)
    assert de.maxwell_exit_lower_bound(k, g, 0.9 * de.eps_bp(k, g)) == 0.0
    assert de.maxwell_exit_lower_bound(k, g, 1.02 * a.eps_bar) > 0


def test_unconverged_prediction_limits():
    assert de.bp_unconverged_fraction(*KG_REF, 0.3) == pytest.approx(0.0, abs=1e-12)
    p = de.bp_unconverged_fraction(*KG_REF, 0.6)
    assert 0 < p < 1


def test_threshold_ordering_grid():
    for k in (3, 4, 6):
        for beta in (0.5, 0.6, 0.7):
            g = k / beta
            try:
                a = de.area_threshold(k, g).eps_bar
            except StructuralError:
                continue
            assert de.eps_bp(k, g) <= de.potential_threshold(k, g) + 1e-6
            assert de.eps_bp(k, g) <= a + 1e-6
