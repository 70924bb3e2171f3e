import numpy as np
import pytest

from braidlab import de, scde
from braidlab.errors import BracketError, ParameterError


def test_band_ops_match_dense():
    A = scde.CouplingMatrix(7, 3)
    D = A.dense()
    assert D.shape == (7, 9)
    assert np.allclose(D.sum(axis=1), 1.0)
    rng = np.random.default_rng(0)
    v, u = rng.random((4, 9)), rng.random((4, 7))
    assert np.allclose(A.gather(v), v @ D.T)
    assert np.allclose(A.scatter(u), u @ D)


def test_ksection_locates_switch():
    t = scde.ksection(lambda v: np.asarray(v) > 0.3217, 0.0, 1.0, increasing=True, tol=1e-9)
    assert t == pytest.approx(0.3217, abs=1e-9)
    t = scde.ksection(lambda v: np.asarray(v) < 0.7, 0.0, 1.0, increasing=False, tol=1e-9)
    assert t == pytest.approx(0.7, abs=1e-9)
    with pytest.raises(BracketError):
        scde.ksection(lambda v: np.ones(len(v), bool), 0.0, 1.0, increasing=True)


def test_zero_is_fixed_point():
    x, _ = scde.coupled_iterate(3, 4.0, 0.5, 10, 3, x0=np.zeros(12))
    assert np.all(x == 0)


def test_w1_reduces_to_uncoupled():
    k, g = 3, 4.233585
    for eps in (0.3, 0.6):
        x, _ = scde.coupled_iterate(k, g, eps, 5, 1)
        assert np.allclose(x[0], de.de_fixed_point(k, g, eps), atol=1e-9)
    assert scde.eps_bp_coupled(k, 4.0, 3, 1, tol=1e-7) == pytest.approx(de.eps_bp(3, 4.0), abs=1e-6)


def test_batched_matches_single():
    gs, es = np.array([4.0, 5.0, 6.0]), np.array([0.6, 0.5, 0.4])
    xb, _ = scde.coupled_iterate(3, gs, es, 12, 3)
    for j in range(3):
        xs, _ = scde.coupled_iterate(3, gs[j], es[j], 12, 3)
        assert np.allclose(xb[j], xs[0], atol=1e-10)


def test_step_state_matches_iterate():
    s = scde.CoupledState.initial(3, 4.0, 0.6, 8, 3)
    s1 = scde.coupled_de_step(s)
    x, _ = scde.coupled_iterate(3, 4.0, 0.6, 8, 3, max_iter=1)
    assert np.allclose(s1.x, x[0])


def test_symmetric_chain_stays_symmetric():
    N, w = 20, 4
    x, _ = scde.coupled_iterate(3, 4.0, 0.6, N, w, x0=np.ones(N + w - 1))
    assert np.allclose(x[0], x[0][::-1], atol=1e-12)


def test_coupling_improves_threshold_and_termination_wave():
    k, g = 3, 4.0
    unc = de.eps_bp(k, g)
    cpl = scde.eps_bp_coupled(k, g, 32, 3, tol=1e-5)
    assert cpl > unc + 0.01
    # just below the coupled threshold the boundary wave clears the whole chain
    x, _ = scde.coupled_iterate(k, g, cpl - 1e-3, 32, 3)
    assert x.max() < scde.DIE_LEVEL


def test_design_rate_routes():
    assert scde.design_rate(3, 6.0, 1, 1, 8) == pytest.approx(4.0, abs=1e-14)
    for args in [(3, 6.0, 16, 5, 8), (6, 8.57, 128, 5, 4), (4, 2.0, 10, 11, 1)]:
        assert scde.design_rate(*args) == pytest.approx(scde.design_rate_series(*args), rel=1e-12)
    with pytest.raises(ParameterError):
        scde.design_rate(3, 6.0, 4, 6, 1)


def test_beta_c_rate_loss_shrinks_like_one_over_N():
    k, g = 6, 6 / 0.7
    loss = [scde.beta_c(k, g, N, 5) - k / g for N in (8, 32, 128)]
    assert all(v > 0 for v in loss)
    assert loss[0] / loss[1] == pytest.approx(4.0, rel=1e-9)
    assert loss[1] / loss[2] == pytest.approx(4.0, rel=1e-9)


def test_ebp_point_w1_matches_uncoupled_curve():
    k, g, eps = 3, 4.233585, 0.6
    x = de.de_fixed_point(k, g, eps)
    e, h = scde.coupled_ebp_point(k, g, 1, 1, np.array([x]))
    assert e == pytest.approx(eps, rel=1e-9)
    assert h == pytest.approx(float(de.g_func(x, k, g)) ** k, rel=1e-9)
    assert scde.coupled_ebp_point(k, g, 4, 2, np.zeros(5)) == (0.0, 0.0)
    with pytest.raises(ParameterError):
        scde.coupled_ebp_point(k, g, 4, 2, np.zeros(3))


def test_coupled_exit_curve_monotone():
    rows = scde.coupled_exit_curve(3, 4.0, 16, 3, np.linspace(0.45, 0.9, 10))
    h = [r[2] for r in rows]
    assert np.all(np.diff(h) >= -1e-12)
    assert rows[0][2] == 0.0 or rows[0][2] < rows[-1][2]


def test_window_operators():
    v = np.arange(1.0, 6.0)
    assert np.allclose(scde._backward_window(v, 2), np.array([1, 3, 5, 7, 9]) / 2)
    assert np.allclose(scde._forward_window(v, 2), np.array([3, 5, 7, 9, 5]) / 2)


def test_modified_recursion_not_worse():
    k, g, N, w = 3, 4.0, 16, 3
    a = scde.eps_bp_coupled(k, g, N, w, tol=1e-4)
    b = scde.modified_eps_threshold(k, g, N, w, tol=1e-4)
    assert b >= a - 2e-4
    x = scde.modified_coupled_de(k, g, 0.9, N, w)
    assert x.shape == (N + w - 1,) and x.max() > 0


@pytest.mark.slow
def test_modified_recursion_saturates_with_wider_window():
    eps = 2 ** -1.5
    area = de.beta_area(6, eps)
    assert abs(scde.modified_beta_threshold(6, eps, 128, 10, tol=1e-4) - area) < 0.002
