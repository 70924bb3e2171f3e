import math

import numpy as np
import pytest

from braidlab import de, scde
from braidlab.codec import FlowSizeDist, sample_flow_sizes
from braidlab.errors import ParameterError, TruncationError
from braidlab.layers import (LayerDist, induced_counter_dist, induced_epsilon, induced_flow_dist, integer_partitions,
                             multilayer_threshold, multiset_probability, poisson_degrees)

PL = FlowSizeDist.power_law(1.5)


def test_integer_partitions():
    assert integer_partitions(4, 2, 2) == [(2, 2)]
    assert integer_partitions(7, 2, 2) == [(2, 5), (3, 4)]
    assert integer_partitions(5, 3, 2) == []
    # exhaustive cross-check
    import itertools
    brute = {tuple(sorted(c)) for c in itertools.product(range(1, 10), repeat=3) if sum(c) == 9}
    assert sorted(brute) == integer_partitions(9, 3, 1)


def test_multiset_probability():
    pmf = np.array([0, 0, 0.5, 0.5])
    assert multiset_probability((2, 3), pmf) == pytest.approx(0.5)
    assert multiset_probability((2, 2), pmf) == pytest.approx(0.25)


def test_degenerate_prior_examples():
    prior = np.array([0, 0, 1.0])
    c = induced_counter_dist({2: 1.0}, 0.0, trunc=8, degree_prior=prior)
    assert c.as_dict() == pytest.approx({4: 1.0})
    c = induced_counter_dist({2: 0.5, 3: 0.5}, 0.0, trunc=8, degree_prior=prior)
    assert c.as_dict() == pytest.approx({4: 0.25, 5: 0.5, 6: 0.25})


def test_empty_counter_mass():
    c = induced_counter_dist(PL, 2.0, trunc=40, tail_tol=1.0)
    assert c.pmf[0] >= math.exp(-2.0) - 1e-15


def test_partition_and_convolution_agree():
    a = induced_counter_dist(PL, 3.0, trunc=30, tail_tol=1.0, method="partition")
    b = induced_counter_dist(PL, 3.0, trunc=30, tail_tol=1.0, method="convolution")
    assert np.allclose(a.pmf, b.pmf, atol=1e-12)
    with pytest.raises(ParameterError):
        induced_counter_dist(PL, 3.0, trunc=10, tail_tol=1.0, method="magic")


def test_truncation_error_suggests_more():
    with pytest.raises(TruncationError) as exc:
        induced_counter_dist(PL, 3.0, trunc=20)
    assert exc.value.suggested > 20


def test_counter_pmf_matches_monte_carlo():
    gamma, n = 2.5, 200000
    rng = np.random.default_rng(1)
    deg = rng.poisson(gamma, n)
    sizes = sample_flow_sizes(PL, int(deg.sum()), 2)
    vals = np.bincount(np.repeat(np.arange(n), deg), weights=sizes, minlength=n)
    c = induced_counter_dist(PL, gamma, trunc=40, tail_tol=1.0)
    for a in range(0, 16):
        p = c.pmf[a]
        emp = np.mean(vals == a)
        assert abs(emp - p) <= 3 * math.sqrt(max(p * (1 - p), 1e-12) / n) + 1e-4


def test_poisson_prior_tail():
    p = poisson_degrees(3.0)
    assert 1 - p.sum() < 1e-12


def test_induced_epsilon_examples_and_monotonicity():
    c = LayerDist(np.array([0, 0, 0, 0, 0.25, 0.5, 0.25]))
    assert induced_epsilon(c, 2) == 0.0
    # all the mass sits at or above 4 = 2**(1+1)
    assert induced_epsilon(c, 1) == pytest.approx(1.0)
    assert induced_epsilon(LayerDist(np.array([0.5, 0.5])), 3) == 0.0
    cd = induced_counter_dist(PL, 3.0, trunc=300, tail_tol=1.0)
    eps = [induced_epsilon(cd, d) for d in range(1, 7)]
    assert np.all(np.diff(eps) <= 0)
    trunc = LayerDist(np.array([0.5, 0.3]), 0.2)
    with pytest.raises(TruncationError):
        induced_epsilon(trunc, 2)


def test_induced_flow_dist_blocks():
    c = LayerDist(np.array([0.1, 0.2, 0.3, 0.15, 0.25]))
    f = induced_flow_dist(c, 1)
    assert f.pmf.tolist() == pytest.approx([0.3, 0.45])
    assert f.tail == pytest.approx(0.25)


def test_multilayer_single_layer_reduces():
    r = multilayer_threshold((3,), (4.0,), 1, 1, PL, ())
    assert r.threshold == pytest.approx(de.eps_bp(3, 4.0), abs=1e-6)
    r = multilayer_threshold((3,), (4.0,), 8, 3, PL, (), tol=1e-4)
    assert r.threshold == pytest.approx(scde.eps_bp_coupled(3, 4.0, 8, 3, tol=1e-4), abs=1e-9)


def test_multilayer_constraint_cases():
    ks, gs = (3, 3), (4.233585, 3.0)
    free = multilayer_threshold(ks, gs, 1, 1, PL, (3,))
    assert free.satisfied == [True]
    assert free.threshold == pytest.approx(free.layer_thresholds[0])
    bind = multilayer_threshold(ks, gs, 1, 1, PL, (2,))
    assert bind.satisfied == [False]
    assert 0 < bind.threshold < free.threshold - 0.05
    assert multilayer_threshold(ks, gs, 1, 1, PL, (1,)).threshold == 0.0
    with pytest.raises(ParameterError):
        multilayer_threshold(ks, (4.0,), 1, 1, PL, (3,))
