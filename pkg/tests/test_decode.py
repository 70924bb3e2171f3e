import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from braidlab.codec import FlowSizeDist, encode, sample_flow_sizes
from braidlab.decode import (GuessExpr, bp_decode, bp_iterations, counter_output, maxwell_decode, ml_oracle,
                             peel_decode)
from braidlab.errors import ResourceError
from braidlab.graphs import CbGraph, EnsembleParams, sample_graph


def _instance(seed, k=3, m0=40, gamma=4.0):
    g = sample_graph(EnsembleParams.from_gamma(k, gamma, m0), seed)
    flows = sample_flow_sizes(FlowSizeDist.power_law(1.5), m0, seed + 1)
    return g, flows, encode(g, flows).exact


def test_chain_decodes():
    g = CbGraph([[0, 1], [1, 2]], 3)
    r = bp_decode(g, [2, 5, 3], f_min=2)
    assert r.converged.all() and r.estimates.tolist() == [2, 3]
    p = peel_decode(g, [2, 5, 3], f_min=2)
    assert p.peeled.all() and p.residual.m0 == p.residual.m1 == 0


def test_two_cycle_is_ambiguous():
    g = CbGraph([[0, 1], [0, 1]], 2)
    r = bp_decode(g, [5, 5], f_min=2)
    assert not r.converged.any()
    assert r.upper.tolist() == [3, 3] and r.lower.tolist() == [2, 2]
    p = peel_decode(g, [5, 5], f_min=2)
    assert not p.peeled.any() and p.residual == CbGraph([[0, 1], [0, 1]], 2, [5, 5])
    m = maxwell_decode(g, [5, 5], f_min=2, seed=0, max_solutions=None)
    assert m.status == "multiple"
    assert sorted(m.solutions) == [(2, 3), (3, 2)]
    assert sorted(ml_oracle(g, [5, 5], 2).solutions) == [(2, 3), (3, 2)]


def test_triangle_needs_guessing():
    g = CbGraph([[0, 1], [0, 2], [1, 2]], 3)
    m = maxwell_decode(g, [7, 8, 9], f_min=2, seed=0)
    assert m.status == "unique"
    assert m.estimates.tolist() == [3, 4, 5]
    assert len(m.guessed) >= 1


def test_inconsistent_counters():
    g = CbGraph([[0, 1]], 3)
    m = maxwell_decode(g, [2, 3, 1], f_min=0, seed=0)
    assert m.status == "inconsistent"
    assert ml_oracle(g, [2, 3, 1], 0).solutions == []


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), k=st.sampled_from([2, 3, 6]))
def test_bounds_sandwich_truth(seed, k):
    g, flows, vals = _instance(seed, k=k, m0=30, gamma=float(k) * 1.1)
    for ell, psi, mu, est in bp_iterations(g, vals, 2, 12):
        if ell % 2:
            assert np.all(est >= flows)
        else:
            assert np.all(est <= flows)
        assert np.all(est >= 2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_converged_estimates_are_exact(seed):
    g, flows, vals = _instance(seed, m0=50, gamma=3.5)
    r = bp_decode(g, vals, 2)
    assert np.array_equal(r.estimates[r.converged], flows[r.converged])
    p = peel_decode(g, vals, 2)
    assert np.array_equal(p.estimates[p.peeled], flows[p.peeled])


def test_peel_residual_is_consistent():
    g, flows, vals = _instance(11, m0=60, gamma=5.0)
    p = peel_decode(g, vals, 2)
    res = p.residual
    assert res.m0 == len(p.residual_flows) == int((~p.peeled).sum())
    assert res.m1 == len(p.residual_counters) and np.all(res.counter_degree > 0)
    # residual counters hold exactly the sum of the remaining flows
    assert np.array_equal(encode(res, flows[p.residual_flows]).exact, res.counters)


def test_guess_expression_algebra():
    a = GuessExpr.guess(4)
    assert a.evaluate({4: 7}) == 7
    out = counter_output(10, [a, GuessExpr.constant(3)])
    # phi(c) minus the other incoming values
    assert out.evaluate({4: 2}) == 10 - 2 - 3


def test_maxwell_matches_truth_on_decodable_graph():
    g, flows, vals = _instance(3, m0=25, gamma=3.0)
    m = maxwell_decode(g, vals, 2, seed=1)
    assert m.status == "unique"
    assert np.array_equal(m.estimates, flows)


def test_ml_oracle_cap():
    g = CbGraph([[0, 0]] * 8, 1)
    with pytest.raises(ResourceError):
        ml_oracle(g, [200], 0, size_cap=1000)
