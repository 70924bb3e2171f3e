import numpy as np
import pytest

from braidlab import scde
from braidlab.codec import FlowSizeDist
from braidlab.errors import ParameterError, ResourceError
from braidlab.harness import SimConfig, run_ser, ser_sweep, unconverged_check, wilson_interval

PL = FlowSizeDist.power_law(1.5)


def test_config_validation():
    with pytest.raises(ParameterError):
        SimConfig("viterbi", beta=1.0)
    with pytest.raises(ParameterError):
        SimConfig("bp", beta=1.0, gamma=6.0)
    with pytest.raises(ParameterError):
        SimConfig("bp", beta=1.0, trials=0)
    with pytest.raises(ParameterError):
        SimConfig("bp", beta=1.0, N=16)


def test_kappa_and_coupled_gamma():
    cfg = SimConfig("bp", k=6, m0=16384, beta=0.7, N=16, w=5)
    assert cfg.kappa() == 1025
    g = cfg.resolved_gamma()
    assert scde.beta_c(6, g, 16, 5) == pytest.approx(0.7, abs=1e-10)
    assert SimConfig("bp", k=6, m0=1000, beta=0.7).resolved_gamma() == pytest.approx(6 / 0.7)


def test_wilson_interval():
    lo, hi = wilson_interval(5, 100)
    assert lo < 0.05 < hi
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


@pytest.mark.parametrize("decoder", ["bp", "peel", "maxwell"])
def test_degenerate_dist_has_no_errors(decoder):
    cfg = SimConfig(decoder, k=3, m0=60, beta=0.4, dist=FlowSizeDist.explicit({1: 1.0}), trials=5)
    r = run_ser(cfg)
    assert r.ser == 0.0 and r.errors == 0 and r.symbols == 300


def test_reproducible_and_thread_invariant():
    cfg = SimConfig("bp", k=3, m0=200, beta=0.7, dist=PL, trials=12, seed=5)
    a, b = run_ser(cfg, threads=1), run_ser(cfg, threads=3)
    assert (a.ser, a.errors, a.seeds, a.unconverged) == (b.ser, b.errors, b.seeds, b.unconverged)
    assert run_ser(cfg).errors == a.errors
    assert a.ci_lo <= a.ser <= a.ci_hi
    c = run_ser(SimConfig("bp", k=3, m0=200, beta=0.7, dist=PL, trials=12, seed=6))
    assert c.seeds != a.seeds


def test_maxwell_cap():
    with pytest.raises(ResourceError):
        run_ser(SimConfig("maxwell", k=3, m0=500, beta=0.8, trials=1))


def test_maxwell_beats_bp_on_small_graphs():
    kw = dict(k=3, m0=60, beta=0.9, trials=20, seed=1)
    bp = run_ser(SimConfig("bp", **kw))
    mx = run_ser(SimConfig("maxwell", **kw))
    assert mx.ser <= bp.ser


def test_coupled_simulation_runs():
    r = run_ser(SimConfig("bp", k=3, m0=600, beta=0.8, N=8, w=3, trials=2))
    assert 0 <= r.ser <= 1 and r.symbols % 2 == 0


def test_ser_sweep_shapes():
    cfg = SimConfig("bp", k=3, m0=150, beta=1.0, trials=4)
    assert ser_sweep(cfg, []) == []
    rows = ser_sweep(cfg, [0.8])
    r = run_ser(SimConfig("bp", k=3, m0=150, beta=0.8, trials=4))
    assert rows == [(0.8, r.ser, r.ci_lo, r.ci_hi, 4)]


def test_unconverged_check_small():
    u = unconverged_check(3, 6.0, 0.3, m0=5000, trials=5)
    assert len(u.per_trial) == 5
    assert 0 < u.empirical < 1 and u.sigma > 0
    assert u.z < 5
