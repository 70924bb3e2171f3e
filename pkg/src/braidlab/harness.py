"""Monte Carlo experiments: symbol error rate versus beta, and DE cross-checks.

Every trial draws its own graph and flow sizes from a seed derived from the
master seed and the trial index, so results do not depend on how trials are
scheduled across threads.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import de, scde
from ._rng import child_seed
from .codec import FlowSizeDist, encode, sample_flow_sizes
from .decode import bp_decode, maxwell_decode, peel_decode
from .errors import ParameterError, ResourceError
from .graphs import EnsembleParams, ScParams, sample_coupled_graph, sample_graph

DECODERS = ("bp", "peel", "maxwell")


@dataclass
class SimConfig:
    """One point of a finite-length experiment.

    Give either ``gamma`` or ``beta``.  For coupled graphs (``N`` and ``w``
    set) ``beta`` is the counters-per-flow ratio of the terminated chain and
    ``m0`` the total number of flows; the flows per position are rounded so
    that every position's sockets split evenly over the window.
    """

    decoder: str = "bp"
    k: int = 6
    m0: int = 1000
    gamma: float = None
    beta: float = None
    dist: FlowSizeDist = field(default_factory=lambda: FlowSizeDist.power_law(1.5))
    trials: int = 100
    l_max: int = 1000
    seed: int = 0
    N: int = None
    w: int = None
    maxwell_cap: int = 200
    maxwell_nodes: int = 10 ** 5

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ParameterError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.trials < 1 or self.l_max < 1 or self.m0 < 1:
            raise ParameterError("trials, l_max and m0 must be positive")
        if (self.gamma is None) == (self.beta is None):
            raise ParameterError("give exactly one of gamma and beta")
        if (self.N is None) != (self.w is None):
            raise ParameterError("N and w go together")

    @property
    def coupled(self):
        return self.N is not None

    def kappa(self):
        """Flows per coupling position."""
        step = self.w // math.gcd(self.k, self.w)
        return max(step, int(round(self.m0 / self.N / step)) * step)

    def resolved_gamma(self):
        if self.gamma is not None:
            return float(self.gamma)
        if not self.coupled:
            return EnsembleParams.from_beta(self.k, self.beta, self.m0).gamma
        # match the terminated chain's counters per flow to beta
        f = lambda g: scde.beta_c(self.k, g, self.N, self.w) - self.beta
        return optimize.brentq(f, 1e-3, 1e4, xtol=1e-12)


@dataclass
class SimResult:
    ser: float
    ci_lo: float
    ci_hi: float
    errors: int
    symbols: int
    trials: int
    seeds: list = field(repr=False)
    runtime: float = 0.0
    unconverged: float = 0.0
    per_trial: list = field(default=None, repr=False)


def wilson_interval(errors, n, level=0.95):
    if n == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(errors), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _sample_trial(cfg, gamma, trial_seed):
    if cfg.coupled:
        sc = ScParams(cfg.N, cfg.w, cfg.kappa())
        g = sample_coupled_graph(cfg.k, gamma, sc, child_seed(trial_seed, 0))
    else:
        p = EnsembleParams.from_gamma(cfg.k, gamma, cfg.m0) if cfg.beta is None else \
            EnsembleParams.from_beta(cfg.k, cfg.beta, cfg.m0)
        g = sample_graph(p, child_seed(trial_seed, 0))
    flows = sample_flow_sizes(cfg.dist, g.m0, child_seed(trial_seed, 1))
    return g, flows


def run_trial(cfg, gamma, trial_seed):
    """Errors and unconverged flows of one trial."""
    g, flows = _sample_trial(cfg, gamma, trial_seed)
    vals = encode(g, flows).exact
    f_min = cfg.dist.f_min
    if cfg.decoder == "bp":
        r = bp_decode(g, vals, f_min, cfg.l_max)
        unresolved = ~r.converged
        wrong = r.converged & (r.estimates != flows)
    elif cfg.decoder == "peel":
        r = peel_decode(g, vals, f_min, cfg.l_max)
        unresolved = ~r.peeled
        wrong = r.peeled & (r.estimates != flows)
    else:
        try:
            r = maxwell_decode(g, vals, f_min, child_seed(trial_seed, 2), cfg.l_max, cap=cfg.maxwell_nodes)
        except ResourceError:
            # search budget exhausted: keep what BP alone resolves
            r = bp_decode(g, vals, f_min, cfg.l_max)
            return int(np.sum(~r.converged | (r.estimates != flows))), int(np.sum(~r.converged)), g.m0
        if r.status == "unique":
            unresolved = np.zeros(g.m0, dtype=bool)
        else:
            # only flows fixed by BP count as decoded when the system is ambiguous
            unresolved = ~r.known
        wrong = ~unresolved & (r.estimates != flows)
    return int(np.sum(unresolved | wrong)), int(np.sum(unresolved)), g.m0


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("BRAIDLAB_THREADS", "1"))
    if threads == 0:
        threads = os.cpu_count() or 1
    return max(1, threads)


def run_ser(cfg, threads=None, keep_trials=False):
    """Symbol error rate of ``cfg.decoder`` over ``cfg.trials`` independent trials.

    A flow counts as an error when it is not decoded or decoded to a wrong
    value.  Trials may run on several threads; they are aggregated in trial
    order, so the result is identical for any thread count.
    """
    if cfg.decoder == "maxwell" and cfg.m0 > cfg.maxwell_cap:
        raise ResourceError(f"maxwell decoding limited to m0 <= {cfg.maxwell_cap}")
    t0 = time.perf_counter()
    gamma = cfg.resolved_gamma()
    seeds = [child_seed(cfg.seed, t) for t in range(cfg.trials)]
    n = _threads(threads)
    if n == 1:
        results = [run_trial(cfg, gamma, s) for s in seeds]
    else:
        with ThreadPoolExecutor(n) as ex:
            results = list(ex.map(lambda s: run_trial(cfg, gamma, s), seeds))
    errors = sum(r[0] for r in results)
    unconv = sum(r[1] for r in results)
    symbols = sum(r[2] for r in results)
    lo, hi = wilson_interval(errors, symbols)
    return SimResult(
        ser=errors / symbols, ci_lo=lo, ci_hi=hi, errors=errors, symbols=symbols,
        trials=cfg.trials, seeds=seeds, runtime=time.perf_counter() - t0,
        unconverged=unconv / symbols, per_trial=results if keep_trials else None,
    )


def ser_sweep(cfg, beta_grid, threads=None):
    """``run_ser`` at each beta; rows ``(beta, ser, ci_lo, ci_hi, trials)``."""
    rows = []
    for b in beta_grid:
        c = SimConfig(**{**cfg.__dict__, "beta": float(b), "gamma": None})
        r = run_ser(c, threads)
        rows.append((float(b), r.ser, r.ci_lo, r.ci_hi, r.trials))
    return rows


@dataclass
class UnconvergedCheck:
    predicted: float
    empirical: float
    sigma: float
    per_trial: list

    @property
    def z(self):
        return abs(self.empirical - self.predicted) / self.sigma if self.sigma > 0 else math.inf


def unconverged_check(k, gamma, eps, m0=10 ** 5, trials=20, seed=0, l_max=1000, threads=None):
    """Empirical BP unconverged-flow fraction against its DE prediction.

    Flow sizes follow the power law with ``Pr(size > 2) = eps``; ``sigma`` is
    the standard error of the per-trial fractions.
    """
    dist = FlowSizeDist.power_law(-math.log2(eps))
    cfg = SimConfig("bp", k, m0, gamma=gamma, dist=dist, trials=trials, l_max=l_max, seed=seed)
    r = run_ser(cfg, threads, keep_trials=True)
    fr = np.array([u / n for _, u, n in r.per_trial])
    sigma = float(fr.std(ddof=1) / math.sqrt(len(fr))) if len(fr) > 1 else math.inf
    return UnconvergedCheck(de.bp_unconverged_fraction(k, gamma, eps), float(fr.mean()), sigma, fr.tolist())
