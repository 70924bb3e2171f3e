"""Multilayer analysis: induced size distributions and layer-by-layer thresholds.

A layer-``l`` counter holds the sum of the sizes of its neighbouring flows;
its number of wraps modulo ``2**d_l`` is the size of the matching
layer-``(l+1)`` flow.  Distributions are carried as dense arrays indexed by
size, together with the probability mass lying beyond the array.
"""

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal, stats

from . import de, scde
from .codec import FlowSizeDist
from .errors import ParameterError, TruncationError


@dataclass(frozen=True)
class LayerDist:
    """pmf over sizes ``0..len(pmf)-1`` plus the mass ``tail`` beyond it."""

    pmf: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float)
        if p.ndim != 1 or np.any(p < -1e-15):
            raise ParameterError("pmf must be a nonnegative vector")
        if abs(p.sum() + self.tail - 1.0) > 1e-9:
            raise ParameterError(f"pmf mass {p.sum()} plus tail {self.tail} must be 1")

    @classmethod
    def from_flow_dist(cls, dist, trunc):
        """Dense table of a :class:`FlowSizeDist` up to size ``trunc``."""
        p = np.zeros(trunc + 1)
        if dist.kind == "explicit":
            for s, q in dist.pmf.items():
                if s <= trunc:
                    p[s] += q
        else:
            eta = np.arange(2, trunc + 1, dtype=float)
            p[2:] = (eta - 1) ** -dist.alpha - eta ** -dist.alpha
        return cls(p, max(0.0, 1.0 - float(p.sum())))

    @property
    def f_min(self):
        return int(np.flatnonzero(self.pmf > 0)[0])

    def as_dict(self):
        return {int(i): float(q) for i, q in enumerate(self.pmf) if q > 0}


def _as_layer_dist(dist, trunc):
    if isinstance(dist, LayerDist):
        return dist
    if isinstance(dist, FlowSizeDist):
        return LayerDist.from_flow_dist(dist, trunc)
    if isinstance(dist, dict):
        return LayerDist.from_flow_dist(FlowSizeDist.explicit(dist), max(max(dist), trunc))
    raise ParameterError(f"unsupported distribution {type(dist).__name__}")


@lru_cache(maxsize=None)
def _partitions(a, b, min_part):
    if b == 0:
        return ((),) if a == 0 else ()
    if a < b * min_part:
        return ()
    out = []
    # first (smallest) part p; the rest are >= p
    for p in range(min_part, a // b + 1):
        for rest in _partitions(a - p, b - 1, p):
            out.append((p,) + rest)
    return tuple(out)


def integer_partitions(a, b, min_part):
    """All multisets of ``b`` integers ``>= min_part`` summing to ``a`` (nondecreasing tuples)."""
    if a < 0 or b < 0:
        raise ParameterError("a and b must be nonnegative")
    return list(_partitions(int(a), int(b), int(min_part)))


def multiset_probability(parts, pmf):
    """Probability that ``len(parts)`` i.i.d. draws form the multiset ``parts``."""
    counts = Counter(parts)
    coef = math.factorial(len(parts))
    for m in counts.values():
        coef //= math.factorial(m)
    prob = float(coef)
    for s, m in counts.items():
        prob *= pmf[s] ** m if s < len(pmf) else 0.0
    return prob


def poisson_degrees(gamma, tail=1e-12):
    """Node-perspective Poisson(gamma) degree prior truncated once the tail is < ``tail``."""
    bmax = int(stats.poisson.isf(tail, gamma)) + 1
    b = np.arange(bmax + 1)
    return stats.poisson.pmf(b, gamma)


def induced_counter_dist(flow_dist, gamma_l, min_part=None, trunc=64, tail_tol=1e-10,
                         degree_prior=None, method="auto"):
    """Distribution of a counter value: the sum of a Poisson number of flow sizes.

    ``method="partition"`` sums multiset probabilities over integer
    partitions of each value ``a <= trunc``; ``method="convolution"`` uses
    FFT convolution powers of the flow pmf (same quantity, scales to large
    ``trunc``); ``"auto"`` picks partitions for ``trunc <= 48``.
    ``degree_prior`` overrides the Poisson prior with an explicit array.
    Raises :class:`TruncationError` when more than ``tail_tol`` of the mass
    lies above ``trunc``.
    """
    fd = _as_layer_dist(flow_dist, trunc)
    pmf = np.zeros(trunc + 1)
    n = min(len(fd.pmf), trunc + 1)
    pmf[:n] = fd.pmf[:n]
    prior = poisson_degrees(gamma_l) if degree_prior is None else np.asarray(degree_prior, dtype=float)
    if min_part is None:
        min_part = int(np.flatnonzero(pmf > 0)[0]) if pmf.any() else 0
    if method == "auto":
        method = "partition" if trunc <= 48 else "convolution"
    out = np.zeros(trunc + 1)
    if method == "partition":
        for b, pb in enumerate(prior):
            if pb == 0:
                continue
            for a in range(trunc + 1):
                s = sum(multiset_probability(A, pmf) for A in _partitions(a, b, min_part))
                out[a] += pb * s
    elif method == "convolution":
        power = np.zeros(trunc + 1)
        power[0] = 1.0
        for b, pb in enumerate(prior):
            if b > 0:
                power = np.clip(signal.fftconvolve(power, pmf)[: trunc + 1], 0.0, None)
            out += pb * power
    else:
        raise ParameterError(f"unknown method {method!r}")
    tail = max(0.0, 1.0 - float(out.sum()))
    if tail > tail_tol:
        raise TruncationError(f"counter pmf mass beyond {trunc} is {tail:.3g}", suggested=2 * trunc + 1)
    return LayerDist(out, tail)


def induced_epsilon(counter_dist, d_prev):
    """Probability that the induced next-layer flow exceeds 1: ``1 - Pr(value < 2**(d_prev+1))``."""
    limit = 1 << (int(d_prev) + 1)
    pmf = counter_dist.pmf if isinstance(counter_dist, LayerDist) else _dict_to_array(counter_dist)
    tail = counter_dist.tail if isinstance(counter_dist, LayerDist) else 0.0
    if len(pmf) < limit and tail > 0:
        raise TruncationError(f"counter pmf truncated below {limit}", suggested=limit - 1)
    return float(max(0.0, 1.0 - pmf[:limit].sum()))


def _dict_to_array(d):
    out = np.zeros(max(d) + 1)
    for s, p in d.items():
        out[int(s)] += p
    return out


def induced_flow_dist(counter_dist, d):
    """Distribution of ``floor(value / 2**d)`` (the next layer's flow size)."""
    base = 1 << int(d)
    pmf = counter_dist.pmf
    n = (len(pmf) + base - 1) // base
    padded = np.zeros(n * base)
    padded[: len(pmf)] = pmf
    out = padded.reshape(n, base).sum(axis=1)
    # the last block is incomplete when the table does not end on a boundary
    full = len(pmf) // base
    tail = counter_dist.tail + float(out[full:].sum())
    return LayerDist(out[:full], tail)


@dataclass
class MultilayerResult:
    threshold: float
    layer_thresholds: list
    induced_eps: list
    satisfied: list


def multilayer_threshold(k_vec, gamma_vec, N, w, dist, d_vec, family=None, tol=1e-5):
    """Layer-by-layer threshold of a coupled multilayer counter braid.

    Layer 1 uses the eps of the flow-size law; layers ``l >= 2`` have
    ``f_min = 1`` and are decodable when their induced eps does not exceed
    their own coupled BP threshold.  ``family(eps)`` maps eps to a flow-size
    law (default: power law with ``alpha = log2(1/eps)``); the returned
    threshold is the largest eps up to the layer-1 threshold at which every
    higher layer is decodable.  ``induced_eps``/``satisfied`` describe ``dist``.
    """
    L = len(k_vec)
    if not (len(gamma_vec) == L and len(d_vec) >= L - 1):
        raise ParameterError("k, gamma and d vectors must have consistent lengths")
    if family is None:
        family = lambda e: FlowSizeDist.power_law(math.log2(1.0 / e))

    def layer_eps_bp(l):
        k, g = k_vec[l], gamma_vec[l]
        if N == 1 and w == 1:
            return de.eps_bp(k, g)
        return scde.eps_bp_coupled(k, g, N, w, tol=tol)

    thresholds = [layer_eps_bp(l) for l in range(L)]

    def induced(d0):
        eps_i = []
        for l in range(1, L):
            cur = _as_layer_dist(d0, _cascade_trunc(d_vec, l))
            for j in range(l):
                c = induced_counter_dist(cur, gamma_vec[j], trunc=_cascade_trunc(d_vec, l, j), tail_tol=1.0)
                if j == l - 1:
                    eps_i.append(induced_epsilon(c, d_vec[j]))
                else:
                    cur = induced_flow_dist(c, d_vec[j])
        return eps_i

    def ok(e):
        return all(ei <= th for ei, th in zip(induced(family(e)), thresholds[1:]))

    eps_dist = induced(dist)
    sat = [ei <= th for ei, th in zip(eps_dist, thresholds[1:])]
    top = thresholds[0]
    if L == 1 or ok(top):
        thr = top
    else:
        lo, hi = tol, top
        if not ok(lo):
            lo = hi = 0.0  # higher layers fail even for vanishing eps
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        thr = 0.5 * (lo + hi)
    return MultilayerResult(thr, thresholds, eps_dist, sat)


def _cascade_trunc(d_vec, l, j=0):
    """Largest layer-(j+1) counter value whose cascade matters for the layer-(l+1) head."""
    need = (1 << (int(d_vec[l - 1]) + 1)) - 1
    for jj in range(l - 2, j - 1, -1):
        need = (need + 1) * (1 << int(d_vec[jj])) - 1
    return need
