"""Density evolution for spatially coupled counter braids.

Positions ``1..M`` (stored 0-based) with ``M = N + w - 1``; flow positions
``1..N`` carry flows, counters are spread uniformly over a window of ``w``
consecutive positions.  The coupling matrix is the N x M band matrix with
entries 1/w, not renormalised at the boundaries.

Recursions are vectorised over a batch of (gamma, eps) pairs so that the
threshold searches evaluate many candidate parameters per sweep.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import de
from .errors import BracketError, ConvergenceError, ParameterError, SingularPointError

DIE_LEVEL = 1e-10


@dataclass(frozen=True)
class CouplingMatrix:
    """Band matrix A with ``A[p, q] = 1/w`` for ``0 <= q - p < w``."""

    N: int
    w: int

    def __post_init__(self):
        if self.N < 1 or self.w < 1:
            raise ParameterError("N and w must be positive")

    @property
    def M(self):
        return self.N + self.w - 1

    def dense(self):
        A = np.zeros((self.N, self.M))
        for p in range(self.N):
            A[p, p:p + self.w] = 1.0 / self.w
        return A

    def gather(self, v):
        """``v A^T``: length-M rows -> length-N window averages."""
        N, w = self.N, self.w
        out = np.zeros(v.shape[:-1] + (N,))
        for j in range(w):
            out += v[..., j:j + N]
        return out / w

    def scatter(self, u):
        """``u A``: length-N rows -> length-M."""
        N, w = self.N, self.w
        out = np.zeros(u.shape[:-1] + (self.M,))
        for j in range(w):
            out[..., j:j + N] += u
        return out / w


@dataclass
class CoupledState:
    x: np.ndarray
    k: int
    gamma: float
    eps: float
    N: int
    w: int

    @classmethod
    def initial(cls, k, gamma, eps, N, w):
        x = np.zeros(N + w - 1)
        x[:N] = 1.0
        return cls(x, k, gamma, eps, N, w)


def poisson_rho(gamma):
    gamma = np.asarray(gamma, dtype=float)
    return lambda z: np.exp(-gamma * (1.0 - z))


def regular_rho(r):
    """Edge-perspective distribution of right-regular degree ``r``: z**(r-1)."""
    return lambda z: z ** (r - 1)


def _xi(x, k, A, rho):
    """Bracket of the coupled recursion (everything but the leading eps)."""
    a = 1.0 - rho(1.0 - x)
    b = A.gather(a) ** (k - 1)
    e = 1.0 - rho(1.0 - A.scatter(b))
    return A.scatter(A.gather(e) ** (k - 1))


def coupled_de_step(s, rho=None):
    """One combined step of the coupled recursion on a :class:`CoupledState`."""
    A = CouplingMatrix(s.N, s.w)
    rho = rho or poisson_rho(s.gamma)
    return CoupledState(s.eps * _xi(s.x, s.k, A, rho), s.k, s.gamma, s.eps, s.N, s.w)


def _batch_rho(gammas, r):
    if r is not None:
        return regular_rho(r)
    return poisson_rho(np.asarray(gammas, dtype=float)[:, None])


def coupled_iterate(k, gammas, epss, N, w, tol=1e-13, max_iter=10 ** 5, r=None, x0=None):
    """Iterate the coupled recursion for a batch of (gamma, eps) pairs.

    Returns ``(x, n_iter)``; rows stop changing once they fall below the
    die level or their sup-norm change drops below ``tol``.
    """
    gammas, epss = np.broadcast_arrays(np.atleast_1d(np.asarray(gammas, float)),
                                       np.atleast_1d(np.asarray(epss, float)))
    A = CouplingMatrix(N, w)
    rho = _batch_rho(gammas, r)
    B = len(gammas)
    if x0 is None:
        x = np.zeros((B, A.M))
        x[:, :N] = 1.0
    else:
        x = np.array(np.broadcast_to(x0, (B, A.M)), dtype=float)
    eps_col = epss[:, None]
    for it in range(1, int(max_iter) + 1):
        xn = eps_col * _xi(x, k, A, rho)
        change = np.abs(xn - x).max(axis=1)
        x = xn
        if np.all((x.max(axis=1) < DIE_LEVEL) | (change < tol)):
            return x, it
    return x, int(max_iter)


def coupled_dies(k, gammas, epss, N, w, **kw):
    x, _ = coupled_iterate(k, gammas, epss, N, w, **kw)
    return x.max(axis=1) < DIE_LEVEL


def ksection(dies, lo, hi, increasing, tol=1e-6, K=15):
    """Locate the switch point of a batched monotone predicate on [lo, hi].

    ``dies(values)`` evaluates a boolean array; when ``increasing`` the
    predicate is False below the switch point and True above it (otherwise
    the reverse).  Each sweep evaluates ``K`` interior points at once.
    """
    t_lo = np.array([lo, hi])
    ends = dies(t_lo)
    if not increasing:
        ends = ~ends
    if ends[0] or not ends[1]:
        raise BracketError(f"no switch of the decoding outcome on [{lo}, {hi}]")
    while hi - lo > tol:
        vs = np.linspace(lo, hi, K + 2)[1:-1]
        d = dies(vs)
        if not increasing:
            d = ~d
        if d.any():
            i = int(np.argmax(d))
            hi = vs[i]
            lo = vs[i - 1] if i > 0 else lo
        else:
            lo = vs[-1]
    return 0.5 * (lo + hi)


def eps_bp_coupled(k, gamma, N, w, tol=1e-6, lo=0.0, hi=None, r=None, max_iter=10 ** 5):
    """Coupled BP threshold in eps (largest eps for which the recursion dies)."""
    if hi is None:
        hi = float(de.eps_of_x(1.0, k, gamma)) if r is None else 4.0
    survives = lambda es: ~coupled_dies(k, np.full(len(es), gamma), es, N, w, r=r, max_iter=max_iter)
    return ksection(survives, lo, hi, increasing=True, tol=tol)


def beta_bp_coupled(k, eps, N, w, tol=1e-6, lo=0.2, hi=2.0, max_iter=10 ** 5):
    """Coupled BP threshold in beta = k/gamma at fixed eps."""
    dies = lambda bs: coupled_dies(k, k / np.asarray(bs), np.full(len(bs), eps), N, w, max_iter=max_iter)
    return ksection(dies, lo, hi, increasing=True, tol=tol)


def design_rate(k, gamma, N, w, d):
    """Counter bits per flow of the coupled ensemble.

    ``d k / (gamma N) * sum_i Pois_gamma(i) [N - w + 1 + 2 sum_{j=1}^{w-1} (1 - (j/w)**i+)]``
    with ``i+ = max(i, 1)``.  The Poisson sum is evaluated in closed form,
    ``sum_i Pois(i) t**i+ = e**-gamma t + e**(-gamma (1 - t)) - e**-gamma``;
    :func:`design_rate_series` sums the series term by term instead.
    """
    _check_window(N, w)
    t = np.arange(1, w) / w
    q = np.exp(-gamma) * t + np.exp(-gamma * (1.0 - t)) - np.exp(-gamma)
    bracket = N - w + 1 + 2.0 * float(np.sum(1.0 - q)) if w > 1 else N
    return d * k * bracket / (gamma * N)


def design_rate_series(k, gamma, N, w, d, cutoff=1e-14):
    """:func:`design_rate` by direct summation, stopping once terms are < ``cutoff``."""
    _check_window(N, w)
    j = np.arange(1, w) / w
    total, i, p = 0.0, 0, math.exp(-gamma)
    while True:
        total += p * (N - w + 1 + 2.0 * np.sum(1.0 - j ** max(i, 1)))
        i += 1
        p *= gamma / i
        if i > gamma and p < cutoff:
            break
    return d * k * total / (gamma * N)


def _check_window(N, w):
    if N < 1 or not 1 <= w <= N + 1:
        raise ParameterError("need N >= 1 and 1 <= w <= N + 1")


def beta_c(k, gamma, N, w):
    """Counters per flow of the coupled ensemble (design rate per counter bit)."""
    return design_rate(k, gamma, N, w, 1)


def coupled_ebp_point(k, gamma, N, w, x, i=None, r=None):
    """EBP point ``(eps, h_i)`` of coupled fixed point ``x`` at position ``i``.

    With ``x = eps * xi(x)`` the point is ``(x_i / xi_i, xi_i**(k/(k-1)))``;
    position defaults to the chain midpoint ``M // 2``.
    """
    x = np.asarray(x, dtype=float)
    A = CouplingMatrix(N, w)
    if x.shape != (A.M,):
        raise ParameterError(f"state must have length {A.M}")
    i = A.M // 2 if i is None else int(i)
    rho = regular_rho(r) if r is not None else poisson_rho(gamma)
    xi = _xi(x, k, A, rho)[i]
    if xi == 0:
        if x[i] > 0:
            raise SingularPointError(f"xi vanishes at position {i} with x_i = {x[i]}")
        return 0.0, 0.0
    return float(x[i] / xi), float(xi ** (k / (k - 1)))


def coupled_exit_curve(k, gamma, N, w, eps_grid, i=None, tol=1e-12, max_iter=10 ** 5):
    """Stable-branch EBP points traced by continuation in eps.

    Sweeps ``eps_grid`` in decreasing order, warm-starting each fixed point
    from the previous one; returns ``(eps_param, eps_point, h)`` rows.
    """
    M = N + w - 1
    x = np.zeros(M)
    x[:N] = 1.0
    rows = []
    for eps in sorted(np.asarray(eps_grid, float), reverse=True):
        xs, _ = coupled_iterate(k, gamma, eps, N, w, tol=tol, max_iter=max_iter, x0=x)
        x = xs[0] if xs[0].max() >= DIE_LEVEL else np.zeros(M)
        e, h = coupled_ebp_point(k, gamma, N, w, x, i)
        rows.append((float(eps), e, h))
    return rows[::-1]


# ---------------------------------------------------------------------------
# modified two-phase recursion
# ---------------------------------------------------------------------------

def _backward_window(v, w):
    """(1/w) sum_{j=0}^{min(i-1, w-1)} v_{i-j}."""
    M = v.shape[-1]
    out = np.zeros_like(v)
    for j in range(w):
        out[..., j:] += v[..., :M - j]
    return out / w


def _forward_window(v, w):
    """(1/w) sum_{j=0}^{min(M-i, w-1)} v_{i+j}."""
    M = v.shape[-1]
    out = np.zeros_like(v)
    for j in range(w):
        out[..., :M - j] += v[..., j:]
    return out / w


def modified_iterate(k, gammas, epss, N, w, tol=1e-13, max_iter=10 ** 5):
    """Iterate the modified recursion for a batch of (gamma, eps) pairs.

    Odd half: counters see the window average of x behind them,
    ``y_i = (1 - rho(1 - avg_back(x)_i))**(k-1)``; even half: flows see the
    window average ahead, ``x_i = eps * avg_fwd(1 - rho(1 - y))_i**(k-1)``.
    """
    gammas, epss = np.broadcast_arrays(np.atleast_1d(np.asarray(gammas, float)),
                                       np.atleast_1d(np.asarray(epss, float)))
    M = N + w - 1
    rho = poisson_rho(gammas[:, None])
    x = np.zeros((len(gammas), M))
    x[:, :N] = 1.0
    eps_col = epss[:, None]
    for it in range(1, int(max_iter) + 1):
        y = (1.0 - rho(1.0 - _backward_window(x, w))) ** (k - 1)
        xn = eps_col * _forward_window(1.0 - rho(1.0 - y), w) ** (k - 1)
        change = np.abs(xn - x).max(axis=1)
        x = xn
        if np.all((x.max(axis=1) < DIE_LEVEL) | (change < tol)):
            return x, it
    return x, int(max_iter)


def modified_coupled_de(k, gamma, eps, N, w, tol=1e-13, max_iter=10 ** 5):
    """Fixed point of the modified recursion (length-M vector)."""
    x, it = modified_iterate(k, gamma, eps, N, w, tol=tol, max_iter=max_iter)
    if it >= max_iter:
        raise ConvergenceError("modified recursion did not converge", last=x[0])
    return x[0]


def modified_eps_threshold(k, gamma, N, w, tol=1e-6, lo=0.0, hi=None):
    if hi is None:
        hi = float(de.eps_of_x(1.0, k, gamma))
    survives = lambda es: modified_iterate(k, np.full(len(es), gamma), es, N, w)[0].max(axis=1) >= DIE_LEVEL
    return ksection(survives, lo, hi, increasing=True, tol=tol)


def modified_beta_threshold(k, eps, N, w, tol=1e-6, lo=0.2, hi=2.0):
    dies = lambda bs: modified_iterate(k, k / np.asarray(bs), np.full(len(bs), eps), N, w)[0].max(axis=1) < DIE_LEVEL
    return ksection(dies, lo, hi, increasing=True, tol=tol)
