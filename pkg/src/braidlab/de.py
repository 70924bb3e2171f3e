"""Density evolution for uncoupled single-layer counter braids.

The two-iteration recursion is ``x <- eps * g(x)**(k-1)`` with

    g(x) = 1 - rho(1 - (1 - rho(1 - x))**(k-1)),   rho(z) = exp(-gamma (1 - z)).

Around it live the EBP EXIT curve ``(eps(x), g(x)**k)`` with
``eps(x) = x / g(x)**(k-1)``, the trial entropy ``P``, the potential ``U``,
the area and potential thresholds, the Maxwell (guessing) DE and its EXIT
lower bound, and the EBP curve of the residual graph left by peeling.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import BracketError, ConvergenceError, NothingResidualError, ParameterError, StructuralError

QUAD = dict(epsabs=1e-14, epsrel=1e-12, limit=500)


def _quad(f, a, b, **kw):
    opts = dict(QUAD)
    opts.update(kw)
    return integrate.quad(f, a, b, **opts)[0]


def _check_kg(k, gamma):
    if int(k) != k or k < 2:
        raise ParameterError(f"k must be an integer >= 2, got {k}")
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")


# ---------------------------------------------------------------------------
# the recursion
# ---------------------------------------------------------------------------

def rho(z, gamma):
    """Edge-perspective Poisson counter degree distribution exp(-gamma (1 - z))."""
    return np.exp(-gamma * (1.0 - np.asarray(z, dtype=float)))


def g_func(x, k, gamma):
    """Two-step counter map g(x) = 1 - rho(1 - (1 - rho(1 - x))**(k-1))."""
    x = np.asarray(x, dtype=float)
    t = -np.expm1(-gamma * x)  # 1 - rho(1 - x), accurate for small x
    return -np.expm1(-gamma * t ** (k - 1))


def g_prime(x, k, gamma):
    """Derivative of :func:`g_func`."""
    x = np.asarray(x, dtype=float)
    t = -np.expm1(-gamma * x)
    u = t ** (k - 1)
    dt = gamma * np.exp(-gamma * x)
    return gamma * np.exp(-gamma * u) * (k - 1) * t ** (k - 2) * dt


def de_map(x, k, gamma, eps):
    """One combined (odd + even) DE step."""
    return eps * g_func(x, k, gamma) ** (k - 1)


def de_fixed_point(k, gamma, eps, tol=1e-13, max_iter=10 ** 7, check_monotone=True):
    """Largest fixed point of ``x = eps g(x)**(k-1)``, iterating from ``x = 1``.

    Iterates are non-increasing (the map is monotone and ``map(1) <= 1`` for
    ``eps <= eps(1)``).  Returns 0.0 once the iterate falls below ``tol``.
    """
    _check_kg(k, gamma)
    if eps < 0:
        raise ParameterError("eps must be nonnegative")
    x = 1.0
    for _ in range(int(max_iter)):
        xn = eps * float(g_func(x, k, gamma)) ** (k - 1)
        if check_monotone and xn > x * (1 + 1e-12) + 1e-300 and x < 1.0:
            raise ConvergenceError("DE iterates increased; eps outside the valid domain", last=xn)
        if xn < tol:
            return 0.0
        if abs(xn - x) < tol:
            return xn
        x = xn
    raise ConvergenceError(f"DE did not converge in {max_iter} iterations", last=x)


def eps_of_x(x, k, gamma):
    """Parametrisation ``eps(x) = x / g(x)**(k-1)`` of the EBP curve (x > 0)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return x / g_func(x, k, gamma) ** (k - 1)


def eps_of_x_prime(x, k, gamma):
    """d eps / dx."""
    x = np.asarray(x, dtype=float)
    g = g_func(x, k, gamma)
    gp = g_prime(x, k, gamma)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return (g - (k - 1) * x * gp) / g ** k


def eps_limit_at_zero(k, gamma):
    """lim_{x -> 0} eps(x): 1/gamma**2 for k = 2, +inf for k >= 3."""
    return 1.0 / gamma ** 2 if k == 2 else math.inf


# ---------------------------------------------------------------------------
# BP thresholds
# ---------------------------------------------------------------------------

def _de_dies(k, gamma, eps, max_iter=10 ** 6):
    """Whether DE from x = 1 converges to 0.

    The iteration is run directly.  Two certificates end it early: once the
    iterate is below 1e-3 (past any fold), a dense check that the map stays
    strictly below the diagonal on (0, x] proves convergence to 0; a stalled
    iterate (no decrease) proves a nonzero fixed point.
    """
    if eps <= 0:
        return True
    x = 1.0
    lim0 = eps_limit_at_zero(k, gamma)
    for _ in range(int(max_iter)):
        xn = eps * float(g_func(x, k, gamma)) ** (k - 1)
        if xn < 1e-13:
            return True
        if xn >= x:
            return False
        x = xn
        if x < 1e-3:
            if eps >= lim0:
                continue
            z = np.geomspace(x * 1e-9, x, 4000)
            if np.all(eps_of_x(z, k, gamma) > eps * (1 + 1e-12)):
                return True
    return False


def eps_bp(k, gamma, tol=1e-7, hi=None):
    """BP threshold in eps by bisection on the DE outcome."""
    _check_kg(k, gamma)
    lo = 0.0
    if hi is None:
        hi = float(eps_of_x(1.0, k, gamma)) * (1 + 1e-9)
    if _de_dies(k, gamma, hi):
        raise BracketError(f"DE converges to 0 even at eps={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _de_dies(k, gamma, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eps_bp_curve(k, gamma, n_grid=20001):
    """BP threshold as the minimum of eps(x) over (0, 1] (fold of the EBP curve).

    Independent of the DE iteration; used to cross-check :func:`eps_bp`.
    Returns ``(eps_bp, x_bp)``; ``x_bp = 0`` when the infimum is the x -> 0 limit.
    """
    _check_kg(k, gamma)
    xs = np.unique(np.concatenate([np.geomspace(1e-6, 1, n_grid // 2), np.linspace(1e-6, 1, n_grid // 2)]))
    e = eps_of_x(xs, k, gamma)
    i = int(np.nanargmin(e))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    best_x, best = xs[i], e[i]
    if 0 < i < len(xs) - 1:
        r = optimize.minimize_scalar(lambda t: float(eps_of_x(t, k, gamma)), bounds=(lo, hi),
                                     method="bounded", options={"xatol": 1e-13})
        if r.fun < best:
            best_x, best = r.x, r.fun
    lim0 = eps_limit_at_zero(k, gamma)
    if lim0 <= best:
        return lim0, 0.0
    return float(best), float(best_x)


def beta_bp(k, eps, tol=1e-6, lo=0.02, hi=20.0):
    """BP threshold in beta = k/gamma for fixed eps (bisection on the DE outcome)."""
    if not _de_dies(k, k / hi, eps):
        raise BracketError(f"DE does not converge even at beta={hi}")
    if _de_dies(k, k / lo, eps):
        raise BracketError(f"DE already converges at beta={lo}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _de_dies(k, k / mid, eps):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# EBP EXIT curve, potential, trial entropy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    x: float
    eps: float
    h: float


def ebp_exit_curve(k, gamma, x_grid):
    """Points ``(x, eps(x), g(x)**k)``; x = 0 maps to ``(lim eps, 0)``."""
    _check_kg(k, gamma)
    out = []
    for x in np.asarray(x_grid, dtype=float):
        if not 0 <= x <= 1:
            raise ParameterError(f"x grid must lie in [0, 1], got {x}")
        if x == 0:
            out.append(CurvePoint(0.0, eps_limit_at_zero(k, gamma), 0.0))
        else:
            out.append(CurvePoint(float(x), float(eps_of_x(x, k, gamma)), float(g_func(x, k, gamma) ** k)))
    return out


def integral_g(x, k, gamma):
    """int_0^x g(z) dz."""
    return _quad(lambda z: float(g_func(z, k, gamma)), 0.0, x)


def area_term(x, k, gamma):
    """A(x) = x g(x) - int_0^x g = int_0^x z g'(z) dz (positive integrand)."""
    if x <= 0:
        return 0.0
    return _quad(lambda z: z * float(g_prime(z, k, gamma)), 0.0, x, epsabs=0.0)


def potential(x, k, gamma, eps):
    """U(x; eps) = x g(x) - int_0^x g - eps g(x)**k / k."""
    g = float(g_func(x, k, gamma))
    return x * g - integral_g(x, k, gamma) - eps * g ** k / k


def fixed_point_potential(x, k, gamma):
    """Q(x) = U(x; eps(x)) = (1 - 1/k) x g(x) - int_0^x g."""
    g = float(g_func(x, k, gamma))
    return (1 - 1 / k) * x * g - integral_g(x, k, gamma)


def trial_entropy(x, k, gamma):
    """P(x) = k int_0^x g - (k-1) x g(x), computed as x g(x) - k A(x)."""
    if x <= 0:
        return 0.0
    return x * float(g_func(x, k, gamma)) - k * area_term(x, k, gamma)


def trial_entropy_direct(x, k, gamma):
    """P(x) as the area under the EBP curve, int_0^x g(z)**k eps'(z) dz."""
    if x <= 0:
        return 0.0
    return _quad(lambda z: float(g_func(z, k, gamma) ** k * eps_of_x_prime(z, k, gamma)), 0.0, x, epsabs=0.0)


# ---------------------------------------------------------------------------
# area and potential thresholds
# ---------------------------------------------------------------------------

def _scan_grid(n=2000):
    return np.unique(np.concatenate([np.geomspace(1e-4, 1, n), np.linspace(1e-4, 1, n)]))


def _cumulative_area_terms(xs, k, gamma):
    """A(x) at every grid point: 20-point Gauss-Legendre on each grid interval."""
    t, w = np.polynomial.legendre.leggauss(20)
    a = np.concatenate([[0.0], xs[:-1]])
    half = 0.5 * (xs - a)
    z = (a + half)[:, None] + half[:, None] * t[None, :]
    pieces = half * ((z * g_prime(z, k, gamma)) @ w)
    return np.cumsum(pieces)


@dataclass(frozen=True)
class AreaThreshold:
    eps_bar: float
    x_star: float


def area_threshold(k, gamma, n_scan=10 ** 4):
    """Area threshold: eps(x*) at the largest admissible root x* of P.

    ``x*`` must satisfy P(x*) = 0 and no ``x' in (x*, 1]`` may have
    ``eps(x') = eps(x*)`` (checked on ``n_scan`` uniform points).  For k = 2
    the root is x* = 0 and the threshold is the limit 1/gamma**2.
    Raises :class:`StructuralError` when no admissible root exists.
    """
    _check_kg(k, gamma)
    if k == 2:
        return AreaThreshold(1.0 / gamma ** 2, 0.0)
    xs = _scan_grid()
    A = _cumulative_area_terms(xs, k, gamma)
    P = xs * g_func(xs, k, gamma) - k * A
    roots = []
    for i in np.flatnonzero(np.sign(P[:-1]) != np.sign(P[1:])):
        r = optimize.brentq(lambda x: trial_entropy(x, k, gamma), xs[i], xs[i + 1], xtol=1e-15, rtol=1e-14)
        roots.append(r)
    for r in sorted(roots, reverse=True):
        e = float(eps_of_x(r, k, gamma))
        xp = np.linspace(r, 1.0, n_scan + 1)[1:]
        d = eps_of_x(xp, k, gamma) - e
        if np.all(d > 0) or np.all(d < 0):
            return AreaThreshold(e, float(r))
    p1 = float(P[-1])
    raise StructuralError(
        f"no admissible root of the trial entropy for k={k}, gamma={gamma} "
        f"(P(1) = {p1:.6g}, {len(roots)} root(s) found)"
    )


def scaled_potential(x, k, gamma, eps):
    """k U(x; eps) / g(x)**k = k A(x)/g(x)**k - eps (same sign as U)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    A = np.array([area_term(t, k, gamma) for t in x])
    return k * A / g_func(x, k, gamma) ** k - eps


def potential_threshold(k, gamma, tol=1e-10, eps_max=None):
    """sup{eps : the global minimiser set of U(.; eps) is {0}}.

    Bisection on eps; at each step the minimum of the (g**k-scaled) potential
    over (0, 1] is located on a grid and refined by bounded minimisation.
    ``x -> 0`` is included through its analytic limit.
    """
    _check_kg(k, gamma)
    xs = _scan_grid(1500)
    A = _cumulative_area_terms(xs, k, gamma)
    phi = k * A / g_func(xs, k, gamma) ** k  # U >= 0  <=>  phi >= eps
    i = int(np.argmin(phi))
    phi_min = float(phi[i])
    if 0 < i < len(xs) - 1:
        r = optimize.minimize_scalar(
            lambda t: float(scaled_potential(t, k, gamma, 0.0)[0]),
            bounds=(xs[i - 1], xs[i + 1]), method="bounded", options={"xatol": 1e-12},
        )
        phi_min = min(phi_min, float(r.fun))
    if k == 2:
        phi_min = min(phi_min, 1.0 / gamma ** 2)

    def zero_is_global_min(eps):
        return phi_min - eps > 0

    lo, hi = 0.0, max(phi_min * 2, 1.0)
    if eps_max is not None:
        hi = min(hi, eps_max)
        if zero_is_global_min(hi):
            return hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if zero_is_global_min(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# area under the EBP curve
# ---------------------------------------------------------------------------

def ebp_area(k, gamma):
    """Total area under the EBP curve, two ways.

    ``direct`` integrates g(x)**k eps'(x) over x in (0, 1]; ``rhs`` is the
    closed form  1 - c + k (c - int_0^1 rbar(z) dz)  with
    ``rbar(z) = rho(1 - (1 - rho(1 - z))**(k-1)) = 1 - g(z)`` and ``c = rbar(1)``.
    """
    _check_kg(k, gamma)
    direct = _quad(lambda z: float(g_func(z, k, gamma) ** k * eps_of_x_prime(z, k, gamma)), 0.0, 1.0)
    rbar = lambda z: float(rho(1.0 - (1.0 - rho(1.0 - z, gamma)) ** (k - 1), gamma))
    c = rbar(1.0)
    rhs = 1.0 - c + k * (c - _quad(rbar, 0.0, 1.0))
    return direct, rhs


# ---------------------------------------------------------------------------
# residual graph (peeling decoder stopped)
# ---------------------------------------------------------------------------

def rbar_norm(k, gamma):
    """int_0^1 (1 - g(1 - z)) dz."""
    return _quad(lambda z: 1.0 - float(g_func(1.0 - z, k, gamma)), 0.0, 1.0)


def R_bar(x, k, gamma):
    """Normalised integral int_0^x (1 - g(1 - z)) dz / int_0^1 (1 - g(1 - z)) dz."""
    return _quad(lambda z: 1.0 - float(g_func(1.0 - z, k, gamma)), 0.0, x) / rbar_norm(k, gamma)


def R_bar_prime(x, k, gamma):
    return (1.0 - float(g_func(1.0 - x, k, gamma))) / rbar_norm(k, gamma)


def R_tilde(z, x, k, gamma):
    """Residual counter degree generating function (peeling stopped at x)."""
    u = 1.0 - x
    Ru, dRu = R_bar(u, k, gamma), R_bar_prime(u, k, gamma)
    num = R_bar(u + z * x, k, gamma) - Ru - z * x * dRu
    den = 1.0 - Ru - x * dRu
    return num / den


def rho_tilde_from_R(z, x, k, gamma, h=1e-3):
    """rho~(z; x) = R~'(z)/R~'(1) with derivatives by five-point differences."""

    def d(t):
        f = lambda s: R_tilde(s, x, k, gamma)
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    return d(z) / d(1.0)


def rho_tilde(z, x, k, gamma):
    """Closed form rho~(z; x) = 1 - g(x - z x)/g(x)."""
    return 1.0 - g_func(x - np.asarray(z, dtype=float) * x, k, gamma) / g_func(x, k, gamma)


@dataclass
class ResidualCurve:
    x: float
    z: np.ndarray
    eps: np.ndarray
    h: np.ndarray
    area: float
    area_closed_form: float


def residual_ebp_curve(k, gamma, eps, z_grid=None, x=None):
    """EBP curve of the expected residual graph when peeling stops.

    ``x`` defaults to the largest DE fixed point at ``eps``.  The curve is
    ``(z / (1 - rho~(1 - z))**(k-1), (1 - rho~(1 - z))**k)`` for z in (0, 1];
    ``area`` integrates it by quadrature, ``area_closed_form`` is
    ``P(x) / (x g(x))``.
    """
    _check_kg(k, gamma)
    if x is None:
        x = de_fixed_point(k, gamma, eps)
    if x <= 0:
        raise NothingResidualError(f"DE fixed point is 0 at eps={eps}: nothing is left to peel")
    if z_grid is None:
        z_grid = np.linspace(0, 1, 201)[1:]
    z = np.asarray(z_grid, dtype=float)
    gx = float(g_func(x, k, gamma))
    one_minus = 1.0 - rho_tilde(1.0 - z, x, k, gamma)  # = g(z x)/g(x)
    eps_t = z / one_minus ** (k - 1)
    h_t = one_minus ** k

    def integrand(t):
        r = float(g_func(t * x, k, gamma)) / gx
        dr = x * float(g_prime(t * x, k, gamma)) / gx
        de = (r - (k - 1) * t * dr) / r ** k  # d/dt [t / r**(k-1)]
        return r ** k * de

    area = _quad(integrand, 0.0, 1.0)
    closed = trial_entropy(x, k, gamma) / (x * gx)
    return ResidualCurve(float(x), z, eps_t, h_t, area, closed)


# ---------------------------------------------------------------------------
# Maxwell decoder DE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxwellDeState:
    x0: float
    xstar: float
    xg: float
    delta: float


def maxwell_de(k, gamma, eps, delta, tol=1e-13, max_iter=10 ** 7):
    """Fixed point of the three-component Maxwell DE.

    ``x0 <- 1 - eps g(1 - x0)**(k-1)``, ``x* <- (1 - delta) eps g(x*)**(k-1)``,
    ``xg = 1 - x0 - x*``; started from the all-unknown state (x0, x*) = (0, 1).
    """
    _check_kg(k, gamma)
    if not 0 <= delta <= 1:
        raise ParameterError(f"delta must lie in [0, 1], got {delta}")
    x0, xs = 0.0, 1.0
    for _ in range(int(max_iter)):
        n0 = 1.0 - eps * float(g_func(1.0 - x0, k, gamma)) ** (k - 1)
        ns = (1.0 - delta) * eps * float(g_func(xs, k, gamma)) ** (k - 1)
        done = abs(n0 - x0) < tol and abs(ns - xs) < tol
        x0, xs = n0, ns
        if done or (xs < tol and abs(n0 - x0) < tol):
            break
    else:
        raise ConvergenceError("Maxwell DE did not converge", last=(x0, xs))
    if xs < tol:
        xs = 0.0
    if 1.0 - x0 < tol:
        x0 = 1.0
    return MaxwellDeState(x0, xs, max(0.0, 1.0 - x0 - xs), float(delta))


def stable_fixed_point(eps, k, gamma, x_bp=None):
    """Largest x in (0, 1] with eps(x) = eps on the stable branch (0 below eps_bp)."""
    e_bp, xb = eps_bp_curve(k, gamma) if x_bp is None else (float(eps_of_x(x_bp, k, gamma)), x_bp)
    if eps < e_bp:
        return 0.0
    e1 = float(eps_of_x(1.0, k, gamma))
    if eps >= e1:
        return 1.0
    lo = max(xb, 1e-12)
    return optimize.brentq(lambda t: float(eps_of_x(t, k, gamma)) - eps, lo, 1.0, xtol=1e-15, rtol=1e-15)


def maxwell_exit_lower_bound(k, gamma, eps):
    """Lower bound on the Maxwell EXIT value at ``eps``.

    Sum of the BP EXIT area ``int_0^eps g(x(e))**k de`` (zero below the BP
    threshold) and the EBP area up to the BP fold, ``P(x_bp)``.  Below the BP
    threshold the bound is the BP integral alone, i.e. 0.
    """
    _check_kg(k, gamma)
    e_bp, x_bp = eps_bp_curve(k, gamma)
    if eps <= e_bp or x_bp == 0.0:
        # no discontinuity crossed; BP EXIT integral from 0 to eps
        if x_bp == 0.0 and eps > e_bp:
            # k = 2: continuous transition at the stability threshold
            return _quad(lambda s: float(g_func(stable_fixed_point(e_bp + s * s, k, gamma, 0.0), k, gamma)) ** k * 2 * s,
                         0.0, math.sqrt(eps - e_bp), epsabs=1e-12)
        return 0.0
    # substitute e = e_bp + s**2 to absorb the square-root behaviour at the fold
    first = _quad(
        lambda s: float(g_func(stable_fixed_point(e_bp + s * s, k, gamma, x_bp), k, gamma)) ** k * 2 * s,
        0.0, math.sqrt(eps - e_bp), epsabs=1e-12,
    )
    return first + trial_entropy(x_bp, k, gamma)


# ---------------------------------------------------------------------------
# unconverged-flow prediction for finite-length comparison
# ---------------------------------------------------------------------------

def bp_unconverged_fraction(k, gamma, eps, tol=1e-14, max_iter=10 ** 6):
    """Predicted fraction of flows whose upper and lower BP bounds differ.

    Tracks, per flow-to-counter edge, the joint probability that the upper
    bound (odd) and the lower bound (even) message are exact.  A counter
    message is exact on the odd side iff every other incoming lower bound is
    exact, and on the even side iff every other incoming upper bound is
    exact (or the flow has size f_min).
    """
    _check_kg(k, gamma)
    r = lambda z: math.exp(-gamma * (1.0 - z))
    pU, pL, p11 = 0.0, 1.0 - eps, 0.0  # P(upper ok), P(lower ok), P(both ok)
    for _ in range(int(max_iter)):
        qO, qE, q11 = r(pL), r(pU), r(p11)
        q00 = 1.0 - qO - qE + q11
        nU = 1.0 - (1.0 - qO) ** (k - 1)
        nL = 1.0 - eps * (1.0 - qE) ** (k - 1)
        n11 = 1.0 - (1.0 - qO) ** (k - 1) - eps * (1.0 - qE) ** (k - 1) + eps * q00 ** (k - 1)
        done = max(abs(nU - pU), abs(nL - pL), abs(n11 - p11)) < tol
        pU, pL, p11 = nU, nL, n11
        if done:
            break
    qO, qE, q11 = r(pL), r(pU), r(p11)
    q00 = 1.0 - qO - qE + q11
    return (1.0 - qO) ** k + eps * (1.0 - qE) ** k - eps * q00 ** k


def beta_area(k, eps, tol=1e-9, lo=0.05, hi=5.0):
    """Area threshold expressed in beta = k/gamma for fixed eps.

    Bisection on beta for ``area_threshold(k, k/beta) = eps``; the area
    threshold grows with beta.  Where no admissible root exists (small gamma)
    the threshold lies beyond the curve and is treated as +inf.
    """

    def f(b):
        try:
            return area_threshold(k, k / b).eps_bar - eps
        except StructuralError:
            return math.inf

    if not (f(lo) < 0 < f(hi)):
        raise BracketError(f"no sign change of the area threshold in beta in [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
