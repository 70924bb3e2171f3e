"""Compressed-sensing view: sparsity/undersampling phase transition of coupled braids.

With ``f_min = 0`` a flow is nonzero with probability ``tau = eps`` and the
coupled DE threshold in beta is an undersampling threshold.  Two reference
curves are provided in closed form.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import scde
from .errors import BracketError, ConvergenceError, ParameterError


def sparse_bound(eps):
    """``eps ln(1/eps) / (ln 2)**2`` counters per flow."""
    if not 0 < eps <= 1:
        raise ParameterError("eps must lie in (0, 1]")
    return eps * math.log(1.0 / eps) / math.log(2.0) ** 2


def dense_bound(eps):
    """``sqrt(eps)`` counters per flow."""
    if not 0 <= eps <= 1:
        raise ParameterError("eps must lie in [0, 1]")
    return math.sqrt(eps)


@dataclass(frozen=True)
class PhasePoint:
    tau: float
    beta_th: float
    beta_bp: float
    error: str = ""


def phase_transition(k, N, w, tau_grid, tol=1e-4, lo=1e-3, hi=2.0):
    """Undersampling threshold per sparsity ratio.

    For each ``tau`` the coupled DE threshold ``beta_bp = k/gamma`` is found
    by a batched search with ``eps = tau``; ``beta_th`` adds the termination
    overhead of the coupled chain (counters per flow of the finite chain).
    A failed point is reported with ``nan`` values and the error text.
    """
    out = []
    for tau in tau_grid:
        if not 0 < tau < 1:
            raise ParameterError(f"tau must lie in (0, 1), got {tau}")
        try:
            b = scde.beta_bp_coupled(k, tau, N, w, tol=tol, lo=lo, hi=hi)
            out.append(PhasePoint(float(tau), float(scde.beta_c(k, k / b, N, w)), float(b)))
        except (BracketError, ConvergenceError) as exc:
            out.append(PhasePoint(float(tau), math.nan, math.nan, str(exc)))
    return out


def read_dt_curve(path):
    """Read an external comparison curve from a CSV with columns ``tau,beta``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"tau", "beta"} <= set(rows[0]):
        raise ParameterError(f"{path}: expected columns tau,beta")
    pts = sorted((float(r["tau"]), float(r["beta"])) for r in rows)
    tau, beta = np.array(pts).T
    return lambda t: float(np.interp(t, tau, beta, left=np.nan, right=np.nan))
