"""Thresholds of the uncoupled ensemble from density evolution.

For a degree-6 braid with power-law flows (eps = 2**-1.5) we compute the BP
threshold, the area threshold read off the EBP EXIT curve and the potential
threshold, then check that the last two coincide.
"""

import numpy as np

from braidlab import de

k, eps = 6, 2 ** -1.5
b_bp = de.beta_bp(k, eps, tol=1e-6)
b_area = de.beta_area(k, eps)
print(f"k = {k}, eps = {eps:.4f}")
print(f"  BP threshold      beta_BP  = {b_bp:.4f} counters per flow")
print(f"  area threshold    beta_bar = {b_area:.4f}")

# the same thresholds in eps units for one fixed graph density
gamma = k / 0.6
a = de.area_threshold(k, gamma)
print(f"\nbeta = 0.6 (gamma = {gamma:.3f}):")
print(f"  eps_BP = {de.eps_bp(k, gamma):.6f}")
print(f"  eps_bar = {a.eps_bar:.6f} at x* = {a.x_star:.4f}")
print(f"  potential threshold = {de.potential_threshold(k, gamma):.6f}")

# a coarse look at the C-shaped EBP curve
pts = de.ebp_exit_curve(k, gamma, np.linspace(0.05, 1.0, 8))
print("\n   x      eps(x)   h(x)")
for p in pts:
    print(f"  {p.x:.3f}  {p.eps:.4f}  {p.h:.4f}")

direct, rhs = de.ebp_area(k, gamma)
print(f"\narea under the EBP curve: {direct:.10f} (quadrature) vs {rhs:.10f} (closed form)")
