"""Finite-length symbol error rates against the asymptotic picture.

A short SER sweep for BP on uncoupled braids, followed by the unconverged
fraction predicted by density evolution next to its Monte Carlo estimate.
"""

from braidlab.harness import SimConfig, ser_sweep, unconverged_check

cfg = SimConfig("bp", k=6, m0=2000, beta=1.0, trials=20, seed=1)
print(" beta    SER     95% interval")
for beta, ser, lo, hi, _ in ser_sweep(cfg, [0.6, 0.8, 0.9, 1.0, 1.2]):
    print(f"  {beta:.1f}  {ser:.4f}  [{lo:.4f}, {hi:.4f}]")

u = unconverged_check(3, 6.0, 0.3, m0=20000, trials=10)
print(f"\nunconverged fraction at (k=3, gamma=6, eps=0.3): DE {u.predicted:.4f}, "
      f"simulation {u.empirical:.4f} +- {u.sigma:.4f}")
