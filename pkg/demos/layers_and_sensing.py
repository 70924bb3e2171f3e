"""Multilayer braids and the compressed-sensing reading of a single layer.

The second layer sees the overflow counts of the first; its induced eps
depends on the first layer's counter depth.  Then, with f_min = 0, the
threshold in beta traces an undersampling/sparsity phase transition.
"""

from braidlab import csbridge
from braidlab.codec import FlowSizeDist
from braidlab.layers import induced_counter_dist, induced_epsilon, multilayer_threshold

dist = FlowSizeDist.power_law(1.5)
counter = induced_counter_dist(dist, 4.233585, trunc=600, tail_tol=1.0)
for d in range(1, 7):
    print(f"layer-1 depth d = {d}: induced eps at layer 2 = {induced_epsilon(counter, d):.4f}")

for d in (1, 2, 3):
    r = multilayer_threshold((3, 3), (4.233585, 3.0), 1, 1, dist, (d,))
    print(f"d = {d}: layer thresholds {[round(t, 4) for t in r.layer_thresholds]}, overall {r.threshold:.4f}")

print("\nsparsity tau, undersampling threshold of a short coupled chain, reference curves")
for p in csbridge.phase_transition(6, 16, 3, [0.02, 0.05, 0.1, 0.2], tol=1e-3):
    print(f"  {p.tau:.2f}  {p.beta_th:.4f}  sparse {csbridge.sparse_bound(p.tau):.4f}  dense {csbridge.dense_bound(p.tau):.4f}")
