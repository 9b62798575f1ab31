"""End-to-end robust subspace fitting vs the SVD on outlier-ridden data.

Run:  python demos/04_subspace_pipelines.py
"""

import numpy as np

from robsub import LossSpec, const_approx, residual_cost
from robsub.oracle import svd_truncation_cost
from robsub.pipeline import approx_lp, approx_m2

rng = np.random.default_rng(3)

# planted rank-3 signal with 1% gross outlier rows
n, d, k = 400, 30, 3
signal = rng.standard_normal((n, k)) @ rng.standard_normal((k, d))
noise = 0.05 * rng.standard_normal((n, d))
a = signal + noise
out_rows = rng.choice(n, n // 100, replace=False)
a[out_rows] = 50.0 * rng.standard_normal((out_rows.size, d))

l1 = LossSpec.lp(1.0)
huber = LossSpec.huber(1.0)

print("Stage 1 only: a bicriteria subspace (dimension above k, modest cost).")
sub = const_approx(a, k, l1, seed=0)
print(f"  bicriteria dim={sub.dim}, l1 cost={residual_cost(a, sub, None, l1):.1f}")

print("\nFull pipelines return exactly rank k:")
v1 = approx_lp(a, k, eps=0.25, loss=l1, seed=0)
vh = approx_m2(a, k, eps=0.25, loss=huber, seed=0)
_, svd1 = svd_truncation_cost(a, k, None, l1)
_, svdh = svd_truncation_cost(a, k, None, huber)
c1 = residual_cost(a, v1, None, l1)
ch = residual_cost(a, vh, None, huber)
print(f"  l1:    pipeline {c1:9.1f}  vs SVD truncation {svd1:9.1f}  "
      f"({'pipeline wins' if c1 < svd1 else 'svd wins'})")
print(f"  huber: pipeline {ch:9.1f}  vs SVD truncation {svdh:9.1f}  "
      f"({'pipeline wins' if ch < svdh else 'svd wins'})")

print("\nHow far is each subspace from the planted signal rows?")
clean = np.delete(np.arange(n), out_rows)
for name, v in (("l1 pipeline", v1), ("huber pipeline", vh),
                ("svd", svd_truncation_cost(a, k, None, l1)[0])):
    resid = residual_cost(signal[clean], v, None, l1)
    print(f"  {name:14s} residual on clean signal rows: {resid:10.2f}")
