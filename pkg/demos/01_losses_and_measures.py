"""Tour of the loss families and the weighted row measure they induce.

Run:  python demos/01_losses_and_measures.py
"""

import numpy as np

from robsub import LossSpec, entrywise_norm_p, m_value, v_norm_p

rng = np.random.default_rng(0)

losses = {
    "l1": LossSpec.lp(1.0),
    "l1.5": LossSpec.lp(1.5),
    "huber(tau=1)": LossSpec.huber(1.0),
    "l1-l2": LossSpec.l1l2(),
    "fair(c=1)": LossSpec.fair(1.0),
}

print("Loss values at a few points (note the linear tails of the robust losses):")
xs = np.array([0.1, 1.0, 3.0, 10.0, 100.0])
for name, loss in losses.items():
    vals = ", ".join(f"{m_value(loss, x):9.3f}" for x in xs)
    print(f"  {name:12s} p={loss.p:<3g} c_m={loss.c_m:<4g} [{vals}]")

print("\nThe v-measure sums M over row norms; the entrywise measure over entries.")
a = rng.standard_normal((6, 4))
w = np.array([1.0, 1.0, 2.0, 1.0, 4.0, 1.0])
for name, loss in losses.items():
    v = v_norm_p(a, w, loss)
    e = entrywise_norm_p(a, w, loss)
    print(f"  {name:12s} v={v:8.3f}  entrywise={e:8.3f}  (v <= entrywise: {v <= e + 1e-12})")

print("\nScale insensitivity: (c_m kappa)^(1/p) ||A||_v <= ||kappa A||_v <= kappa ||A||_v")
loss = LossSpec.huber(1.0)
base = v_norm_p(a, w, loss) ** (1 / loss.p)
for kappa in (1.0, 3.0, 10.0, 50.0):
    scaled = v_norm_p(kappa * a, w, loss) ** (1 / loss.p)
    lo = (loss.c_m * kappa) ** (1 / loss.p) * base
    hi = kappa * base
    print(f"  kappa={kappa:5.1f}: {lo:9.3f} <= {scaled:9.3f} <= {hi:9.3f}")
