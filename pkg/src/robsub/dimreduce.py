"""Non-adaptive residual sampling around a bicriteria subspace.

Given a projector X-hat = W W^T whose cost is within a factor K of the
rank-k optimum, rows are sampled once, with probabilities proportional to
M of their Gaussian-sketched residual norms, and the output subspace is
the orthonormal union of the sampled rows with the columns of W.  The
result contains span(W) and, with enough samples, a near-optimal rank-k
subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LossSpec, Subspace, m_value, row_norms, spawn_rng
from .sampling import M2_WEIGHT, draw, make_plan
from .sketch import gaussian_row_norm_estimates, make_gaussian_sketch, orthonormal_union


@dataclass(frozen=True)
class DimReduceConfig:
    eps: float
    k: int
    quality_k: float = 1.0         # K, the quality bound on the input projector
    r1_multiplier: float = 2.0     # leading constant of the sample-size formula
    t_m_override: Optional[int] = None
    k2: float = 4.0
    rank_tol: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if self.quality_k < 1.0:
            raise ValueError("quality bound must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def r1(self, p: float) -> float:
        k, eps = self.k, self.eps
        return (self.r1_multiplier * self.quality_k * k ** (2.0 + p)
                * eps ** (-p - 1.0) * math.log(k / eps + 2.0))


def dim_reduce(a, k: int, xhat: Subspace, cfg: DimReduceConfig, loss: LossSpec,
               seed: int = 0, trace: Optional[dict] = None) -> Subspace:
    """One round of residual sampling; returns a subspace containing xhat's.

    Scores are q'_i = M(||A_i (I - W W^T) G||_2) with G Gaussian (a single
    column for |x|^p losses, O(log n) columns otherwise); the plan uses
    r = r1^(p+1) or r1 respectively, with oversampling constant k2.  If
    every residual is zero the input subspace is returned unchanged.
    """
    n, d = a.shape
    if k > d:
        raise ValueError(f"k={k} exceeds column count {d}")
    if xhat.d != d:
        raise ValueError("projector dimension mismatch")
    p = loss.p
    if loss.is_lp:
        t_m = 1
        r = cfg.r1(p) ** (p + 1.0)
    else:
        t_m = int(math.ceil(2.0 * math.log2(n + 2)))
        r = cfg.r1(p)
    if cfg.t_m_override is not None:
        t_m = cfg.t_m_override

    g = make_gaussian_sketch(int(spawn_rng(seed, 43).integers(2**31)), d, t_m)
    resid = gaussian_row_norm_estimates(a, xhat, g)
    scores = m_value(loss, resid)
    if trace is not None:
        trace["t_m"] = t_m
        trace["r"] = r
        trace["scores_total"] = float(scores.sum())
    # residuals at the level of rounding noise count as an exact fit
    zero_floor = n * m_value(loss, 1e-12 * (float(row_norms(a).max()) + 1e-300))
    if scores.sum() <= zero_floor:
        return xhat

    plan = make_plan(scores, r, cfg.k2)
    sample = draw(plan, None, seed=int(spawn_rng(seed, 47).integers(2**31)), mode=M2_WEIGHT)
    if trace is not None:
        trace["expected_size"] = plan.expected_size
        trace["realized_size"] = len(sample)
    rows = a[sample.indices]
    blocks = [rows if not hasattr(rows, "todense") else rows.todense()]
    if xhat.dim > 0:
        blocks.append(xhat.u.T)
    out = orthonormal_union(blocks, d=d, rank_tol=cfg.rank_tol)
    return Subspace(out.u, quality_k=xhat.quality_k)
