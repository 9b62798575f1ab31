"""Constant-factor bicriteria subspaces by sketch-then-sample recursion.

The driver sketches the input on the right down to poly(k) columns, then
recursively samples rows by weighted leverage scores until at most P_M
rows survive; the orthonormal row space of the survivors is the bicriteria
subspace.  For |x|^p losses one sampling round typically suffices; general
p=2 losses shrink rows geometrically over O(log log n) rounds while
carrying reweights w' = w / q.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conditioning import weighted_leverage_scores
from .core import LossSpec, Subspace, is_sparse, spawn_rng
from .sampling import LP_SCALE, M2_WEIGHT, draw, make_plan
from .sketch import apply_right, make_sparse_sketch, orthonormal_union


@dataclass(frozen=True)
class ConstApproxConfig:
    c_sketch_cols: float = 40.0    # sketch width multiplier: m = min(c * k^2, d)
    sketch_eps: float = 0.5        # constant-eps right sketch => sparsity ceil(2/eps)
    c_sample_rows: float = 10.0    # per-level sample multiplier on d'^2 * sum(scores)
    p_m_multiplier: float = 50.0
    logloglog_c: float = 3.0       # extra factor on r for p=2 losses
    shrink: float = 0.5            # per-level expected sample is capped at shrink * n'
    p_m_override: Optional[int] = None
    rank_tol: float = 1e-8
    basis_probes: int = 2000       # beta-certificate probes inside the recursion

    def sparsity(self) -> int:
        return max(1, int(math.ceil(2.0 / self.sketch_eps)))

    def p_m(self, k: int, n: int, loss: LossSpec) -> int:
        if self.p_m_override is not None:
            return int(self.p_m_override)
        base = self.p_m_multiplier * k * k
        if loss.is_m2:
            base *= math.ceil(math.log2(n + 2) ** 3)
        return int(base)


def _logloglog(n: float) -> float:
    return math.log(max(math.log(max(math.log(max(n, 3.0)), math.e)), math.e))


def const_approx_recur(
    a_proj,
    a_hat,
    w: np.ndarray,
    loss: LossSpec,
    cfg: ConstApproxConfig,
    seed: int,
    p_m: int,
    max_depth: int,
    depth: int = 0,
    trace: Optional[list] = None,
    orig_idx: Optional[np.ndarray] = None,
):
    """Recursive leverage-score row sampling; returns the surviving rows of a_hat.

    a_proj carries the sketched (narrow) copy used for scoring; a_hat the
    original-width rows, kept aligned.  For |x|^p losses sampled rows are
    rescaled by q^(-1/p) and weights reset to one; for general p=2 losses
    rows keep their values and weights become w / q.
    """
    n_prime = a_proj.shape[0]
    if a_hat.shape[0] != n_prime:
        raise ValueError("projected and original row counts disagree")
    if orig_idx is None:
        orig_idx = np.arange(n_prime)
    if n_prime <= p_m:
        if trace is not None:
            trace.append({"depth": depth, "n": n_prime, "base_case": True,
                          "indices": orig_idx})
        return a_hat
    if depth > max_depth:
        raise RuntimeError(
            f"row-sampling recursion exceeded depth {max_depth} without "
            f"shrinking below {p_m} rows (n'={n_prime})")

    d_prime = a_proj.shape[1]
    scores = weighted_leverage_scores(
        a_proj, w, loss, seed=int(spawn_rng(seed, 53, depth).integers(2**31)),
        n_probe=cfg.basis_probes)
    r_formula = cfg.c_sample_rows * d_prime * d_prime * scores.gamma_total
    if loss.is_m2:
        r_formula *= cfg.logloglog_c * _logloglog(n_prime)
    # the formula value exceeds n' at practical sizes, which would stall the
    # recursion; cap the expected sample so the row count keeps shrinking
    r_eff = min(r_formula, cfg.shrink * n_prime)
    plan = make_plan(scores.gamma, r_eff, 1.0)

    mode = LP_SCALE if loss.is_lp else M2_WEIGHT
    sample = None
    for attempt in range(2):
        cand = draw(plan, w, seed=int(spawn_rng(seed, 59, depth, attempt).integers(2**31)),
                    mode=mode)
        sample = cand
        if len(cand) <= max(0.9 * n_prime, p_m):
            break
    idx = sample.indices
    if trace is not None:
        trace.append({
            "depth": depth, "n": n_prime, "base_case": False,
            "expected": plan.expected_size, "realized": len(sample),
            "w1_next": float(sample.reweights.sum()),
        })
    if len(idx) == 0:
        return a_hat[np.zeros(0, dtype=int)]

    sub_proj = a_proj[idx]
    sub_hat = a_hat[idx]
    if loss.is_lp:
        scale = sample.scale_factors(loss.p)
        sub_proj = _scale_rows(sub_proj, scale)
        sub_hat = _scale_rows(sub_hat, scale)
        w_next = np.ones(len(idx))
    else:
        w_next = sample.reweights
    return const_approx_recur(sub_proj, sub_hat, w_next, loss, cfg, seed,
                              p_m, max_depth, depth + 1, trace, orig_idx[idx])


def _scale_rows(a, scale: np.ndarray):
    if is_sparse(a):
        import scipy.sparse as sp
        return sp.diags(scale) @ a.tocsr()
    return np.asarray(a) * scale[:, None]


def const_approx(a, k: int, loss: LossSpec, cfg: Optional[ConstApproxConfig] = None,
                 seed: int = 0, trace: Optional[list] = None) -> Subspace:
    """Bicriteria subspace: sketch right, sample rows, orthonormalize survivors.

    The output dimension is at most P_M; its cost is within a modest factor
    of the best rank-k cost (over the randomness of sketch and samples).
    """
    cfg = cfg or ConstApproxConfig()
    n, d = a.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > min(n, d):
        warnings.warn(f"k={k} exceeds min(n, d)={min(n, d)}; clamping", RuntimeWarning)
        k = min(n, d)

    m = int(min(max(k + 1, cfg.c_sketch_cols * k * k), d))
    sketch = make_sparse_sketch(int(spawn_rng(seed, 61).integers(2**31)),
                                m=m, d=d, s=min(cfg.sparsity(), m))
    a_proj = apply_right(a, sketch)
    p_m = cfg.p_m(k, n, loss)
    max_depth = int(4 * math.log2(max(math.log2(max(n, 4)), 2.0)) + 8)
    surv = const_approx_recur(a_proj, a, np.ones(n), loss, cfg, seed,
                              p_m, max_depth, trace=trace)
    return orthonormal_union([surv if not is_sparse(surv) else surv.todense()],
                             d=d, rank_tol=cfg.rank_tol)
