"""Robust regression: recursive leverage sampling over an IRLS core.

``m_regress`` shrinks the rows of [A b] by weighted leverage-score
sampling (a constant number of levels), then solves the surviving weighted
problem with iteratively reweighted least squares.  ``irls_solve`` is also
the full-data baseline the sampled solve is measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .conditioning import weighted_leverage_scores
from .core import LossSpec, as_weights, m_derivative, m_value, spawn_rng, to_dense
from .sampling import M2_WEIGHT, draw, make_plan

_RESID_FLOOR = 1e-12


@dataclass(frozen=True)
class RegressConfig:
    levels: int = 3
    base_cap: Optional[int] = None   # default ceil(20 d^2 / eps^2)
    level_c: float = 1.0             # multiplier on n^(1/2+kappa) poly(d) log(1/delta)/eps^2
    kappa: float = 0.1
    delta: float = 0.1
    shrink: float = 0.5
    irls_tol: float = 1e-10
    irls_max_iter: int = 500

    def resolved_base_cap(self, d: int, eps: float) -> int:
        if self.base_cap is not None:
            return int(self.base_cap)
        return int(math.ceil(20.0 * d * d / eps**2))


def regression_objective(a, b, x, w=None, loss: LossSpec = None) -> float:
    """sum_i w_i M(residual_i) for the candidate solution x."""
    resid = np.asarray(a @ x).ravel() - np.asarray(b, dtype=float).ravel()
    wv = as_weights(w, resid.size)
    return float(np.dot(wv, m_value(loss, resid)))


def irls_solve(a, b, w=None, loss: LossSpec = None, tol: float = 1e-10,
               max_iter: int = 500, return_history: bool = False):
    """Iteratively reweighted least squares on sum_i w_i M(r_i).

    Per-residual weight M'(|r|) / (2 |r|) with |r| floored at 1e-12; the
    objective is forced non-increasing by halving the step toward the new
    iterate whenever a full step would increase it.  Returns the best
    iterate (and the per-iteration objective history on request).
    """
    if loss is None:
        raise TypeError("loss is required")
    if not loss.is_convex:
        raise ValueError("IRLS requires a convex loss")
    dense = to_dense(a)
    rhs = np.asarray(b, dtype=float).ravel()
    n, d = dense.shape
    if rhs.size != n:
        raise ValueError("right-hand side length mismatch")
    wv = as_weights(w, n)

    x = np.linalg.lstsq(dense * np.sqrt(wv)[:, None], rhs * np.sqrt(wv), rcond=None)[0]
    obj = regression_objective(dense, rhs, x, wv, loss)
    history = [obj]
    for _ in range(max_iter):
        resid = np.abs(dense @ x - rhs)
        resid = np.maximum(resid, _RESID_FLOOR)
        irls_w = wv * m_derivative(loss, resid) / (2.0 * resid)
        sq = np.sqrt(np.maximum(irls_w, 0.0))
        x_new = np.linalg.lstsq(dense * sq[:, None], rhs * sq, rcond=None)[0]
        obj_new = regression_objective(dense, rhs, x_new, wv, loss)
        # divergence guard: fall back toward the current iterate if needed
        halvings = 0
        while obj_new > obj + 1e-12 and halvings < 40:
            x_new = 0.5 * (x_new + x)
            obj_new = regression_objective(dense, rhs, x_new, wv, loss)
            halvings += 1
        if obj_new > obj + 1e-12:
            break
        improved = obj - obj_new
        x, obj = x_new, obj_new
        history.append(obj)
        if improved < tol * max(obj, 1.0):
            break
    if return_history:
        return x, history
    return x


def m_regress(a, b, loss: LossSpec, eps: float = 0.5,
              cfg: Optional[RegressConfig] = None, seed: int = 0,
              trace: Optional[dict] = None) -> np.ndarray:
    """(1+eps)-style regression by recursive leverage sampling of [A b].

    Each level computes weighted leverage scores of the augmented matrix
    (orthonormal bases with Gaussian row-norm estimates for p=2 losses),
    samples about level_c * n^(1/2+kappa) * (d+1) * log(1/delta) / eps^2
    rows with reweighting, and recurses; the base problem goes to IRLS.
    """
    if not loss.is_convex:
        raise ValueError("regression requires a convex loss")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    cfg = cfg or RegressConfig()
    dense = to_dense(a)
    rhs = np.asarray(b, dtype=float).ravel()
    n, d = dense.shape
    if rhs.size != n:
        raise ValueError("right-hand side length mismatch")
    base_cap = cfg.resolved_base_cap(d, eps)

    cur_a, cur_b = dense, rhs
    w = np.ones(n)
    levels_run = 0
    for level in range(cfg.levels):
        n_prime = cur_a.shape[0]
        if n_prime <= base_cap or n_prime <= 2 * (d + 1):
            break
        aug = np.hstack([cur_a, cur_b[:, None]])
        gauss_t = int(math.ceil(3.0 / cfg.kappa)) if loss.is_m2 else None
        scores = weighted_leverage_scores(
            aug, w, loss, seed=int(spawn_rng(seed, 137, level).integers(2**31)),
            gauss_t=gauss_t, n_probe=2000)
        target = (cfg.level_c * n_prime ** (0.5 + cfg.kappa) * (d + 1)
                  * math.log(1.0 / cfg.delta) / eps**2)
        target = min(cfg.shrink * n_prime, max(target, 4.0 * (d + 1)))
        plan = make_plan(scores.gamma, target, 1.0)
        sample = draw(plan, w, seed=int(spawn_rng(seed, 139, level).integers(2**31)),
                      mode=M2_WEIGHT)
        if len(sample) <= d + 1:
            break
        cur_a = cur_a[sample.indices]
        cur_b = cur_b[sample.indices]
        w = sample.reweights
        levels_run += 1
    if trace is not None:
        trace["levels"] = levels_run
        trace["base_rows"] = cur_a.shape[0]
    return irls_solve(cur_a, cur_b, w, loss, tol=cfg.irls_tol,
                      max_iter=cfg.irls_max_iter)
