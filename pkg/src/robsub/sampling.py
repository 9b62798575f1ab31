"""Row-sampling plans, realized draws, and sample-size calculators.

A plan turns nonnegative scores q' into independent inclusion
probabilities q_i = min{1, k2 * r * q'_i / sum(q')}.  A draw realizes the
plan with one uniform variate per index (in index order, so draws from the
same seed are coupled across plans) and carries both the reweighting
w'_i = w_i / q_i and, for |x|^p losses, the row scale factors q_i^(-1/p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_weights, spawn_rng

LP_SCALE = "lp_scale"
M2_WEIGHT = "m2_weight"

_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class SamplingPlan:
    q: np.ndarray        # inclusion probabilities in [0, 1]
    scores: np.ndarray   # the raw scores q'
    r_target: float
    oversample_const: float

    @property
    def expected_size(self) -> float:
        return float(self.q.sum())

    def inflate(self, factor: float) -> "SamplingPlan":
        """Push probabilities toward 1; oversampling never hurts success."""
        if factor < 1.0:
            raise ValueError("inflation factor must be >= 1")
        return SamplingPlan(np.minimum(1.0, self.q * factor), self.scores,
                            self.r_target * factor, self.oversample_const)


def make_plan(scores, r: float, k2: float = 1.0) -> SamplingPlan:
    """Build inclusion probabilities min{1, k2 * r * q'_i / sum(q')}."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1:
        raise ValueError("scores must be a vector")
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise ValueError("scores must be finite and nonnegative")
    total = float(s.sum())
    if total <= 0.0:
        raise ValueError("all scores are zero")
    if r <= 0.0 or k2 <= 0.0:
        raise ValueError("r and k2 must be positive")
    q = np.minimum(1.0, k2 * r * s / total)
    q[q < _PROB_FLOOR] = 0.0  # avoid astronomically large reweights
    return SamplingPlan(q, s, float(r), float(k2))


@dataclass(frozen=True)
class SampleDraw:
    indices: np.ndarray   # sorted, each at most once
    q_sel: np.ndarray     # inclusion probabilities of the chosen rows
    w_sel: np.ndarray     # original weights of the chosen rows
    mode: str

    @property
    def reweights(self) -> np.ndarray:
        """w'_i = w_i / q_i for the chosen rows (always >= w_i)."""
        return self.w_sel / self.q_sel

    def scale_factors(self, p: float) -> np.ndarray:
        """Row scale factors q_i^(-1/p) for the scale-invariant losses."""
        return self.q_sel ** (-1.0 / p)

    def __len__(self) -> int:
        return self.indices.size


def draw(plan: SamplingPlan, w=None, seed: int = 0, mode: str = M2_WEIGHT) -> SampleDraw:
    """Independent Bernoulli draw from the plan.

    One uniform per index in index order: a re-draw from the same seed with
    inflated probabilities yields a superset of indices.
    """
    if mode not in (LP_SCALE, M2_WEIGHT):
        raise ValueError(f"unknown draw mode {mode!r}")
    n = plan.q.size
    wv = as_weights(w, n)
    u = spawn_rng(seed, 37).random(n)
    mask = u < plan.q
    idx = np.flatnonzero(mask)
    return SampleDraw(idx, plan.q[idx], wv[idx], mode)


def sample_size_subspace(z: int, eps: float, delta: float, gamma_total: float,
                         c: float = 8.0) -> float:
    """Bernstein-style sample size C z log(1/delta) / eps^2 times gamma_total."""
    if z < 1:
        raise ValueError("z must be >= 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if gamma_total <= 0.0:
        raise ValueError("gamma_total must be positive")
    eps = min(eps, 1.0 - 1e-12)
    return c * z * math.log(1.0 / delta) / eps**2 * gamma_total


def gaussian_score_plan(
    u_rows_via,
    m_power: float = 1.0,
    r1: float = 1.0,
    mode: str = "lp",
    seed: int = 0,
    k2: float = 4.0,
    kappa: float = 0.1,
    t_m: int | None = None,
) -> SamplingPlan:
    """Sampling plan from Gaussian-sketched row norms of a basis.

    ``u_rows_via`` is anything with a ``shape`` of (n, d) supporting ``@``
    with a d x t matrix (an ndarray, or a lazy basis row evaluator).

    lp mode uses a single Gaussian vector g and scores |U_i g|^m, with the
    plan inflated by d^(m/2) r1^m to compensate the estimator's downward
    fluctuations; p=2 mode uses a t-column sketch, scores ||U_i G||_2^2,
    and inflation n^kappa log n.
    """
    n, d = u_rows_via.shape
    if r1 < 1.0:
        raise ValueError("r1 must be >= 1")
    rng = spawn_rng(seed, 41)
    if mode == "lp":
        g = rng.standard_normal((d, 1))
        prod = np.asarray(u_rows_via @ g).ravel()
        scores = np.abs(prod) ** m_power
        r_eff = d ** (m_power / 2.0) * r1 ** (m_power + 1.0)
    elif mode == "m2":
        t = int(t_m) if t_m is not None else int(math.ceil(3.0 / kappa))
        g = rng.standard_normal((d, t)) / math.sqrt(t)
        prod = np.asarray(u_rows_via @ g)
        scores = np.sum(prod * prod, axis=1)
        r_eff = r1 * n**kappa * math.log(max(n, 2))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return make_plan(scores, r_eff, k2)
