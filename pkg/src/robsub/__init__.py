"""Sketching- and sampling-based robust subspace approximation.

Rank-k fitting of point sets under |x|^p and robust (Huber, L1-L2, Fair)
losses, with leverage-score row sampling, sparse right sketches, residual
sampling, end-to-end (1+eps) pipelines, robust regression, brute-force
oracles, and a clique-gadget instance generator for verification.
"""

from .core import (
    CostReport,
    LossSpec,
    Subspace,
    WeightVector,
    entrywise_norm_p,
    m_derivative,
    m_value,
    residual_cost,
    residual_row_norms,
    row_norms,
    v_norm_p,
)
from .sketch import (
    GaussianSketch,
    PStableSketch,
    SparseSketch,
    apply_right,
    gaussian_row_norm_estimates,
    half_normal_moment,
    make_gaussian_sketch,
    make_pstable_sketch,
    make_sparse_sketch,
    orthonormal_union,
)
from .conditioning import (
    LeverageScores,
    WellConditionedBasis,
    leverage_scores,
    weighted_leverage_scores,
    well_conditioned_basis,
)
from .sampling import (
    LP_SCALE,
    M2_WEIGHT,
    SampleDraw,
    SamplingPlan,
    draw,
    gaussian_score_plan,
    make_plan,
    sample_size_subspace,
)
from .dimreduce import DimReduceConfig, dim_reduce
from .bicriteria import ConstApproxConfig, const_approx, const_approx_recur
from .pipeline import (
    CapExceededError,
    PipelineConfig,
    SmallProblem,
    approx_lp,
    approx_m2,
    best_rank_k_in_subspace,
    small_approx,
)
from .regression import RegressConfig, irls_solve, m_regress, regression_objective
from .hardness import (
    GadgetInstance,
    brute_force_best_coordinate,
    coordinate_subspace_cost,
    gen_gadget,
    perturbed_simplex_cost,
)
from .oracle import alternating_reference, exhaustive_tiny, svd_truncation_cost

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
