"""Loss functions, weighted row measures, and the shared value types.

The central object is the weighted v-measure of a matrix: for a loss M with
growth exponent p and per-row weights w >= 1,

    v_norm_p(A) = sum_i w_i * M(||A_i||_2)

which is the p-th power of the metric form (take the 1/p root to get a
quantity satisfying the triangle inequality).  An entrywise companion sums
M over individual entries instead of row norms.

Losses are "nice": even, nondecreasing in |x|, polynomially bounded above
with exponent p, linearly bounded below with constant c_m, and with a
subadditive p-th root.  Supported families are |x|^p for p in [1, 2],
Huber, L1-L2, and Fair; the latter three all have growth exponent 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

LP = "lp"
HUBER = "huber"
L1L2 = "l1l2"
FAIR = "fair"

_LOSS_KINDS = (LP, HUBER, L1L2, FAIR)

ArrayLike = Union[np.ndarray, "sp.spmatrix"]


# ---------------------------------------------------------------------------
# loss functions


def _grid_lower_growth_constant(m_func, lo=1e-6, hi=1e6, points=400):
    """Numerical certificate for the linear lower-growth constant.

    Minimizes M(a)*b / (M(b)*a) over a log grid with a >= b.  Equivalently
    minimizes the ratio of M(x)/x between grid points, which a convex loss
    with M(0)=0 keeps at >= 1; the certificate is clamped to at most 1.
    """
    grid = np.logspace(math.log10(lo), math.log10(hi), points)
    slope = m_func(grid) / grid
    # min over a >= b of slope(a)/slope(b): suffix minima divided pointwise
    suffix_min = np.minimum.accumulate(slope[::-1])[::-1]
    cert = float(np.min(suffix_min / slope))
    return min(cert, 1.0)


@dataclass(frozen=True)
class LossSpec:
    """A nice loss M with growth exponent p and lower-growth constant c_m.

    ``param`` is the Huber threshold tau or the Fair scale c; it is unused
    for the other kinds.  Use the constructors (:meth:`lp`, :meth:`huber`,
    :meth:`l1l2`, :meth:`fair`) rather than building instances by hand.
    """

    kind: str
    p: float
    c_m: float
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in _LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not (1.0 <= self.p <= 2.0):
            raise ValueError(f"growth exponent p={self.p} outside [1, 2]")
        if self.c_m <= 0:
            raise ValueError("c_m must be positive")
        if self.param <= 0:
            raise ValueError("loss parameter must be positive")

    @staticmethod
    def lp(p: float) -> "LossSpec":
        return LossSpec(LP, float(p), 1.0)

    @staticmethod
    def huber(tau: float = 1.0) -> "LossSpec":
        # c_m = 1/2 is a deliberately conservative certificate
        return LossSpec(HUBER, 2.0, 0.5, float(tau))

    @staticmethod
    def l1l2() -> "LossSpec":
        c_m = _grid_lower_growth_constant(lambda x: 2.0 * (np.sqrt(1.0 + x * x / 2.0) - 1.0))
        return LossSpec(L1L2, 2.0, c_m)

    @staticmethod
    def fair(c: float = 1.0) -> "LossSpec":
        cc = float(c)
        c_m = _grid_lower_growth_constant(lambda x: cc * cc * (x / cc - np.log1p(x / cc)))
        return LossSpec(FAIR, 2.0, c_m, cc)

    @property
    def is_lp(self) -> bool:
        return self.kind == LP

    @property
    def is_m2(self) -> bool:
        return self.kind != LP

    @property
    def is_convex(self) -> bool:
        # every supported kind is convex; redescending losses are excluded
        return True

    def m(self, x):
        return m_value(self, x)

    def m_prime(self, x):
        return m_derivative(self, x)

    def describe(self) -> str:
        if self.kind == LP:
            return f"lp(p={self.p:g})"
        if self.kind == HUBER:
            return f"huber(tau={self.param:g})"
        if self.kind == FAIR:
            return f"fair(c={self.param:g})"
        return self.kind


def m_value(loss: LossSpec, x):
    """Evaluate M(x) elementwise; even in x, with M(0) = 0."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("loss argument must be finite")
    ax = np.abs(arr)
    if loss.kind == LP:
        out = ax ** loss.p
    elif loss.kind == HUBER:
        tau = loss.param
        out = np.where(ax <= tau, ax * ax / (2.0 * tau), ax - tau / 2.0)
    elif loss.kind == L1L2:
        out = 2.0 * (np.sqrt(1.0 + ax * ax / 2.0) - 1.0)
    else:  # FAIR
        c = loss.param
        out = c * c * (ax / c - np.log1p(ax / c))
    return float(out) if out.ndim == 0 else out


def m_derivative(loss: LossSpec, x):
    """Derivative of M at |x| (one-sided at 0), used by IRLS and solvers."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("loss argument must be finite")
    ax = np.abs(arr)
    if loss.kind == LP:
        p = loss.p
        if p == 1.0:
            out = np.ones_like(ax)
        else:
            out = p * ax ** (p - 1.0)
    elif loss.kind == HUBER:
        tau = loss.param
        out = np.where(ax <= tau, ax / tau, 1.0)
    elif loss.kind == L1L2:
        out = ax / np.sqrt(1.0 + ax * ax / 2.0)
    else:  # FAIR
        c = loss.param
        out = ax / (1.0 + ax / c)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightVector:
    """Per-row weights with every w_i >= 1, carrying dyadic bucket structure.

    Bucket j holds the rows with 2^(j-1) <= w_i < 2^j, for j = 1..N where
    N = ceil(log2(1 + max w)).
    """

    w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=float)
        if arr.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite")
        if arr.size and arr.min() < 1.0:
            raise ValueError("every weight must be >= 1")
        object.__setattr__(self, "w", arr)

    @staticmethod
    def ones(n: int) -> "WeightVector":
        return WeightVector(np.ones(n))

    def __len__(self) -> int:
        return self.w.size

    @property
    def n_buckets(self) -> int:
        if self.w.size == 0:
            return 0
        return int(math.ceil(math.log2(1.0 + float(self.w.max()))))

    def bucket_indices(self) -> np.ndarray:
        """1-based dyadic bucket index per row: 2^(j-1) <= w_i < 2^j."""
        return np.floor(np.log2(self.w)).astype(int) + 1


def as_weights(w, n: int) -> np.ndarray:
    """Normalize a weights argument (None, array, or WeightVector) to an array."""
    if w is None:
        return np.ones(n)
    if isinstance(w, WeightVector):
        arr = w.w
    else:
        arr = np.asarray(w, dtype=float)
        WeightVector(arr)  # validation only
    if arr.size != n:
        raise ValueError(f"weight length {arr.size} != row count {n}")
    return arr


# ---------------------------------------------------------------------------
# matrix helpers (dense ndarray or scipy.sparse are both accepted)


def is_sparse(a) -> bool:
    return sp.issparse(a)


def nnz(a) -> int:
    if is_sparse(a):
        return int(a.nnz)
    return int(np.count_nonzero(a))


def to_dense(a) -> np.ndarray:
    if is_sparse(a):
        return np.asarray(a.todense())
    return np.asarray(a, dtype=float)


def row_norms(a) -> np.ndarray:
    """Euclidean norm of each row."""
    if is_sparse(a):
        sq = a.multiply(a).sum(axis=1)
        return np.sqrt(np.asarray(sq).ravel())
    return np.linalg.norm(np.asarray(a, dtype=float), axis=1)


def matmul_dense(a, b) -> np.ndarray:
    """a @ b with a possibly sparse, always returning a dense ndarray."""
    out = a @ b
    if is_sparse(out):
        out = out.todense()
    return np.asarray(out)


# ---------------------------------------------------------------------------
# measures


def v_norm_p(a, w=None, loss: LossSpec = None) -> float:
    """Weighted v-measure sum_i w_i M(||A_i||_2) (the p-th power form)."""
    if loss is None:
        raise TypeError("loss is required")
    n = a.shape[0]
    wv = as_weights(w, n)
    return float(np.dot(wv, m_value(loss, row_norms(a))))


def entrywise_norm_p(a, w=None, loss: LossSpec = None) -> float:
    """Weighted entrywise measure sum_{i,j} w_i M(a_ij) (the p-th power form)."""
    if loss is None:
        raise TypeError("loss is required")
    n = a.shape[0]
    wv = as_weights(w, n)
    if is_sparse(a):
        coo = a.tocoo()
        if coo.nnz == 0:
            return 0.0
        per_row = np.bincount(coo.row, weights=m_value(loss, coo.data), minlength=n)
        return float(np.dot(wv, per_row))
    vals = m_value(loss, np.asarray(a, dtype=float))
    return float(np.dot(wv, vals.sum(axis=1)))


# ---------------------------------------------------------------------------
# subspaces and residuals


@dataclass(frozen=True)
class Subspace:
    """An orthonormal column factor U; the projector it represents is U U^T."""

    u: np.ndarray
    quality_k: Optional[float] = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2:
            raise ValueError("subspace factor must be 2-D")
        if u.shape[1] > 0:
            gram = u.T @ u
            err = np.abs(gram - np.eye(u.shape[1])).max()
            if err > 1e-10:
                raise ValueError(f"columns not orthonormal (deviation {err:.2e})")
        if self.quality_k is not None and self.quality_k < 1.0:
            raise ValueError("quality bound must be >= 1")
        object.__setattr__(self, "u", u)

    @staticmethod
    def empty(d: int) -> "Subspace":
        return Subspace(np.zeros((d, 0)))

    @property
    def d(self) -> int:
        return self.u.shape[0]

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def contains(self, other: "Subspace", tol: float = 1e-8) -> bool:
        """Whether the other subspace lies inside this one, up to tol."""
        if other.dim == 0:
            return True
        w = other.u
        resid = w - self.u @ (self.u.T @ w)
        return float(np.linalg.norm(resid)) <= tol


def residual_row_norms(a, x: Subspace) -> np.ndarray:
    """Per-row Euclidean distances ||A_i (I - U U^T)||_2.

    Dense inputs subtract the projection directly (accurate near zero
    residual); sparse inputs use the projector identity
    ||A_i (I-P)||^2 = ||A_i||^2 - ||A_i U||^2 to avoid densification.
    """
    if x.d != a.shape[1]:
        raise ValueError(f"subspace lives in R^{x.d}, matrix has {a.shape[1]} columns")
    if x.dim == 0:
        return row_norms(a)
    if is_sparse(a):
        base = row_norms(a) ** 2
        proj = np.linalg.norm(matmul_dense(a, x.u), axis=1) ** 2
        return np.sqrt(np.clip(base - proj, 0.0, None))
    arr = np.asarray(a, dtype=float)
    resid = arr - (arr @ x.u) @ x.u.T
    return np.linalg.norm(resid, axis=1)


def residual_cost(a, x: Subspace, w=None, loss: LossSpec = None) -> float:
    """v-measure of A (I - U U^T): the cost of fitting A with the subspace."""
    if loss is None:
        raise TypeError("loss is required")
    wv = as_weights(w, a.shape[0])
    return float(np.dot(wv, m_value(loss, residual_row_norms(a, x))))


# ---------------------------------------------------------------------------
# reporting


@dataclass
class CostReport:
    """Cost of a fitted subspace plus context (baselines, timings, seed)."""

    v_cost_p: float
    p: float
    seed: Optional[int] = None
    baselines: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.v_cost_p < 0:
            raise ValueError("costs are nonnegative")

    @property
    def v_cost(self) -> float:
        return self.v_cost_p ** (1.0 / self.p)

    def as_dict(self) -> dict:
        out = {
            "v_cost_p": self.v_cost_p,
            "v_cost": self.v_cost,
            "p": self.p,
            "seed": self.seed,
            "baselines": self.baselines,
        }
        out.update(self.extras)
        return out


# ---------------------------------------------------------------------------
# seeding

_SALT_BITS = 0x9E3779B9


def spawn_rng(seed: int, *salts: int) -> np.random.Generator:
    """Deterministic child generator for (seed, call-site salts)."""
    entropy = [int(seed) & 0xFFFFFFFF, _SALT_BITS]
    entropy.extend(int(s) & 0xFFFFFFFF for s in salts)
    return np.random.default_rng(np.random.SeedSequence(entropy))
