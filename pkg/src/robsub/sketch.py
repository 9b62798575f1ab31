"""Random sketching primitives.

Three sketch families, each a pure function of its seed:

* sparse sign sketches (s nonzeros of magnitude 1/sqrt(s) per column),
  applied on the right in O(s * nnz) work to reduce column count;
* Gaussian sketches for cheap row-norm estimation, optionally deflating
  a known subspace on the fly;
* p-stable sketches (Cauchy at p=1) used to condition bases for l_p.

Also provides the orthonormal union of row blocks, the rank-revealing
subspace builder the samplers feed into.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .core import Subspace, is_sparse, matmul_dense, spawn_rng

_STABLE_BLOCK_ROWS = 256


@dataclass(frozen=True)
class SparseSketch:
    """Sign sketch S with shape (rows, cols); each column holds s nonzeros.

    Products with data matrices are taken as A @ S.T, so ``cols`` must match
    the data column count and ``rows`` is the reduced width.
    """

    rows: int
    cols: int
    s: int
    seed: int
    positions: np.ndarray  # (cols, s) row indices, distinct per column
    values: np.ndarray     # (cols, s) signed magnitudes +-1/sqrt(s)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        for j in range(self.cols):
            out[self.positions[j], j] = self.values[j]
        return out

    def right_operator(self) -> sp.csc_matrix:
        """S^T as a (cols, rows) sparse matrix, the factor applied on the right."""
        indptr = np.arange(self.cols + 1) * self.s
        return sp.csc_matrix(
            (self.values.ravel(), self.positions.ravel(), indptr),
            shape=(self.rows, self.cols),
        ).T.tocsc()


def make_sparse_sketch(seed: int, m: int, d: int, s: int) -> SparseSketch:
    """Build a sparse embedding sketch of shape (m, d) with sparsity s."""
    if not (1 <= s <= m):
        raise ValueError(f"sparsity s={s} outside [1, m={m}]")
    if d < 1:
        raise ValueError("d must be positive")
    rng = spawn_rng(seed, 11)
    # s distinct target rows per column, uniform over the m rows
    keys = rng.random((d, m))
    positions = np.argsort(keys, axis=1)[:, :s].astype(np.int64)
    signs = rng.integers(0, 2, size=(d, s)) * 2 - 1
    values = signs / math.sqrt(s)
    return SparseSketch(m, d, s, int(seed), positions, values)


def apply_right(a, r: SparseSketch, return_work: bool = False):
    """Compute A @ S^T, the column-reducing sketch product.

    The multiply-add count of the scatter is exactly s * nnz(A); pass
    ``return_work=True`` to get it back alongside the product.
    """
    if a.shape[1] != r.cols:
        raise ValueError(f"matrix has {a.shape[1]} columns, sketch expects {r.cols}")
    op = r.right_operator()
    out = matmul_dense(a, op)
    if not return_work:
        return out
    if is_sparse(a):
        per_col = np.diff(a.tocsc().indptr)
    else:
        per_col = np.count_nonzero(np.asarray(a), axis=0)
    madds = int(per_col.sum()) * r.s
    return out, madds


@dataclass(frozen=True)
class GaussianSketch:
    """d x t matrix of i.i.d. normals with mean 0 and variance 1/t."""

    d: int
    t: int
    seed: int
    g: np.ndarray

    @property
    def cols(self) -> int:
        return self.t


def make_gaussian_sketch(seed: int, d: int, t: int) -> GaussianSketch:
    if t < 1:
        raise ValueError("t must be >= 1")
    rng = spawn_rng(seed, 13)
    g = rng.standard_normal((d, t)) / math.sqrt(t)
    return GaussianSketch(d, t, int(seed), g)


def gaussian_row_norm_estimates(a, deflate: Subspace | None, g: GaussianSketch) -> np.ndarray:
    """Row norms ||A_i (I - W W^T) G||_2 without forming A (I - W W^T).

    Computed as (A G) - (A W)(W^T G); with no deflation this is just the
    sketched row norm ||A_i G||_2.
    """
    if a.shape[1] != g.d:
        raise ValueError(f"matrix has {a.shape[1]} columns, sketch expects {g.d}")
    ag = matmul_dense(a, g.g)
    if deflate is not None and deflate.dim > 0:
        if deflate.d != a.shape[1]:
            raise ValueError("deflation subspace dimension mismatch")
        aw = matmul_dense(a, deflate.u)
        ag = ag - aw @ (deflate.u.T @ g.g)
    return np.linalg.norm(ag, axis=1)


def half_normal_moment(p: float) -> float:
    """E|g|^p for a standard normal g: 2^(p/2) Gamma((p+1)/2) / sqrt(pi)."""
    return 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)


def orthonormal_union(blocks, d: int | None = None, rank_tol: float = 1e-8) -> Subspace:
    """Orthonormal basis for the span of all rows across the given blocks.

    Rank-revealing: directions whose pivot falls below rank_tol times the
    largest pivot are dropped.  An empty input yields the empty subspace.
    """
    mats = [np.atleast_2d(np.asarray(b if not is_sparse(b) else b.todense(), dtype=float))
            for b in blocks if b is not None and b.shape[0] > 0]
    if not mats:
        if d is None:
            raise ValueError("cannot infer ambient dimension from empty input")
        return Subspace.empty(d)
    width = mats[0].shape[1]
    if any(m.shape[1] != width for m in mats):
        raise ValueError("blocks disagree on column count")
    stacked = np.vstack(mats)
    q, r, _ = sla.qr(stacked.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] <= 0.0:
        return Subspace.empty(width)
    rank = int(np.sum(diag > rank_tol * diag[0]))
    return Subspace(q[:, :rank])


# ---------------------------------------------------------------------------
# p-stable sketches


def _stable_draws(rng: np.random.Generator, size, p: float) -> np.ndarray:
    """Standard symmetric p-stable variates (Chambers-Mallows-Stuck)."""
    if p == 1.0:
        return rng.standard_cauchy(size)
    theta = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    expo = rng.exponential(1.0, size)
    lead = np.sin(p * theta) / np.cos(theta) ** (1.0 / p)
    tail = (np.cos((1.0 - p) * theta) / expo) ** ((1.0 - p) / p)
    return lead * tail


@dataclass(frozen=True)
class PStableSketch:
    """s x n matrix of i.i.d. standard p-stable entries, generated lazily.

    Entries are standard Cauchy for p=1.  Rows are produced in fixed-size
    blocks so that the draw stream is deterministic in the seed and the
    full matrix is never required to fit in memory.
    """

    s: int
    n: int
    p: float
    seed: int

    def row_block(self, start: int, stop: int) -> np.ndarray:
        """Materialize rows [start, stop): used by tests and small inputs."""
        out = np.empty((stop - start, self.n))
        b0 = start // _STABLE_BLOCK_ROWS
        b1 = (stop - 1) // _STABLE_BLOCK_ROWS
        for blk in range(b0, b1 + 1):
            lo = blk * _STABLE_BLOCK_ROWS
            hi = min(lo + _STABLE_BLOCK_ROWS, self.s)
            rng = spawn_rng(self.seed, 17, blk)
            rows = _stable_draws(rng, (hi - lo, self.n), self.p)
            a = max(lo, start)
            b = min(hi, stop)
            out[a - start:b - start] = rows[a - lo:b - lo]
        return out

    def apply(self, b) -> np.ndarray:
        """Compute (Pi @ B) blockwise for a conformable dense/sparse B."""
        if b.shape[0] != self.n:
            raise ValueError(f"operand has {b.shape[0]} rows, sketch expects {self.n}")
        bd = b if not is_sparse(b) else b.tocsr()
        out = np.empty((self.s, b.shape[1]))
        for lo in range(0, self.s, _STABLE_BLOCK_ROWS):
            hi = min(lo + _STABLE_BLOCK_ROWS, self.s)
            rng = spawn_rng(self.seed, 17, lo // _STABLE_BLOCK_ROWS)
            rows = _stable_draws(rng, (hi - lo, self.n), self.p)
            out[lo:hi] = matmul_dense(rows, bd)
        return out


def make_pstable_sketch(seed: int, s: int, n: int, p: float) -> PStableSketch:
    if not (1.0 <= p < 2.0):
        raise ValueError(f"p={p} outside [1, 2)")
    if s < 1 or n < 1:
        raise ValueError("sketch dimensions must be positive")
    return PStableSketch(int(s), int(n), float(p), int(seed))
