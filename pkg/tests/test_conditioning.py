import numpy as np
import pytest

from robsub import (
    LossSpec,
    leverage_scores,
    make_sparse_sketch,
    weighted_leverage_scores,
    well_conditioned_basis,
)
from robsub.core import m_value


class TestWellConditionedBasis:
    def test_identity_p2_orthonormal(self):
        basis = well_conditioned_basis(np.eye(5), p=2.0, seed=0)
        u = basis.u_rows()
        assert np.allclose(u.T @ u, np.eye(5), atol=1e-12)
        assert basis.alpha**2 == pytest.approx(5.0)
        assert basis.beta == 1.0

    def test_dual_norm_condition_p1(self):
        # sampled-x necessary condition ||x||_inf <= beta ||U x||_1
        rng = np.random.default_rng(0)
        a = rng.standard_normal((200, 5))
        basis = well_conditioned_basis(a, p=1.0, seed=3)
        u = basis.u_rows()
        for _ in range(200):
            x = rng.standard_normal(5)
            assert np.abs(x).max() <= basis.beta * np.abs(u @ x).sum() * (1 + 1e-9)

    def test_dual_norm_condition_p15(self):
        # at p=1.5 the dual exponent is 3: ||x||_3 <= beta ||U x||_1.5
        rng = np.random.default_rng(20)
        a = rng.standard_normal((150, 4))
        basis = well_conditioned_basis(a, p=1.5, seed=4)
        u = basis.u_rows()
        for _ in range(200):
            x = rng.standard_normal(4)
            lhs = np.sum(np.abs(x) ** 3.0) ** (1 / 3.0)
            rhs = np.sum(np.abs(u @ x) ** 1.5) ** (1 / 1.5)
            assert lhs <= basis.beta * rhs * (1 + 1e-9)

    def test_entrywise_alpha_certificate(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((80, 4))
        basis = well_conditioned_basis(a, p=1.5, seed=5)
        u = basis.u_rows()
        assert np.sum(np.abs(u) ** 1.5) ** (1 / 1.5) == pytest.approx(basis.alpha, rel=1e-8)

    def test_sketched_h_reduces_to_rank(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((100, 3)) @ rng.standard_normal((3, 20))
        sk = make_sparse_sketch(7, m=3, d=20, s=2)
        h = np.asarray(sk.right_operator().todense())
        basis = well_conditioned_basis(a, h=h, p=1.0, seed=1)
        assert basis.m == 3

    def test_rank_deficient_columns_dropped(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((60, 3))
        a = np.hstack([a, a[:, :2]])  # duplicate columns
        basis = well_conditioned_basis(a, p=1.0, seed=2)
        assert basis.m == 3

    def test_colspace_preserved(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((50, 6))
        basis = well_conditioned_basis(a, p=1.0, seed=8)
        u = basis.u_rows()
        # u and a span the same column space
        assert np.linalg.matrix_rank(np.hstack([u, a]), tol=1e-8) == 6

    def test_row_evaluator_matches(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((30, 4))
        basis = well_conditioned_basis(a, p=1.0, seed=9)
        g = rng.standard_normal((basis.m, 3))
        assert np.allclose(basis.row_evaluator() @ g, basis.u_rows() @ g)

    def test_stable_sketch_path_large_n(self):
        # with n above the sketch size the p-stable route engages; the
        # certificates must still dominate the sampled dual-norm ratios
        rng = np.random.default_rng(19)
        a = rng.standard_normal((20000, 3))
        basis = well_conditioned_basis(a, p=1.0, seed=3)
        u = basis.u_rows(slice(0, 2000))
        for _ in range(50):
            x = rng.standard_normal(3)
            lhs = np.abs(x).max()
            # restrict to a row block: ||Ux||_1 over all rows only grows
            assert lhs <= basis.beta * np.abs(basis.row_evaluator() @ x).sum() * (1 + 1e-9)
        assert u.shape == (2000, 3)


class TestLeverageScores:
    def test_orthonormal_columns_sum_to_d(self):
        rng = np.random.default_rng(6)
        q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        basis = well_conditioned_basis(q, p=2.0, seed=0)
        norms2 = basis.row_norms_lp(2.0)
        assert np.sum(norms2**2) == pytest.approx(5.0)

    def test_identity_scores_equal(self):
        basis = well_conditioned_basis(np.eye(6), p=1.0, seed=4)
        scores = leverage_scores(np.eye(6), basis, LossSpec.lp(1.0))
        assert np.allclose(scores.gamma, scores.gamma[0])

    def test_sensitivity_upper_bound_lp(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((150, 6))
        loss = LossSpec.lp(1.0)
        basis = well_conditioned_basis(a, p=1.0, seed=11)
        scores = leverage_scores(a, basis, loss)
        for _ in range(100):
            y = rng.standard_normal(6)
            contrib = m_value(loss, a @ y)
            ratios = contrib / contrib.sum()
            assert np.all(ratios <= scores.gamma + 1e-12)

    def test_sensitivity_upper_bound_m2(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((120, 5))
        loss = LossSpec.huber(1.0)
        basis = well_conditioned_basis(a, p=2.0, seed=12)
        scores = leverage_scores(a, basis, loss)
        for _ in range(100):
            y = rng.standard_normal(5) * rng.uniform(0.1, 10)
            contrib = m_value(loss, a @ y)
            ratios = contrib / contrib.sum()
            assert np.all(ratios <= scores.gamma + 1e-12)

    def test_loss_basis_mismatch(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((30, 4))
        basis = well_conditioned_basis(a, p=1.0, seed=1)
        with pytest.raises(ValueError):
            leverage_scores(a, basis, LossSpec.lp(1.5))
        with pytest.raises(ValueError):
            leverage_scores(a, basis, LossSpec.huber(1.0))

    def test_total_bounded_by_alpha_beta(self):
        rng = np.random.default_rng(10)
        for p in (1.0, 1.5):
            a = rng.standard_normal((100, 4))
            loss = LossSpec.lp(p)
            basis = well_conditioned_basis(a, p=p, seed=13)
            scores = leverage_scores(a, basis, loss)
            assert scores.gamma_total <= (basis.alpha * basis.beta) ** p * (1 + 1e-9)

    def test_m2_total_scaling(self):
        # orthonormal basis, unit weights: gamma <= c sqrt(d n) / c_m
        rng = np.random.default_rng(11)
        a = rng.standard_normal((400, 8))
        loss = LossSpec.huber(1.0)
        basis = well_conditioned_basis(a, p=2.0, seed=14)
        scores = leverage_scores(a, basis, loss)
        bound = 2.0 * np.sqrt(8 * 400) / loss.c_m
        assert scores.gamma_total <= bound

    def test_column_space_invariance_p2(self):
        # scores depend only on the column space for the orthonormal path
        rng = np.random.default_rng(12)
        a = rng.standard_normal((60, 5))
        m = rng.standard_normal((5, 5)) + 5 * np.eye(5)
        loss = LossSpec.huber(1.0)
        s1 = leverage_scores(a, well_conditioned_basis(a, p=2.0, seed=7), loss)
        s2 = leverage_scores(a @ m, well_conditioned_basis(a @ m, p=2.0, seed=7), loss)
        assert np.allclose(s1.gamma, s2.gamma, rtol=1e-8)

    def test_scale_invariance_p1(self):
        # scalar right-multiplication with a reused sketch seed leaves
        # the p=1 scores unchanged
        rng = np.random.default_rng(13)
        a = rng.standard_normal((80, 4))
        loss = LossSpec.lp(1.0)
        s1 = leverage_scores(a, well_conditioned_basis(a, p=1.0, seed=21), loss)
        s2 = leverage_scores(3.0 * a, well_conditioned_basis(3.0 * a, p=1.0, seed=21), loss)
        assert np.allclose(s1.gamma, s2.gamma, rtol=1e-8)


class TestWeightedLeverageScores:
    def test_unit_weights_double_unweighted(self):
        rng = np.random.default_rng(14)
        a = rng.standard_normal((50, 4))
        loss = LossSpec.huber(1.0)
        ws = weighted_leverage_scores(a, np.ones(50), loss, seed=5)
        assert ws.bucket_count == 1
        basis = well_conditioned_basis(a, p=2.0, seed=0)
        us = leverage_scores(a, basis, loss)
        assert np.allclose(ws.gamma, 2.0 * us.gamma, rtol=1e-10)

    def test_two_dyadic_levels(self):
        rng = np.random.default_rng(15)
        a = rng.standard_normal((40, 4))
        w = np.ones(40)
        w[:15] = 3.0
        ws = weighted_leverage_scores(a, w, LossSpec.lp(1.0), seed=6)
        assert ws.bucket_count == 2
        assert ws.gamma_total == pytest.approx(ws.gamma.sum())

    def test_weight_below_one_rejected(self):
        with pytest.raises(ValueError):
            weighted_leverage_scores(np.eye(4), np.array([1, 1, 0.5, 1.0]),
                                     LossSpec.lp(1.0), seed=0)

    def test_weighted_sensitivity(self):
        rng = np.random.default_rng(16)
        a = rng.standard_normal((120, 5))
        w = 1.0 + 6.0 * rng.random(120)
        loss = LossSpec.huber(1.0)
        ws = weighted_leverage_scores(a, w, loss, seed=7)
        for _ in range(100):
            y = rng.standard_normal(5) * rng.uniform(0.1, 5)
            contrib = w * m_value(loss, a @ y)
            ratios = contrib / contrib.sum()
            assert np.all(ratios <= ws.gamma + 1e-12)

    def test_zero_rows_score_zero(self):
        rng = np.random.default_rng(17)
        a = rng.standard_normal((20, 4))
        a[3] = 0.0
        ws = weighted_leverage_scores(a, np.ones(20), LossSpec.lp(1.0), seed=8)
        assert ws.gamma[3] == pytest.approx(0.0, abs=1e-12)

    def test_gauss_estimated_scores_close(self):
        rng = np.random.default_rng(18)
        a = rng.standard_normal((200, 6))
        loss = LossSpec.huber(1.0)
        exact = weighted_leverage_scores(a, None, loss, seed=9)
        est = weighted_leverage_scores(a, None, loss, seed=9, gauss_t=256)
        ratio = est.gamma / exact.gamma
        assert np.median(np.abs(ratio - 1.0)) < 0.2
