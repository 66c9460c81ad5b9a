"""Evidential loss, its gradient, the Fisher determinant and aggregators.

Expected values for the worked cases were recomputed with mpmath
(40-digit trigamma) before being frozen here; gradients are checked
against central finite differences and the O(K) determinant against a
dense LU determinant.
"""

import numpy as np
import pytest

from mevl.belief import DirichletParams
from mevl.losses import (
    IedlConfig,
    WarmupConfig,
    aggregate_unlabeled_iedl,
    aggregate_weighted_labeled,
    cross_entropy_loss,
    dice_loss,
    fisher_det,
    fisher_log_det,
    gaussian_warmup,
    iedl_grad_field,
    iedl_loss_field,
    iedl_voxel_grad,
    iedl_voxel_loss,
    total_objective,
)
from mevl.special import trigamma


def dense_fisher_det(alpha):
    """Oracle: materialize I(alpha) and take the dense determinant."""
    alpha = np.asarray(alpha, dtype=np.float64)
    k = alpha.size
    mat = np.diag(trigamma(alpha)) - trigamma(alpha.sum()) * np.ones((k, k))
    return np.linalg.det(mat)


def fd_gradient(alpha, y, weight, cfg, step=1e-5):
    g = np.zeros_like(alpha)
    for i in range(alpha.size):
        up, dn = alpha.copy(), alpha.copy()
        up[i] += step
        dn[i] -= step
        lu = iedl_loss_field(up[None, :], y[None, :], np.array([weight]), cfg)[0]
        ld = iedl_loss_field(dn[None, :], y[None, :], np.array([weight]), cfg)[0]
        g[i] = (lu - ld) / (2 * step)
    return g


class TestVoxelLoss:
    def test_uniform_alpha_hand_case(self):
        # alpha=(1,1), y=(1,0), lambda=0:
        # 2 * (0.25 + 1/12) * psi_1(1) = 1.0966227112...
        loss = iedl_voxel_loss(
            DirichletParams(alpha=[1.0, 1.0]), [1, 0], 1.0, IedlConfig(0.0)
        )
        assert loss == pytest.approx(1.09662271123, abs=1e-10)

    def test_fisher_term_hand_case(self):
        # alpha=(2,1), y=(1,0), lambda=1: mse 0.381644688949,
        # det I = 0.156527082843, log det = -1.85452623067
        loss = iedl_voxel_loss(
            DirichletParams(alpha=[2.0, 1.0]), [1, 0], 1.0, IedlConfig(1.0)
        )
        assert loss == pytest.approx(2.23617091962, abs=1e-9)
        assert fisher_det(np.array([2.0, 1.0])) == pytest.approx(
            0.156527082843, abs=1e-10
        )

    def test_weight_scales_linearly(self):
        base = iedl_voxel_loss(DirichletParams(alpha=[3.0, 2.0]), [0, 1], 1.0, IedlConfig(0.0))
        double = iedl_voxel_loss(DirichletParams(alpha=[3.0, 2.0]), [0, 1], 2.0, IedlConfig(0.0))
        assert double == pytest.approx(2.0 * base, rel=1e-15)
        # the weight multiplies the Fisher term as well
        g1 = iedl_voxel_grad(DirichletParams(alpha=[3.0, 2.0]), [0, 1], 1.0, IedlConfig(0.5))
        g2 = iedl_voxel_grad(DirichletParams(alpha=[3.0, 2.0]), [0, 1], 2.0, IedlConfig(0.5))
        np.testing.assert_allclose(g2, 2.0 * g1, rtol=1e-14)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            iedl_voxel_loss(DirichletParams(alpha=[1.0, 1.0]), [1, 1], 1.0)
        with pytest.raises(ValueError):
            iedl_loss_field(np.array([[0.5, 1.0]]), np.array([[1.0, 0.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            iedl_voxel_loss(DirichletParams(alpha=[1.0, 1.0]), [1, 0], 0.0)


class TestGradient:
    @pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
    def test_matches_finite_differences(self, rng, lam):
        cfg = IedlConfig(lam)
        for _ in range(60):
            k = int(rng.integers(2, 5))
            alpha = 1.0 + rng.uniform(0.0, 8.0, size=k)
            y = np.zeros(k)
            y[rng.integers(0, k)] = 1.0
            w = float(rng.uniform(0.3, 1.8))
            got = iedl_grad_field(alpha[None, :], y[None, :], np.array([w]), cfg)[0]
            want = fd_gradient(alpha, y, w, cfg)
            err = np.abs(got - want) / np.maximum(1e-8, np.abs(want))
            assert err.max() < 1e-4

    def test_symmetric_alpha_case(self):
        alpha = np.array([2.5, 2.5])
        y = np.array([1.0, 0.0])
        got = iedl_grad_field(alpha[None, :], y[None, :], np.ones(1), IedlConfig(0.0))[0]
        want = fd_gradient(alpha, y, 1.0, IedlConfig(0.0))
        np.testing.assert_allclose(got, want, rtol=1e-4)

    def test_descent_direction(self, rng):
        cfg = IedlConfig(0.1)
        for _ in range(40):
            k = int(rng.integers(2, 5))
            alpha = 1.5 + rng.uniform(0.0, 6.0, size=k)
            y = np.zeros(k)
            y[rng.integers(0, k)] = 1.0
            loss = iedl_loss_field(alpha[None, :], y[None, :], np.ones(1), cfg)[0]
            grad = iedl_grad_field(alpha[None, :], y[None, :], np.ones(1), cfg)[0]
            stepped = alpha - 1e-3 * grad
            new = iedl_loss_field(stepped[None, :], y[None, :], np.ones(1), cfg)[0]
            assert new < loss

    def test_aligned_large_evidence_beats_misaligned(self):
        # at lambda=0 the squared-error part rewards alpha mass on the
        # labeled class
        y = np.array([1.0, 0.0])
        aligned = iedl_loss_field(np.array([[60.0, 1.0]]), y[None, :], np.ones(1), IedlConfig(0.0))[0]
        misaligned = iedl_loss_field(np.array([[1.0, 60.0]]), y[None, :], np.ones(1), IedlConfig(0.0))[0]
        assert aligned < misaligned


class TestFisherDeterminant:
    def test_matches_dense_oracle(self, rng):
        for _ in range(500):
            k = int(rng.integers(2, 6))
            alpha = 1.0 + rng.uniform(0.0, 50.0, size=k)
            got = fisher_det(alpha)
            want = dense_fisher_det(alpha)
            assert got == pytest.approx(want, rel=1e-10)

    def test_positive_and_log_finite(self, rng):
        alpha = 1.0 + rng.uniform(0.0, 100.0, size=(2000, 4))
        logdet = fisher_log_det(alpha)
        assert np.all(np.isfinite(logdet))
        assert np.all(fisher_det(alpha) > 0.0)


class TestReferenceLosses:
    def test_dice_perfect(self, rng):
        y = rng.integers(0, 2, size=100)
        prob = np.eye(2)[y]
        assert dice_loss(prob, y) < 1e-4

    def test_dice_uniform_balanced(self):
        y = np.repeat([0, 1], 50)
        prob = np.full((100, 2), 0.5)
        assert dice_loss(prob, y) == pytest.approx(0.5, abs=1e-4)

    def test_dice_orthogonal(self):
        y = np.zeros(64, dtype=int)
        prob = np.eye(2)[np.ones(64, dtype=int)]
        assert dice_loss(prob, y) == pytest.approx(1.0, abs=1e-3)

    def test_ce_perfect(self):
        y = np.array([0, 1, 1, 0])
        prob = np.eye(2)[y]
        assert cross_entropy_loss(prob, y) <= 1e-11

    def test_ce_uniform_k4(self):
        prob = np.full((50, 4), 0.25)
        y = np.zeros(50, dtype=int)
        assert cross_entropy_loss(prob, y) == pytest.approx(np.log(4.0), rel=1e-12)

    def test_ce_half(self):
        prob = np.full((10, 2), 0.5)
        y = np.ones(10, dtype=int)
        assert cross_entropy_loss(prob, y) == pytest.approx(np.log(2.0), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            dice_loss(np.full((4, 2), 0.5), np.zeros(5, dtype=int))
        with pytest.raises(ValueError):
            cross_entropy_loss(np.full((4, 2), 0.5), np.zeros(5, dtype=int))


class TestAggregation:
    def test_unit_weights_match_plain_mean(self, rng):
        losses = rng.uniform(size=(3, 40))
        got = aggregate_weighted_labeled(losses, np.ones_like(losses))
        assert got == pytest.approx(losses.mean(axis=1).sum(), rel=1e-12)

    def test_single_sample(self):
        assert aggregate_weighted_labeled([1.0, 1.0], [0.5, 1.5]) == pytest.approx(1.0)

    def test_zero_losses(self):
        assert aggregate_weighted_labeled(np.zeros(8), np.ones(8)) == 0.0

    def test_iedl_mean(self):
        assert aggregate_unlabeled_iedl([2.0, 4.0]) == pytest.approx(3.0)
        assert aggregate_unlabeled_iedl(np.zeros(5)) == 0.0
        two = np.array([[1.0, 1.0], [0.5, 1.5]])
        assert aggregate_unlabeled_iedl(two) == pytest.approx(2.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            aggregate_weighted_labeled([1.0, 2.0], [1.0])


class TestWarmup:
    def test_saturates(self):
        cfg = WarmupConfig(lambda_max=3.0, ramp_len=10)
        for q in (10, 11, 500):
            assert gaussian_warmup(q, cfg) == 3.0

    def test_early_value(self):
        cfg = WarmupConfig(lambda_max=1.0, ramp_len=10**6)
        assert gaussian_warmup(1, cfg) == pytest.approx(np.exp(-5.0), rel=1e-4)

    def test_zero_max(self):
        cfg = WarmupConfig(lambda_max=0.0, ramp_len=7)
        assert all(gaussian_warmup(q, cfg) == 0.0 for q in range(1, 20))

    def test_monotone(self):
        cfg = WarmupConfig(lambda_max=2.0, ramp_len=30)
        vals = [gaussian_warmup(q, cfg) for q in range(1, 31)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestTotalObjective:
    def test_all_zero(self):
        bd = total_objective(0, 0, 0, 0, 0, 0, q=1, warmup=WarmupConfig(1.0, 4))
        assert bd.total == 0.0

    def test_four_unit_parts(self):
        # saturated warm-up: 1 + 1 + 1 + 1*1 = 4
        bd = total_objective(1.0, 0.0, 1.0, 0.0, 1.0, 1.0, q=9, warmup=WarmupConfig(1.0, 4))
        assert bd.total == 4.0

    def test_lambda_zero_ignores_iedl(self):
        warm = WarmupConfig(0.0, 4)
        a = total_objective(1.0, 1.0, 1.0, 1.0, 1.0, 123.0, q=2, warmup=warm)
        b = total_objective(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, q=2, warmup=warm)
        assert a.total == b.total

    def test_additive_composition(self, rng):
        warm = WarmupConfig(0.7, 5)
        parts = rng.uniform(size=6)
        base = total_objective(*parts, q=3, warmup=warm)
        delta = 0.25
        bumped = total_objective(parts[0] + delta, *parts[1:], q=3, warmup=warm)
        assert bumped.total - base.total == pytest.approx(delta, abs=1e-10)
        lam = gaussian_warmup(3, warm)
        bumped_i = total_objective(*parts[:5], parts[5] + delta, q=3, warmup=warm)
        assert bumped_i.total - base.total == pytest.approx(lam * delta, abs=1e-10)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            total_objective(np.nan, 0, 0, 0, 0, 0, q=1, warmup=WarmupConfig(1.0, 4))
