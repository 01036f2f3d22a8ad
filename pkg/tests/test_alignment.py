import numpy as np
import pytest

from lrsense import (DimensionError, FactorPair, SingularAlignmentError, align_gradient,
                     alignment_objective, dist, foc_residual, invertible_align, make_ground_truth,
                     procrustes_align, procrustes_distance)

from helpers import hidden_pair
from oracles import (brute_force_scalar_alignment, central_difference,
                     orthogonal_grid_procrustes)


def _random_rotation(rng, r):
    return np.linalg.qr(rng.standard_normal((r, r)))[0]


def test_procrustes_identity(truth):
    R = procrustes_align(truth.factors, truth.factors)
    np.testing.assert_allclose(R, np.eye(truth.r), atol=1e-12)
    assert procrustes_distance(truth.factors, truth.factors) < 1e-12


def test_procrustes_recovers_rotation(truth, rng):
    R0 = _random_rotation(rng, truth.r)
    Z = truth.stack() @ R0.T
    R = procrustes_align(Z, truth.stack())
    assert np.linalg.norm(Z @ R - truth.stack()) <= 1e-10
    np.testing.assert_allclose(R.T @ R, np.eye(truth.r), atol=1e-12)


def test_procrustes_rank_one_sign(rng):
    for _ in range(10):
        Z, Zs = rng.standard_normal((7, 1)), rng.standard_normal((7, 1))
        best = min(np.linalg.norm(s * Z - Zs) for s in (-1.0, 1.0))
        assert procrustes_distance(Z, Zs) == pytest.approx(best, rel=1e-12)


def test_procrustes_rank_two_grid(rng):
    Z, Zs = rng.standard_normal((9, 2)), rng.standard_normal((9, 2))
    # the grid can only overestimate the minimum, by O(step^2)
    grid = orthogonal_grid_procrustes(Z, Zs)
    closed = procrustes_distance(Z, Zs)
    assert closed <= grid + 1e-12
    assert grid - closed < 1e-6


def test_procrustes_shape_mismatch():
    with pytest.raises(DimensionError):
        procrustes_align(np.ones((4, 2)), np.ones((5, 2)))
    with pytest.raises(DimensionError):
        procrustes_align(FactorPair(np.ones((3, 1)), np.ones((2, 1))),
                         FactorPair(np.ones((2, 1)), np.ones((3, 1))))


def test_align_self(truth):
    res = invertible_align(truth.factors, truth)
    assert res.converged
    np.testing.assert_allclose(res.Q, np.eye(truth.r), atol=1e-12)
    assert res.g_value < 1e-24
    assert res.foc_residual < 1e-12


def test_align_exact_ambiguity():
    gt = make_ground_truth(10, 8, 2, 2.0, 4)
    P0 = np.diag([2.0, 0.5])
    fp = FactorPair(gt.Xstar @ np.linalg.inv(P0), gt.Ystar @ P0.T)
    res = invertible_align(fp, gt, tol=1e-12)
    assert res.converged
    assert res.g_value <= 1e-12
    assert np.linalg.norm(res.Q - P0) <= 1e-6


def test_align_rank_one_oracle():
    rng = np.random.default_rng(0)
    gt = make_ground_truth(20, 15, 1, 1.0, 3)
    fp = FactorPair(gt.Xstar + 0.01 * rng.standard_normal(gt.Xstar.shape),
                    gt.Ystar + 0.01 * rng.standard_normal(gt.Ystar.shape))
    p, g = brute_force_scalar_alignment(fp.X[:, 0], fp.Y[:, 0], gt.Xstar[:, 0], gt.Ystar[:, 0])
    res = invertible_align(fp, gt, tol=1e-12)
    assert res.g_value == pytest.approx(g, abs=1e-8)
    assert res.Q[0, 0] == pytest.approx(p, abs=1e-6)
    assert dist(fp, gt, tol=1e-12) == pytest.approx(np.sqrt(g), rel=1e-6)


def test_dist_not_above_procrustes(rng):
    for _ in range(5):
        gt = make_ground_truth(9, 7, 2, 3.0, int(rng.integers(1000)))
        fp, _ = hidden_pair(gt, rng, 0.05)
        assert dist(fp, gt) <= procrustes_distance(fp, gt) + 1e-12


def test_dist_self_is_zero(truth):
    assert dist(truth.factors, truth) < 1e-12


def test_gradient_at_identity_self(truth):
    G = align_gradient(np.eye(truth.r), truth.factors, truth)
    assert np.linalg.norm(G) < 1e-12


def test_gradient_matches_fd_rank_two(rng):
    gt = make_ground_truth(8, 6, 2, 2.0, 1)
    fp, _ = hidden_pair(gt, rng, 0.3)
    P = np.eye(2) + 0.2 * rng.standard_normal((2, 2))
    an = align_gradient(P, fp, gt)
    fd = central_difference(lambda Q: alignment_objective(Q, fp, gt), P)
    np.testing.assert_allclose(fd, an, rtol=1e-5, atol=1e-5 * np.abs(an).max())


def test_gradient_vanishes_at_optimum(rng, truth):
    fp, _ = hidden_pair(truth, rng, 0.02)
    tol = 1e-10
    res = invertible_align(fp, truth, tol=tol)
    assert res.converged
    # grad g(Q) = 2 Q^{-T} F, so its norm is at most 2 ||Q^{-1}|| tol
    bound = 2 * np.linalg.norm(np.linalg.inv(res.Q), 2) * tol
    assert np.linalg.norm(align_gradient(res.Q, fp, truth)) <= bound


def test_result_invariants(rng, truth):
    fp, _ = hidden_pair(truth, rng, 0.05)
    res = invertible_align(fp, truth, tol=1e-9)
    s = np.linalg.svd(res.Q, compute_uv=False)
    assert s[-1] > 1e-12 * s[0]
    assert res.g_value >= 0
    assert res.converged and res.foc_residual <= 1e-9
    assert foc_residual(res.Q, fp, truth) == pytest.approx(res.foc_residual, rel=1e-6, abs=1e-15)
    aligned = res.aligned(fp)
    np.testing.assert_allclose(aligned.product(), fp.product(), atol=1e-12)
    assert np.sum((aligned.stack() - truth.stack()) ** 2) == pytest.approx(res.g_value, rel=1e-9)


def test_objective_not_above_warm_start(rng, truth):
    fp, _ = hidden_pair(truth, rng, 0.1)
    R = procrustes_align(fp, truth)
    res = invertible_align(fp, truth)
    assert res.g_value <= alignment_objective(R, fp, truth) + 1e-12


def test_budget_exhaustion_is_reported(rng, truth):
    fp, _ = hidden_pair(truth, rng, 0.1)
    res = invertible_align(fp, truth, tol=1e-14, max_iter=2)
    assert not res.converged
    assert res.iterations == 2
    assert np.isnan(dist(fp, truth, tol=1e-14, max_iter=2))


def test_singular_warm_start(truth):
    with pytest.raises(SingularAlignmentError):
        invertible_align(truth.factors, truth, P0=np.zeros((3, 3)))
    with pytest.raises(SingularAlignmentError):
        align_gradient(np.diag([1.0, 1.0, 1e-14]), truth.factors, truth)


def test_bad_tolerance(truth):
    with pytest.raises(ValueError):
        invertible_align(truth.factors, truth, tol=0.0)
