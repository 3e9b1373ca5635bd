import numpy as np
import pytest

from gearmodes.svd import svd_truncated, triplet_residuals


def low_rank_matrix(rng, rows, cols, rank, tail=0.0):
    u = np.linalg.qr(rng.standard_normal((rows, rank)))[0]
    v = np.linalg.qr(rng.standard_normal((cols, rank)))[0]
    s = np.geomspace(1.0, 1e-3, rank)
    a = (u * s) @ v.T
    if tail:
        a = a + tail * rng.standard_normal((rows, cols))
    return a


def test_exact_matches_lapack():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 30))
    u, s, vh = svd_truncated(a)
    s_ref = np.linalg.svd(a, compute_uv=False)
    assert np.allclose(s, s_ref, rtol=1e-12)
    assert np.allclose((u * s) @ vh, a, atol=1e-10)


def test_tall_qr_path_residuals():
    """Tall matrices go through thin QR; triplets must still satisfy the
    backend contract ||A v - s u|| <= 1e-10 sigma_1."""
    rng = np.random.default_rng(1)
    a = rng.standard_normal((400, 40))
    u, s, vh = svd_truncated(a)
    res = triplet_residuals(a, u, s, vh)
    assert res.max() <= 1e-10 * s[0]


def test_truncation():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((60, 40))
    u, s, vh = svd_truncated(a, rank=5)
    assert u.shape == (60, 5) and s.shape == (5,) and vh.shape == (5, 40)
    s_ref = np.linalg.svd(a, compute_uv=False)
    assert np.allclose(s, s_ref[:5], rtol=1e-12)


def test_randomized_engages_and_meets_contract():
    """On an effectively low-rank matrix the randomized path returns triplets
    within the 1e-10 sigma_1 residual contract."""
    rng = np.random.default_rng(3)
    a = low_rank_matrix(rng, 5000, 600, rank=20)
    u, s, vh = svd_truncated(a, rank=30, rng=np.random.default_rng(42))
    assert u.shape[1] == 30
    res = triplet_residuals(a, u, s, vh)
    # only the numerically meaningful triplets carry the contract
    meaningful = s >= 1e-12 * s[0]
    assert res[meaningful].max() <= 1e-10 * s[0]
    s_ref = np.linalg.svd(a, compute_uv=False)
    assert np.allclose(s[:20], s_ref[:20], rtol=1e-9)


def test_randomized_seed_deterministic():
    rng = np.random.default_rng(4)
    a = low_rank_matrix(rng, 5000, 600, rank=15, tail=1e-9)
    u1, s1, vh1 = svd_truncated(a, rank=20, rng=np.random.default_rng(7))
    u2, s2, vh2 = svd_truncated(a, rank=20, rng=np.random.default_rng(7))
    assert np.array_equal(u1, u2) and np.array_equal(s1, s2) and np.array_equal(vh1, vh2)
    u3, s3, _ = svd_truncated(a, rank=20, rng=np.random.default_rng(8))
    assert not np.array_equal(u1, u3)  # different sketch, same leading subspace
    assert np.allclose(s1[:15], s3[:15], rtol=1e-8)


def test_small_matrices_never_randomized():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((100, 80))
    u1, s1, vh1 = svd_truncated(a, rank=10, rng=np.random.default_rng(0))
    u2, s2, vh2 = svd_truncated(a, rank=10)
    assert np.array_equal(s1, s2)


def test_wide_matrix():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((3, 500))
    u, s, vh = svd_truncated(a)
    assert np.allclose((u * s) @ vh, a, atol=1e-10)
