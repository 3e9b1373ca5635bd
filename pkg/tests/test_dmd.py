import numpy as np
import pytest

from gearmodes.dmd import (
    DegenerateSnapshotError,
    RankPolicy,
    dmd,
    dmd_matrices,
    mode_speed,
    reconstruct,
)
from gearmodes.timeseries import TimeSeries, delay_embed


def random_linear_system(rng, n, steps, dt=1.0):
    """Diagonalizable system x_{k+1} = A x_k with known spectrum (the oracle)."""
    # complex-conjugate pairs plus real eigenvalues, all inside a stable annulus
    n_pairs = n // 2
    mags = rng.uniform(0.5, 1.05, n_pairs)
    args = rng.uniform(0.05, np.pi - 0.05, n_pairs)
    eigs = [m * np.exp(1j * a) for m, a in zip(mags, args)]
    blocks = []
    for lam in eigs:
        a, b = lam.real, lam.imag
        blocks.append(np.array([[a, -b], [b, a]]))
    if n % 2:
        blocks.append(np.array([[rng.uniform(0.5, 0.99)]]))
    block = np.zeros((n, n))
    at = 0
    for blk in blocks:
        k = blk.shape[0]
        block[at : at + k, at : at + k] = blk
        at += k
    t = rng.standard_normal((n, n))
    while abs(np.linalg.det(t)) < 1e-3:
        t = rng.standard_normal((n, n))
    a_mat = t @ block @ np.linalg.inv(t)
    x = np.empty((n, steps))
    x[:, 0] = rng.standard_normal(n)
    for k in range(1, steps):
        x[:, k] = a_mat @ x[:, k - 1]
    return a_mat, x


def test_constant_signal():
    ts = TimeSeries(np.full(6, 3.7), dt=1.0)
    res = dmd(delay_embed(ts, d=1))
    assert res.n_modes == 1
    assert res.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(res.frequencies[0]) == pytest.approx(0.0, abs=1e-12)
    rec = reconstruct(res, range(4))
    assert np.allclose(rec, 3.7, atol=1e-10)


def test_geometric_decay():
    ts = TimeSeries(0.5 ** np.arange(10), dt=1.0)
    res = dmd(delay_embed(ts, d=1))
    assert res.n_modes == 1
    assert res.eigenvalues[0] == pytest.approx(0.5, abs=1e-12)
    assert res.frequencies[0].real == pytest.approx(np.log(0.5), abs=1e-12)
    rec = reconstruct(res, range(4))
    assert np.allclose(rec[0], [1.0, 0.5, 0.25, 0.125], atol=1e-10)


def test_planar_rotation():
    """Eigendecomposition of the known 2x2 rotation matrix is the oracle."""
    theta = np.pi / 8
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    oracle = np.linalg.eigvals(rot)
    x = np.empty((2, 65))
    x[:, 0] = [1.0, 0.25]
    for k in range(1, 65):
        x[:, k] = rot @ x[:, k - 1]
    res = dmd_matrices(x[:, :-1], x[:, 1:], dt=1.0)
    got = np.sort_complex(res.eigenvalues)
    assert np.allclose(got, np.sort_complex(oracle), atol=1e-10)
    assert np.allclose(
        np.sort(res.frequencies.imag), [-theta, theta], atol=1e-10
    )
    rec = reconstruct(res, [0])
    assert np.allclose(rec[:, 0], x[:, 0], atol=1e-10)


def test_oracle_linear_systems():
    """DMD recovers eig(A) and reconstructs the window for random
    diagonalizable systems."""
    rng = np.random.default_rng(2024)
    for trial in range(10):
        n = int(rng.integers(2, 13))
        steps = int(rng.integers(2 * n + 1, 100))
        a_mat, x = random_linear_system(rng, n, steps)
        res = dmd_matrices(x[:, :-1], x[:, 1:], dt=1.0, policy=RankPolicy.fixed(n))
        got = np.sort_complex(res.eigenvalues)
        want = np.sort_complex(np.linalg.eigvals(a_mat))
        assert np.allclose(got, want, atol=1e-8), f"trial {trial}"
        rec = reconstruct(res, range(steps))
        err = np.linalg.norm(rec - x) / np.linalg.norm(x)
        assert err <= 1e-8, f"trial {trial}: {err}"


def test_imaginary_remainder_small_for_real_data():
    rng = np.random.default_rng(5)
    ts = TimeSeries(rng.standard_normal(120), dt=0.1)
    pair = delay_embed(ts, d=6)
    res = dmd(pair)
    rec, imag_norm = reconstruct(res, range(pair.m), return_imag_norm=True)
    assert imag_norm <= 1e-8 * np.linalg.norm(pair.Y)


def test_conjugate_symmetry():
    rng = np.random.default_rng(6)
    ts = TimeSeries(rng.standard_normal(200), dt=0.05)
    res = dmd(delay_embed(ts, d=10))
    eigs = res.eigenvalues
    conj = np.sort_complex(np.conj(eigs))
    assert np.allclose(np.sort_complex(eigs), conj, atol=1e-10)


def test_delay_necessity_sine():
    """A scalar sine needs d >= 1: the embedded pair recovers e^{+-i w dt}."""
    w, dt = 1.3, 0.1
    t = np.arange(400) * dt
    ts = TimeSeries(np.sin(w * t), dt=dt)
    res = dmd(delay_embed(ts, d=1))
    want = np.sort_complex([np.exp(1j * w * dt), np.exp(-1j * w * dt)])
    assert np.allclose(np.sort_complex(res.eigenvalues), want, atol=1e-8)
    assert np.allclose(
        np.sort(res.frequencies.imag), [-w, w], atol=1e-8
    )
    # d = 0 (raw scalar snapshots) is rejected at embedding time
    with pytest.raises(ValueError):
        delay_embed(ts, d=0)
    # and a raw 1-row pair demonstrably fails: a single real eigenvalue
    # cannot represent an oscillation
    y = ts.samples[None, :]
    res0 = dmd_matrices(y[:, :-1], y[:, 1:], dt=dt)
    assert res0.n_modes == 1
    assert abs(res0.eigenvalues[0].imag) < 1e-12
    rec = reconstruct(res0, range(ts.samples.size))
    assert np.linalg.norm(rec[0] - ts.samples) / np.linalg.norm(ts.samples) > 0.5


def test_rank_policies():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((40, 25))
    s = np.linalg.svd(a, compute_uv=False)

    assert RankPolicy.fixed(5).resolve(s) == (5, False)
    r, clamped = RankPolicy.fixed(200).resolve(s)
    assert r == 25 and clamped

    r, _ = RankPolicy.hard_cap(10).resolve(s)
    assert r == 10

    energies = np.cumsum(s**2) / np.sum(s**2)
    want = int(np.searchsorted(energies, 0.9 - 1e-15) + 1)
    r, _ = RankPolicy.energy(0.9).resolve(s)
    assert r == want
    r, _ = RankPolicy.energy(1.0).resolve(s)
    assert r == 25


def test_sv_floor_always_applied():
    # rank-1 data: the second singular value is rounding noise and must be
    # discarded even under a fixed-rank request
    ts = TimeSeries(0.5 ** np.arange(12), dt=1.0)
    pair = delay_embed(ts, d=1)
    res = dmd(pair, policy=RankPolicy.fixed(2))
    assert res.rank_used == 1
    assert res.rank_clamped


def test_degenerate_snapshot():
    y = np.zeros((4, 6))
    with pytest.raises(DegenerateSnapshotError):
        dmd_matrices(y[:, :-1], y[:, 1:], dt=1.0)


def test_zero_eigenvalue_flagged():
    # nilpotent shift: the propagator has a zero eigenvalue
    y = np.zeros((3, 4))
    y[0, 0] = 1.0  # impulse moving out of the window
    ybar = np.zeros_like(y)
    res = dmd_matrices(y, ybar + 1e-30, dt=1.0, policy=RankPolicy.fixed(1))
    assert res.zero_eigs is not None


def test_mode_speed_values():
    ts = TimeSeries(np.cos(np.arange(300) * 0.3), dt=1.0)
    res = dmd(delay_embed(ts, d=2))
    speeds = [mode_speed(res, k) for k in range(res.n_modes)]
    assert all(s >= 0 for s in speeds)
    # construct known frequencies directly
    from gearmodes.dmd import DmdResult

    base = DmdResult(
        modes=np.zeros((2, 3), complex),
        eigenvalues=np.ones(3, complex),
        frequencies=np.array([0.0, 1j * np.pi / 8, np.log(0.5)], complex),
        amplitudes=np.zeros(3, complex),
        rank_used=3,
        dt=1.0,
        t_start=0.0,
        first_snapshot=np.zeros(2),
    )
    assert mode_speed(base, 0) == 0.0
    assert mode_speed(base, 1) == pytest.approx(1 / 16)
    assert mode_speed(base, 2) == pytest.approx(abs(np.log(0.5)) / (2 * np.pi))


def test_amplitudes_fit_first_snapshot():
    rng = np.random.default_rng(8)
    ts = TimeSeries(rng.standard_normal(80), dt=0.2)
    pair = delay_embed(ts, d=5)
    res = dmd(pair)
    direct = np.linalg.lstsq(res.modes, pair.Y[:, 0].astype(complex), rcond=None)[0]
    assert np.allclose(res.amplitudes, direct, atol=1e-10)
