import math

import numpy as np
import pytest

from gearmodes.timeseries import (
    DelayPair,
    InsufficientSamplesError,
    NonuniformSamplingError,
    TimeSeries,
    angle_to_index,
    delay_embed,
    index_to_angle,
    load_csv,
    save_csv,
)


def test_timeseries_validation():
    with pytest.raises(InsufficientSamplesError):
        TimeSeries([1.0], dt=0.1)
    with pytest.raises(ValueError):
        TimeSeries([1.0, np.nan], dt=0.1)
    with pytest.raises(ValueError):
        TimeSeries([1.0, 2.0], dt=0.0)
    ts = TimeSeries([1.0, 2.0, 3.0], dt=0.5)
    assert len(ts) == 3
    assert ts.duration == 1.0
    assert np.allclose(ts.times(), [0.0, 0.5, 1.0])


def test_load_csv_two_columns(tmp_path):
    p = tmp_path / "sig.csv"
    p.write_text("0,1.0\n0.015,2.0\n0.030,3.0\n")
    ts = load_csv(p)
    assert np.array_equal(ts.samples, [1.0, 2.0, 3.0])
    assert ts.dt == pytest.approx(0.015)


def test_load_csv_one_column_override(tmp_path):
    p = tmp_path / "sig.csv"
    p.write_text("1\n2\n3\n")
    ts = load_csv(p, dt_override=0.5)
    assert ts.dt == 0.5
    with pytest.raises(ValueError):
        load_csv(p)  # override required


def test_load_csv_nonuniform(tmp_path):
    p = tmp_path / "sig.csv"
    p.write_text("0,1\n0.015,2\n0.031,3\n")  # 0.016 gap vs 0.015
    with pytest.raises(NonuniformSamplingError):
        load_csv(p)


def test_load_csv_header_and_crlf(tmp_path):
    p = tmp_path / "sig.csv"
    p.write_text("time,value\r\n0,1\r\n0.1,2\r\n0.2,3\r\n")
    ts = load_csv(p)
    assert len(ts) == 3 and ts.dt == pytest.approx(0.1)


def test_load_csv_override_conflict(tmp_path):
    p = tmp_path / "sig.csv"
    p.write_text("0,1\n0.015,2\n0.030,3\n")
    with pytest.raises(ValueError):
        load_csv(p, dt_override=0.02)
    # matching override is accepted, time column authoritative
    ts = load_csv(p, dt_override=0.015)
    assert ts.dt == pytest.approx(0.015)


def test_load_csv_nonnumeric_row(tmp_path):
    p = tmp_path / "sig.csv"
    p.write_text("0,1\nbroken,2\n0.2,3\n")
    with pytest.raises(ValueError, match="line 2"):
        load_csv(p)


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    ts = TimeSeries(rng.standard_normal(50), dt=0.015)
    p = tmp_path / "round.csv"
    save_csv(p, ts)
    back = load_csv(p)
    assert np.array_equal(back.samples, ts.samples)
    assert back.dt == pytest.approx(ts.dt, rel=1e-12)


def test_delay_embed_indexing_identity():
    ts = TimeSeries([0.0, 1.0, 2.0, 3.0, 4.0], dt=1.0)
    pair = delay_embed(ts, d=2, m=2)
    assert np.array_equal(pair.Y, np.array([[0, 1], [1, 2], [2, 3]], float))
    assert np.array_equal(pair.Ybar, np.array([[1, 2], [2, 3], [3, 4]], float))
    # column j of Ybar equals column j+1 of Y
    assert np.array_equal(pair.Ybar[:, 0], pair.Y[:, 1])


def test_delay_embed_maximal_m():
    ts = TimeSeries([0.0, 1.0, 2.0, 3.0, 4.0], dt=1.0)
    pair = delay_embed(ts, d=2)
    assert pair.m == 2


def test_delay_embed_large_hankel_is_view():
    # 40201 samples with delay 32000 leaves m = 8200 columns; the matrices
    # must be strided views, not 2 GB copies
    ts = TimeSeries(np.arange(40201, dtype=float), dt=0.015)
    pair = delay_embed(ts, d=32000)
    assert pair.m == 40201 - 32001 == 8200
    assert pair.Y.base is not None  # a view
    assert pair.Y[5, 7] == 12.0
    assert pair.Ybar[0, pair.m - 1] == pair.m


def test_delay_embed_errors():
    ts = TimeSeries([0.0, 1.0, 2.0], dt=1.0)
    with pytest.raises(InsufficientSamplesError):
        delay_embed(ts, d=2)  # needs d + 2 = 4 samples
    with pytest.raises(InsufficientSamplesError):
        delay_embed(ts, d=1, m=5)
    with pytest.raises(ValueError):
        delay_embed(ts, d=0)  # scalar snapshots are rejected


def test_hankel_consistency():
    """First row of Y plus the tail read from Ybar's last column rebuilds the
    exact sample stream samples[0..d+m]."""
    rng = np.random.default_rng(3)
    samples = rng.standard_normal(40)
    ts = TimeSeries(samples, dt=0.5)
    pair = delay_embed(ts, d=7, m=20)
    rebuilt = np.concatenate([pair.Y[0, :], pair.Ybar[:, -1]])
    assert np.array_equal(rebuilt, samples[: pair.d + pair.m + 1])


def test_snapshot_accessor():
    ts = TimeSeries(np.arange(10, dtype=float), dt=1.0)
    pair = delay_embed(ts, d=3)
    assert np.array_equal(pair.snapshot(0), [0, 1, 2, 3])
    assert np.array_equal(pair.snapshot(pair.m), np.arange(pair.m, pair.m + 4))
    with pytest.raises(IndexError):
        pair.snapshot(pair.m + 1)
    snaps = pair.snapshots()
    assert snaps.shape == (4, pair.m + 1)
    assert np.array_equal(snaps[:, 2], pair.snapshot(2))


def test_angle_to_index_values():
    # oracle: round(angle * pi/180 / (omega * dt)) computed independently
    omega, dt = 0.03125, 0.015
    expected_full = round(2 * math.pi / (omega * dt))
    assert expected_full == 13404
    assert angle_to_index(360.0, omega, dt) == expected_full
    assert angle_to_index(0.0, omega, dt) == 0
    expected_67 = round(67.0 * math.pi / 180.0 / (omega * dt))
    assert expected_67 == 2495  # 2494.66 rounds up
    assert angle_to_index(67.0, omega, dt) == expected_67


def test_angle_to_index_monotone():
    omega, dt = 0.03125, 0.015
    angles = np.linspace(0, 1080, 500)
    idx = [angle_to_index(a, omega, dt) for a in angles]
    assert all(b >= a for a, b in zip(idx, idx[1:]))


def test_index_to_angle_inverse():
    omega, dt = 0.03125, 0.015
    i = angle_to_index(431.7, omega, dt)
    assert index_to_angle(i, omega, dt) == pytest.approx(431.7, abs=0.02)


def test_delay_pair_validation():
    with pytest.raises(ValueError):
        DelayPair(np.arange(10.0), d=0, m=2, dt=1.0)
    with pytest.raises(InsufficientSamplesError):
        DelayPair(np.arange(4.0), d=2, m=2, dt=1.0)
