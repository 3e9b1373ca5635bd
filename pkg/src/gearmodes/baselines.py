"""Classical comparison analyses: FFT spectrum, time-synchronous averaging,
and empirical mode decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .timeseries import TimeSeries


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum on an angular-frequency axis.

    ``mags`` are raw transform magnitudes ``|X_k|`` (no window, no
    normalization); :func:`spectral_energy` applies the one-sided Parseval
    weighting.  ``markers`` tags the mesh frequency and its harmonics.
    """

    freqs: np.ndarray
    mags: np.ndarray
    markers: tuple[tuple[int, float], ...]
    dt: float
    n_samples: int

    def marker_bin_magnitudes(self) -> np.ndarray:
        """Magnitude at the bin nearest each marker frequency."""
        idx = np.searchsorted(self.freqs, [w for _, w in self.markers])
        idx = np.clip(idx, 0, len(self.freqs) - 1)
        # searchsorted gives the right neighbour; pick the closer of the two
        left = np.clip(idx - 1, 0, len(self.freqs) - 1)
        pick = np.where(
            np.abs(self.freqs[left] - [w for _, w in self.markers])
            <= np.abs(self.freqs[idx] - [w for _, w in self.markers]),
            left,
            idx,
        )
        return self.mags[pick]


def fft_spectrum(x: TimeSeries, omega_mesh: float = 0.5, n_markers: int = 10) -> Spectrum:
    """One-sided magnitude spectrum (no windowing) with mesh-harmonic markers.

    The frequency axis is angular (rad per time unit), from 0 up to the
    Nyquist rate pi/dt; markers are placed at j * omega_mesh for
    j = 1..n_markers.
    """
    n = len(x)
    if n < 8:
        raise ValueError(f"need at least 8 samples, got {n}")
    mags = np.abs(np.fft.rfft(x.samples))
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n, d=x.dt)
    markers = tuple((j, j * omega_mesh) for j in range(1, n_markers + 1))
    return Spectrum(freqs=freqs, mags=mags, markers=markers, dt=x.dt, n_samples=n)


def spectral_energy(spec: Spectrum) -> float:
    """Signal energy sum(x^2) dt recovered from the one-sided spectrum."""
    weights = np.full(len(spec.mags), 2.0)
    weights[0] = 1.0
    if spec.n_samples % 2 == 0:
        weights[-1] = 1.0
    return float(np.sum(weights * spec.mags**2) * spec.dt / spec.n_samples)


def tsa(x: TimeSeries, period: float, n_averages: int | None = None) -> TimeSeries:
    """Time synchronous average: mean of the signal over shifted copies.

    Output sample ``s`` is ``mean_n x(t0 + s dt + n * period)`` for
    ``n = 0..N-1``; non-integer sample offsets are linearly interpolated.  If
    ``n_averages`` is omitted, the maximal number of whole periods that fits
    is used.  The output covers one period (``round(period / dt)`` samples).
    """
    if period < 2 * x.dt:
        raise ValueError(f"period {period:g} must be at least 2 dt = {2 * x.dt:g}")
    n_out = round(period / x.dt)
    n = len(x)
    max_pos = n - 1  # highest valid fractional sample position
    # last queried position is (N-1) * period/dt + (n_out - 1)
    limit = (max_pos - (n_out - 1)) * x.dt / period
    n_max = int(np.floor(limit)) + 1
    if n_averages is None:
        n_averages = n_max
        if n_averages < 1:
            raise ValueError(f"signal shorter than one period of {period:g}")
    elif n_averages < 1 or n_averages > n_max:
        raise ValueError(
            f"n_averages {n_averages} needs {((n_averages - 1) * period / x.dt + n_out - 1) * x.dt:g} "
            f"time units of data, signal has {x.duration:g}"
        )
    base = np.arange(n_out, dtype=float)
    acc = np.zeros(n_out)
    positions = np.arange(n, dtype=float)
    for k in range(n_averages):
        offset = k * period / x.dt
        acc += np.interp(base + offset, positions, x.samples)
    return TimeSeries(acc / n_averages, dt=x.dt, t0=x.t0, unit_label=x.unit_label)


@dataclass(frozen=True)
class ImfSet:
    """Intrinsic mode functions plus the final residue.

    The components sum back to the input signal (construction identity).
    """

    imfs: tuple[TimeSeries, ...]
    residue: TimeSeries
    sift_counts: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.imfs)


def _local_extrema(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima."""
    dy = np.diff(y)
    sign = np.sign(dy)
    # collapse zero slopes onto the previous trend so flat tops count once
    for i in range(1, len(sign)):
        if sign[i] == 0:
            sign[i] = sign[i - 1]
    turns = np.diff(sign)
    maxima = np.where(turns < 0)[0] + 1
    minima = np.where(turns > 0)[0] + 1
    return maxima, minima


def _mirrored_spline(idx: np.ndarray, vals: np.ndarray, n: int) -> np.ndarray:
    """Cubic-spline envelope through extrema, mirror-extended at both ends."""
    left_i = -idx[1::-1] if len(idx) >= 2 else -idx[::-1]
    left_v = vals[1::-1] if len(idx) >= 2 else vals[::-1]
    right_i = 2 * (n - 1) - idx[-1:-3:-1]
    right_v = vals[-1:-3:-1]
    xi = np.concatenate([left_i, idx, right_i])
    yi = np.concatenate([left_v, vals, right_v])
    xi, keep = np.unique(xi, return_index=True)
    yi = yi[keep]
    return CubicSpline(xi, yi)(np.arange(n))


def zero_crossings(y: np.ndarray) -> int:
    s = np.sign(y)
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))


def emd(
    x: TimeSeries,
    sd_threshold: float = 0.25,
    max_sifts: int = 10,
    max_imfs: int = 12,
) -> ImfSet:
    """Empirical mode decomposition by standard sifting.

    Each sifting round interpolates upper/lower extrema envelopes with
    mirror-extended cubic splines and subtracts their mean; it stops when the
    normalized squared change between consecutive siftings drops below
    ``sd_threshold`` or after ``max_sifts`` rounds.  Extraction stops when
    the residue is monotone (fewer than 4 extrema) or ``max_imfs`` is
    reached.  Degenerate inputs yield zero IMFs and residue equal to the
    input.
    """
    if len(x) < 16:
        raise ValueError(f"need at least 16 samples, got {len(x)}")
    residue = x.samples.astype(float).copy()
    n = len(residue)
    imfs: list[TimeSeries] = []
    counts: list[int] = []

    for _ in range(max_imfs):
        maxima, minima = _local_extrema(residue)
        if len(maxima) + len(minima) < 4 or len(maxima) < 2 or len(minima) < 2:
            break
        h = residue.copy()
        sifts = 0
        for _ in range(max_sifts):
            maxima, minima = _local_extrema(h)
            if len(maxima) < 2 or len(minima) < 2:
                break
            upper = _mirrored_spline(maxima, h[maxima], n)
            lower = _mirrored_spline(minima, h[minima], n)
            mean = 0.5 * (upper + lower)
            h_new = h - mean
            sifts += 1
            denom = float(np.sum(h * h))
            if denom == 0.0:
                h = h_new
                break
            sd = float(np.sum((h - h_new) ** 2)) / denom
            h = h_new
            if sd < sd_threshold:
                break
        if sifts == 0:
            break
        imfs.append(TimeSeries(h, dt=x.dt, t0=x.t0))
        counts.append(sifts)
        residue = residue - h

    return ImfSet(
        imfs=tuple(imfs),
        residue=TimeSeries(residue, dt=x.dt, t0=x.t0),
        sift_counts=tuple(counts),
    )
