"""Analytic signal and instantaneous amplitude/phase/frequency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .timeseries import TimeSeries


@dataclass(frozen=True)
class Envelope:
    """Instantaneous amplitude and unwrapped phase of a signal.

    ``amplitude[i]**2 == y_i**2 + H[y]_i**2`` by construction, where H is the
    discrete Hilbert transform.  Instantaneous frequency is available as the
    forward difference of the phase divided by dt.
    """

    amplitude: np.ndarray
    phase: np.ndarray
    dt: float

    def __len__(self) -> int:
        return int(self.amplitude.size)

    def instantaneous_frequency(self) -> np.ndarray:
        """Forward-difference phase rate, rad per time unit (length n-1)."""
        return np.diff(self.phase) / self.dt


def analytic_signal(x: TimeSeries) -> np.ndarray:
    """Discrete analytic signal via the frequency-domain construction.

    Forward transform, zero the negative-frequency half, double the strictly
    positive half, keep DC and Nyquist unscaled, inverse transform.  The real
    part reproduces the input to rounding level.
    """
    if len(x) < 4:
        raise ValueError(f"need at least 4 samples, got {len(x)}")
    return scipy.signal.hilbert(x.samples)


def envelope(x: TimeSeries) -> Envelope:
    """Instantaneous amplitude and unwrapped phase from the analytic signal."""
    z = analytic_signal(x)
    return Envelope(
        amplitude=np.abs(z),
        phase=np.unwrap(np.angle(z)),
        dt=x.dt,
    )


def envelope_of(samples: np.ndarray, dt: float) -> Envelope:
    """Convenience wrapper for raw arrays (residual vectors etc.)."""
    return envelope(TimeSeries(samples, dt=dt))
