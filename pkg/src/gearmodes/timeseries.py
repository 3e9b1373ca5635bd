"""Scalar time series, CSV ingestion, and Hankel (time-delay) embedding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

#: Relative tolerance on time-column gaps when inferring the sample interval.
UNIFORM_RTOL = 1e-6


class NonuniformSamplingError(ValueError):
    """Raised when a CSV time column is not uniformly spaced within tolerance."""


class InsufficientSamplesError(ValueError):
    """Raised when a signal is too short for the requested operation."""


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal.

    Parameters
    ----------
    samples : array-like
        Signal values, at least two, all finite.
    dt : float
        Sample interval (dimensionless time units or seconds), > 0.
    t0 : float
        Time of the first sample.
    unit_label : str
        Free-form label for the value axis (metadata only).
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0
    unit_label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size < 2:
            raise InsufficientSamplesError(
                f"need at least 2 samples, got {samples.size}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must all be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Time span from the first to the last sample."""
        return (len(self) - 1) * self.dt

    def times(self) -> np.ndarray:
        """Sample times t0 + k*dt."""
        return self.t0 + self.dt * np.arange(len(self))


@dataclass(frozen=True)
class DelayPair:
    """Pair of overlapping Hankel snapshot matrices built from a scalar signal.

    ``Y`` holds delay vectors of ``d + 1`` consecutive samples starting at
    offsets ``0 .. m-1``; ``Ybar`` holds the same vectors shifted one step
    forward.  Both are exposed as zero-copy strided views on the underlying
    sample array; ``Y[r, c] == samples[c + r]`` and
    ``Ybar[r, c] == samples[c + 1 + r]``.
    """

    samples: np.ndarray
    d: int
    m: int
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if self.d < 1:
            raise ValueError(f"delay length d must be a positive integer, got {self.d}")
        if self.m < 1:
            raise ValueError(f"column count m must be a positive integer, got {self.m}")
        if samples.size < self.d + self.m + 1:
            raise InsufficientSamplesError(
                f"need at least d + m + 1 = {self.d + self.m + 1} samples, "
                f"got {samples.size}"
            )
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n_rows(self) -> int:
        return self.d + 1

    @property
    def Y(self) -> np.ndarray:
        """(d+1, m) matrix of delay vectors at offsets 0 .. m-1 (strided view)."""
        return sliding_window_view(self.samples, self.d + 1)[: self.m].T

    @property
    def Ybar(self) -> np.ndarray:
        """(d+1, m) matrix of delay vectors at offsets 1 .. m (strided view)."""
        return sliding_window_view(self.samples, self.d + 1)[1 : self.m + 1].T

    def snapshot(self, i: int) -> np.ndarray:
        """Delay vector at offset ``i`` (valid for 0 <= i <= m)."""
        if not 0 <= i <= self.m:
            raise IndexError(f"snapshot index {i} out of range 0..{self.m}")
        return self.samples[i : i + self.d + 1]

    def snapshots(self) -> np.ndarray:
        """All m + 1 delay vectors as a (d+1, m+1) strided view."""
        return sliding_window_view(self.samples, self.d + 1)[: self.m + 1].T


def delay_embed(series: TimeSeries, d: int, m: int | None = None) -> DelayPair:
    """Build the overlapping Hankel snapshot pair for ``series``.

    Parameters
    ----------
    series : TimeSeries
    d : int
        Delay length; each delay vector stacks d + 1 consecutive samples.
    m : int, optional
        Number of columns.  Defaults to the maximum the data supports,
        ``len(series) - (d + 1)``.
    """
    n = len(series)
    if d < 1:
        raise ValueError(f"delay length d must be a positive integer, got {d}")
    if n < d + 2:
        raise InsufficientSamplesError(
            f"need at least d + 2 = {d + 2} samples for delay embedding, got {n}"
        )
    if m is None:
        m = n - (d + 1)
    if m < 1:
        raise ValueError(f"column count m must be a positive integer, got {m}")
    if d + m + 1 > n:
        raise InsufficientSamplesError(
            f"d + m + 1 = {d + m + 1} exceeds the {n} available samples"
        )
    return DelayPair(series.samples, d=d, m=m, dt=series.dt, t0=series.t0)


def angle_to_index(angle_deg: float, omega_shaft: float, dt: float) -> int:
    """Sample index closest to a given shaft rotation angle.

    ``omega_shaft`` is the shaft angular frequency in radians per time unit.
    Returns ``round(angle_deg * (pi/180) / (omega_shaft * dt))``, floored at 0.
    """
    if omega_shaft <= 0 or dt <= 0:
        raise ValueError("omega_shaft and dt must be positive")
    idx = round(math.radians(angle_deg) / (omega_shaft * dt))
    return max(0, int(idx))


def index_to_angle(index: int, omega_shaft: float, dt: float) -> float:
    """Shaft rotation angle in degrees at a given sample index."""
    return math.degrees(index * dt * omega_shaft)


def _parse_row(fields: list[str], lineno: int) -> tuple[float, ...]:
    try:
        return tuple(float(f) for f in fields)
    except ValueError:
        raise ValueError(f"non-numeric row at line {lineno}: {fields!r}") from None


def load_csv(path: str | Path, dt_override: float | None = None) -> TimeSeries:
    """Load a signal from CSV.

    Accepts one column (values) or two columns (time, value), with an
    optional ``time,value`` / ``value`` header.  With two columns the sample
    interval is inferred from the first two times and every gap must match it
    to a relative tolerance of 1e-6.  With one column ``dt_override`` is
    required.  If both a time column and ``dt_override`` are present they
    must agree; the time column is authoritative and a mismatch is an error.
    """
    path = Path(path)
    text = path.read_text()
    rows: list[tuple[float, ...]] = []
    ncols: int | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if lineno == 1 and any(not _is_number(f) for f in fields):
            # Optional header line; anything non-numeric on line 1 is a header.
            continue
        row = _parse_row(fields, lineno)
        if ncols is None:
            ncols = len(row)
        elif len(row) != ncols:
            raise ValueError(
                f"inconsistent column count at line {lineno}: "
                f"expected {ncols}, got {len(row)}"
            )
        rows.append(row)
    if ncols not in (1, 2):
        raise ValueError(f"{path}: expected 1 or 2 columns, got {ncols}")
    if len(rows) < 2:
        raise InsufficientSamplesError(f"{path}: need at least 2 samples, got {len(rows)}")

    if ncols == 1:
        if dt_override is None:
            raise ValueError(f"{path}: one-column file requires dt_override")
        if dt_override <= 0:
            raise ValueError(f"dt_override must be positive, got {dt_override}")
        values = np.array([r[0] for r in rows])
        return TimeSeries(values, dt=float(dt_override))

    times = np.array([r[0] for r in rows])
    values = np.array([r[1] for r in rows])
    dt = times[1] - times[0]
    if dt <= 0:
        raise NonuniformSamplingError(f"{path}: time column must be strictly increasing")
    gaps = np.diff(times)
    worst = np.max(np.abs(gaps - dt))
    if worst > UNIFORM_RTOL * abs(dt):
        bad = int(np.argmax(np.abs(gaps - dt)))
        raise NonuniformSamplingError(
            f"{path}: nonuniform sampling, gap {gaps[bad]:g} at row {bad + 2} "
            f"differs from dt {dt:g} by more than rtol {UNIFORM_RTOL:g}"
        )
    if dt_override is not None and abs(dt_override - dt) > UNIFORM_RTOL * abs(dt):
        raise ValueError(
            f"{path}: dt_override {dt_override:g} conflicts with time column dt {dt:g}"
        )
    return TimeSeries(values, dt=float(dt), t0=float(times[0]))


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_csv(path: str | Path, series: TimeSeries, header: bool = True) -> None:
    """Write a signal as two-column ``time,value`` CSV (round-trip exact)."""
    lines = []
    if header:
        lines.append("time,value")
    dt, t0 = series.dt, series.t0
    for k, v in enumerate(series.samples):
        lines.append(f"{t0 + k * dt!r},{float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
