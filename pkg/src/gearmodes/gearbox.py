"""Nonlinear two-gear vibration simulator.

Integrates the dimensionless equation of motion

    x'' + 2 z x' + K(t) B(x) = F_m + F_te(t) + F_var(t)

with dead-zone backlash B, Fourier mesh stiffness K (optionally weakened over
a short shaft-angle window each revolution to model a cracked tooth),
periodic internal excitation from the static transmission error, and a
stochastic wind-torque term F_var.  The output is the acceleration x''
sampled on a fixed grid, as a gearbox-mounted accelerometer would deliver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .timeseries import TimeSeries

#: Synthetic wind presets: (sigma, tau) of the stationary torque fluctuation
#: process, in dimensionless force / time units.  Artifact defaults tuned so
#: the faster preset is visibly rougher, not measured constants.
WIND_PRESETS: dict[str, tuple[float, float]] = {
    "5mps": (0.02, 50.0),
    "13mps": (0.06, 30.0),
}


class StiffFailureError(RuntimeError):
    """Adaptive step size underflowed; integration cannot proceed."""

    def __init__(self, t: float):
        super().__init__(f"step size underflow at t = {t:g}")
        self.t = t


@dataclass(frozen=True)
class CrackSpec:
    """Cracked-tooth model: fractional mesh-stiffness drop over a shaft-angle
    window centered at ``center_deg``, recurring every revolution."""

    stiffness_drop: float = 0.13
    window_deg: float = 5.0
    center_deg: float = 67.0

    def __post_init__(self):
        if not 0.0 < self.stiffness_drop < 1.0:
            raise ValueError(f"stiffness_drop must be in (0, 1), got {self.stiffness_drop}")
        if not 0.0 < self.window_deg < 360.0:
            raise ValueError(f"window_deg must be in (0, 360), got {self.window_deg}")


@dataclass(frozen=True)
class WindSpec:
    """External-torque fluctuation source.

    ``kind`` is one of ``none`` (steady load), ``synthetic`` (seeded
    Ornstein-Uhlenbeck sequence; either a named preset or custom sigma/tau),
    or ``external`` (torque series loaded from CSV and nondimensionalized
    with normalization constant ``normalization``).
    """

    kind: str = "none"
    preset: str | None = None
    sigma: float | None = None
    tau: float | None = None
    path: str | None = None
    normalization: float = 10.0

    def __post_init__(self):
        if self.kind not in ("none", "synthetic", "external"):
            raise ValueError(f"unknown wind kind {self.kind!r}")
        if self.kind == "synthetic":
            if self.preset is not None:
                if self.preset not in WIND_PRESETS:
                    raise ValueError(
                        f"unknown wind preset {self.preset!r}; "
                        f"choose from {sorted(WIND_PRESETS)}"
                    )
            elif self.sigma is None or self.tau is None:
                raise ValueError("synthetic wind needs a preset or sigma and tau")
            if self.sigma is not None and self.sigma < 0:
                raise ValueError("sigma must be >= 0")
            if self.tau is not None and self.tau <= 0:
                raise ValueError("tau must be > 0")
        if self.kind == "external":
            if not self.path:
                raise ValueError("external wind needs a torque CSV path")
            if self.normalization <= 0:
                raise ValueError("normalization must be positive")

    @classmethod
    def none(cls) -> "WindSpec":
        return cls(kind="none")

    @classmethod
    def synthetic(cls, preset: str) -> "WindSpec":
        return cls(kind="synthetic", preset=preset)

    @classmethod
    def synthetic_custom(cls, sigma: float, tau: float) -> "WindSpec":
        return cls(kind="synthetic", sigma=float(sigma), tau=float(tau))

    @classmethod
    def external(cls, path: str, normalization: float = 10.0) -> "WindSpec":
        return cls(kind="external", path=str(path), normalization=float(normalization))

    def resolved_sigma_tau(self) -> tuple[float, float]:
        if self.kind != "synthetic":
            raise ValueError("sigma/tau only defined for synthetic wind")
        if self.preset is not None:
            return WIND_PRESETS[self.preset]
        return float(self.sigma), float(self.tau)


@dataclass(frozen=True)
class GearboxConfig:
    """All simulation parameters (dimensionless unless noted).

    Defaults reproduce the reference parameter set: mean force 0.1,
    transmission-error harmonics (0.01, 0.004, 0.002), stiffness harmonics
    (0.2, 0.1, 0.05), damping 0.05, mesh frequency 0.5, 16 teeth.  The shaft
    frequency is ``Omega_mesh / n_teeth``.
    """

    F_m: float = 0.1
    F_te: tuple[float, ...] = (0.01, 0.004, 0.002)
    K_harmonics: tuple[float, ...] = (0.2, 0.1, 0.05)
    z: float = 0.05
    Omega_mesh: float = 0.5
    n_teeth: int = 16
    dt_out: float = 0.015
    revolutions: float = 3.0
    crack: CrackSpec | None = None
    wind: WindSpec = field(default_factory=WindSpec.none)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "F_te", tuple(float(v) for v in self.F_te))
        object.__setattr__(self, "K_harmonics", tuple(float(v) for v in self.K_harmonics))
        if sum(abs(k) for k in self.K_harmonics) >= 1.0:
            raise ValueError("sum of |K_j| must stay below 1 to keep the stiffness positive")
        if self.Omega_mesh <= 0:
            raise ValueError("Omega_mesh must be positive")
        if self.n_teeth < 1:
            raise ValueError("n_teeth must be >= 1")
        if self.dt_out <= 0:
            raise ValueError("dt_out must be positive")
        if self.revolutions <= 0:
            raise ValueError("revolutions must be positive")
        if self.z < 0:
            raise ValueError("damping z must be >= 0")

    @property
    def Omega_shaft(self) -> float:
        return self.Omega_mesh / self.n_teeth

    def n_output_samples(self) -> int:
        """floor(revolutions * 2 pi / (Omega_shaft * dt_out)) + 1."""
        span = self.revolutions * 2.0 * math.pi / self.Omega_shaft
        return int(math.floor(span / self.dt_out)) + 1


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters of the gear pair (SI units)."""

    I1: float = 0.00115
    I2: float = 0.00115
    r1: float = 0.05
    r2: float = 0.05
    m_c: float = 0.23
    K_m_bar: float = 3.8e8
    b_g: float = 1.0e-4
    C_bar: float = 2.0 * 0.05 * math.sqrt(0.23 * 3.8e8)

    def __post_init__(self):
        for name in ("I1", "I2", "r1", "r2", "m_c", "K_m_bar", "b_g", "C_bar"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def derived_equivalent_mass(self) -> float:
        """Equivalent mass I1 I2 / (I1 r2^2 + I2 r1^2) from the inertias."""
        return self.I1 * self.I2 / (self.I1 * self.r2**2 + self.I2 * self.r1**2)


@dataclass(frozen=True)
class DimensionlessScales:
    """Conversion factors between physical and dimensionless quantities."""

    w_n: float
    z: float
    length_scale: float
    force_scale: float

    def displacement(self, x_bar: float) -> float:
        return x_bar / self.length_scale

    def time(self, t_bar: float) -> float:
        return self.w_n * t_bar

    def frequency(self, omega_bar: float) -> float:
        return omega_bar / self.w_n


def nondimensionalize(p: PhysicalParams) -> DimensionlessScales:
    """Natural frequency, damping ratio, and scale factors from physical data.

    w_n = sqrt(K_m / m_c), z = C / (2 sqrt(m_c K_m)), displacements scale by
    the half-backlash, time by w_n, forces by m_c * b_g * w_n^2.
    """
    w_n = math.sqrt(p.K_m_bar / p.m_c)
    z = p.C_bar / (2.0 * math.sqrt(p.m_c * p.K_m_bar))
    return DimensionlessScales(
        w_n=w_n,
        z=z,
        length_scale=p.b_g,
        force_scale=p.m_c * p.b_g * w_n**2,
    )


def backlash(x):
    """Dead-zone nonlinearity: x-1 for x >= 1, 0 inside (-1, 1), x+1 for x <= -1."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, x - 1.0, np.where(x <= -1.0, x + 1.0, 0.0))
    return float(out) if out.ndim == 0 else out


def _crack_window_mask(t, omega_shaft: float, crack: CrackSpec):
    """True where the shaft angle falls inside [center - w/2, center + w/2)."""
    deg = np.degrees(np.asarray(t, dtype=float) * omega_shaft)
    delta = np.mod(deg - crack.center_deg + 180.0, 360.0) - 180.0
    half = 0.5 * crack.window_deg
    return (delta >= -half) & (delta < half)


def mesh_stiffness(t, cfg: GearboxConfig):
    """Dimensionless mesh stiffness 1 - sum_j K_j cos(j Omega_mesh t), with the
    cracked-tooth drop applied inside the configured shaft-angle window."""
    t = np.asarray(t, dtype=float)
    k = np.ones_like(t)
    for j, kj in enumerate(cfg.K_harmonics, start=1):
        k = k - kj * np.cos(j * cfg.Omega_mesh * t)
    if cfg.crack is not None:
        mask = _crack_window_mask(t, cfg.Omega_shaft, cfg.crack)
        k = np.where(mask, k * (1.0 - cfg.crack.stiffness_drop), k)
    return float(k) if k.ndim == 0 else k


def internal_excitation(t, cfg: GearboxConfig):
    """Transmission-error forcing -sum_j F_tej (j Omega)^2 cos(j Omega t)."""
    t = np.asarray(t, dtype=float)
    f = np.zeros_like(t)
    for j, fj in enumerate(cfg.F_te, start=1):
        w = j * cfg.Omega_mesh
        f = f - fj * w * w * np.cos(w * t)
    return float(f) if f.ndim == 0 else f


def wind_force(
    n: int,
    dt: float,
    spec: WindSpec,
    seed: int,
    physical: PhysicalParams | None = None,
) -> np.ndarray:
    """Per-sample external forcing F_var, one value per output sample.

    ``none`` yields zeros.  ``synthetic`` draws a stationary
    Ornstein-Uhlenbeck sequence v[k+1] = v[k] e^(-dt/tau)
    + sigma sqrt(1 - e^(-2 dt/tau)) g[k] from the seeded generator, with v[0]
    from the stationary law.  ``external`` loads a ``time_s,torque_nm`` CSV,
    removes its mean, divides by N * r1 and the force scale, and linearly
    interpolates onto the output grid (the CSV time axis is taken in
    simulation time units).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec.kind == "none":
        return np.zeros(n)
    if spec.kind == "synthetic":
        sigma, tau = spec.resolved_sigma_tau()
        rng = np.random.default_rng(seed)
        g = rng.standard_normal(n)
        a = math.exp(-dt / tau)
        b = sigma * math.sqrt(1.0 - a * a)
        v = np.empty(n)
        v[0] = sigma * g[0]
        for k in range(1, n):
            v[k] = a * v[k - 1] + b * g[k]
        return v
    # external torque series
    path = Path(spec.path)
    if not path.exists():
        raise FileNotFoundError(f"external torque file not found: {path}")
    times, torque = _load_torque_csv(path)
    span_needed = (n - 1) * dt
    if times[-1] - times[0] < span_needed:
        raise ValueError(
            f"external torque series spans {times[-1] - times[0]:g} time units, "
            f"need at least {span_needed:g}"
        )
    if physical is None:
        physical = PhysicalParams()
    scales = nondimensionalize(physical)
    fluct = torque - float(np.mean(torque))
    f_var = fluct / (spec.normalization * physical.r1 * scales.force_scale)
    grid = times[0] + dt * np.arange(n)
    return np.interp(grid, times, f_var)


def _load_torque_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    times = []
    torque = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if lineno == 1:
            try:
                float(fields[0])
            except ValueError:
                continue  # header
        if len(fields) != 2:
            raise ValueError(f"{path}: expected time_s,torque_nm at line {lineno}")
        times.append(float(fields[0]))
        torque.append(float(fields[1]))
    if len(times) < 2:
        raise ValueError(f"{path}: torque series too short ({len(times)} rows)")
    t = np.asarray(times)
    if np.any(np.diff(t) <= 0):
        raise ValueError(f"{path}: torque time column must be strictly increasing")
    return t, np.asarray(torque)


# Dormand-Prince 5(4) coefficients.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def _make_acceleration(cfg: GearboxConfig):
    """Scalar right-hand side closure (kept in lockstep with the public
    mesh_stiffness / internal_excitation / backlash; see the consistency
    tests)."""
    f_m = cfg.F_m
    two_z = 2.0 * cfg.z
    k_rates = tuple((j + 1) * cfg.Omega_mesh for j in range(len(cfg.K_harmonics)))
    k_coeffs = tuple(cfg.K_harmonics)
    f_rates = tuple((j + 1) * cfg.Omega_mesh for j in range(len(cfg.F_te)))
    f_coeffs = tuple(fj * w * w for fj, w in zip(cfg.F_te, f_rates))
    crack = cfg.crack
    if crack is not None:
        omega_shaft_deg = math.degrees(cfg.Omega_shaft)
        center = crack.center_deg
        half = 0.5 * crack.window_deg
        factor = 1.0 - crack.stiffness_drop
    cos = math.cos

    def acceleration(t: float, x: float, v: float, f_var: float) -> float:
        k = 1.0
        for kj, w in zip(k_coeffs, k_rates):
            k -= kj * cos(w * t)
        if crack is not None:
            delta = (t * omega_shaft_deg - center + 180.0) % 360.0 - 180.0
            if -half <= delta < half:
                k *= factor
        f = f_m + f_var
        for cj, w in zip(f_coeffs, f_rates):
            f -= cj * cos(w * t)
        if x >= 1.0:
            bx = x - 1.0
        elif x <= -1.0:
            bx = x + 1.0
        else:
            bx = 0.0
        return f - two_z * v - k * bx

    return acceleration


def _integrate_segment_rk45(
    acc, t0: float, t1: float, x: float, v: float, f_var: float,
    rtol: float, atol: float, h_start: float,
) -> tuple[float, float, float]:
    """Advance (x, v) from t0 to t1 with the adaptive embedded 5(4) pair.

    The forcing term f_var is constant over the segment.  Returns the final
    state and the last accepted step size (reused as the next segment's
    initial guess).
    """
    t = t0
    h = min(h_start, t1 - t0)
    kx1 = v
    kv1 = acc(t, x, v, f_var)
    while t < t1:
        if h < 1e-13 * max(1.0, abs(t1)):
            raise StiffFailureError(t)
        h = min(h, t1 - t)
        # stages 2..7 (stage 1 carried over, first-same-as-last)
        kxs = [kx1]
        kvs = [kv1]
        for stage in range(1, 7):
            a_row = _DP_A[stage]
            xs = x + h * sum(a * k for a, k in zip(a_row, kxs))
            vs = v + h * sum(a * k for a, k in zip(a_row, kvs))
            ts = t + _DP_C[stage] * h
            kxs.append(vs)
            kvs.append(acc(ts, xs, vs, f_var))
        x_new = x + h * sum(b * k for b, k in zip(_DP_B, kxs))
        v_new = v + h * sum(b * k for b, k in zip(_DP_B, kvs))
        err_x = h * sum(e * k for e, k in zip(_DP_E, kxs))
        err_v = h * sum(e * k for e, k in zip(_DP_E, kvs))
        scale_x = atol + rtol * max(abs(x), abs(x_new))
        scale_v = atol + rtol * max(abs(v), abs(v_new))
        err = math.sqrt(0.5 * ((err_x / scale_x) ** 2 + (err_v / scale_v) ** 2))
        if err <= 1.0:
            t += h
            x, v = x_new, v_new
            kx1, kv1 = kxs[6], kvs[6]
            grow = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
            h *= grow
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return x, v, h


def _integrate_segment_rk4(
    acc, t0: float, t1: float, x: float, v: float, f_var: float, h: float,
) -> tuple[float, float]:
    """Classical fixed-step fourth-order pass over one segment (cross-check)."""
    n = max(1, round((t1 - t0) / h))
    hh = (t1 - t0) / n
    t = t0
    for _ in range(n):
        kx1, kv1 = v, acc(t, x, v, f_var)
        kx2 = v + 0.5 * hh * kv1
        kv2 = acc(t + 0.5 * hh, x + 0.5 * hh * kx1, kx2, f_var)
        kx3 = v + 0.5 * hh * kv2
        kv3 = acc(t + 0.5 * hh, x + 0.5 * hh * kx2, kx3, f_var)
        kx4 = v + hh * kv3
        kv4 = acc(t + hh, x + hh * kx3, kx4, f_var)
        x += hh / 6.0 * (kx1 + 2 * kx2 + 2 * kx3 + kx4)
        v += hh / 6.0 * (kv1 + 2 * kv2 + 2 * kv3 + kv4)
        t += hh
    return x, v


@dataclass(frozen=True)
class SimulationResult:
    """Acceleration output plus the underlying state trajectory."""

    acceleration: TimeSeries
    x: np.ndarray
    v: np.ndarray
    f_var: np.ndarray


def simulate(
    cfg: GearboxConfig,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    method: str = "rk45",
    rk4_step: float = 0.0015,
    physical: PhysicalParams | None = None,
    full_output: bool = False,
):
    """Integrate the equation of motion from rest and sample the acceleration.

    The wind forcing is held piecewise-constant between output samples; the
    integrator never steps across a sample boundary, so forcing jumps land
    exactly at step edges.  The returned acceleration is the right-hand side
    evaluated at each output time (no finite differencing).  ``method`` is
    ``rk45`` (adaptive embedded pair, default) or ``rk4`` (fixed internal
    step, for cross-checks).
    """
    if method not in ("rk45", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    n_out = cfg.n_output_samples()
    dt = cfg.dt_out
    f_var = wind_force(n_out, dt, cfg.wind, cfg.seed, physical=physical)
    acc = _make_acceleration(cfg)

    xs = np.empty(n_out)
    vs = np.empty(n_out)
    out = np.empty(n_out)
    x, v = 0.0, 0.0
    xs[0], vs[0] = x, v
    out[0] = acc(0.0, x, v, f_var[0])
    h = dt
    for k in range(n_out - 1):
        t_lo = k * dt
        t_hi = (k + 1) * dt
        fv = f_var[k]
        if method == "rk45":
            x, v, h = _integrate_segment_rk45(acc, t_lo, t_hi, x, v, fv, rtol, atol, h)
        else:
            x, v = _integrate_segment_rk4(acc, t_lo, t_hi, x, v, fv, rk4_step)
        xs[k + 1], vs[k + 1] = x, v
        out[k + 1] = acc(t_hi, x, v, f_var[k + 1])

    series = TimeSeries(out, dt=dt, unit_label="dimensionless acceleration")
    if full_output:
        return SimulationResult(acceleration=series, x=xs, v=vs, f_var=f_var)
    return series


def config_to_dict(cfg: GearboxConfig) -> dict:
    """JSON-ready dictionary with keys mirroring the config field names."""
    return {
        "F_m": cfg.F_m,
        "F_te": list(cfg.F_te),
        "K_harmonics": list(cfg.K_harmonics),
        "z": cfg.z,
        "Omega_mesh": cfg.Omega_mesh,
        "n_teeth": cfg.n_teeth,
        "dt_out": cfg.dt_out,
        "revolutions": cfg.revolutions,
        "crack": None if cfg.crack is None else {
            "stiffness_drop": cfg.crack.stiffness_drop,
            "window_deg": cfg.crack.window_deg,
            "center_deg": cfg.crack.center_deg,
        },
        "wind": {
            "kind": cfg.wind.kind,
            "preset": cfg.wind.preset,
            "sigma": cfg.wind.sigma,
            "tau": cfg.wind.tau,
            "path": cfg.wind.path,
            "normalization": cfg.wind.normalization,
        },
        "seed": cfg.seed,
    }


def config_from_dict(raw: dict) -> GearboxConfig:
    """Inverse of :func:`config_to_dict`; unknown keys are rejected."""
    known = {
        "F_m", "F_te", "K_harmonics", "z", "Omega_mesh", "n_teeth",
        "dt_out", "revolutions", "crack", "wind", "seed",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    if "F_te" in kwargs:
        kwargs["F_te"] = tuple(kwargs["F_te"])
    if "K_harmonics" in kwargs:
        kwargs["K_harmonics"] = tuple(kwargs["K_harmonics"])
    crack = kwargs.get("crack")
    if crack is not None:
        kwargs["crack"] = CrackSpec(**crack)
    wind = kwargs.get("wind")
    if isinstance(wind, dict):
        kwargs["wind"] = WindSpec(**{k: v for k, v in wind.items() if v is not None})
    return GearboxConfig(**kwargs)
