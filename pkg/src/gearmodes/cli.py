"""Command-line front end: simulate, analyze, detect, baselines, plots.

Exit codes: 0 success, 1 usage/validation error (nothing written), 2 data or
numeric error.  All outputs are written atomically (temp file + rename) so a
failed run leaves no partial artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import emd, fft_spectrum, tsa
from .detector import DetectorParams, analyze, decide, detect
from .dmd import DegenerateSnapshotError, RankPolicy
from .gearbox import (
    CrackSpec,
    GearboxConfig,
    StiffFailureError,
    WindSpec,
    config_from_dict,
    simulate,
)
from .mrdmd import tree_summary
from .timeseries import (
    InsufficientSamplesError,
    NonuniformSamplingError,
    TimeSeries,
    load_csv,
    save_csv,
)

#: Default shaft frequency used to map sample indices to rotation angles when
#: analyzing simulated signals (mesh frequency 0.5 over 16 teeth).
DEFAULT_OMEGA_SHAFT = 0.5 / 16


class UsageError(Exception):
    """Bad flags or invalid parameter combinations (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse errors through exit code 1
        raise UsageError(message)


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_savefig(fig, path: Path) -> None:
    import matplotlib

    matplotlib.rcParams["svg.hashsalt"] = "gearmodes"
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        fig.savefig(tmp, format="svg", metadata={"Date": None})
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_float(v: float) -> str:
    return repr(float(v))


def _csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    lines = [",".join(header)]
    n = len(columns[0])
    for i in range(n):
        lines.append(",".join(_format_float(c[i]) for c in columns))
    return "\n".join(lines) + "\n"


def _line_plot(path: Path, xdata, ydata, xlabel: str, ylabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(xdata, ydata, linewidth=0.6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    _atomic_savefig(fig, path)
    plt.close(fig)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gearmodes", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gearmodes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a gearbox vibration signal")
    sim.add_argument("--wind", default="none",
                     help="none | 5mps | 13mps | external:<torque csv>")
    sim.add_argument("--damaged", action="store_true", help="include the cracked tooth")
    sim.add_argument("--revolutions", type=float, default=3.0)
    sim.add_argument("--crack-angle", type=float, default=67.0,
                     help="shaft angle (deg) of the crack window center")
    sim.add_argument("--crack-drop", type=float, default=0.13,
                     help="fractional mesh-stiffness drop inside the window")
    sim.add_argument("--drop-first-rev", action="store_true",
                     help="discard the first revolution (start-up transient)")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--config", type=Path, default=None,
                     help="JSON file with GearboxConfig fields (overridden by flags)")
    sim.add_argument("--out", type=Path, required=True, help="output signal CSV")
    sim.add_argument("--plot", action="store_true", help="also write an SVG line chart")

    ana = sub.add_parser("analyze", help="decompose a signal and export the residual")
    _add_analysis_flags(ana)
    ana.add_argument("--out-dir", type=Path, required=True)
    ana.add_argument("--plot", action="store_true")

    det = sub.add_parser("detect", help="run the crack detector on a signal")
    _add_analysis_flags(det)
    det.add_argument("--kappa", type=float, default=3.0)
    det.add_argument("--report", type=Path, required=True, help="output report JSON")
    det.add_argument("--plot", action="store_true",
                     help="write the envelope chart next to the report")

    base = sub.add_parser("baseline", help="classical comparison analyses")
    base_sub = base.add_subparsers(dest="baseline", required=True)
    bfft = base_sub.add_parser("fft", help="one-sided magnitude spectrum")
    bfft.add_argument("--in", dest="input", type=Path, required=True)
    bfft.add_argument("--dt", type=float, default=None, help="sample interval for one-column CSV")
    bfft.add_argument("--omega-mesh", type=float, default=0.5)
    bfft.add_argument("--out", type=Path, required=True)
    bfft.add_argument("--plot", action="store_true")
    btsa = base_sub.add_parser("tsa", help="time synchronous average")
    btsa.add_argument("--in", dest="input", type=Path, required=True)
    btsa.add_argument("--dt", type=float, default=None)
    btsa.add_argument("--period", type=float, default=2.0)
    btsa.add_argument("--averages", type=int, default=None)
    btsa.add_argument("--out", type=Path, required=True)
    btsa.add_argument("--plot", action="store_true")
    bemd = base_sub.add_parser("emd", help="empirical mode decomposition")
    bemd.add_argument("--in", dest="input", type=Path, required=True)
    bemd.add_argument("--dt", type=float, default=None)
    bemd.add_argument("--max-imfs", type=int, default=12)
    bemd.add_argument("--out", type=Path, required=True)
    bemd.add_argument("--plot", action="store_true")

    plot = sub.add_parser("plot", help="render a signal CSV as an SVG line chart")
    plot.add_argument("--in", dest="input", type=Path, required=True)
    plot.add_argument("--dt", type=float, default=None)
    plot.add_argument("--out", type=Path, required=True, help="output SVG path")

    return parser


def _add_analysis_flags(p) -> None:
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--dt", type=float, default=None, help="sample interval for one-column CSV")
    p.add_argument("--delay", type=int, required=True, help="delay length d")
    p.add_argument("--levels", type=int, required=True, help="decomposition levels")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--rank-cap", type=int, default=200)
    p.add_argument("--omega-shaft", type=float, default=DEFAULT_OMEGA_SHAFT,
                   help="shaft angular frequency (rad per time unit)")
    p.add_argument("--seed", type=int, default=0)


def _wind_from_flag(flag: str, path_hint: str) -> WindSpec:
    if flag == "none":
        return WindSpec.none()
    if flag in ("5mps", "13mps"):
        return WindSpec.synthetic(flag)
    if flag.startswith("external:"):
        return WindSpec.external(flag.split(":", 1)[1])
    raise UsageError(
        f"--wind: expected none, 5mps, 13mps or external:<path>, got {flag!r} ({path_hint})"
    )


def _cmd_simulate(args) -> int:
    if args.config is not None:
        if not args.config.exists():
            raise FileNotFoundError(f"--config file not found: {args.config}")
        cfg = config_from_dict(json.loads(args.config.read_text()))
    else:
        cfg = GearboxConfig()

    wind = _wind_from_flag(args.wind, "--wind")
    crack = None
    if args.damaged:
        crack = CrackSpec(stiffness_drop=args.crack_drop, center_deg=args.crack_angle)
    if wind.kind != "none" and args.seed is None and args.config is None:
        raise UsageError("--seed is required when --wind is enabled (reproducibility)")
    cfg = GearboxConfig(
        F_m=cfg.F_m,
        F_te=cfg.F_te,
        K_harmonics=cfg.K_harmonics,
        z=cfg.z,
        Omega_mesh=cfg.Omega_mesh,
        n_teeth=cfg.n_teeth,
        dt_out=cfg.dt_out,
        revolutions=args.revolutions,
        crack=crack,
        wind=wind,
        seed=args.seed if args.seed is not None else cfg.seed,
    )
    series = simulate(cfg)
    if args.drop_first_rev:
        per_rev = int(math.floor(2.0 * math.pi / (cfg.Omega_shaft * cfg.dt_out)))
        series = TimeSeries(
            series.samples[per_rev:], dt=series.dt,
            t0=series.t0 + per_rev * series.dt, unit_label=series.unit_label,
        )
    text_lines = ["time,value"]
    for k, v in enumerate(series.samples):
        text_lines.append(f"{_format_float(series.t0 + k * series.dt)},{_format_float(v)}")
    _atomic_write_text(args.out, "\n".join(text_lines) + "\n")
    if args.plot:
        _line_plot(args.out.with_suffix(".svg"), series.times(), series.samples,
                   "time", "acceleration", "simulated vibration")
    print(f"wrote {args.out} ({len(series)} samples)")
    return 0


def _load_input(path: Path, dt: float | None) -> TimeSeries:
    if not path.exists():
        raise FileNotFoundError(f"--in file not found: {path}")
    return load_csv(path, dt_override=dt)


def _detector_params(args, kappa: float | None = None) -> DetectorParams:
    extra = {} if kappa is None else {"kappa": kappa}
    return DetectorParams(
        d=args.delay,
        levels=args.levels,
        rho=args.rho,
        rank_policy=RankPolicy.hard_cap(args.rank_cap),
        seed=args.seed,
        **extra,
    )


def _validate_analysis(args, x: TimeSeries, params: DetectorParams) -> None:
    """Pre-flight checks that should fail with a usage error, before work."""
    if args.delay < 1:
        raise UsageError("--delay must be a positive integer")
    if args.levels < 1:
        raise UsageError("--levels must be a positive integer")
    n_cols = len(x) - params.d
    if n_cols < 2:
        raise UsageError(
            f"--delay {args.delay} leaves {n_cols} snapshot columns; "
            f"signal has {len(x)} samples"
        )
    deepest = n_cols // 2 ** (params.levels - 1)
    if deepest < params.min_bin_columns:
        raise UsageError(
            f"--levels {args.levels} violates min_bin_columns: deepest bins "
            f"would hold {deepest} < {params.min_bin_columns} snapshot columns "
            f"(signal provides {n_cols} columns at --delay {args.delay})"
        )


def _cmd_analyze(args) -> int:
    x = _load_input(args.input, args.dt)
    params = _detector_params(args)
    _validate_analysis(args, x, params)
    result = analyze(x, params)

    out = args.out_dir
    r = result.residual
    times = x.t0 + x.dt * np.arange(r.size)
    _atomic_write_text(out / "residual.csv", _csv_text(["time", "value"], [times, r]))
    env = result.envelope
    _atomic_write_text(
        out / "envelope.csv",
        _csv_text(["time", "amplitude", "phase"], [times, env.amplitude, env.phase]),
    )
    headers = ["time"] + [f"level_{l}" for l in range(1, params.levels + 1)]
    _atomic_write_text(
        out / "level_components.csv",
        _csv_text(headers, [times] + list(result.level_components)),
    )
    _atomic_write_text(
        out / "tree.json",
        json.dumps(tree_summary(result.tree), indent=2, sort_keys=True) + "\n",
    )
    if args.plot:
        _line_plot(out / "residual.svg", times, r, "time", "residual", "first residual")
        _line_plot(out / "envelope.svg", times, env.amplitude,
                   "time", "amplitude", "residual envelope")
    print(f"wrote residual/envelope/level_components/tree to {out}")
    return 0


def _cmd_detect(args) -> int:
    x = _load_input(args.input, args.dt)
    params = _detector_params(args, kappa=args.kappa)
    _validate_analysis(args, x, params)
    provenance = {
        "input_path": str(args.input),
        "seed": args.seed,
        "tool_version": __version__,
    }
    report, result = detect(x, params, omega_shaft=args.omega_shaft, provenance=provenance)
    _atomic_write_text(
        args.report, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    if args.plot:
        env = result.envelope
        times = x.t0 + x.dt * np.arange(len(env))
        _line_plot(args.report.with_suffix(".svg"), times, env.amplitude,
                   "time", "amplitude", "residual envelope")
    print(f"damaged={report.damaged} peaks_deg={[round(a, 1) for a in report.peak_angles_deg]}")
    print(f"wrote {args.report}")
    return 0


def _cmd_baseline(args) -> int:
    x = _load_input(args.input, args.dt)
    if args.baseline == "fft":
        spec = fft_spectrum(x, omega_mesh=args.omega_mesh)
        _atomic_write_text(args.out, _csv_text(["omega", "magnitude"], [spec.freqs, spec.mags]))
        markers = {str(j): w for j, w in spec.markers}
        _atomic_write_text(
            args.out.with_name(args.out.stem + "_markers.json"),
            json.dumps(markers, indent=2, sort_keys=True) + "\n",
        )
        if args.plot:
            _line_plot(args.out.with_suffix(".svg"), spec.freqs, spec.mags,
                       "angular frequency", "magnitude", "spectrum")
    elif args.baseline == "tsa":
        avg = tsa(x, period=args.period, n_averages=args.averages)
        times = avg.t0 + avg.dt * np.arange(len(avg))
        _atomic_write_text(args.out, _csv_text(["time", "value"], [times, avg.samples]))
        if args.plot:
            _line_plot(args.out.with_suffix(".svg"), times, avg.samples,
                       "time", "average", "time synchronous average")
    else:
        imf_set = emd(x, max_imfs=args.max_imfs)
        times = x.times()
        headers = ["time"] + [f"imf_{k + 1}" for k in range(len(imf_set))] + ["residue"]
        cols = [times] + [imf.samples for imf in imf_set.imfs] + [imf_set.residue.samples]
        _atomic_write_text(args.out, _csv_text(headers, cols))
        if args.plot and len(imf_set) > 0:
            _line_plot(args.out.with_suffix(".svg"), times, imf_set.imfs[0].samples,
                       "time", "imf 1", "first intrinsic mode function")
    print(f"wrote {args.out}")
    return 0


def _cmd_plot(args) -> int:
    x = _load_input(args.input, args.dt)
    _line_plot(args.out, x.times(), x.samples, "time", "value", args.input.stem)
    csv_path = args.out.with_suffix(".csv")
    _atomic_write_text(csv_path, _csv_text(["time", "value"], [x.times(), x.samples]))
    print(f"wrote {args.out} and {csv_path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "detect": _cmd_detect,
    "baseline": _cmd_baseline,
    "plot": _cmd_plot,
}


def run(argv=None) -> int:
    """Parse arguments and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, NonuniformSamplingError,
            InsufficientSamplesError, DegenerateSnapshotError, StiffFailureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
