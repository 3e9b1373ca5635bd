"""Gear-fault detection in vibration signals via multi-resolution mode
decomposition of time-delay snapshots, with a nonlinear gearbox simulator
and classical baseline analyses."""

__version__ = "0.1.0"

from .baselines import ImfSet, Spectrum, emd, fft_spectrum, spectral_energy, tsa
from .detector import (
    AnalysisResult,
    DetectionReport,
    DetectorParams,
    analyze,
    decide,
    detect,
)
from .dmd import (
    DegenerateSnapshotError,
    DmdResult,
    RankPolicy,
    dmd,
    dmd_matrices,
    mode_speed,
    reconstruct,
)
from .gearbox import (
    CrackSpec,
    GearboxConfig,
    PhysicalParams,
    SimulationResult,
    StiffFailureError,
    WindSpec,
    backlash,
    internal_excitation,
    mesh_stiffness,
    nondimensionalize,
    simulate,
    wind_force,
)
from .hilbert import Envelope, analytic_signal, envelope, envelope_of
from .mrdmd import (
    MrDmdNode,
    MrDmdParams,
    MrDmdTree,
    level_component,
    mrdmd,
    partial_reconstruction,
    residual,
    slow_filter,
    tree_summary,
)
from .timeseries import (
    DelayPair,
    InsufficientSamplesError,
    NonuniformSamplingError,
    TimeSeries,
    angle_to_index,
    delay_embed,
    index_to_angle,
    load_csv,
)

__all__ = [
    "AnalysisResult",
    "CrackSpec",
    "DegenerateSnapshotError",
    "DelayPair",
    "DetectionReport",
    "DetectorParams",
    "DmdResult",
    "Envelope",
    "GearboxConfig",
    "ImfSet",
    "InsufficientSamplesError",
    "MrDmdNode",
    "MrDmdParams",
    "MrDmdTree",
    "NonuniformSamplingError",
    "PhysicalParams",
    "RankPolicy",
    "SimulationResult",
    "Spectrum",
    "StiffFailureError",
    "TimeSeries",
    "WindSpec",
    "analytic_signal",
    "analyze",
    "angle_to_index",
    "backlash",
    "decide",
    "delay_embed",
    "detect",
    "dmd",
    "dmd_matrices",
    "emd",
    "envelope",
    "envelope_of",
    "fft_spectrum",
    "index_to_angle",
    "internal_excitation",
    "level_component",
    "load_csv",
    "mesh_stiffness",
    "mode_speed",
    "mrdmd",
    "nondimensionalize",
    "partial_reconstruction",
    "reconstruct",
    "residual",
    "simulate",
    "slow_filter",
    "spectral_energy",
    "tsa",
    "tree_summary",
    "wind_force",
]
