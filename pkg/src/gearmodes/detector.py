"""End-to-end crack detection: delay embedding, multi-resolution
decomposition, residual envelope, and a recurrence-gated peak decision."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dmd import RankPolicy, default_policy
from .hilbert import Envelope, envelope_of
from .mrdmd import MrDmdParams, MrDmdTree, level_component, mrdmd, residual
from .timeseries import DelayPair, TimeSeries, delay_embed, index_to_angle

#: Fraction of envelope samples excluded at each end before peak analysis.
#: Kept small: the residual window barely outlasts the last crack event it
#: covers, so an aggressive trim would discard real signatures along with
#: transform edge artifacts.
DEFAULT_EDGE_FRACTION = 0.002


@dataclass(frozen=True)
class DetectorParams:
    """Pipeline parameters: embedding, decomposition depth, decision rule.

    ``kappa`` is the envelope peak-to-median ratio a sample must exceed to
    count as anomalous; groups of anomalous samples must recur at the same
    shaft angle (mod 360 deg, within ``window_deg``) in at least
    ``min_recurrences`` revolutions to flag damage.
    """

    d: int
    levels: int
    rho: float = 1.0
    rank_policy: RankPolicy = field(default_factory=default_policy)
    kappa: float = 3.0
    window_deg: float = 5.0
    min_recurrences: int = 2
    edge_fraction: float = DEFAULT_EDGE_FRACTION
    min_bin_columns: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.kappa <= 1.0:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if self.window_deg <= 0:
            raise ValueError(f"window_deg must be positive, got {self.window_deg}")
        if self.min_recurrences < 1:
            raise ValueError("min_recurrences must be >= 1")
        if not 0.0 <= self.edge_fraction < 0.5:
            raise ValueError("edge_fraction must be in [0, 0.5)")

    def min_samples(self) -> int:
        """Smallest signal length the pipeline accepts."""
        return self.d + 2 ** (self.levels - 1) * self.min_bin_columns


@dataclass(frozen=True)
class AnalysisResult:
    """Residual of the first delay snapshot, its envelope, and the per-level
    components that were subtracted to produce it."""

    residual: np.ndarray
    envelope: Envelope
    level_components: tuple[np.ndarray, ...]
    tree: MrDmdTree
    pair: DelayPair


@dataclass(frozen=True)
class PeakGroup:
    """Cluster of supra-threshold envelope samples at one shaft angle."""

    angle_deg: float
    ratio: float
    n_samples: int
    recurring: bool = False


@dataclass(frozen=True)
class DetectionReport:
    """Decision plus the evidence: peak groups, ratios, and provenance."""

    damaged: bool
    peak_angles_deg: tuple[float, ...]
    peak_ratios: tuple[float, ...]
    residual_norm: float
    params: dict
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "damaged": self.damaged,
            "peak_angles_deg": list(self.peak_angles_deg),
            "peak_ratios": list(self.peak_ratios),
            "residual_norm": self.residual_norm,
            "params": self.params,
            "provenance": self.provenance,
        }


def analyze(x: TimeSeries, params: DetectorParams, parallel: bool = False) -> AnalysisResult:
    """Run the decomposition pipeline and extract the first residual.

    Embeds the signal with delay ``params.d``, builds the multi-resolution
    hierarchy, forms the residual of snapshot 0 and its envelope, and
    collects the per-level components of snapshot 0.
    """
    needed = params.min_samples()
    if len(x) < needed:
        raise ValueError(
            f"signal too short: {len(x)} samples, need at least {needed} "
            f"for d={params.d}, levels={params.levels}, "
            f"min_bin_columns={params.min_bin_columns}"
        )
    pair = delay_embed(x, params.d)
    mr_params = MrDmdParams(
        levels=params.levels,
        rho=params.rho,
        rank_policy=params.rank_policy,
        min_bin_columns=params.min_bin_columns,
        store_modes=False,
        probe_columns=(0,),
    )
    tree = mrdmd(pair, mr_params, seed=params.seed, parallel=parallel)
    r0 = residual(tree, pair, 0)
    env = envelope_of(r0, dt=x.dt)
    comps = tuple(level_component(tree, l, 0) for l in range(1, params.levels + 1))
    return AnalysisResult(residual=r0, envelope=env, level_components=comps, tree=tree, pair=pair)


def _cluster_angles(angles: np.ndarray, ratios: np.ndarray, width: float):
    """Group sorted angles into clusters no wider than ``width`` degrees.

    Each cluster is summarized by the angle of its strongest sample.
    """
    groups = []
    start = 0
    for i in range(1, len(angles) + 1):
        if i == len(angles) or angles[i] - angles[start] > width:
            chunk = slice(start, i)
            peak = np.argmax(ratios[chunk]) + start
            groups.append((float(angles[peak]), float(ratios[peak]), i - start))
            start = i
    return groups


def decide(
    env: Envelope,
    omega_shaft: float,
    params: DetectorParams,
    provenance: dict | None = None,
    angle_offset_deg: float = 0.0,
) -> DetectionReport:
    """Apply the peak-ratio / recurrence rule to a residual envelope.

    Samples whose amplitude exceeds ``kappa`` times the median amplitude are
    clustered by shaft angle (cluster width at most ``2 * window_deg``);
    damage is flagged when at least ``min_recurrences`` clusters sit at the
    same angle modulo 360 degrees (within ``window_deg``) in distinct
    revolutions.  The leading and trailing ``edge_fraction`` of samples are
    excluded.  Ratios are scale-free, so the decision is invariant under
    positive rescaling of the envelope.
    """
    amp = np.asarray(env.amplitude, dtype=float)
    n = amp.size
    edge = int(round(params.edge_fraction * n))
    interior = slice(edge, n - edge if edge > 0 else n)
    core = amp[interior]
    med = float(np.median(core))
    report_params = _params_dict(params)
    prov = dict(provenance or {})

    if med <= 0.0 or not np.isfinite(med):
        return DetectionReport(
            damaged=False,
            peak_angles_deg=(),
            peak_ratios=(),
            residual_norm=float(np.linalg.norm(amp)),
            params=report_params,
            provenance=prov,
        )

    ratios = core / med
    supra = np.where(ratios >= params.kappa)[0]
    idx = supra + edge
    angles = np.array([index_to_angle(int(i), omega_shaft, env.dt) for i in idx])
    angles = angles + angle_offset_deg
    groups = _cluster_angles(angles, ratios[supra], 2.0 * params.window_deg)

    recurring = _recurring_groups(groups, params.window_deg, params.min_recurrences)
    damaged = len(recurring) > 0
    peak_groups = [
        PeakGroup(a, r, c, recurring=(a in recurring)) for a, r, c in groups
    ]
    return DetectionReport(
        damaged=damaged,
        peak_angles_deg=tuple(g.angle_deg for g in peak_groups),
        peak_ratios=tuple(g.ratio for g in peak_groups),
        residual_norm=float(np.linalg.norm(amp)),
        params=report_params,
        provenance=prov,
    )


def _recurring_groups(groups, window_deg: float, min_recurrences: int) -> set:
    """Angles of groups that recur at the same folded angle across revolutions."""
    recurring: set[float] = set()
    for i, (a_i, _, _) in enumerate(groups):
        revs = {int(a_i // 360.0)}
        members = [a_i]
        for j, (a_j, _, _) in enumerate(groups):
            if i == j:
                continue
            delta = abs(a_i - a_j) % 360.0
            delta = min(delta, 360.0 - delta)
            if delta <= window_deg and abs(a_i - a_j) >= 360.0 - window_deg:
                revs.add(int(a_j // 360.0))
                members.append(a_j)
        if len(revs) >= min_recurrences:
            recurring.update(members)
    return recurring


def _params_dict(params: DetectorParams) -> dict:
    policy = params.rank_policy
    return {
        "d": params.d,
        "levels": params.levels,
        "rho": params.rho,
        "rank_policy": {
            "mode": policy.mode,
            "r": policy.r,
            "threshold": policy.threshold,
            "r_max": policy.r_max,
            "sv_floor": policy.sv_floor,
        },
        "kappa": params.kappa,
        "window_deg": params.window_deg,
        "min_recurrences": params.min_recurrences,
        "edge_fraction": params.edge_fraction,
        "seed": params.seed,
    }


def detect(
    x: TimeSeries,
    params: DetectorParams,
    omega_shaft: float,
    provenance: dict | None = None,
    parallel: bool = False,
) -> tuple[DetectionReport, AnalysisResult]:
    """Convenience pipeline: analyze then decide on the residual envelope."""
    analysis = analyze(x, params, parallel=parallel)
    report = decide(analysis.envelope, omega_shaft, params, provenance=provenance)
    return report, analysis
