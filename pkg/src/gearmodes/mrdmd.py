"""Multi-resolution decomposition: recursive slow-mode extraction over a
binary hierarchy of time bins.

Level 1 decomposes the full snapshot window, keeps the modes completing at
most ``rho`` cycles within the window, and subtracts their evolution from
every snapshot column.  Each half of the residual data is then processed the
same way, down to the requested depth.  What survives at the bottom is the
highest-frequency content, where short-lived structures (impacts, tooth
events) live.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dmd import (
    DegenerateSnapshotError,
    DmdResult,
    RankPolicy,
    default_policy,
    dmd_matrices,
    empty_result,
    evolution_coefficients,
)
from .timeseries import DelayPair

#: Column block width for the in-place slow-content subtraction, sized to
#: keep complex temporaries well under a gigabyte on 32001-row data.
_SUBTRACT_BLOCK = 512


@dataclass(frozen=True)
class MrDmdParams:
    """Decomposition depth, slow-mode threshold, and bookkeeping options.

    ``rho`` is the maximum number of cycles a mode may complete within its
    bin to count as slow (inclusive bound).  ``store_modes=False`` drops the
    per-node mode matrices after construction; reconstructions then remain
    available only at the snapshot columns listed in ``probe_columns``.
    """

    levels: int
    rho: float = 1.0
    rank_policy: RankPolicy = field(default_factory=default_policy)
    min_bin_columns: int = 4
    store_modes: bool = True
    probe_columns: tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.min_bin_columns < 2:
            raise ValueError("min_bin_columns must be >= 2")


@dataclass(frozen=True)
class MrDmdNode:
    """Retained slow content of one (level, bin) cell.

    ``column_range`` is the half-open snapshot-column interval the bin owns;
    ``retained`` holds the slow subset of the local decomposition with
    amplitudes refit to the bin's first column.  ``probe_values`` caches the
    bin's contribution at probed snapshot columns.
    """

    level: int
    bin: int
    t_lo: float
    t_hi: float
    retained: DmdResult
    column_range: tuple[int, int]
    svd_rank: int
    degenerate: bool = False
    probe_values: dict = field(default_factory=dict)

    @property
    def bin_duration(self) -> float:
        return self.t_hi - self.t_lo


@dataclass(frozen=True)
class MrDmdTree:
    """All nodes of the hierarchy plus source-dimension bookkeeping."""

    params: MrDmdParams
    nodes: tuple[MrDmdNode, ...]
    d: int
    m: int
    dt: float
    t0: float
    seed: int
    level_bounds: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def levels(self) -> int:
        return self.params.levels

    @property
    def n_columns(self) -> int:
        """Total snapshot columns covered (m + 1)."""
        return self.m + 1

    def node_at(self, level: int, bin_index: int) -> MrDmdNode:
        """Node for 1-based (level, bin)."""
        if not 1 <= level <= self.levels:
            raise IndexError(f"level {level} out of range 1..{self.levels}")
        if not 1 <= bin_index <= 2 ** (level - 1):
            raise IndexError(f"bin {bin_index} out of range at level {level}")
        return self.nodes[2 ** (level - 1) - 1 + bin_index - 1]

    def bin_containing(self, level: int, column: int) -> MrDmdNode:
        """Node whose column range contains ``column`` at ``level``."""
        bounds = self.level_bounds[level - 1]
        lows = [lo for lo, _ in bounds]
        j = int(np.searchsorted(lows, column, side="right"))
        node = self.node_at(level, j)
        lo, hi = node.column_range
        if not lo <= column < hi:
            raise IndexError(f"column {column} outside 0..{self.n_columns - 1}")
        return node


def _split_bounds(n_columns: int, levels: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Per-level bin boundaries from recursive halving (left child floors)."""
    all_levels = [((0, n_columns),)]
    for _ in range(1, levels):
        nxt = []
        for lo, hi in all_levels[-1]:
            mid = lo + (hi - lo) // 2
            nxt.append((lo, mid))
            nxt.append((mid, hi))
        all_levels.append(tuple(nxt))
    return tuple(all_levels)


def slow_filter(result: DmdResult, bin_duration: float, rho: float) -> DmdResult:
    """Restrict a decomposition to modes completing <= rho cycles in the bin.

    Keeps exactly the modes with ``|Im omega| / (2 pi) * bin_duration <= rho``
    and refits the amplitudes to the first snapshot over the retained modes.
    The result may be empty.
    """
    if bin_duration <= 0:
        raise ValueError(f"bin_duration must be positive, got {bin_duration}")
    if result.n_modes == 0:
        return result
    cycles = np.abs(result.frequencies.imag) / (2.0 * np.pi) * bin_duration
    mask = cycles <= rho
    if np.all(mask):
        return result
    if result.modes is None:
        raise ValueError("cannot refit amplitudes: mode matrix not stored")
    phi = result.modes[:, mask]
    if not np.any(mask):
        b = np.zeros(0, dtype=complex)
    elif result.reduced_lhs is not None:
        b = np.linalg.lstsq(result.reduced_lhs[:, mask], result.reduced_rhs, rcond=None)[0]
    else:
        b = np.linalg.lstsq(phi, result.first_snapshot.astype(complex), rcond=None)[0]
    return DmdResult(
        modes=phi,
        eigenvalues=result.eigenvalues[mask],
        frequencies=result.frequencies[mask],
        amplitudes=b,
        rank_used=int(np.count_nonzero(mask)),
        dt=result.dt,
        t_start=result.t_start,
        first_snapshot=result.first_snapshot,
        rank_clamped=result.rank_clamped,
        zero_eigs=None if result.zero_eigs is None else result.zero_eigs[mask],
    )


def _evaluate_block(retained: DmdResult, rel_indices: np.ndarray) -> np.ndarray:
    """Real part of the retained-mode evolution at relative column offsets."""
    coeffs = evolution_coefficients(retained, rel_indices)
    return np.real(retained.modes @ coeffs)


def _process_node(
    data: np.ndarray,
    level: int,
    bin_index: int,
    lo: int,
    hi: int,
    params: MrDmdParams,
    dt: float,
    t0: float,
    seed: int,
) -> MrDmdNode:
    """Run DMD on one bin, keep slow modes, subtract them in place."""
    sub = data[:, lo:hi]
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(level, bin_index)))
    t_lo = t0 + lo * dt
    t_hi = t0 + hi * dt
    try:
        full = dmd_matrices(
            sub[:, :-1], sub[:, 1:], dt=dt, policy=params.rank_policy,
            t_start=t_lo, rng=rng,
        )
        degenerate = False
    except DegenerateSnapshotError:
        full = empty_result(sub.shape[0], dt, t_lo, sub[:, 0])
        degenerate = True
    retained = slow_filter(full, bin_duration=t_hi - t_lo, rho=params.rho)

    probes: dict[int, np.ndarray] = {}
    width = hi - lo
    if retained.n_modes > 0:
        for start in range(0, width, _SUBTRACT_BLOCK):
            stop = min(start + _SUBTRACT_BLOCK, width)
            comp = _evaluate_block(retained, np.arange(start, stop))
            for p in params.probe_columns:
                if lo + start <= p < lo + stop:
                    probes[p] = comp[:, p - lo - start].copy()
            sub[:, start:stop] -= comp
    else:
        zero = np.zeros(sub.shape[0])
        for p in params.probe_columns:
            if lo <= p < hi:
                probes[p] = zero.copy()

    if not params.store_modes:
        retained = retained.without_modes()
    return MrDmdNode(
        level=level,
        bin=bin_index,
        t_lo=t_lo,
        t_hi=t_hi,
        retained=retained,
        column_range=(lo, hi),
        svd_rank=full.rank_used,
        degenerate=degenerate,
        probe_values=probes,
    )


def mrdmd(
    pair: DelayPair,
    params: MrDmdParams,
    seed: int = 0,
    parallel: bool = False,
) -> MrDmdTree:
    """Build the multi-resolution hierarchy over a snapshot pair.

    The m + 1 distinct snapshot columns are processed level by level; sibling
    bins at a level share no state once their parent's subtraction is done,
    so with ``parallel=True`` they are dispatched to a thread pool.  Node
    randomness is derived from ``(seed, level, bin)``, making the tree
    independent of scheduling.  Degenerate bins (no content above the
    singular-value floor) retain zero modes and are flagged, not fatal.
    """
    n_cols = pair.m + 1
    deepest = n_cols // 2 ** (params.levels - 1)
    if deepest < params.min_bin_columns:
        raise ValueError(
            f"min_bin_columns violated: {params.levels} levels over {n_cols} "
            f"snapshot columns leaves deepest bins with {deepest} < "
            f"{params.min_bin_columns} columns"
        )
    bounds = _split_bounds(n_cols, params.levels)
    data = np.asfortranarray(pair.snapshots(), dtype=float)

    nodes: list[MrDmdNode] = []
    for level, bins in enumerate(bounds, start=1):
        jobs = [
            (data, level, j, lo, hi, params, pair.dt, pair.t0, seed)
            for j, (lo, hi) in enumerate(bins, start=1)
        ]
        if parallel and len(jobs) > 1:
            with ThreadPoolExecutor() as pool:
                level_nodes = list(pool.map(lambda a: _process_node(*a), jobs))
        else:
            level_nodes = [_process_node(*a) for a in jobs]
        nodes.extend(level_nodes)

    return MrDmdTree(
        params=params,
        nodes=tuple(nodes),
        d=pair.d,
        m=pair.m,
        dt=pair.dt,
        t0=pair.t0,
        seed=seed,
        level_bounds=bounds,
    )


def level_component(
    tree: MrDmdTree,
    level: int,
    i: int,
    return_imag_norm: bool = False,
):
    """Contribution of one level to snapshot column ``i`` (real part).

    Evaluates ``sum_k b_k phi_k lambda_k**(i - lo)`` over the retained modes
    of the bin containing ``i`` at ``level``.  Probed columns are served from
    values cached at construction; other columns require stored modes.
    """
    node = tree.bin_containing(level, i)
    if i in node.probe_values:
        out = node.probe_values[i].copy()
        return (out, 0.0) if return_imag_norm else out
    if node.retained.n_modes == 0:
        out = np.zeros(tree.d + 1)
        return (out, 0.0) if return_imag_norm else out
    if node.retained.modes is None:
        raise ValueError(
            f"column {i} was not probed and modes were not stored "
            "(rebuild with store_modes=True or add it to probe_columns)"
        )
    lo, _ = node.column_range
    coeffs = evolution_coefficients(node.retained, np.array([i - lo]))
    z = node.retained.modes @ coeffs[:, 0]
    if return_imag_norm:
        return z.real, float(np.linalg.norm(z.imag))
    return z.real


def residual(tree: MrDmdTree, pair: DelayPair, i: int) -> np.ndarray:
    """Snapshot ``i`` minus all retained slow content across levels."""
    total = level_component(tree, 1, i)
    for level in range(2, tree.levels + 1):
        total = total + level_component(tree, level, i)
    return pair.snapshot(i) - total


def partial_reconstruction(tree: MrDmdTree, levels, i: int) -> np.ndarray:
    """Sum of level components over a subset of levels at column ``i``."""
    out = np.zeros(tree.d + 1)
    for level in sorted(set(int(l) for l in levels)):
        out = out + level_component(tree, level, i)
    return out


def _finite_or_none(x: float):
    return float(x) if np.isfinite(x) else None


def tree_summary(tree: MrDmdTree) -> dict:
    """JSON-ready description of the hierarchy (spectral metadata per node)."""
    nodes = []
    for node in tree.nodes:
        res = node.retained
        nodes.append(
            {
                "level": node.level,
                "bin": node.bin,
                "t_lo": node.t_lo,
                "t_hi": node.t_hi,
                "eigenvalues": [[float(e.real), float(e.imag)] for e in res.eigenvalues],
                "omega_abs": [_finite_or_none(abs(w)) for w in res.frequencies],
                "rank_used": res.rank_used,
                "svd_rank": node.svd_rank,
                "degenerate": node.degenerate,
            }
        )
    return {
        "levels": tree.levels,
        "rho": tree.params.rho,
        "d": tree.d,
        "m": tree.m,
        "dt": tree.dt,
        "t0": tree.t0,
        "seed": tree.seed,
        "nodes": nodes,
    }
