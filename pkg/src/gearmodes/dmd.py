"""Exact dynamic mode decomposition on a snapshot-matrix pair.

Given matrices ``Y`` and ``Ybar`` whose columns are consecutive snapshots
shifted by one step, the decomposition computes the rank-truncated reduced
operator, its eigenpairs, the full-space modes, continuous-time frequencies,
and amplitudes fitted to the first snapshot.  The evolution of snapshot ``i``
is reconstructed as ``sum_k b_k * phi_k * lambda_k**i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .svd import svd_truncated
from .timeseries import DelayPair

#: Relative singular-value floor applied regardless of rank policy.
DEFAULT_SV_FLOOR = 1e-12
#: Default hard cap on the truncation rank (bounds cost on tall Hankel data).
DEFAULT_RANK_CAP = 200


class DegenerateSnapshotError(ValueError):
    """All singular values of the snapshot matrix fall below the floor."""


@dataclass(frozen=True)
class RankPolicy:
    """SVD truncation rule: fixed rank, energy fraction, or hard cap.

    Use the constructors :meth:`fixed`, :meth:`energy`, :meth:`hard_cap`.
    Singular values below ``sv_floor`` times the largest are always discarded,
    whatever the mode.
    """

    mode: str
    r: int | None = None
    threshold: float | None = None
    r_max: int | None = None
    sv_floor: float = DEFAULT_SV_FLOOR

    @classmethod
    def fixed(cls, r: int, sv_floor: float = DEFAULT_SV_FLOOR) -> "RankPolicy":
        if r < 1:
            raise ValueError(f"fixed rank must be positive, got {r}")
        return cls(mode="fixed", r=int(r), sv_floor=sv_floor)

    @classmethod
    def energy(cls, threshold: float, sv_floor: float = DEFAULT_SV_FLOOR) -> "RankPolicy":
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"energy threshold must be in (0, 1], got {threshold}")
        return cls(mode="energy", threshold=float(threshold), sv_floor=sv_floor)

    @classmethod
    def hard_cap(
        cls, r_max: int = DEFAULT_RANK_CAP, sv_floor: float = DEFAULT_SV_FLOOR
    ) -> "RankPolicy":
        if r_max < 1:
            raise ValueError(f"rank cap must be positive, got {r_max}")
        return cls(mode="hard_cap", r_max=int(r_max), sv_floor=sv_floor)

    @property
    def rank_hint(self) -> int | None:
        """A-priori bound on the needed rank (None if data dependent)."""
        if self.mode == "fixed":
            return self.r
        if self.mode == "hard_cap":
            return self.r_max
        return None

    def resolve(self, s: np.ndarray) -> tuple[int, bool]:
        """Truncation rank for singular values ``s`` (descending).

        Returns ``(rank, clamped)`` where ``clamped`` records that a fixed
        request exceeded what the data supports.  Raises
        :class:`DegenerateSnapshotError` if nothing survives the floor.
        """
        if s.size == 0 or s[0] <= 0.0:
            raise DegenerateSnapshotError("snapshot matrix has no nonzero singular values")
        above = int(np.count_nonzero(s >= self.sv_floor * s[0]))
        if above == 0:
            raise DegenerateSnapshotError(
                f"all singular values below floor {self.sv_floor:g} * sigma_1"
            )
        if self.mode == "fixed":
            r = min(self.r, above)
            return r, r < self.r
        if self.mode == "hard_cap":
            return min(self.r_max, above), False
        energies = s[:above] ** 2
        cum = np.cumsum(energies) / np.sum(energies)
        r = int(np.searchsorted(cum, self.threshold - 1e-15) + 1)
        return min(r, above), False


def default_policy() -> RankPolicy:
    return RankPolicy.hard_cap(DEFAULT_RANK_CAP)


@dataclass(frozen=True)
class DmdResult:
    """Modes, eigenvalues, frequencies, and amplitudes of one decomposition.

    ``frequencies[k] = log(eigenvalues[k]) / dt`` on the principal branch;
    a zero eigenvalue maps to ``-inf + 0j`` and is flagged in ``zero_eigs``.
    ``amplitudes`` solve ``modes @ b ~= first_snapshot`` in least squares.
    ``modes`` may be None in memory-lean decompositions; all other fields are
    always present.
    """

    modes: np.ndarray | None
    eigenvalues: np.ndarray
    frequencies: np.ndarray
    amplitudes: np.ndarray
    rank_used: int
    dt: float
    t_start: float
    first_snapshot: np.ndarray
    rank_clamped: bool = False
    zero_eigs: np.ndarray | None = None
    # Rank-reduced normal-equation factors (R @ W and Q* y0 from the thin QR
    # of Ybar V / s): let amplitudes be refit after mode restriction without
    # another full-height least-squares solve.
    reduced_lhs: np.ndarray | None = field(default=None, repr=False)
    reduced_rhs: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)

    def without_modes(self) -> "DmdResult":
        """Copy with the mode matrix and fit factors dropped (keeps spectra)."""
        return DmdResult(
            modes=None,
            eigenvalues=self.eigenvalues,
            frequencies=self.frequencies,
            amplitudes=self.amplitudes,
            rank_used=self.rank_used,
            dt=self.dt,
            t_start=self.t_start,
            first_snapshot=self.first_snapshot,
            rank_clamped=self.rank_clamped,
            zero_eigs=self.zero_eigs,
        )


def _frequencies(eigenvalues: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    zero = eigenvalues == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.log(eigenvalues) / dt
    if np.any(zero):
        omega = np.where(zero, complex(-np.inf, 0.0), omega)
    return omega, zero


def empty_result(n: int, dt: float, t_start: float, first_snapshot: np.ndarray) -> DmdResult:
    """Decomposition with zero modes (degenerate data)."""
    return DmdResult(
        modes=np.zeros((n, 0), dtype=complex),
        eigenvalues=np.zeros(0, dtype=complex),
        frequencies=np.zeros(0, dtype=complex),
        amplitudes=np.zeros(0, dtype=complex),
        rank_used=0,
        dt=dt,
        t_start=t_start,
        first_snapshot=np.asarray(first_snapshot, dtype=float),
        zero_eigs=np.zeros(0, dtype=bool),
    )


def dmd_matrices(
    y: np.ndarray,
    ybar: np.ndarray,
    dt: float,
    policy: RankPolicy | None = None,
    t_start: float = 0.0,
    rng: np.random.Generator | None = None,
) -> DmdResult:
    """Decompose an explicit snapshot pair (columns shifted by one step).

    Steps: reduced SVD of ``y``; reduced operator
    ``U_r* @ ybar @ V_r @ inv(S_r)``; its eigenpairs; full-space modes
    ``ybar @ V_r @ inv(S_r) @ W``; frequencies ``log(lambda)/dt``; amplitudes
    fitted to the first column of ``y``.
    """
    if policy is None:
        policy = default_policy()
    y = np.asarray(y, dtype=float)
    ybar = np.asarray(ybar, dtype=float)
    if y.shape != ybar.shape or y.ndim != 2:
        raise ValueError(f"snapshot pair shapes differ: {y.shape} vs {ybar.shape}")

    u, s, vh = svd_truncated(y, rank=policy.rank_hint, rng=rng)
    r, clamped = policy.resolve(s)
    u_r = u[:, :r]
    s_r = s[:r]
    v_r = vh[:r].conj().T

    g = ybar @ (v_r / s_r)          # ybar @ V_r @ inv(S_r), shape (n, r)
    atilde = u_r.conj().T @ g
    lam, w = np.linalg.eig(atilde)
    phi = g @ w

    omega, zero = _frequencies(lam, dt)
    y0 = y[:, 0]
    # Least-squares amplitude fit to the first snapshot.  phi = G W with G
    # tall; after a thin QR of G the residual splits off an orthogonal part,
    # so minimizing over the small system (R W) b ~ Q* y0 gives the same b
    # at a fraction of the cost.
    qg, rg = np.linalg.qr(g)
    reduced_rhs = (qg.T @ y0).astype(complex)
    reduced_lhs = rg @ w
    b = np.linalg.lstsq(reduced_lhs, reduced_rhs, rcond=None)[0]
    return DmdResult(
        modes=phi,
        eigenvalues=lam,
        frequencies=omega,
        amplitudes=b,
        rank_used=r,
        dt=float(dt),
        t_start=float(t_start),
        first_snapshot=y0.copy(),
        rank_clamped=clamped,
        zero_eigs=zero,
        reduced_lhs=reduced_lhs,
        reduced_rhs=reduced_rhs,
    )


def dmd(
    pair: DelayPair,
    policy: RankPolicy | None = None,
    rng: np.random.Generator | None = None,
) -> DmdResult:
    """Decompose a time-delay snapshot pair (see :func:`dmd_matrices`)."""
    return dmd_matrices(pair.Y, pair.Ybar, dt=pair.dt, policy=policy, t_start=pair.t0, rng=rng)


def evolution_coefficients(result: DmdResult, step_indices: np.ndarray) -> np.ndarray:
    """Per-mode weights ``b_k * lambda_k**i`` for each step index, shape (M, K).

    Written with eigenvalue powers rather than ``exp(omega * t)`` so a zero
    eigenvalue contributes exactly at index 0 and nowhere else; the two forms
    agree on the principal branch.
    """
    idx = np.asarray(step_indices)
    if idx.ndim == 0:
        idx = idx[None]
    powers = result.eigenvalues[:, None] ** idx[None, :].astype(float)
    return result.amplitudes[:, None] * powers


def reconstruct(
    result: DmdResult,
    step_indices,
    return_imag_norm: bool = False,
):
    """Evaluate the mode superposition at integer step offsets from t_start.

    Column ``j`` equals ``sum_k b_k phi_k lambda_k**step_indices[j]``; the
    real part is returned.  With ``return_imag_norm=True`` also returns the
    Frobenius norm of the discarded imaginary remainder (for real input data
    the conjugate pairs cancel and the remainder is at rounding level).
    """
    if result.modes is None:
        raise ValueError("mode matrix not stored in this result")
    idx = np.asarray(step_indices)
    coeffs = evolution_coefficients(result, idx)
    z = result.modes @ coeffs
    out = z.real
    if return_imag_norm:
        return out, float(np.linalg.norm(z.imag))
    return out


def mode_speed(result: DmdResult, k: int) -> float:
    """Cycle rate ``|omega_k| / (2 pi)`` used to order modes fast to slow."""
    return float(np.abs(result.frequencies[k])) / (2.0 * np.pi)
