"""Quantum-state types, target-state generators and error metrics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10

DEFAULT_MIXING_WEIGHT = 0.98


@dataclass(frozen=True)
class SystemSize:
    """Qubit count n and Hilbert-space dimension d = 2^n."""

    n: int
    d: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        if self.d != 2 ** self.n:
            raise ValueError(f"d={self.d} is not 2^{self.n}")

    @classmethod
    def from_qubits(cls, n: int) -> "SystemSize":
        return cls(n=n, d=2**n)


class TargetKind(str, Enum):
    RANK1 = "rank1"
    RANK2 = "rank2"
    APPROX_RANK2 = "approx-rank2"
    MAXIMALLY_MIXED = "mixed"


def haar_orthonormal(d: int, r: int, seed=None) -> np.ndarray:
    """Haar-distributed d x r complex matrix with orthonormal columns.

    QR of a standard complex Gaussian matrix, with each column of Q
    multiplied by the conjugate phase of the matching diagonal entry of
    R.  Plain QR is not Haar; the phase fix removes the sign ambiguity.
    """
    if r > d:
        raise ValueError(f"cannot draw {r} orthonormal columns in dimension {d}")
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))) / np.sqrt(2)
    q, rr = np.linalg.qr(z)
    diag = np.diagonal(rr).copy()
    mag = np.abs(diag)
    # zero diagonal has probability zero; guard the division anyway
    phase = np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)
    return q * phase.conj()


def dirichlet_sample(r: int, alpha: float, seed=None) -> np.ndarray:
    """One draw from Dirichlet(alpha, ..., alpha) via normalized Gammas."""
    if alpha <= 0:
        raise ValueError(f"Dirichlet concentration must be positive, got {alpha}")
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    rng = np.random.default_rng(seed)
    g = rng.gamma(alpha, size=r)
    total = g.sum()
    if total == 0.0:
        # possible only for very small alpha where every Gamma underflows
        g = np.full(r, 1.0 / r)
        total = 1.0
    return g / total


def init_factor(size: SystemSize, r: int, seed=None) -> np.ndarray:
    """Initial factor Y0 = V diag(D)^(1/2), ||Y0||_F = 1.

    V is Haar orthonormal d x r and D ~ Dirichlet(1/r), so the starting
    Gram matrix Y0 Y0* is a valid density matrix.
    """
    if not 1 <= r <= size.d:
        raise ValueError(f"rank budget r={r} outside [1, {size.d}]")
    rng = np.random.default_rng(seed)
    v = haar_orthonormal(size.d, r, rng)
    dvec = dirichlet_sample(r, 1.0 / r, rng)
    return v * np.sqrt(dvec)


def make_target(
    kind: TargetKind,
    size: SystemSize,
    seed=None,
    mixing_weight: float = DEFAULT_MIXING_WEIGHT,
) -> np.ndarray:
    """Construct one of the benchmark target density matrices.

    rank1: vv* with Haar-random unit v.
    rank2: equal mixture of two Haar orthonormal vectors.
    approx-rank2: w * rank2 + (1 - w) * I/d (default w = 0.98).
    mixed: I/d.
    """
    kind = TargetKind(kind)
    d = size.d
    if kind is TargetKind.MAXIMALLY_MIXED:
        return np.eye(d, dtype=complex) / d
    if kind is TargetKind.RANK1:
        v = haar_orthonormal(d, 1, seed)
        return v @ v.conj().T
    if d < 2:
        raise ValueError(f"{kind.value} target needs d >= 2, got d={d}")
    v = haar_orthonormal(d, 2, seed)
    rank2 = (v @ v.conj().T) / 2
    if kind is TargetKind.RANK2:
        return rank2
    if not 0 < mixing_weight < 1:
        raise ValueError(f"mixing weight must lie in (0, 1), got {mixing_weight}")
    return mixing_weight * rank2 + (1 - mixing_weight) * np.eye(d, dtype=complex) / d


def frobenius_error(est: np.ndarray, target: np.ndarray) -> float:
    """Frobenius distance ||est - target||_F."""
    est = np.asarray(est)
    target = np.asarray(target)
    if est.shape != target.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {target.shape}")
    return float(np.linalg.norm(est - target))


def density_matrix_gaps(rho: np.ndarray) -> tuple[float, float, float]:
    """(hermiticity gap, smallest eigenvalue, |trace - 1|) of rho."""
    rho = np.asarray(rho)
    herm_gap = float(np.abs(rho - rho.conj().T).max())
    eigs = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    trace_gap = abs(float(np.trace(rho).real) - 1.0)
    return herm_gap, float(eigs.min()), trace_gap


def check_density_matrix(
    rho: np.ndarray,
    hermitian_tol: float = HERMITIAN_TOL,
    psd_tol: float = PSD_TOL,
    trace_tol: float = TRACE_TOL,
) -> None:
    """Raise ValueError unless rho is Hermitian, PSD and unit trace."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm_gap, eig_min, trace_gap = density_matrix_gaps(rho)
    if herm_gap > hermitian_tol:
        raise ValueError(f"not Hermitian: max |rho - rho*| = {herm_gap:.3e}")
    if eig_min < -psd_tol:
        raise ValueError(f"not PSD: min eigenvalue = {eig_min:.3e}")
    if trace_gap > trace_tol:
        raise ValueError(f"trace deviates from 1 by {trace_gap:.3e}")


def normalize_trace(rho: np.ndarray) -> np.ndarray:
    """Scale a positive-trace matrix so its trace is exactly 1.0.

    Plain division can leave the recomputed trace one ulp away from 1;
    the residual is folded into the largest diagonal entry until the
    floating-point trace equals 1.0 (at most a few ulps get moved).
    """
    rho = np.asarray(rho, dtype=complex)
    trace = float(np.trace(rho).real)
    if not np.isfinite(trace) or trace <= 0:
        raise ValueError(f"cannot normalize matrix with trace {trace}")
    out = rho / trace
    j = int(np.argmax(out.ravel()[:: rho.shape[0] + 1].real))
    for _ in range(5):
        residual = float(np.trace(out).real) - 1.0
        if residual == 0.0:
            break
        out[j, j] -= residual
    return out
