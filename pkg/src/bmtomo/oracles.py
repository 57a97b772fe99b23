"""Independent brute-force verifiers for the numerical kernels.

Everything here trades speed for obviousness: explicit loops, dense
matrices, textbook quadrature.  None of it shares kernels with the
modules it checks, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .prior import QuadratureError


@dataclass(frozen=True)
class FiniteDiffSpec:
    """Central-difference step; 1e-5 balances truncation against
    rounding for ~1e-5 relative targets on unit-scale inputs."""

    step: float = 1e-5

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")


def finite_diff_gradient(f, t: np.ndarray, spec: FiniteDiffSpec | None = None) -> np.ndarray:
    """Entrywise central differences of a scalar field over real matrices."""
    if spec is None:
        spec = FiniteDiffSpec()
    t = np.asarray(t, dtype=float)
    h = spec.step
    grad = np.empty_like(t)
    probe = t.copy()
    for idx in np.ndindex(*t.shape):
        base = probe[idx]
        probe[idx] = base + h
        f_plus = f(probe)
        probe[idx] = base - h
        f_minus = f(probe)
        probe[idx] = base
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise FloatingPointError(f"non-finite evaluation near index {idx}")
        grad[idx] = (f_plus - f_minus) / (2 * h)
    return grad


def dense_likelihood_oracle(y: np.ndarray, freqs, design) -> float:
    """Sum of squared residuals, recomputed with explicit complex traces.

    Double loop over experiments and outcomes, one np.trace per
    operator, no stacking or caching.
    """
    y = np.asarray(y, dtype=complex)
    rho = y @ y.conj().T
    phat = freqs.frequencies
    total = 0.0
    for a in range(design.operators.shape[0]):
        for s in range(design.operators.shape[1]):
            model = np.trace(design.operators[a, s] @ rho).real
            total += (phat[a, s] - model) ** 2
    return float(total)


def dense_prior_gradient(t: np.ndarray, theta: float) -> np.ndarray:
    """Prior gradient via the full 2d x 2d inverse, no Woodbury.

    d/dT of (e/2) log det((theta^2/sqrt2) I + sqrt2 T T^t) equals
    e sqrt2 M^{-1} T with M the (symmetric) shifted Gram matrix.
    """
    t = np.asarray(t, dtype=float)
    two_d, two_r = t.shape
    d, r = two_d // 2, two_r // 2
    e = (2 * d + r + 2) / 2
    sqrt2 = np.sqrt(2.0)
    m = (theta**2 / sqrt2) * np.eye(two_d) + sqrt2 * (t @ t.T)
    return e * sqrt2 * np.linalg.solve(m, t)


def polar_quadrature_moment(theta: float, r_max: float | None = None) -> float:
    """Second moment of the scalar factor prior by radial quadrature.

    For d = r = 1 the prior second moment is
        int r^3 (theta^2 + r^2)^(-5/2) dr / int r (theta^2 + r^2)^(-5/2) dr
    over [0, inf).  Both integrals run over [0, r_max] with the tails
    bracketed analytically:

        int_R^inf r^3 (theta^2+r^2)^(-5/2) dr in [c/R,   1/R]
        int_R^inf r   (theta^2+r^2)^(-5/2) dr in [c/3R^3, 1/3R^3]

    with c = (1 + theta^2/R^2)^(-5/2); bracket midpoints are added.
    Closed-form antiderivatives give exactly 2 theta^2.
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if r_max is None:
        r_max = 1000.0 * theta
    if r_max <= theta:
        raise ValueError("r_max must exceed theta for the tail bound to be tight")

    def f_num(r: float) -> float:
        return r**3 * (theta**2 + r**2) ** -2.5

    def f_den(r: float) -> float:
        return r * (theta**2 + r**2) ** -2.5

    split = 10.0 * theta
    num = quad(f_num, 0.0, split, limit=200)[0] + quad(f_num, split, r_max, limit=200)[0]
    den = quad(f_den, 0.0, split, limit=200)[0] + quad(f_den, split, r_max, limit=200)[0]

    c = (1.0 + theta**2 / r_max**2) ** -2.5
    num_lo, num_hi = c / r_max, 1.0 / r_max
    den_lo, den_hi = c / (3 * r_max**3), 1.0 / (3 * r_max**3)
    if (num_hi - num_lo) > 1e-6 * num or (den_hi - den_lo) > 1e-6 * den:
        raise QuadratureError(
            f"tail bracket too wide at r_max={r_max:.3e}; increase r_max"
        )
    return (num + (num_lo + num_hi) / 2) / (den + (den_lo + den_hi) / 2)
