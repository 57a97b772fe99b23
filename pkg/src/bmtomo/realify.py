"""Real embedding of complex matrices and related identities.

A complex p x q matrix M maps to the real 2p x 2q matrix

    psi(M) = (1/sqrt(2)) [[Re M, -Im M], [Im M, Re M]],

which turns complex matrix algebra into real matrix algebra: traces of
Hermitian products and determinants of Hermitian PSD matrices are
recoverable from the embedded side.  The sampler runs entirely on
embedded factors, so everything here is kept allocation-light.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)

BLOCK_TOL = 1e-9


class StructureError(ValueError):
    """Raised when a real matrix does not carry the expected block layout."""


def embed(m: np.ndarray) -> np.ndarray:
    """Map a complex p x q matrix to its real 2p x 2q representation.

    Returns (1/sqrt(2)) * [[Re m, -Im m], [Im m, Re m]].  Mirrored
    blocks are written from the same intermediate arrays, so the block
    layout holds bitwise, not just to rounding.
    """
    m = np.asarray(m)
    p, q = m.shape
    re = m.real / SQRT2
    im = m.imag / SQRT2
    out = np.empty((2 * p, 2 * q))
    out[:p, :q] = re
    out[p:, q:] = re
    out[p:, :q] = im
    out[:p, q:] = -im
    return out


def unembed(t: np.ndarray, tol: float = BLOCK_TOL) -> np.ndarray:
    """Invert :func:`embed`.

    The diagonal blocks must agree and the off-diagonal blocks must be
    negatives of each other; deviations beyond ``tol`` raise
    :class:`StructureError`.  Block averages are used so that rounding
    noise well below ``tol`` does not accumulate into the result.
    """
    t = np.asarray(t, dtype=float)
    p2, q2 = t.shape
    if p2 % 2 or q2 % 2:
        raise StructureError(f"embedded matrix must have even sides, got {t.shape}")
    p, q = p2 // 2, q2 // 2
    a1, a2 = t[:p, :q], t[p:, q:]
    b1, b2 = t[p:, :q], t[:p, q:]
    gap = max(np.abs(a1 - a2).max(initial=0.0), np.abs(b1 + b2).max(initial=0.0))
    if gap > tol:
        raise StructureError(f"block structure violated by {gap:.3e} (tol {tol:.1e})")
    return SQRT2 * ((a1 + a2) / 2 + 1j * (b1 - b2) / 2)


def is_embedded(t: np.ndarray) -> bool:
    """True when ``t`` carries the block layout exactly (bitwise).

    The sampler's iterates keep the layout exactly: the update combines
    exactly-structured matrices entrywise, which preserves mirrored
    entries bit for bit.  This makes an exact check a reliable fast-path
    dispatch and never misroutes finite-difference probe points.
    """
    t = np.asarray(t)
    p2, q2 = t.shape
    if p2 % 2 or q2 % 2:
        return False
    p, q = p2 // 2, q2 // 2
    return np.array_equal(t[:p, :q], t[p:, q:]) and np.array_equal(
        t[:p, q:], -t[p:, :q]
    )


def real_gram(t: np.ndarray) -> np.ndarray:
    """Return sqrt(2) * T T^t, the embedded Gram matrix.

    For T = psi(Y) this equals psi(Y Y*).
    """
    t = np.asarray(t, dtype=float)
    return SQRT2 * (t @ t.T)


def hermitian_coords(m: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Coordinates of a Hermitian d x d matrix in an orthonormal real basis.

    Layout: [diagonal; sqrt(2) Re upper triangle; sqrt(2) Im upper
    triangle], a real vector of length d^2 satisfying
    tr(M N) = <coords(M), coords(N)> for Hermitian M, N.  This turns the
    trace contractions of the likelihood into real dot products.
    """
    m = np.asarray(m)
    d = m.shape[0]
    iu = _upper_indices(d)
    k = d + iu[0].size
    if out is None:
        out = np.empty(d * d)
    upper = m[iu]
    out[:d] = m.ravel()[:: d + 1].real
    np.multiply(upper.real, SQRT2, out=out[d:k])
    np.multiply(upper.imag, SQRT2, out=out[k:])
    return out


def from_hermitian_coords(v: np.ndarray, d: int, out: np.ndarray | None = None) -> np.ndarray:
    """Rebuild the Hermitian matrix with coordinate vector ``v``.

    ``out`` may be a reused (d, d) complex buffer; every entry is
    overwritten, so no zeroing is needed.
    """
    v = np.asarray(v, dtype=float)
    if v.size != d * d:
        raise ValueError(f"coordinate vector has size {v.size}, expected {d * d}")
    iu = _upper_indices(d)
    k = d + iu[0].size
    m = np.empty((d, d), dtype=complex) if out is None else out
    upper = (v[d:k] + 1j * v[k:]) / SQRT2
    m[iu] = upper
    m[iu[1], iu[0]] = upper.conj()
    m.ravel()[:: d + 1] = v[:d]
    return m


_UPPER_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _upper_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    idx = _UPPER_CACHE.get(d)
    if idx is None:
        idx = np.triu_indices(d, 1)
        _UPPER_CACHE[d] = idx
    return idx


def psd_logdet(m: np.ndarray) -> float:
    """log det of a Hermitian (or symmetric) PSD matrix via Cholesky.

    Returns -inf for singular PSD input.  Indefinite input raises
    ValueError; genuinely PSD matrices that fail Cholesky due to
    rounding are treated as singular.
    """
    m = np.asarray(m)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        eig_min = float(np.linalg.eigvalsh(m).min())
        scale = max(float(np.abs(m).max()), 1.0)
        if eig_min < -1e-10 * scale:
            raise ValueError(
                f"matrix is not PSD (min eigenvalue {eig_min:.3e})"
            ) from None
        return -np.inf
    diag = np.abs(np.diagonal(chol))
    if np.any(diag == 0.0):
        return -np.inf
    return 2.0 * float(np.log(diag).sum())


def psd_det(m: np.ndarray) -> float:
    """Determinant of a Hermitian PSD matrix (0.0 when singular)."""
    logdet = psd_logdet(m)
    if logdet == -np.inf:
        return 0.0
    return float(np.exp(logdet))


def embedding_identity_gaps(
    m: np.ndarray, n: np.ndarray, hermitian_tol: float = 1e-10
) -> tuple[float, float]:
    """Gaps in the two embedding identities for Hermitian PSD M, N.

    Returns (trace_gap, det_gap) with
        trace_gap = |tr(M N) - tr(psi(M) psi(N))|
        det_gap   = |det(M) - sqrt(2^d det(psi(M)))|
    Both vanish in exact arithmetic.  Determinants go through log space
    so large d stays finite.
    """
    m = np.asarray(m, dtype=complex)
    n = np.asarray(n, dtype=complex)
    if m.shape != n.shape or m.shape[0] != m.shape[1]:
        raise ValueError(f"need square matrices of equal size, got {m.shape}, {n.shape}")
    for name, mat in (("M", m), ("N", n)):
        herm_gap = float(np.abs(mat - mat.conj().T).max())
        if herm_gap > hermitian_tol:
            raise ValueError(f"{name} is not Hermitian (gap {herm_gap:.3e})")
    d = m.shape[0]

    trace_complex = float(np.trace(m @ n).real)
    em, en = embed(m), embed(n)
    trace_real = float(np.trace(em @ en))
    trace_gap = abs(trace_complex - trace_real)

    det_complex = psd_det(m)
    logdet_embedded = psd_logdet(em)
    if logdet_embedded == -np.inf:
        det_from_embedding = 0.0
    else:
        det_from_embedding = float(np.exp((d * np.log(2.0) + logdet_embedded) / 2.0))
    det_gap = abs(det_complex - det_from_embedding)
    return trace_gap, det_gap
