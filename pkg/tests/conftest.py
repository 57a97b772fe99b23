"""Shared generators for random test inputs."""

import numpy as np


def random_complex(rng, p, q):
    """Standard complex Gaussian matrix, p x q."""
    return rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))


def random_psd(rng, d, ridge=0.1):
    """Hermitian PSD with condition number bounded by the ridge."""
    a = random_complex(rng, d, d)
    return a @ a.conj().T + ridge * np.eye(d)


def random_density(rng, d):
    """Random full-rank density matrix (normalized Wishart)."""
    m = random_psd(rng, d, ridge=0.05)
    return m / np.trace(m).real
