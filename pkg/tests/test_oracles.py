"""Tests for the brute-force verification helpers."""

import numpy as np
import pytest

from bmtomo.langevin import likelihood_bm
from bmtomo.measurement import (
    EmpiricalFrequencies,
    build_design,
    simulate_counts,
)
from bmtomo.oracles import (
    FiniteDiffSpec,
    dense_likelihood_oracle,
    finite_diff_gradient,
    polar_quadrature_moment,
)

from conftest import random_complex, random_density


def test_finite_diff_on_quadratic():
    rng = np.random.default_rng(0)
    t = rng.standard_normal((4, 3))
    fd = finite_diff_gradient(lambda x: float((x**2).sum()), t)
    assert np.abs(fd - 2 * t).max() < 1e-9


def test_finite_diff_on_constant():
    fd = finite_diff_gradient(lambda x: 3.5, np.ones((2, 2)))
    assert np.array_equal(fd, np.zeros((2, 2)))


def test_finite_diff_spec_validation():
    with pytest.raises(ValueError):
        FiniteDiffSpec(step=0.0)


def test_finite_diff_rejects_non_finite():
    with pytest.raises(FloatingPointError):
        finite_diff_gradient(lambda x: float("nan"), np.zeros((1, 1)))


def test_dense_likelihood_agrees_with_fast_path():
    rng = np.random.default_rng(1)
    for mode in ("per-qubit", "whole-system"):
        for n in (1, 2):
            design = build_design(mode, n)
            d = design.d
            rho = random_density(rng, d)
            for k in range(25):
                freqs = simulate_counts(design, rho, 64, seed=k)
                y = random_complex(rng, d, rng.integers(1, d + 1))
                y /= np.linalg.norm(y)  # sampler-scale factor, trace(YY*) = 1
                gap = abs(
                    dense_likelihood_oracle(y, freqs, design)
                    - likelihood_bm(y, freqs, design)
                )
                assert gap < 1e-12


def test_dense_likelihood_perfect_data():
    design = build_design("whole-system", 1)
    # |0><0| gives dyadic outcome probabilities, exact at even m
    counts = np.array([[2, 0], [1, 1], [1, 1], [2, 0]])
    freqs = EmpiricalFrequencies(counts=counts, m=2)
    y = np.array([[1.0], [0.0]], dtype=complex)
    assert dense_likelihood_oracle(y, freqs, design) < 1e-30
    assert likelihood_bm(y, freqs, design) < 1e-30


def test_dense_likelihood_at_zero_factor():
    rng = np.random.default_rng(2)
    design = build_design("per-qubit", 2)
    freqs = simulate_counts(design, random_density(rng, 4), 32, seed=3)
    y = np.zeros((4, 2), dtype=complex)
    expected = float((freqs.frequencies**2).sum())
    assert abs(dense_likelihood_oracle(y, freqs, design) - expected) < 1e-14


def test_polar_quadrature_moment_values():
    assert abs(polar_quadrature_moment(1.0) - 2.0) < 1e-6
    assert abs(polar_quadrature_moment(2.0) - 8.0) < 4e-6
    assert abs(polar_quadrature_moment(0.1) - 0.02) < 1e-8
    with pytest.raises(ValueError):
        polar_quadrature_moment(-1.0)


def test_polar_quadrature_moment_deterministic():
    assert polar_quadrature_moment(1.3) == polar_quadrature_moment(1.3)
