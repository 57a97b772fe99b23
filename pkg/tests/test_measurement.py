"""Tests for operator construction, Born probabilities and simulation."""

import numpy as np
import pytest

from bmtomo.measurement import (
    DesignMode,
    EmpiricalFrequencies,
    born_probabilities,
    build_design,
    outcome_signs,
    pauli_matrix,
    pauli_string,
    simulate_counts,
)

from conftest import random_density

ZERO_STATE = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def test_pauli_matrices():
    assert np.array_equal(pauli_matrix("z"), np.diag([1.0, -1.0]).astype(complex))
    y = pauli_matrix("y")
    assert np.array_equal(y, np.array([[0, -1j], [1j, 0]]))
    assert np.abs(y - y.conj().T).max() == 0.0
    assert np.trace(y) == 0.0
    x = pauli_matrix("x")
    assert np.array_equal(x @ x, np.eye(2))
    with pytest.raises(ValueError):
        pauli_matrix("w")


def test_pauli_string_order():
    zi = pauli_string("zI")
    assert np.array_equal(zi, np.kron(pauli_matrix("z"), np.eye(2)))


def test_outcome_signs_convention():
    assert np.array_equal(outcome_signs(2, 0), [1.0, 1.0])
    assert np.array_equal(outcome_signs(2, 1), [1.0, -1.0])
    assert np.array_equal(outcome_signs(2, 2), [-1.0, 1.0])


def test_per_qubit_design_single_qubit():
    design = build_design(DesignMode.PER_QUBIT, 1)
    assert design.labels == ["x", "y", "z"]
    assert design.operators.shape == (3, 2, 2, 2)
    for a in range(3):
        total = design.operators[a].sum(axis=0)
        assert np.abs(total - np.eye(2)).max() < 1e-12
        for s in range(2):
            eigs = np.sort(np.linalg.eigvalsh(design.operators[a, s]))
            assert np.abs(eigs - [0.0, 1.0]).max() < 1e-12


def test_whole_system_design_single_qubit():
    design = build_design("whole-system", 1)
    assert design.labels == ["I", "x", "y", "z"]
    assert design.operators.shape == (4, 2, 2, 2)
    # the all-identity string measures nothing: P_+ = I, P_- = 0
    assert np.array_equal(design.operators[0, 0], np.eye(2))
    assert np.array_equal(design.operators[0, 1], np.zeros((2, 2)))


def test_per_qubit_two_qubit_projectors():
    design = build_design("per-qubit", 2)
    assert len(design.labels) == 9
    assert design.labels[:4] == ["xx", "xy", "xz", "yx"]  # lexicographic
    assert design.operators.shape == (9, 4, 4, 4)
    for a in range(9):
        for s in range(4):
            eigs = np.sort(np.linalg.eigvalsh(design.operators[a, s]))
            assert np.abs(eigs - [0.0, 0.0, 0.0, 1.0]).max() < 1e-12


def test_design_completeness_and_psd():
    for mode in DesignMode:
        for n in (1, 2, 3, 4):
            design = build_design(mode, n)
            totals = design.operators.sum(axis=1)
            assert np.abs(totals - np.eye(design.d)).max() < 1e-12
            flat = design.operators.reshape(-1, design.d, design.d)
            for op in flat:
                assert np.linalg.eigvalsh(op).min() >= -1e-12


def test_design_size_cap():
    with pytest.raises(ValueError):
        build_design("whole-system", 6)


def test_born_eigenstate():
    design = build_design("per-qubit", 1)
    table = born_probabilities(design, ZERO_STATE)
    assert np.abs(table[2] - [1.0, 0.0]).max() < 1e-12  # z experiment
    assert np.abs(table[:2] - 0.5).max() < 1e-12


def test_born_maximally_mixed():
    rho = np.eye(4) / 4
    per_qubit = born_probabilities(build_design("per-qubit", 2), rho)
    assert np.abs(per_qubit - 0.25).max() < 1e-12
    whole = born_probabilities(build_design("whole-system", 2), rho)
    assert np.abs(whole[1:] - 0.5).max() < 1e-12  # non-identity strings
    assert np.abs(whole[0] - [1.0, 0.0]).max() < 1e-12


def test_born_rows_sum_to_one_and_linearity():
    rng = np.random.default_rng(0)
    for mode in DesignMode:
        design = build_design(mode, 2)
        rho1, rho2 = random_density(rng, 4), random_density(rng, 4)
        t1 = born_probabilities(design, rho1)
        assert np.abs(t1.sum(axis=1) - 1.0).max() < 1e-10
        alpha = 0.3
        mix = born_probabilities(design, alpha * rho1 + (1 - alpha) * rho2)
        gap = np.abs(mix - (alpha * t1 + (1 - alpha) * born_probabilities(design, rho2)))
        assert gap.max() < 1e-12
    with pytest.raises(ValueError):
        born_probabilities(build_design("per-qubit", 1), np.eye(4) / 4)


def test_simulate_eigenstate_is_deterministic():
    design = build_design("per-qubit", 1)
    freqs = simulate_counts(design, ZERO_STATE, 50, seed=3)
    assert np.array_equal(freqs.frequencies[2], [1.0, 0.0])


def test_simulate_single_shot_rows():
    rng = np.random.default_rng(4)
    design = build_design("per-qubit", 2)
    freqs = simulate_counts(design, random_density(rng, 4), 1, seed=5)
    assert np.all(freqs.counts.sum(axis=1) == 1)
    assert np.all((freqs.counts == 0) | (freqs.counts == 1))


def test_frequencies_are_count_multiples():
    rng = np.random.default_rng(6)
    for mode in DesignMode:
        design = build_design(mode, 2)
        m = 37
        freqs = simulate_counts(design, random_density(rng, 4), m, seed=7)
        assert np.array_equal(freqs.frequencies * m, freqs.counts)
        assert np.all(freqs.counts.sum(axis=1) == m)
        assert freqs.m == m


def test_simulate_reproducible():
    design = build_design("whole-system", 2)
    rho = random_density(np.random.default_rng(8), 4)
    a = simulate_counts(design, rho, 100, seed=9)
    b = simulate_counts(design, rho, 100, seed=9)
    assert np.array_equal(a.counts, b.counts)


def test_simulate_concentration():
    rng = np.random.default_rng(10)
    m = 100_000
    for mode in DesignMode:
        design = build_design(mode, 2)
        rho = random_density(rng, 4)
        p = born_probabilities(design, rho)
        for seed in range(3):
            phat = simulate_counts(design, rho, m, seed=seed).frequencies
            bound = 5.0 * np.sqrt(p * (1 - p) / m) + 1e-6
            assert np.all(np.abs(phat - p) <= bound)


def test_empirical_frequencies_validation():
    with pytest.raises(ValueError):
        EmpiricalFrequencies(counts=np.array([[1, 1], [2, 1]]), m=2)  # bad row sum
    with pytest.raises(ValueError):
        EmpiricalFrequencies(counts=np.array([[-1, 3]]), m=2)


def test_build_design_caches():
    assert build_design("per-qubit", 2) is build_design(DesignMode.PER_QUBIT, 2)
