"""Pauli measurement designs, Born probabilities and count simulation.

Two experiment families are supported:

* per-qubit: every qubit is measured in one of the three Pauli bases,
  giving 3^n experiments with 2^n outcomes each (tensor products of
  single-qubit eigenprojectors);
* whole-system: one Pauli string sigma_a over the full register is
  measured, giving 4^n experiments with the two outcomes
  P_+- = (I +- sigma_a) / 2.

Operator stacks are built densely once per design and cached.  Trace
contractions run in the real Hermitian coordinate basis (see
:mod:`bmtomo.realify`), which both samplers share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache, reduce
from itertools import product

import numpy as np

from .realify import embed, hermitian_coords

MAX_QUBITS = 5

PAULI = {
    "I": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DesignMode(str, Enum):
    PER_QUBIT = "per-qubit"
    WHOLE_SYSTEM = "whole-system"


def pauli_matrix(label: str) -> np.ndarray:
    """The 2 x 2 Pauli matrix (or identity) named by ``label``."""
    try:
        return PAULI[label].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {label!r}; expected one of I, x, y, z")


def pauli_string(labels: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, leftmost label acting on
    the most significant qubit."""
    return reduce(np.kron, [pauli_matrix(a) for a in labels])


def outcome_signs(n: int, s: int) -> np.ndarray:
    """Signs o(s) for outcome index s: binary digits of s, most
    significant qubit first, with +1 for bit 0."""
    bits = (s >> np.arange(n - 1, -1, -1)) & 1
    return 1.0 - 2.0 * bits


@dataclass(eq=False)
class MeasurementDesign:
    """Dense operator family for one experiment mode.

    ``operators`` has shape (experiments, outcomes, d, d); experiments
    are ordered lexicographically over label strings (alphabet I, x, y,
    z), outcomes by the binary convention of :func:`outcome_signs`.
    """

    mode: DesignMode
    n: int
    labels: list[str]
    operators: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return 2 ** self.n

    @property
    def num_experiments(self) -> int:
        return self.operators.shape[0]

    @property
    def outcomes_per_experiment(self) -> int:
        return self.operators.shape[1]

    @cached_property
    def coord_stack(self) -> np.ndarray:
        """Real (experiments * outcomes, d^2) stack of operator
        coordinates; row k dotted with hermitian_coords(rho) is
        tr(P_k rho)."""
        d = self.d
        flat = self.operators.reshape(-1, d, d)
        stack = np.empty((flat.shape[0], d * d))
        for k in range(flat.shape[0]):
            hermitian_coords(flat[k], out=stack[k])
        return stack

    @cached_property
    def coord_gram(self) -> np.ndarray:
        """Normal-equations matrix coord_stack^t coord_stack, (d^2, d^2).

        Lets the residual-weighted operator sum be contracted as
        coord_stack^t phat - coord_gram h(rho), one matvec on a matrix
        that is smaller than the stack whenever there are more than d^2
        measurement rows."""
        return self.coord_stack.T @ self.coord_stack

    @cached_property
    def embedded_sym_stack(self) -> np.ndarray:
        """Flattened psi(P) + psi(P)^t per operator, for evaluating the
        embedded-side gradient formula on arbitrary real factors."""
        d = self.d
        flat = self.operators.reshape(-1, d, d)
        out = np.empty((flat.shape[0], 4 * d * d))
        for k in range(flat.shape[0]):
            e = embed(flat[k])
            out[k] = (e + e.T).ravel()
        return out

    @cached_property
    def embedded_stack(self) -> np.ndarray:
        """Flattened psi(P) per operator (embedded-side residuals)."""
        d = self.d
        flat = self.operators.reshape(-1, d, d)
        out = np.empty((flat.shape[0], 4 * d * d))
        for k in range(flat.shape[0]):
            out[k] = embed(flat[k]).ravel()
        return out


@dataclass
class EmpiricalFrequencies:
    """Outcome counts for every experiment of a design, m shots each."""

    counts: np.ndarray
    m: int

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts)
        if self.m < 1:
            raise ValueError(f"need m >= 1 replications, got {self.m}")
        if np.any(self.counts < 0):
            raise ValueError("negative outcome counts")
        row_sums = self.counts.sum(axis=1)
        if np.any(row_sums != self.m):
            raise ValueError("each experiment must carry exactly m counts")
        # cached: samplers read these once per step
        self._frequencies = self.counts / self.m
        self._frequencies_flat = self._frequencies.ravel()

    @property
    def frequencies(self) -> np.ndarray:
        return self._frequencies

    @property
    def frequencies_flat(self) -> np.ndarray:
        return self._frequencies_flat


def build_design(mode, n: int, max_qubits: int = MAX_QUBITS) -> MeasurementDesign:
    """Build and cache the dense operator family for ``mode`` at ``n``
    qubits.  Raises for n above the memory cap (dense stacks grow as
    6^n and 8^n).  The returned design is shared and must be treated
    as read-only."""
    return _build_design(DesignMode(mode), n, max_qubits)


@lru_cache(maxsize=None)
def _build_design(mode: DesignMode, n: int, max_qubits: int) -> MeasurementDesign:
    if n < 1:
        raise ValueError(f"need n >= 1 qubits, got {n}")
    if n > max_qubits:
        raise ValueError(
            f"n={n} exceeds the dense-operator cap of {max_qubits} qubits"
        )
    d = 2**n
    if mode is DesignMode.PER_QUBIT:
        labels = ["".join(p) for p in product("xyz", repeat=n)]
        operators = np.empty((len(labels), d, d, d), dtype=complex)
        eye = np.eye(2, dtype=complex)
        for a, lab in enumerate(labels):
            for s in range(d):
                signs = outcome_signs(n, s)
                factors = [
                    (eye + signs[j] * PAULI[lab[j]]) / 2 for j in range(n)
                ]
                operators[a, s] = reduce(np.kron, factors)
    else:
        labels = ["".join(p) for p in product("Ixyz", repeat=n)]
        operators = np.empty((len(labels), 2, d, d), dtype=complex)
        eye = np.eye(d, dtype=complex)
        for a, lab in enumerate(labels):
            sigma = pauli_string(lab)
            operators[a, 0] = (eye + sigma) / 2
            operators[a, 1] = (eye - sigma) / 2
    return MeasurementDesign(mode=mode, n=n, labels=labels, operators=operators)


def born_probabilities(design: MeasurementDesign, rho: np.ndarray) -> np.ndarray:
    """Outcome probabilities p_(a,s) = tr(P_s^a rho) as an
    (experiments, outcomes) array.

    Linear in rho; callers may pass unnormalized Hermitian matrices
    (the sampler evaluates Gram matrices of unconstrained factors).
    """
    rho = np.asarray(rho)
    d = design.d
    if rho.shape != (d, d):
        raise ValueError(f"state has shape {rho.shape}, design needs ({d}, {d})")
    p = design.coord_stack @ hermitian_coords(rho)
    return p.reshape(design.num_experiments, design.outcomes_per_experiment)


def simulate_counts(
    design: MeasurementDesign, rho: np.ndarray, m: int, seed=None
) -> EmpiricalFrequencies:
    """Draw m shots of every experiment on state rho.

    Per-qubit experiments draw one multinomial over the 2^n outcomes;
    whole-system experiments draw a binomial for the + outcome.
    """
    if m < 1:
        raise ValueError(f"need m >= 1 replications, got {m}")
    rng = np.random.default_rng(seed)
    probs = born_probabilities(design, rho)
    probs = np.clip(probs, 0.0, None)
    counts = np.empty(probs.shape, dtype=np.int64)
    if design.mode is DesignMode.PER_QUBIT:
        for a in range(probs.shape[0]):
            row = probs[a] / probs[a].sum()
            counts[a] = rng.multinomial(m, row)
    else:
        p_plus = np.clip(probs[:, 0], 0.0, 1.0)
        plus = rng.binomial(m, p_plus)
        counts[:, 0] = plus
        counts[:, 1] = m - plus
    return EmpiricalFrequencies(counts=counts, m=m)
