"""Metropolis-Hastings baseline over mixture-parameterized states.

States are pairs (gamma, V): a length-d probability vector and a d x d
complex matrix with unit-norm columns, representing

    rho = sum_i gamma_i v_i v_i*.

The pseudo-posterior is exp(-lambda L(rho)) times a Dirichlet(alpha)
prior on gamma and the uniform sphere prior on columns, with the same
squared-residual likelihood L the Langevin module uses.  Proposals
resample gamma from a concentrated Dirichlet around the current point
(asymmetric, corrected in the acceptance ratio) and perturb one column
with a Gaussian step followed by renormalization (symmetric on the
sphere, no correction needed).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .langevin import EstimateResult
from .measurement import EmpiricalFrequencies, MeasurementDesign
from .qstate import frobenius_error, normalize_trace
from .realify import hermitian_coords

DEFAULT_KAPPA = 1000.0
DEFAULT_MOVE_SCALE = 0.03

SIMPLEX_TOL = 1e-12
COLUMN_TOL = 1e-12

_GAMMA_FLOOR = 1e-300


@dataclass
class MixtureState:
    """Mixture weights and unit-norm component vectors."""

    gamma: np.ndarray
    v: np.ndarray


def _check_state(state: MixtureState) -> int:
    gamma, v = state.gamma, state.v
    d = gamma.shape[0]
    if v.shape != (d, d):
        raise ValueError(f"component matrix shape {v.shape} does not match d={d}")
    if np.any(gamma < 0) or abs(float(gamma.sum()) - 1.0) > SIMPLEX_TOL:
        raise ValueError("mixture weights are not a probability vector")
    norms = np.linalg.norm(v, axis=0)
    if np.any(np.abs(norms - 1.0) > COLUMN_TOL):
        raise ValueError("component columns are not unit norm")
    return d


def mixture_density(state: MixtureState) -> np.ndarray:
    """rho = V diag(gamma) V*, Hermitian PSD with unit trace."""
    _check_state(state)
    scaled = state.v * state.gamma
    return scaled @ state.v.conj().T


@dataclass(frozen=True)
class MhConfig:
    """Chain length and proposal tuning for the baseline estimator.

    ``kappa`` concentrates the Dirichlet proposal around the current
    weights; None freezes the weights entirely, leaving only the
    (symmetric) column move.  ``alpha`` defaults to the sparsity prior
    1/d.  ``lam`` resolves to m / 2 like the Langevin chain.
    """

    lam: Optional[float] = None
    kappa: Optional[float] = DEFAULT_KAPPA
    move_scale: float = DEFAULT_MOVE_SCALE
    alpha: Optional[float] = None
    iterations: int = 10_000
    burnin: int = 2_000
    seed: object = None

    def __post_init__(self) -> None:
        if self.lam is not None and self.lam < 0:
            raise ValueError(f"likelihood weight must be nonnegative, got {self.lam}")
        if self.kappa is not None and self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.move_scale < 0:
            raise ValueError(f"move scale must be nonnegative, got {self.move_scale}")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.iterations < 1:
            raise ValueError(f"need at least one iteration, got {self.iterations}")
        if not 0 <= self.burnin < self.iterations:
            raise ValueError(
                f"burnin {self.burnin} must lie in [0, iterations={self.iterations})"
            )

    def resolve_lam(self, m: int) -> float:
        return self.lam if self.lam is not None else m / 2

    def resolve_alpha(self, d: int) -> float:
        return self.alpha if self.alpha is not None else 1.0 / d


def _neg_log_likelihood(rho: np.ndarray, freqs, design, lam: float) -> float:
    res = freqs.frequencies_flat - design.coord_stack @ hermitian_coords(rho)
    return lam * float(res @ res)


def _dirichlet_logpdf(x: np.ndarray, conc: np.ndarray) -> float:
    # direct formula; scipy.stats.dirichlet is fussy about simplex rounding
    return float(
        gammaln(conc.sum()) - gammaln(conc).sum() + ((conc - 1.0) * np.log(x)).sum()
    )


def _propose_and_decide(
    state: MixtureState,
    rho: np.ndarray,
    nll: float,
    freqs,
    design,
    lam: float,
    kappa: Optional[float],
    move_scale: float,
    alpha: float,
    rng: np.random.Generator,
):
    d = state.gamma.shape[0]
    log_ratio = 0.0

    if kappa is None:
        gamma_new = state.gamma
    else:
        conc_fwd = kappa * state.gamma + alpha
        gamma_new = np.clip(rng.dirichlet(conc_fwd), _GAMMA_FLOOR, None)
        gamma_new = gamma_new / gamma_new.sum()
        conc_rev = kappa * gamma_new + alpha
        log_gamma_diff = float(np.log(gamma_new).sum() - np.log(state.gamma).sum())
        log_ratio += (alpha - 1.0) * log_gamma_diff
        log_ratio += _dirichlet_logpdf(state.gamma, conc_rev) - _dirichlet_logpdf(
            gamma_new, conc_fwd
        )

    v_new = state.v.copy()
    if move_scale > 0.0:
        j = int(rng.integers(d))
        bump = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        col = state.v[:, j] + move_scale * bump
        norm = np.linalg.norm(col)
        if norm > 0.0:
            v_new[:, j] = col / norm

    proposal = MixtureState(gamma=gamma_new, v=v_new)
    # invariants hold by construction here; skip mixture_density's checks
    rho_new = (v_new * gamma_new) @ v_new.conj().T
    nll_new = _neg_log_likelihood(rho_new, freqs, design, lam)
    log_ratio -= nll_new - nll

    if log_ratio >= 0.0 or rng.random() < np.exp(log_ratio):
        return proposal, rho_new, nll_new, True
    return state, rho, nll, False


def mh_step(
    state: MixtureState,
    freqs: EmpiricalFrequencies,
    design: MeasurementDesign,
    lam: float,
    rng: np.random.Generator,
    kappa: Optional[float] = DEFAULT_KAPPA,
    move_scale: float = DEFAULT_MOVE_SCALE,
    alpha: Optional[float] = None,
):
    """One proposal/accept decision; returns (state, accepted)."""
    d = _check_state(state)
    if alpha is None:
        alpha = 1.0 / d
    rho = mixture_density(state)
    nll = _neg_log_likelihood(rho, freqs, design, lam)
    new_state, _, _, accepted = _propose_and_decide(
        state, rho, nll, freqs, design, lam, kappa, move_scale, alpha, rng
    )
    return new_state, accepted


def initial_state(d: int, alpha: float, rng: np.random.Generator) -> MixtureState:
    """Draw (gamma, V) from the prior: Dirichlet weights, uniform columns."""
    gamma = np.clip(rng.dirichlet(np.full(d, alpha)), _GAMMA_FLOOR, None)
    gamma = gamma / gamma.sum()
    v = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    v /= np.linalg.norm(v, axis=0)
    return MixtureState(gamma=gamma, v=v)


def run_prob_estimator(
    freqs: EmpiricalFrequencies,
    design: MeasurementDesign,
    config: MhConfig,
    rho0: Optional[np.ndarray] = None,
) -> EstimateResult:
    """Run the chain and return the posterior-mean estimate.

    Same result contract as the Langevin sampler: trace-normalized mean
    of the post-burn-in states, error traces when the target is known,
    per-step transition timings.  The likelihood of the current state
    is cached and recomputed only for proposals.
    """
    d = design.d
    rng = np.random.default_rng(config.seed)
    lam = config.resolve_lam(freqs.m)
    alpha = config.resolve_alpha(d)
    iterations, burnin = config.iterations, config.burnin

    state = initial_state(d, alpha, rng)
    rho = mixture_density(state)
    nll = _neg_log_likelihood(rho, freqs, design, lam)

    accum = np.zeros((d, d), dtype=complex)
    count = 0
    accepted_total = 0
    step_seconds = np.empty(iterations)
    track = rho0 is not None
    err_running = np.full(iterations, np.nan) if track else None
    err_instant = np.full(iterations, np.nan) if track else None

    for k in range(iterations):
        tic = time.perf_counter()
        state, rho, nll, accepted = _propose_and_decide(
            state, rho, nll, freqs, design, lam,
            config.kappa, config.move_scale, alpha, rng,
        )
        step_seconds[k] = time.perf_counter() - tic
        accepted_total += accepted
        if k + 1 > burnin:
            accum += rho
            count += 1
            if track:
                err_running[k] = frobenius_error(normalize_trace(accum / count), rho0)
        if track:
            err_instant[k] = frobenius_error(normalize_trace(rho), rho0)

    rho_raw = accum / count
    return EstimateResult(
        rho_hat=normalize_trace(rho_raw),
        raw_trace=float(np.trace(rho_raw).real),
        wall_time_per_iteration=float(step_seconds.mean()),
        step_seconds=step_seconds,
        config={
            "estimator": "prob",
            "r": d,
            "d": d,
            "m": freqs.m,
            "lam": lam,
            "kappa": config.kappa,
            "move_scale": config.move_scale,
            "alpha": alpha,
            "iterations": iterations,
            "burnin": burnin,
            "seed": config.seed if not isinstance(config.seed, np.random.Generator) else None,
        },
        error_trace=err_running,
        error_trace_instant=err_instant,
        acceptance_rate=accepted_total / iterations,
    )
