"""Low-rank Bayesian quantum-state estimation.

Density matrices are estimated from simulated Pauli measurements by a
Langevin sampler over Burer-Monteiro factors with a heavy-tailed
spectral prior, next to a Metropolis-Hastings mixture baseline, plus
the measurement simulators, a risk-bound evaluator and an experiment
harness for benchmarking them against each other.
"""

from .baseline_mh import MhConfig, MixtureState, mh_step, mixture_density, run_prob_estimator
from .harness import (
    EstimatorSpec,
    ExperimentConfig,
    ResultRecord,
    __version__,
    emit_plotdata,
    run_experiment,
    slope_regression,
)
from .langevin import (
    ChainState,
    DivergenceError,
    EstimateResult,
    SamplerConfig,
    grad_neg_log_posterior_real,
    langevin_step,
    likelihood_bm,
    neg_log_posterior_real,
    run_bm_sampler,
)
from .measurement import (
    DesignMode,
    EmpiricalFrequencies,
    MeasurementDesign,
    born_probabilities,
    build_design,
    simulate_counts,
)
from .prior import (
    IllConditionedError,
    PacBoundInputs,
    PriorParams,
    QuadratureError,
    grad_neg_log_prior_real,
    neg_log_prior,
    pac_bound,
    prior_second_moment_check,
)
from .qstate import (
    SystemSize,
    TargetKind,
    frobenius_error,
    init_factor,
    make_target,
    normalize_trace,
)
from .realify import StructureError, embed, hermitian_coords, is_embedded, unembed

__all__ = [
    "ChainState",
    "DesignMode",
    "DivergenceError",
    "EmpiricalFrequencies",
    "EstimateResult",
    "EstimatorSpec",
    "ExperimentConfig",
    "IllConditionedError",
    "MeasurementDesign",
    "MhConfig",
    "MixtureState",
    "PacBoundInputs",
    "PriorParams",
    "QuadratureError",
    "ResultRecord",
    "SamplerConfig",
    "StructureError",
    "SystemSize",
    "TargetKind",
    "__version__",
    "born_probabilities",
    "build_design",
    "embed",
    "emit_plotdata",
    "frobenius_error",
    "grad_neg_log_posterior_real",
    "grad_neg_log_prior_real",
    "hermitian_coords",
    "init_factor",
    "is_embedded",
    "langevin_step",
    "likelihood_bm",
    "make_target",
    "mh_step",
    "mixture_density",
    "neg_log_posterior_real",
    "neg_log_prior",
    "normalize_trace",
    "pac_bound",
    "prior_second_moment_check",
    "run_bm_sampler",
    "run_experiment",
    "run_prob_estimator",
    "simulate_counts",
    "slope_regression",
    "unembed",
]
