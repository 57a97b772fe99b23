"""HTTP service wrapping the estimators and the experiment harness.

The service is a thin layer: requests are translated into the same
harness/sampler calls the CLI makes, so results agree between the two
front ends for identical parameters.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from ..baseline_mh import MhConfig, run_prob_estimator
from ..harness import (
    EstimatorSpec,
    ExperimentConfig,
    __version__,
    run_experiment,
)
from ..langevin import DivergenceError, SamplerConfig, run_bm_sampler
from ..measurement import EmpiricalFrequencies, build_design
from .models import (
    CountsEstimateRequest,
    DensityPayload,
    EstimateRequest,
    EstimateResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
)

app = FastAPI(title="bmtomo", version=__version__)


def _coerce_lam(lam) -> float | None:
    if lam is None or lam == "m/2":
        return None
    try:
        value = float(lam)
    except (TypeError, ValueError):
        raise HTTPException(422, f"lambda must be a number or 'm/2', got {lam!r}")
    return value


def _density_payload(rho: np.ndarray | None) -> DensityPayload | None:
    if rho is None:
        return None
    return DensityPayload(real=rho.real.tolist(), imag=rho.imag.tolist())


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/estimate", response_model=EstimateResponse)
def estimate(req: EstimateRequest) -> EstimateResponse:
    try:
        config = ExperimentConfig(
            experiment="accuracy_boxplot",
            n=(req.n,),
            estimators=(EstimatorSpec.parse(req.estimator),),
            target=req.target,
            m=req.m,
            seeds=(req.seed,),
            iterations=req.iterations,
            burnin=req.burnin,
            eta=req.eta,
            beta=req.beta,
            theta=req.theta,
            lam=_coerce_lam(req.lam),
            design=req.design,
            noise_convention=req.noise_convention,
        )
        record = run_experiment(config)
    except ValueError as exc:
        raise HTTPException(422, str(exc))
    row = record.rows[0]
    final_error = row["final_error"]
    return EstimateResponse(
        rho=_density_payload(record.estimates[0]),
        final_error=None if not np.isfinite(final_error) else final_error,
        diverged_at=row["diverged_at"],
        acceptance_rate=row["acceptance_rate"],
        wall_time_per_iteration=row["wall_time_per_iteration"],
        config=record.config,
    )


@app.post("/estimate/from-counts", response_model=EstimateResponse)
def estimate_from_counts(req: CountsEstimateRequest) -> EstimateResponse:
    try:
        design = build_design(req.design, req.n)
        counts = np.asarray(req.counts, dtype=np.int64)
        expected = (design.num_experiments, design.outcomes_per_experiment)
        if counts.shape != expected:
            raise ValueError(
                f"counts shape {counts.shape} does not match design shape {expected}"
            )
        freqs = EmpiricalFrequencies(counts=counts, m=req.m)
        spec = EstimatorSpec.parse(req.estimator)
        lam = _coerce_lam(req.lam)
        if spec.kind == "bm":
            sampler = SamplerConfig(
                eta=req.eta,
                beta=req.beta,
                theta=req.theta,
                lam=lam,
                iterations=req.iterations,
                burnin=req.burnin,
                seed=req.seed,
                noise_convention=req.noise_convention,
            )
            result = run_bm_sampler(
                spec.resolve_rank(design.d), freqs, design, sampler
            )
        else:
            mh = MhConfig(
                lam=lam,
                iterations=req.iterations,
                burnin=req.burnin,
                seed=req.seed,
            )
            result = run_prob_estimator(freqs, design, mh)
    except DivergenceError as exc:
        return EstimateResponse(
            rho=None,
            diverged_at=exc.step,
            config={"estimator": req.estimator, "n": req.n, "m": req.m},
        )
    except ValueError as exc:
        raise HTTPException(422, str(exc))
    return EstimateResponse(
        rho=_density_payload(result.rho_hat),
        acceptance_rate=result.acceptance_rate,
        wall_time_per_iteration=result.wall_time_per_iteration,
        config=result.config,
    )


@app.post("/experiments/run", response_model=ExperimentResponse)
def experiments_run(req: ExperimentRequest) -> ExperimentResponse:
    try:
        config = ExperimentConfig(
            experiment=req.experiment,
            n=tuple(req.n),
            estimators=tuple(EstimatorSpec.parse(e) for e in req.estimators),
            target=req.target,
            m=req.m,
            m_grid=None if req.m_grid is None else tuple(req.m_grid),
            seeds=tuple(req.seeds),
            iterations=req.iterations,
            burnin=req.burnin,
            eta=req.eta,
            beta=req.beta,
            theta=req.theta,
            lam=_coerce_lam(req.lam),
            design=req.design,
            noise_convention=req.noise_convention,
            workers=req.workers,
        )
        record = run_experiment(config)
    except ValueError as exc:
        raise HTTPException(422, str(exc))
    return ExperimentResponse(record=record.to_json_dict())
