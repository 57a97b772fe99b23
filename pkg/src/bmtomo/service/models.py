"""Request/response schemas for the HTTP service."""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, Field

from ..harness import EXPERIMENTS


class EstimateRequest(BaseModel):
    """Estimate a benchmark target from freshly simulated data."""

    n: int = Field(ge=1, le=5)
    target: str = "rank2"
    estimator: str = "bm:2"
    m: int = Field(default=4096, ge=1)
    seed: int = 0
    design: str = "whole-system"
    iterations: int = Field(default=10_000, ge=1)
    burnin: int = Field(default=2_000, ge=0)
    eta: float = Field(default=1e-5, gt=0)
    beta: float = Field(default=1e3, gt=0)
    theta: Optional[float] = Field(default=None, gt=0)
    lam: Optional[Union[float, str]] = None  # float, or the literal "m/2"
    noise_convention: str = "algorithm1"


class CountsEstimateRequest(BaseModel):
    """Estimate from caller-supplied outcome counts."""

    n: int = Field(ge=1, le=5)
    design: str = "whole-system"
    counts: list[list[int]]
    m: int = Field(ge=1)
    estimator: str = "bm:2"
    seed: int = 0
    iterations: int = Field(default=10_000, ge=1)
    burnin: int = Field(default=2_000, ge=0)
    eta: float = Field(default=1e-5, gt=0)
    beta: float = Field(default=1e3, gt=0)
    theta: Optional[float] = Field(default=None, gt=0)
    lam: Optional[Union[float, str]] = None
    noise_convention: str = "algorithm1"


class DensityPayload(BaseModel):
    """A complex matrix split into real and imaginary parts."""

    real: list[list[float]]
    imag: list[list[float]]


class EstimateResponse(BaseModel):
    rho: Optional[DensityPayload]
    final_error: Optional[float] = None
    diverged_at: Optional[int] = None
    acceptance_rate: Optional[float] = None
    wall_time_per_iteration: Optional[float] = None
    config: dict


class ExperimentRequest(BaseModel):
    """Mirror of the harness ExperimentConfig."""

    experiment: str = Field(pattern="|".join(EXPERIMENTS))
    n: list[int]
    estimators: list[str]
    target: str = "rank2"
    m: Optional[int] = Field(default=None, ge=1)
    m_grid: Optional[list[int]] = None
    seeds: list[int] = Field(default_factory=lambda: list(range(10)))
    iterations: int = Field(default=10_000, ge=1)
    burnin: int = Field(default=2_000, ge=0)
    eta: float = Field(default=1e-5, gt=0)
    beta: float = Field(default=1e3, gt=0)
    theta: Optional[float] = Field(default=None, gt=0)
    lam: Optional[Union[float, str]] = None
    design: str = "whole-system"
    noise_convention: str = "algorithm1"
    workers: int = Field(default=1, ge=1)


class ExperimentResponse(BaseModel):
    record: dict


class HealthResponse(BaseModel):
    status: str
    version: str
