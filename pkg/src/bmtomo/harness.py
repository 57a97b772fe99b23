"""Experiment harness: deterministic runs, CSV/JSON artifacts.

Four experiment kinds cover the standard comparisons: final-accuracy
sweeps over seeds (boxplot data), per-iteration error traces, error
scaling against the replication count m (with a log-log regression
slope), and per-iteration timing tables.

Determinism: targets are drawn with a fixed seed, data and chains with
generators derived from (seed, m, n, estimator index), so identical
configs reproduce identical result files byte for byte, excluding the
timestamp and timing fields.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baseline_mh import MhConfig, run_prob_estimator
from .langevin import DivergenceError, EstimateResult, SamplerConfig, run_bm_sampler
from .measurement import DesignMode, build_design, simulate_counts
from .qstate import SystemSize, TargetKind, frobenius_error, make_target

try:
    from importlib.metadata import version as _dist_version

    __version__ = _dist_version("bmtomo")
except Exception:  # not installed (e.g. running from a checkout)
    __version__ = "0.1.0"

EXPERIMENTS = ("accuracy_boxplot", "convergence_trace", "slope_vs_m", "timing_table")

DEFAULT_M = 4096
DEFAULT_M_GRID = tuple(2**k for k in range(5, 13))
DEFAULT_TIMING_M = 128
TIMING_WARMUP = 100
TARGET_SEED = 0
_DATA_TAG = 11
_CHAIN_TAG = 13

ERROR_CSV_COLUMNS = (
    "experiment", "n", "target", "estimator", "rank", "m", "seed",
    "final_error", "final_error_sq", "iterations", "burnin",
)
TRACE_CSV_COLUMNS = (
    "estimator", "seed", "iteration", "error_running_mean", "error_instantaneous",
)
TIMING_CSV_COLUMNS = (
    "experiment", "n", "estimator", "rank", "m", "iterations", "warmup",
    "median_step_seconds", "mean_step_seconds",
)


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator request: bm with a rank budget, or prob."""

    kind: str
    rank: Optional[object] = None  # int, or the literal "d"

    @classmethod
    def parse(cls, text: str) -> "EstimatorSpec":
        """Parse 'bm:<r>' (r an integer or the literal d) or 'prob'."""
        text = text.strip()
        if text == "prob":
            return cls(kind="prob")
        if text.startswith("bm:"):
            arg = text[3:]
            if arg == "d":
                return cls(kind="bm", rank="d")
            try:
                rank = int(arg)
            except ValueError:
                raise ValueError(f"bad rank in estimator spec {text!r}") from None
            if rank < 1:
                raise ValueError(f"rank must be >= 1 in estimator spec {text!r}")
            return cls(kind="bm", rank=rank)
        raise ValueError(f"unknown estimator spec {text!r}; expected bm:<r> or prob")

    @property
    def label(self) -> str:
        if self.kind == "prob":
            return "prob"
        return f"bm:{self.rank}"

    def resolve_rank(self, d: int) -> int:
        if self.kind == "prob" or self.rank == "d":
            return d
        return int(self.rank)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment run.

    ``n`` is a tuple to allow timing tables over several system sizes;
    the other experiments require exactly one entry.  ``theta`` and
    ``lam`` left as None fall through to the per-run defaults (theta by
    rank, lam = m/2).
    """

    experiment: str
    n: tuple
    estimators: tuple
    target: str = "rank2"
    m: Optional[int] = None
    m_grid: Optional[tuple] = None
    seeds: tuple = tuple(range(10))
    iterations: int = 10_000
    burnin: int = 2_000
    eta: float = 1e-5
    beta: float = 1e3
    theta: Optional[float] = None
    lam: Optional[float] = None
    design: str = DesignMode.WHOLE_SYSTEM.value
    noise_convention: str = "algorithm1"
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}"
            )
        if not self.n:
            raise ValueError("need at least one system size n")
        if len(self.n) > 1 and self.experiment != "timing_table":
            raise ValueError("multiple n values are only meaningful for timing_table")
        if not self.estimators:
            raise ValueError("need at least one estimator")
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        if self.m is not None and self.m < 1:
            raise ValueError(f"need m >= 1, got {self.m}")
        if self.m_grid is not None and any(m < 1 for m in self.m_grid):
            raise ValueError("m grid entries must be >= 1")
        if self.workers < 1:
            raise ValueError(f"need workers >= 1, got {self.workers}")
        if not 0 <= self.burnin < self.iterations:
            raise ValueError(
                f"burnin {self.burnin} must lie in [0, iterations={self.iterations})"
            )
        TargetKind(self.target)
        DesignMode(self.design)
        for n in self.n:
            d = 2**n
            for est in self.estimators:
                if est.kind == "bm" and est.rank != "d" and est.rank > d:
                    raise ValueError(
                        f"estimator {est.label} exceeds d={d} at n={n}"
                    )

    def effective_m(self) -> int:
        if self.m is not None:
            return self.m
        return DEFAULT_TIMING_M if self.experiment == "timing_table" else DEFAULT_M

    def effective_m_grid(self) -> tuple:
        if self.experiment != "slope_vs_m":
            return (self.effective_m(),)
        return self.m_grid if self.m_grid is not None else DEFAULT_M_GRID


@dataclass
class ResultRecord:
    """Everything one experiment produced.

    ``estimates`` keeps the estimated density matrices in memory (None
    for diverged runs); they are not serialized.
    """

    config: dict
    version: str
    timestamp: str
    rows: list
    traces: Optional[list] = None
    timing: Optional[list] = None
    slopes: Optional[dict] = None
    estimates: list = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        def clean(value):
            if isinstance(value, float) and not np.isfinite(value):
                return None
            if isinstance(value, dict):
                return {k: clean(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [clean(v) for v in value]
            return value

        return clean(
            {
                "config": self.config,
                "version": self.version,
                "timestamp": self.timestamp,
                "rows": self.rows,
                "traces": self.traces,
                "timing": self.timing,
                "slopes": self.slopes,
            }
        )


def _target_for(config: ExperimentConfig, n: int) -> np.ndarray:
    # one fixed target per (kind, n) so seeds vary only data and chains
    return make_target(config.target, SystemSize.from_qubits(n), seed=TARGET_SEED)


def _execute_task(args) -> tuple:
    config, n, m, seed, est_idx, track = args
    est = config.estimators[est_idx]
    design = build_design(config.design, n)
    rho0 = _target_for(config, n)
    freqs = simulate_counts(
        design, rho0, m, np.random.default_rng([seed, m, n, _DATA_TAG])
    )
    chain_seed = [seed, m, n, est_idx, _CHAIN_TAG]

    diverged_at = None
    result: Optional[EstimateResult] = None
    try:
        if est.kind == "bm":
            sampler = SamplerConfig(
                eta=config.eta,
                beta=config.beta,
                theta=config.theta,
                lam=config.lam,
                iterations=config.iterations,
                burnin=config.burnin,
                seed=chain_seed,
                noise_convention=config.noise_convention,
            )
            result = run_bm_sampler(
                est.resolve_rank(design.d), freqs, design, sampler,
                rho0=rho0 if track else None,
            )
        else:
            mh = MhConfig(
                lam=config.lam,
                iterations=config.iterations,
                burnin=config.burnin,
                seed=chain_seed,
            )
            result = run_prob_estimator(
                freqs, design, mh, rho0=rho0 if track else None
            )
    except DivergenceError as exc:
        diverged_at = exc.step

    if result is None:
        final_error = float("nan")
    else:
        final_error = frobenius_error(result.rho_hat, rho0)
    row = {
        "experiment": config.experiment,
        "n": n,
        "target": config.target,
        "estimator": est.kind,
        "rank": est.resolve_rank(design.d),
        "m": m,
        "seed": seed,
        "final_error": final_error,
        "final_error_sq": final_error**2,
        "iterations": config.iterations,
        "burnin": config.burnin,
        "diverged_at": diverged_at,
        "acceptance_rate": None if result is None else result.acceptance_rate,
        "wall_time_per_iteration": (
            None if result is None else result.wall_time_per_iteration
        ),
    }
    rho_hat = None if result is None else result.rho_hat
    traces = None
    if track and result is not None:
        traces = (est.label, seed, result.error_trace, result.error_trace_instant)
    step_seconds = None if result is None else result.step_seconds
    return row, rho_hat, traces, step_seconds


def run_experiment(config: ExperimentConfig) -> ResultRecord:
    """Run every (m, estimator, seed) cell and aggregate.

    Estimator divergence is recorded per seed (NaN errors plus the
    failing step index), never fatal.  Files are written when
    ``config.out`` is set.
    """
    if config.experiment == "timing_table":
        record = _run_timing(config)
    else:
        record = _run_grid(config)
    if config.out is not None:
        emit_plotdata(record, config.out)
    return record


def _config_echo(config: ExperimentConfig) -> dict:
    return {
        "experiment": config.experiment,
        "n": list(config.n),
        "target": config.target,
        "estimators": [est.label for est in config.estimators],
        "m": config.effective_m(),
        "m_grid": list(config.effective_m_grid()),
        "seeds": list(config.seeds),
        "iterations": config.iterations,
        "burnin": config.burnin,
        "eta": config.eta,
        "beta": config.beta,
        "theta": config.theta,
        "lam": config.lam if config.lam is not None else "m/2",
        "design": config.design,
        "noise_convention": config.noise_convention,
        "target_seed": TARGET_SEED,
        "workers": config.workers,
    }


def _run_grid(config: ExperimentConfig) -> ResultRecord:
    n = config.n[0]
    track = config.experiment == "convergence_trace"
    m_values = config.effective_m_grid()
    tasks = [
        (config, n, m, seed, est_idx, track)
        for m in m_values
        for est_idx in range(len(config.estimators))
        for seed in config.seeds
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_execute_task, tasks))
    else:
        outputs = [_execute_task(task) for task in tasks]

    rows, estimates, trace_rows = [], [], []
    for row, rho_hat, traces, _ in outputs:
        rows.append(row)
        estimates.append(rho_hat)
        if traces is not None:
            label, seed, running, instant = traces
            for k in range(running.shape[0]):
                trace_rows.append(
                    {
                        "estimator": label,
                        "seed": seed,
                        "iteration": k + 1,
                        "error_running_mean": float(running[k]),
                        "error_instantaneous": float(instant[k]),
                    }
                )

    slopes = None
    if config.experiment == "slope_vs_m":
        slopes = {}
        for est in config.estimators:
            ms, means = [], []
            for m in m_values:
                vals = [
                    row["final_error_sq"]
                    for row in rows
                    if row["m"] == m
                    and row["estimator"] == est.kind
                    and row["rank"] == est.resolve_rank(2 ** n)
                    and np.isfinite(row["final_error_sq"])
                ]
                if vals:
                    ms.append(m)
                    means.append(float(np.mean(vals)))
            # m values whose every seed diverged drop out of the fit
            slopes[est.label] = slope_regression(ms, means)

    return ResultRecord(
        config=_config_echo(config),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
        rows=rows,
        traces=trace_rows if track else None,
        slopes=slopes,
        estimates=estimates,
    )


def _run_timing(config: ExperimentConfig) -> ResultRecord:
    # timing is strictly sequential so runs never share cores
    if config.iterations < TIMING_WARMUP + 1000:
        raise ValueError(
            f"timing needs iterations >= {TIMING_WARMUP + 1000} "
            f"(median over >= 1000 post-warmup steps), got {config.iterations}"
        )
    m = config.effective_m()
    seed = config.seeds[0]
    rows, timing_rows, estimates = [], [], []
    for n in config.n:
        for est_idx, est in enumerate(config.estimators):
            row, rho_hat, _, step_seconds = _execute_task(
                (config, n, m, seed, est_idx, False)
            )
            rows.append(row)
            estimates.append(rho_hat)
            if step_seconds is None:
                median = mean = float("nan")
            else:
                tail = step_seconds[TIMING_WARMUP:]
                median, mean = float(np.median(tail)), float(tail.mean())
            timing_rows.append(
                {
                    "experiment": config.experiment,
                    "n": n,
                    "estimator": est.label,
                    "rank": est.resolve_rank(2**n),
                    "m": m,
                    "iterations": config.iterations,
                    "warmup": TIMING_WARMUP,
                    "median_step_seconds": median,
                    "mean_step_seconds": mean,
                }
            )
    return ResultRecord(
        config=_config_echo(config),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
        rows=rows,
        timing=timing_rows,
        estimates=estimates,
    )


def slope_regression(m_grid: Sequence, errors: Sequence, drop_leading: int = 2) -> float:
    """OLS slope of log(error) against log(m), excluding the first
    ``drop_leading`` grid points (standard protocol for squared-error
    scaling fits; the early grid is pre-asymptotic)."""
    m = np.asarray(m_grid, dtype=float)
    e = np.asarray(errors, dtype=float)
    if m.shape != e.shape or m.ndim != 1:
        raise ValueError("m grid and errors must be 1-d and equally long")
    if m.size < 3:
        raise ValueError(f"need at least 3 grid points, got {m.size}")
    order = np.argsort(m)
    m, e = m[order], e[order]
    if np.any(np.diff(m) == 0):
        raise ValueError("degenerate grid: duplicate m values")
    if not np.all(np.isfinite(e)) or np.any(e <= 0):
        raise ValueError("errors must be finite and positive")
    m_fit, e_fit = m[drop_leading:], e[drop_leading:]
    if m_fit.size < 2:
        raise ValueError("fewer than 2 points left after dropping the leading grid")
    slope, _ = np.polyfit(np.log(m_fit), np.log(e_fit), 1)
    return float(slope)


def _format_cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def emit_plotdata(record: ResultRecord, out_dir) -> list:
    """Write the record's CSV/JSON artifacts and return their paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        if record.rows:
            p = out / "errors.csv"
            _write_csv(p, ERROR_CSV_COLUMNS, record.rows)
            paths.append(p)
        if record.traces:
            p = out / "traces.csv"
            _write_csv(p, TRACE_CSV_COLUMNS, record.traces)
            paths.append(p)
        if record.timing:
            p = out / "timing.csv"
            _write_csv(p, TIMING_CSV_COLUMNS, record.timing)
            paths.append(p)
        p = out / "record.json"
        with p.open("w") as fh:
            json.dump(record.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(p)
        return paths
    except OSError as exc:
        raise OSError(f"failed writing results under {out}: {exc}") from exc
