"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line for its criterion outside of
pytest's capture, then asserts.
"""

from math import log

import numpy as np
import pytest

from bmtomo.harness import (
    EstimatorSpec,
    ExperimentConfig,
    run_experiment,
)
from bmtomo.langevin import SamplerConfig, grad_neg_log_posterior_real, neg_log_posterior_real
from bmtomo.measurement import born_probabilities, build_design, simulate_counts
from bmtomo.oracles import (
    FiniteDiffSpec,
    dense_prior_gradient,
    finite_diff_gradient,
    polar_quadrature_moment,
)
from bmtomo.prior import PacBoundInputs, PriorParams, grad_neg_log_prior_real, pac_bound
from bmtomo.qstate import SystemSize, TargetKind, make_target
from bmtomo.realify import embed, embedding_identity_gaps, psd_det

from conftest import random_complex, random_density, random_psd


def _verdict(capfd, num: int, name: str, ok: bool, detail: str) -> str:
    status = "PASS" if ok else "FAIL"
    with capfd.disabled():
        print(f"[criterion {num:02d}] {status} {name}: {detail}", flush=True)
    return detail


@pytest.fixture(scope="module")
def slope_record():
    # the full grid of criterion 1, reused by criterion 8
    config = ExperimentConfig(
        experiment="slope_vs_m",
        n=(3,),
        estimators=(EstimatorSpec.parse("bm:2"),),
        target="rank2",
        seeds=tuple(range(10)),
        iterations=10_000,
        burnin=2_000,
        theta=100.0,
        design="whole-system",
    )
    return run_experiment(config)


def test_criterion_01_error_slope(slope_record, capfd):
    slope = slope_record.slopes["bm:2"]
    ok = -1.25 <= slope <= -0.75
    detail = _verdict(
        capfd, 1, "squared-error slope vs m", ok,
        f"slope={slope:.4f}, target [-1.25, -0.75]",
    )
    assert ok, detail


def test_criterion_02_timing_order(capfd):
    record = run_experiment(
        ExperimentConfig(
            experiment="timing_table",
            n=(2, 3, 4),
            estimators=tuple(EstimatorSpec.parse(s) for s in ("bm:2", "bm:d", "prob")),
            seeds=(0,),
            iterations=2_000,
            burnin=200,
        )
    )
    median = {
        (row["n"], row["estimator"]): row["median_step_seconds"]
        for row in record.timing
    }
    ok = all(median[(n, "bm:2")] < median[(n, "bm:d")] for n in (3, 4)) and all(
        median[(n, "bm:2")] < median[(n, "prob")] for n in (2, 3, 4)
    )
    detail = _verdict(
        capfd, 2, "per-iteration cost ordering", ok,
        "; ".join(
            f"n={n}: " + " ".join(
                f"{label}={median[(n, label)] * 1e6:.1f}us"
                for label in ("bm:2", "bm:d", "prob")
            )
            for n in (2, 3, 4)
        ),
    )
    assert ok, detail


def test_criterion_03_gradient_vs_finite_differences(capfd):
    rng = np.random.default_rng(30)
    spec = FiniteDiffSpec(step=1e-5)
    worst = 0.0
    points = 0
    for mode in ("per-qubit", "whole-system"):
        for n in (1, 2, 3):
            design = build_design(mode, n)
            d = design.d
            rho0 = make_target(TargetKind.RANK2, SystemSize.from_qubits(n), seed=0)
            freqs = simulate_counts(design, rho0, 512, seed=n)
            cfg = SamplerConfig(theta=1.0, lam=256.0)
            for r in sorted({1, 2, d}):
                for _ in range(50):
                    y = random_complex(rng, d, r)
                    t = embed(y / np.linalg.norm(y))
                    grad = grad_neg_log_posterior_real(t, freqs, design, cfg)
                    fd = finite_diff_gradient(
                        lambda x: neg_log_posterior_real(x, freqs, design, cfg),
                        t, spec,
                    )
                    rel = float(np.abs(grad - fd).max() / np.abs(grad).max())
                    worst = max(worst, rel)
                    points += 1
    ok = worst < 1e-5
    detail = _verdict(
        capfd, 3, "analytic gradient vs central differences", ok,
        f"worst relative gap {worst:.2e} over {points} points, tolerance 1e-05",
    )
    assert ok, detail


def test_criterion_04_embedding_identities(capfd):
    rng = np.random.default_rng(40)
    worst_trace, worst_det = 0.0, 0.0
    for d in (2, 4, 8):
        for _ in range(1000):
            m = random_psd(rng, d)
            n = random_psd(rng, d)
            trace_gap, det_gap = embedding_identity_gaps(m, n)
            worst_trace = max(worst_trace, trace_gap)
            worst_det = max(worst_det, det_gap / psd_det(m))
    ok = worst_trace < 1e-10 and worst_det < 1e-8
    detail = _verdict(
        capfd, 4, "trace/determinant embedding identities", ok,
        f"trace gap {worst_trace:.2e} (tol 1e-10), "
        f"relative det gap {worst_det:.2e} (tol 1e-08), 3000 pairs",
    )
    assert ok, detail


def test_criterion_05_scalar_prior_moment(capfd):
    worst = 0.0
    for theta in (0.1, 1.0, 2.0):
        expected = 2 * theta**2
        worst = max(worst, abs(polar_quadrature_moment(theta) - expected) / expected)
    ok = worst < 1e-3
    detail = _verdict(
        capfd, 5, "scalar prior second moment = 2 theta^2", ok,
        f"worst relative gap {worst:.2e} over theta in (0.1, 1, 2), tolerance 1e-03",
    )
    assert ok, detail


def test_criterion_06_woodbury_equivalence(capfd):
    rng = np.random.default_rng(60)
    worst = 0.0
    for k in range(100):
        d = (2, 4, 8, 16)[k % 4]
        r = int(rng.integers(1, d + 1))
        theta = float(rng.uniform(0.5, 2.0))
        t = embed(random_complex(rng, d, r) / 2)
        smw = grad_neg_log_prior_real(t, PriorParams(theta=theta, d=d, r=r))
        dense = dense_prior_gradient(t, theta)
        worst = max(worst, float(np.abs(smw - dense).max()))
    ok = worst < 1e-10
    detail = _verdict(
        capfd, 6, "Woodbury prior gradient vs dense inverse", ok,
        f"worst entry gap {worst:.2e} over 100 points, d <= 16, tolerance 1e-10",
    )
    assert ok, detail


def test_criterion_07_measurement_completeness(capfd):
    rng = np.random.default_rng(70)
    worst_sum, worst_row = 0.0, 0.0
    for mode in ("per-qubit", "whole-system"):
        for n in (1, 2, 3, 4):
            design = build_design(mode, n)
            eye = np.eye(design.d)
            totals = design.operators.sum(axis=1)
            worst_sum = max(worst_sum, float(np.abs(totals - eye).max()))
            for _ in range(5):
                probs = born_probabilities(design, random_density(rng, design.d))
                worst_row = max(worst_row, float(np.abs(probs.sum(axis=1) - 1.0).max()))
    ok = worst_sum < 1e-10 and worst_row < 1e-10
    detail = _verdict(
        capfd, 7, "POVM completeness and Born row sums", ok,
        f"operator-sum gap {worst_sum:.2e}, row-sum gap {worst_row:.2e}, "
        "tolerance 1e-10, n <= 4, both modes",
    )
    assert ok, detail


def test_criterion_08_estimates_are_density_matrices(slope_record, capfd):
    checked = 0
    worst_herm, worst_eig = 0.0, 0.0
    traces_exact = True
    for rho in slope_record.estimates:
        if rho is None:  # diverged cell, recorded by criterion 1's grid
            continue
        checked += 1
        worst_herm = max(worst_herm, float(np.abs(rho - rho.conj().T).max()))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(rho).min()))
        traces_exact &= np.trace(rho).real == 1.0
    ok = (
        checked > 0
        and worst_herm < 1e-12
        and worst_eig >= -1e-10
        and traces_exact
    )
    detail = _verdict(
        capfd, 8, "every estimate is a density matrix", ok,
        f"{checked} estimates: hermiticity gap {worst_herm:.2e} (tol 1e-12), "
        f"min eigenvalue {worst_eig:.2e} (floor -1e-10), traces exact: {traces_exact}",
    )
    assert ok, detail


def test_criterion_09_comparable_accuracy(capfd):
    record = run_experiment(
        ExperimentConfig(
            experiment="accuracy_boxplot",
            n=(2,),
            estimators=tuple(EstimatorSpec.parse(s) for s in ("bm:2", "bm:4", "prob")),
            target="rank2",
            m=4096,
            seeds=tuple(range(10)),
        )
    )
    medians = {}
    for label, kind, rank in (("bm:2", "bm", 2), ("bm:4", "bm", 4), ("prob", "prob", 4)):
        errors = [
            row["final_error"]
            for row in record.rows
            if row["estimator"] == kind and row["rank"] == rank
        ]
        medians[label] = float(np.median(errors))
    best = min(medians.values())
    ok = all(med <= 2 * best for med in medians.values())
    detail = _verdict(
        capfd, 9, "median errors within 2x of the best estimator", ok,
        ", ".join(f"{k}={v:.4f}" for k, v in medians.items()) + f"; best {best:.4f}",
    )
    assert ok, detail


def test_criterion_10_rank_starvation_floor(capfd):
    target = make_target(TargetKind.MAXIMALLY_MIXED, SystemSize.from_qubits(2), seed=0)
    spectrum = np.sort(np.linalg.eigvalsh(target))[::-1]
    floor = float((spectrum[2:] ** 2).sum()) - 0.01
    record = run_experiment(
        ExperimentConfig(
            experiment="accuracy_boxplot",
            n=(2,),
            estimators=(EstimatorSpec.parse("bm:2"),),
            target="mixed",
            m=4096,
            seeds=tuple(range(10)),
        )
    )
    worst = min(row["final_error_sq"] for row in record.rows)
    ok = worst >= floor
    detail = _verdict(
        capfd, 10, "rank-2 fit of a full-rank state stays above the floor", ok,
        f"min squared error {worst:.4f} >= floor {floor:.4f} over 10 seeds",
    )
    assert ok, detail


def test_criterion_11_risk_bound_monotonicity(capfd):
    def bound(m, p, epsilon=0.05):
        return pac_bound(
            PacBoundInputs(
                n=4, r=16, m=m, ref_rank=p,
                ref_fro=2.0, ref_spec=1.0, theta=1.0, epsilon=epsilon,
            )
        )

    m_grid = [100 * (k + 1) for k in range(10)]
    p_grid = list(range(1, 11))
    grid = {(m, p): bound(m, p) for m in m_grid for p in p_grid}
    dec_in_m = all(
        grid[(a, p)] > grid[(b, p)]
        for p in p_grid
        for a, b in zip(m_grid, m_grid[1:])
    )
    inc_in_p = all(
        grid[(m, a)] < grid[(m, b)]
        for m in m_grid
        for a, b in zip(p_grid, p_grid[1:])
    )
    # shrinking epsilon by 4 adds exactly (3^n 8 / (2^n N_tot)) log 4
    m0 = 500
    gap = bound(m0, 3, epsilon=0.05) - bound(m0, 3, epsilon=0.20)
    closed_form = (3.0**4 * 8.0 / (2.0**4 * m0 * 3.0**4)) * log(4.0)
    eps_ok = abs(gap - closed_form) < 1e-12
    ok = dec_in_m and inc_in_p and eps_ok
    detail = _verdict(
        capfd, 11, "risk bound monotone in m and p", ok,
        f"decreasing in m: {dec_in_m}, increasing in p: {inc_in_p}, "
        f"epsilon-term gap {abs(gap - closed_form):.1e} (tol 1e-12)",
    )
    assert ok, detail
