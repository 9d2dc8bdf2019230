"""Acceptance suite: ten numbered criteria, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every criterion is
checked at its stated tolerance with a frozen base seed (20260810); the
Monte Carlo configurations are the package's reference experiment suite and
complete in a few minutes total on a small desktop.
"""

import math
import time

import mpmath
import numpy as np
import pytest

from pca_wald import mc
from pca_wald.covmodel import make_spiked
from pca_wald.inference import (
    chisq_cdf, chisq_quantile, linear_term_identity_check, normal_cdf,
    normal_quantile,
)
from pca_wald.linops import (
    KroneckerSum, fisher_sqrt, limiting_covariance, plugin_fisher_sqrt,
)
from pca_wald.perturb import expand
from util import dense_matrix, random_symmetric

BASE_SEED = 20260810

SPIKED_P5 = {"kind": "spiked", "params": {"spikes": [4.0], "sigma2": 1.0},
             "seed": 1, "p": 5}
SPIKED_P10_BOUNDS = {"kind": "spiked", "params": {"spikes": [1.0], "sigma2": 1.0},
                     "seed": 1, "p": 10}
SPIKED_P10_BIAS = {"kind": "spiked", "params": {"spikes": [0.5], "sigma2": 1.0},
                   "seed": 1, "p": 10}
SPIKED_P20 = {"kind": "spiked", "params": {"spikes": [4.0], "sigma2": 1.0},
              "seed": 1, "p": 20}
SPIKED_P40 = {"kind": "spiked", "params": {"spikes": [4.0], "sigma2": 1.0},
              "seed": 1, "p": 40}
DECAY_P30 = {"kind": "decay", "params": {"alpha": 1.0}, "seed": 1, "p": 30}
TWO_CLUSTER_P10 = {"kind": "custom", "params": {"eigenvalues": [[3.0, 4], [1.0, 6]]},
                   "seed": 1, "p": 10}


def _report(number: int, passed: bool, detail: str, started: float,
            limit_seconds: float) -> None:
    elapsed = time.perf_counter() - started
    verdict = "PASS" if passed else "FAIL"
    print(f"criterion {number}: {verdict} ({detail}; {elapsed:.1f}s)")
    assert passed, f"criterion {number}: {detail}"
    assert elapsed < limit_seconds, f"criterion {number} exceeded {limit_seconds}s"


def test_criterion_01_deterministic_perturbation_bounds():
    started = time.perf_counter()
    cfg = mc.ExperimentConfig(model=SPIKED_P10_BOUNDS, mode="perturb_check",
                              reps=10_000, base_seed=BASE_SEED)
    summary = mc.run(cfg)
    detail = (f"{summary.extra['violations']} violations in {summary.reps} draws, "
              f"max ratios {summary.extra['max_ratio_shift']:.3f}/"
              f"{summary.extra['max_ratio_quadratic']:.3f}/"
              f"{summary.extra['max_ratio_cubic']:.3f}")
    _report(1, summary.extra["violations"] == 0, detail, started, 120)


def test_criterion_02_order_of_accuracy_slopes():
    started = time.perf_counter()
    model = make_spiked([1.0], 1.0, 10, seed=1)
    rng = np.random.default_rng(BASE_SEED)
    ts = np.logspace(-1, -4, 7)
    quad_slopes, cubic_slopes = [], []
    for _ in range(20):
        e = random_symmetric(rng, 10)
        e /= np.max(np.abs(np.linalg.eigvalsh(e)))
        s_norms, r_norms = [], []
        for t in ts:
            exp = expand(model, 1, t * e)
            s_norms.append(exp.norms["beyond_linear"])
            r_norms.append(exp.norms["beyond_quadratic"])
        quad_slopes.append(np.polyfit(np.log(ts), np.log(s_norms), 1)[0])
        cubic_slopes.append(np.polyfit(np.log(ts), np.log(r_norms), 1)[0])
    quad_ok = all(abs(s - 2.0) <= 0.1 for s in quad_slopes)
    cubic_ok = all(abs(s - 3.0) <= 0.15 for s in cubic_slopes)
    detail = (f"quadratic slope in [{min(quad_slopes):.3f}, {max(quad_slopes):.3f}], "
              f"cubic slope in [{min(cubic_slopes):.3f}, {max(cubic_slopes):.3f}]")
    _report(2, quad_ok and cubic_ok, detail, started, 60)


def test_criterion_03_linear_term_second_moment_identity():
    started = time.perf_counter()
    model = make_spiked([1.0], 1.0, 10, seed=1)
    chk = linear_term_identity_check(model, 1, n=500, reps=2000, seed=BASE_SEED)
    deviation = abs(chk.mean - chk.expected) / chk.stderr
    detail = (f"mean {chk.mean:.4f} vs {chk.expected}, "
              f"{deviation:.2f} standard errors")
    _report(3, deviation <= 3.0, detail, started, 120)


def test_criterion_04_fixed_dimension_chisq_limit():
    started = time.perf_counter()
    cfg = mc.ExperimentConfig(model=SPIKED_P5, mode="ks_chisq", n=10_000,
                              reps=2000, base_seed=BASE_SEED, fisher_kind="true")
    summary = mc.run(cfg)
    detail = f"KS distance to chi-square(df={summary.df}) = {summary.ks_distance:.4f}"
    _report(4, summary.ks_distance <= 0.05, detail, started, 300)


def test_criterion_05_gaussian_limit_with_plugin():
    started = time.perf_counter()
    cfg = mc.ExperimentConfig(model=SPIKED_P40, mode="ks_gaussian", n=4000,
                              reps=2000, base_seed=BASE_SEED, fisher_kind="plugin")
    summary = mc.run(cfg)
    detail = f"KS distance of normalized statistic to Gaussian = {summary.ks_distance:.4f}"
    _report(5, summary.ks_distance <= 0.10, detail, started, 600)


def test_criterion_06_coverage_of_true_projector():
    started = time.perf_counter()
    cfg = mc.ExperimentConfig(model=SPIKED_P40, mode="coverage", n=4000,
                              reps=1000, base_seed=BASE_SEED,
                              fisher_kind="plugin", alpha=0.05)
    summary = mc.run(cfg)
    cov = summary.empirical_coverage
    detail = f"empirical coverage {cov:.3f} at alpha=0.05"
    _report(6, 0.92 <= cov <= 0.98, detail, started, 600)


def test_criterion_07_opnorm_concentration_rate():
    started = time.perf_counter()
    models = {"spiked p=20": SPIKED_P20, "decay alpha=1 p=30": DECAY_P30,
              "two-cluster p=10": TWO_CLUSTER_P10}
    details = []
    ok = True
    for label, desc in models.items():
        r1 = mc.run(mc.ExperimentConfig(model=desc, mode="opnorm_check", n=2000,
                                        reps=200, base_seed=BASE_SEED)).extra["ratio"]
        r2 = mc.run(mc.ExperimentConfig(model=desc, mode="opnorm_check", n=4000,
                                        reps=200, base_seed=BASE_SEED + 1)).extra["ratio"]
        change = abs(r2 - r1) / r1
        ok = ok and 0.3 < r1 < 10 and change < 0.5
        details.append(f"{label}: ratio {r1:.2f}, change {100 * change:.0f}%")
    _report(7, ok, "; ".join(details), started, 180)


def test_criterion_08_bias_scaling_in_n():
    started = time.perf_counter()
    cfg = mc.ExperimentConfig(model=SPIKED_P10_BIAS, mode="bias_sweep",
                              reps=200_000, base_seed=BASE_SEED,
                              n_grid=(5000, 10_000, 20_000))
    summary = mc.run(cfg)
    biases = [row["mean_bias"] for row in summary.bias_table]
    ratios = [b2 / b1 for b1, b2 in zip(biases, biases[1:])]
    ok = all(0.25 <= r <= 0.75 for r in ratios)
    detail = ("bias " + " -> ".join(f"{b:+.4f}" for b in biases)
              + ", halving ratios " + ", ".join(f"{r:.3f}" for r in ratios))
    _report(8, ok, detail, started, 480)


def test_criterion_09_dense_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(BASE_SEED)
    worst = 0.0
    for p in range(2, 9):
        model = make_spiked([2.0, 1.0], 0.5, p, seed=p) if p > 2 else \
            make_spiked([1.0], 1.0, 2, seed=2)
        sigma_hat = model.dense() + 0.05 * random_symmetric(rng, p)
        operators = [
            fisher_sqrt(model, 1).op,
            limiting_covariance(model, 1).op,
            plugin_fisher_sqrt(sigma_hat, model.cluster(1)).op,
            KroneckerSum(tuple(
                (rng.standard_normal((p, p)), rng.standard_normal((p, p)),
                 float(rng.standard_normal()))
                for _ in range(3))),
        ]
        for op in operators:
            dense = dense_matrix(op)
            for _ in range(100):
                x = rng.standard_normal((p, p))
                got = op.apply(x)
                want = (dense @ x.reshape(-1)).reshape(p, p)
                worst = max(worst, float(np.max(np.abs(got - want))))
    detail = f"max abs deviation {worst:.2e} over p=2..8, 100 inputs per operator"
    _report(9, worst <= 1e-10, detail, started, 60)


def test_criterion_10_distribution_functions_vs_high_precision():
    started = time.perf_counter()
    mpmath.mp.dps = 30
    grid = np.linspace(-8.0, 8.0, 1000)
    err_norm = max(abs(normal_cdf(x) - float(mpmath.ncdf(x))) for x in grid)
    err_chisq = 0.0
    for df in (1, 4, 39):
        xs = np.linspace(1e-6, 4.0 * df, 1000)
        for x in xs:
            oracle = float(mpmath.gammainc(df / 2.0, 0, x / 2.0, regularized=True))
            err_chisq = max(err_chisq, abs(chisq_cdf(x, df) - oracle))
    err_round = 0.0
    for x in np.linspace(-6.0, 6.0, 1000):
        err_round = max(err_round, abs(normal_quantile(normal_cdf(x)) - x))
    for q in np.linspace(0.002, 0.998, 250):
        x = chisq_quantile(q, 7)
        err_round = max(err_round, abs(chisq_cdf(x, 7) - q))
    ok = err_norm <= 1e-10 and err_chisq <= 1e-10 and err_round <= 1e-7
    detail = (f"cdf errors: normal {err_norm:.1e}, chisq {err_chisq:.1e}; "
              f"round-trip {err_round:.1e}")
    _report(10, ok, detail, started, 100)
