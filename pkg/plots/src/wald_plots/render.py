"""Render harness outputs into figures.

Four kinds: ``cdf_overlay`` (empirical CDF against the Gaussian or chi-square
limit, annotated with the KS distance from summary.json), ``qq`` (sample
quantiles against the limit law), ``coverage_curve`` (running empirical
coverage as replications accumulate), and ``bias_scaling`` (bias-sweep table
on log-log axes beside reference slopes: 1 in 1/n, 0.5 in p).

Rendering never recomputes statistics: every annotated number comes from a
field of the CSV/JSON inputs, and the reference curves are the limit laws
drawn with scipy, independent of the producer's own numerics.  Output is
deterministic for identical inputs: SVG hash salt pinned, timestamps off,
text kept as text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import stats

from wald_plots.io import Replications, SchemaError, load_replications, load_summary

PLOT_KINDS = ("cdf_overlay", "qq", "coverage_curve", "bias_scaling")

_RC = {
    "svg.fonttype": "none",
    "svg.hashsalt": "wald-plots",
    "figure.figsize": (7.0, 5.0),
}


@dataclass(frozen=True)
class PlotJob:
    """One figure: input run directory, plot kind, output path, style knobs."""

    input_dir: str
    kind: str
    output_path: str
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; expected {PLOT_KINDS}")


def render(job: PlotJob) -> Path:
    """Render one figure and return the written path."""
    run_dir = Path(job.input_dir)
    summary = load_summary(run_dir / "summary.json")
    with plt.rc_context({**_RC, **job.style}):
        fig = plt.figure()
        try:
            if job.kind == "cdf_overlay":
                _cdf_overlay(fig, run_dir, summary)
            elif job.kind == "qq":
                _qq(fig, run_dir, summary)
            elif job.kind == "coverage_curve":
                _coverage_curve(fig, run_dir, summary)
            else:
                _bias_scaling(fig, summary)
            out = Path(job.output_path)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, metadata=_no_timestamp_metadata(out))
        finally:
            plt.close(fig)
    return Path(job.output_path)


def _no_timestamp_metadata(out: Path) -> dict:
    if out.suffix.lower() == ".svg":
        return {"Date": None}
    if out.suffix.lower() == ".pdf":
        return {"CreationDate": None}
    return {}


def _statistic_samples(reps: Replications, summary: dict):
    """The column the run's KS distance was computed on, plus its limit law."""
    if summary.get("mode") == "ks_chisq":
        df = summary.get("df")
        if df is None:
            raise SchemaError("summary lacks the degrees-of-freedom field")
        return reps.raw, stats.chi2(df), f"chi-square({df})"
    return reps.normalized, stats.norm, "standard Gaussian"


def _cdf_overlay(fig, run_dir: Path, summary: dict) -> None:
    reps = load_replications(run_dir / "replications.csv")
    samples, law, label = _statistic_samples(reps, summary)
    xs = np.sort(samples)
    ecdf = np.arange(1, xs.size + 1) / xs.size
    grid = np.linspace(xs[0], xs[-1], 512)
    ax = fig.subplots()
    ax.step(xs, ecdf, where="post", lw=1.2, label=f"empirical ({xs.size} replications)")
    ax.plot(grid, law.cdf(grid), "r--", lw=1.2, label=label)
    ks = summary.get("ks_distance")
    if ks is not None:
        ax.annotate(f"KS distance = {ks!r}", xy=(0.03, 0.93),
                    xycoords="axes fraction", fontsize=9)
    ax.set_xlabel("statistic")
    ax.set_ylabel("cumulative probability")
    ax.set_title("Empirical CDF against the limit law")
    ax.legend(loc="lower right", fontsize=9)
    ax.grid(True, linestyle=":", linewidth=0.5)


def _qq(fig, run_dir: Path, summary: dict) -> None:
    reps = load_replications(run_dir / "replications.csv")
    samples, law, label = _statistic_samples(reps, summary)
    xs = np.sort(samples)
    qs = law.ppf((np.arange(1, xs.size + 1) - 0.5) / xs.size)
    ax = fig.subplots()
    ax.plot(qs, xs, ".", ms=3)
    lims = [min(qs[0], xs[0]), max(qs[-1], xs[-1])]
    ax.plot(lims, lims, "k--", lw=0.8)
    ax.set_xlabel(f"{label} quantiles")
    ax.set_ylabel("sample quantiles")
    ax.set_title("QQ plot of the statistic")
    ax.grid(True, linestyle=":", linewidth=0.5)


def _coverage_curve(fig, run_dir: Path, summary: dict) -> None:
    reps = load_replications(run_dir / "replications.csv")
    count = np.arange(1, reps.covered.size + 1)
    running = np.cumsum(reps.covered) / count
    ax = fig.subplots()
    ax.plot(count, running, lw=1.2, label="running coverage")
    alpha = summary.get("alpha")
    if alpha is not None:
        ax.axhline(1.0 - alpha, color="r", linestyle="--", lw=0.9,
                   label=f"nominal {1.0 - alpha!r}")
    final = summary.get("empirical_coverage")
    if final is not None:
        ax.annotate(f"final coverage = {final!r}", xy=(0.03, 0.06),
                    xycoords="axes fraction", fontsize=9)
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("replications included")
    ax.set_ylabel("empirical coverage")
    ax.set_title("Coverage as replications accumulate")
    ax.legend(loc="lower right", fontsize=9)
    ax.grid(True, linestyle=":", linewidth=0.5)


def _bias_scaling(fig, summary: dict) -> None:
    table = summary.get("bias_table")
    if not table:
        raise SchemaError("bias_scaling needs a summary.json with a bias_table")
    ns = sorted({row["n"] for row in table})
    ps = sorted({row["p"] for row in table})
    axes = fig.subplots(1, 2 if len(ps) > 1 else 1, squeeze=False)[0]

    ax = axes[0]
    for p in ps:
        rows = sorted((r for r in table if r["p"] == p), key=lambda r: r["n"])
        x = np.array([r["n"] for r in rows], dtype=float)
        y = np.abs(np.array([r["mean_bias"] for r in rows]))
        ax.loglog(x, y, "o-", ms=4, label=f"p = {p}")
        if len(x) > 1:
            ref = y[0] * (x / x[0]) ** -1.0
            ax.loglog(x, ref, "k:", lw=0.8)
    ax.loglog([], [], "k:", lw=0.8, label="reference slope -1")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("|mean bias of the raw statistic|")
    ax.set_title("Bias scaling in n")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", linestyle=":", linewidth=0.5)

    if len(ps) > 1:
        ax = axes[1]
        for n in ns:
            rows = sorted((r for r in table if r["n"] == n), key=lambda r: r["p"])
            x = np.array([r["p"] for r in rows], dtype=float)
            y = np.abs(np.array([r["mean_bias"] for r in rows]))
            ax.loglog(x, y, "s-", ms=4, label=f"n = {n}")
            if len(x) > 1:
                ref = y[0] * (x / x[0]) ** 0.5
                ax.loglog(x, ref, "k:", lw=0.8)
        ax.loglog([], [], "k:", lw=0.8, label="reference slope 0.5")
        ax.set_xlabel("dimension p")
        ax.set_title("Bias scaling in p")
        ax.legend(fontsize=8)
        ax.grid(True, which="both", linestyle=":", linewidth=0.5)
