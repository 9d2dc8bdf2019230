"""Secondary acceptance: all four plot kinds render from harness outputs
produced by the real CLI, recomputing nothing; the KS annotation equals the
summary.json field exactly.

The statistic runs reuse the Gaussian-limit reference configuration
(p=40 spiked, plug-in, n=4000, 2000 replications) and, for the bias panel, a
reduced bias sweep; both are generated through the producer's command line,
the only interface this package touches.
"""

import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from wald_plots.render import PlotJob, render

GAUSSIAN_RUN_CONFIG = {
    "model": {"kind": "spiked", "params": {"spikes": [4.0], "sigma2": 1.0},
              "seed": 1, "p": 40},
    "mode": "ks_gaussian", "n": 4000, "reps": 2000, "base_seed": 20260810,
    "fisher_kind": "plugin",
}
BIAS_RUN_CONFIG = {
    "model": {"kind": "spiked", "params": {"spikes": [0.5], "sigma2": 1.0},
              "seed": 1, "p": 10},
    "mode": "bias_sweep", "reps": 5000, "base_seed": 20260810,
    "n_grid": [5000, 10000, 20000],
}


def run_harness(tmp_path, name, command, config) -> str:
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out_dir = tmp_path / name
    proc = subprocess.run(
        [sys.executable, "-m", "pca_wald.cli", command,
         "--config", str(cfg), "--out-dir", str(out_dir)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return str(out_dir)


@pytest.fixture(scope="module")
def gaussian_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("gaussian")
    return run_harness(tmp, "run", "simulate", GAUSSIAN_RUN_CONFIG)


@pytest.fixture(scope="module")
def bias_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bias")
    return run_harness(tmp, "run", "bias-sweep", BIAS_RUN_CONFIG)


def test_criterion_11_plot_smoke(gaussian_run, bias_run, tmp_path):
    outputs = {}
    for kind, source in (("cdf_overlay", gaussian_run), ("qq", gaussian_run),
                         ("coverage_curve", gaussian_run), ("bias_scaling", bias_run)):
        out = render(PlotJob(input_dir=source, kind=kind,
                             output_path=str(tmp_path / f"{kind}.svg")))
        assert out.exists() and out.stat().st_size > 0, kind
        outputs[kind] = out

    summary = json.loads((Path(gaussian_run) / "summary.json").read_text())
    match = re.search(r"KS distance = ([0-9eE+.+-]+)",
                      outputs["cdf_overlay"].read_text())
    assert match, "KS annotation missing"
    annotated = float(match.group(1))
    assert annotated == summary["ks_distance"]
    print(f"criterion 11: PASS (4 kinds rendered; KS annotation {annotated!r} "
          f"== summary field {summary['ks_distance']!r})")


def test_cli_renders_and_exits_zero(gaussian_run, tmp_path):
    out = tmp_path / "cli.svg"
    proc = subprocess.run(
        [sys.executable, "-m", "wald_plots.cli", "--kind", "cdf_overlay",
         "--in", gaussian_run, "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()


def test_cli_schema_failure_exits_two(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "wald_plots.cli", "--kind", "qq",
         "--in", str(tmp_path), "--out", str(tmp_path / "x.svg")],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert "missing" in proc.stderr
