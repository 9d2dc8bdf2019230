"""Monte Carlo experiment engine: replicated sampling -> estimation -> Wald
pipelines, goodness-of-fit distances to the limit laws, coverage rates, bias
sweeps, and CSV/JSON persistence.

Every replication draws its own seed via ``derive_seed(base_seed, index)``,
so results are independent of execution order and thread count; aggregation
is a deterministic sequential reduction in replication order.  Running the
same config twice reproduces ``replications.csv`` byte for byte.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from pca_wald import covmodel
from pca_wald.covmodel import CovarianceModel, effective_rank, projector
from pca_wald.errors import ConfigError, PcaWaldError
from pca_wald.inference import (
    chisq_cdf, chisq_quantile, normal_cdf, normal_quantile, wald_statistic,
)
from pca_wald.linops import fisher_sqrt, plugin_fisher_sqrt
from pca_wald.perturb import (
    check_bounds, expand, opnorm_concentration_check, perturbation_ensemble,
)
from pca_wald.rng import derive_seed
from pca_wald.sampling import (
    empirical_covariance, empirical_spectral, sample,
    wishart_empirical_covariance,
)

SIMULATE_MODES = ("ks_gaussian", "ks_chisq", "coverage")
MODES = SIMULATE_MODES + ("bias_sweep", "perturb_check", "opnorm_check")

REPLICATIONS_HEADER = "rep,seed,raw,normalized,covered"
_ENSEMBLES = ("gaussian", "wishart", "rank_one")
_BIAS_CHUNK = 8192


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: model description, cluster, sizes, seeds and mode."""

    model: dict
    mode: str
    n: int = 1000
    reps: int = 100
    r: int = 1
    base_seed: int = 0
    fisher_kind: str = "true"
    alpha: float = 0.05
    n_grid: tuple[int, ...] = ()
    p_grid: tuple[int, ...] = ()
    out_dir: Optional[str] = None
    threads: Optional[int] = None
    scale_range: tuple[float, float] = (1e-3, 3.0)

    def with_overrides(self, seed: Optional[int] = None, reps: Optional[int] = None,
                       out_dir: Optional[str] = None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, base_seed=int(seed))
        if reps is not None:
            cfg = replace(cfg, reps=int(reps))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        return cfg

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n_grid"] = list(self.n_grid)
        out["p_grid"] = list(self.p_grid)
        out["scale_range"] = list(self.scale_range)
        return out


@dataclass(frozen=True)
class ExperimentSummary:
    """Per-configuration aggregates; unused fields are None for a given mode."""

    mode: str
    model: dict
    r: int
    n: int
    reps: int
    base_seed: int
    fisher_kind: str
    alpha: float
    df: Optional[int] = None
    ks_distance: Optional[float] = None
    empirical_coverage: Optional[float] = None
    mean_raw: Optional[float] = None
    mean_normalized: Optional[float] = None
    var_normalized: Optional[float] = None
    bias_table: Optional[list] = None
    extra: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> ExperimentConfig:
    """Parse an experiment config from a JSON or TOML file."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(path.read_text())
    else:
        raw = json.loads(path.read_text())
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    data = dict(raw)
    if "seed" in data:
        data["base_seed"] = data.pop("seed")
    for key in ("n_grid", "p_grid", "scale_range"):
        if key in data:
            data[key] = tuple(data[key])
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Goodness of fit
# ---------------------------------------------------------------------------

def ks_distance(samples, reference) -> float:
    """Exact sup-distance between the empirical CDF and a reference CDF.

    The empirical CDF is the right-continuous step function; the sup is
    attained at a jump point approached from one of the two sides, so it is
    evaluated at the deduplicated sample points against the cumulative counts
    just before and just after each jump.  ``reference`` is ``"gaussian"`` or
    ``("chisq", df)``.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("ks_distance needs a nonempty sample")
    ref = _reference_cdf(reference)
    uniq, counts = np.unique(samples, return_counts=True)
    cum_after = np.cumsum(counts) / samples.size
    cum_before = cum_after - counts / samples.size
    f = np.array([ref(x) for x in uniq])
    return float(np.max(np.maximum(f - cum_before, cum_after - f)))


def _reference_cdf(reference) -> Callable[[float], float]:
    if reference == "gaussian":
        return normal_cdf
    if isinstance(reference, (tuple, list)) and len(reference) == 2 and reference[0] == "chisq":
        df = int(reference[1])
        return lambda x: chisq_cdf(x, df) if x > 0 else 0.0
    raise ValueError(f"unknown reference distribution {reference!r}")


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

def run(config: ExperimentConfig) -> ExperimentSummary:
    """Execute one experiment and return (and optionally persist) its summary.

    All preconditions are checked before any replication runs; violations
    raise :class:`ConfigError` (or another package error), which the CLI maps
    to exit code 2.
    """
    start = time.perf_counter()
    model, cluster = _validate(config)
    if config.mode in SIMULATE_MODES:
        summary, rows = _run_simulate(config, model, cluster)
        csv_name, csv_text = "replications.csv", _render_replications(rows)
    elif config.mode == "bias_sweep":
        summary, rows = _run_bias_sweep(config)
        csv_name, csv_text = "bias_sweep.csv", _render_bias(rows)
    elif config.mode == "perturb_check":
        summary, rows = _run_perturb_check(config, model, cluster)
        csv_name, csv_text = "perturb_check.csv", _render_perturb(rows)
    else:
        summary, rows = _run_opnorm_check(config, model)
        csv_name, csv_text = "opnorm_check.csv", _render_opnorm(rows)
    summary = replace(summary, runtime_seconds=time.perf_counter() - start)
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / csv_name).write_text(csv_text)
        payload = {"config": config.to_dict(), **summary.to_dict()}
        (out / "summary.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    return summary


def _validate(config: ExperimentConfig) -> tuple[CovarianceModel, "covmodel.ClusterIndex"]:
    if config.mode not in MODES:
        raise ConfigError(f"unknown mode {config.mode!r}; expected one of {MODES}")
    if config.reps < 2:
        raise ConfigError("reps must be at least 2")
    if not 0.0 < config.alpha < 1.0:
        raise ConfigError("alpha must lie strictly between 0 and 1")
    if config.fisher_kind not in ("true", "plugin"):
        raise ConfigError(f"unknown fisher_kind {config.fisher_kind!r}")
    try:
        model = covmodel.from_description(config.model)
        cluster = model.cluster(config.r)
    except (PcaWaldError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid model/cluster: {exc}") from exc
    if config.mode in SIMULATE_MODES:
        if model.num_clusters < 2:
            raise ConfigError("simulation needs a model with at least two clusters")
        if config.fisher_kind == "plugin" and config.n < model.p:
            raise ConfigError(
                f"plug-in mode requires n >= p, got n={config.n} < p={model.p}")
    if config.mode == "bias_sweep":
        if config.fisher_kind != "true":
            raise ConfigError("bias_sweep isolates exact-operator bias: fisher_kind must be 'true'")
        if not config.n_grid and not config.p_grid:
            raise ConfigError("bias_sweep needs an n_grid and/or a p_grid")
        for name, grid in (("n_grid", config.n_grid), ("p_grid", config.p_grid)):
            if grid and len(grid) < 2:
                raise ConfigError(f"{name} too small: need at least 2 points per axis")
        if config.p_grid:
            if config.model.get("kind") == "custom":
                raise ConfigError("p sweeps need a p-parametrizable model (spiked or decay)")
            if config.model.get("basis") is not None:
                raise ConfigError("p sweeps need a seed-generated basis")
        for n in config.n_grid or (config.n,):
            for p in config.p_grid or (model.p,):
                if n < p:
                    raise ConfigError(f"bias_sweep grid point n={n} < p={p}")
    return model, cluster


def _worker_count(config: ExperimentConfig) -> int:
    if config.threads is not None:
        return max(1, int(config.threads))
    env = os.environ.get("PCA_WALD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parallel_map(fn, items, workers: int) -> list:
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Simulate modes: ks_gaussian / ks_chisq / coverage
# ---------------------------------------------------------------------------

def _run_simulate(config, model, cluster):
    p_r = projector(model, cluster)
    true_fisher = fisher_sqrt(model, cluster)
    df = true_fisher.df
    if config.mode == "ks_chisq":
        threshold = chisq_quantile(1.0 - config.alpha, df)
        covered_fn = lambda res: res.raw <= threshold
    else:
        threshold = normal_quantile(1.0 - config.alpha)
        covered_fn = lambda res: res.normalized <= threshold

    def one_rep(i: int):
        seed = derive_seed(config.base_seed, i)
        sigma_hat = empirical_covariance(sample(model, config.n, seed))
        spectral = empirical_spectral(sigma_hat, cluster)
        if config.fisher_kind == "plugin":
            fisher = plugin_fisher_sqrt(sigma_hat, cluster)
        else:
            fisher = true_fisher
        res = wald_statistic(fisher, spectral.p_hat_r, p_r, config.n)
        return (i, seed, res.raw, res.normalized, int(covered_fn(res)))

    rows = _parallel_map(one_rep, range(config.reps), _worker_count(config))
    raws = np.array([row[2] for row in rows])
    normalized = np.array([row[3] for row in rows])
    covered = np.array([row[4] for row in rows])
    reference = ("chisq", df) if config.mode == "ks_chisq" else "gaussian"
    ks_samples = raws if config.mode == "ks_chisq" else normalized
    summary = ExperimentSummary(
        mode=config.mode, model=config.model, r=config.r, n=config.n,
        reps=config.reps, base_seed=config.base_seed,
        fisher_kind=config.fisher_kind, alpha=config.alpha, df=df,
        ks_distance=ks_distance(ks_samples, reference),
        empirical_coverage=float(covered.mean()),
        mean_raw=float(raws.mean()),
        mean_normalized=float(normalized.mean()),
        var_normalized=float(normalized.var(ddof=1)),
        extra={"threshold": threshold},
    )
    return summary, rows


# ---------------------------------------------------------------------------
# Bias sweep
# ---------------------------------------------------------------------------

def _model_at(config: ExperimentConfig, p: int) -> CovarianceModel:
    desc = dict(config.model)
    desc["p"] = p
    return covmodel.from_description(desc)


def _bias_point(config, model, n: int, point_seed: int) -> dict:
    """Estimate E[raw] - df at one grid point.

    Empirical covariances are drawn directly from the Wishart law (equal in
    distribution to the data pipeline, O(p^2) per draw), and the statistic of
    the whitened linear term, whose mean is exactly df, is subtracted as a
    control variate.  Both choices change nothing in expectation and make the
    1/n bias resolvable at desk scale.
    """
    cluster = model.cluster(config.r)
    p = model.p
    p_r = projector(model, cluster)
    p_perp = np.eye(p) - p_r
    s_neg_half = covmodel.matrix_power(model, -0.5)
    dense = model.dense()
    fisher = fisher_sqrt(model, cluster)
    (a1, b1, c1), (a2, b2, c2) = fisher.op.terms
    df = fisher.df
    positions = list(cluster.positions)

    diffs = np.empty(config.reps)
    raws_sum = 0.0
    done = 0
    chunk_index = 0
    while done < config.reps:
        size = min(_BIAS_CHUNK, config.reps - done)
        sig_hat = wishart_empirical_covariance(
            model, n, derive_seed(point_seed, chunk_index), size=size)
        _, vecs = np.linalg.eigh(sig_hat)
        cols = vecs[:, :, ::-1][:, :, positions]
        d = cols @ cols.transpose(0, 2, 1) - p_r
        whitened = c1 * (a1 @ d @ b1.T) + c2 * (a2 @ d @ b2.T)
        raw = n * np.einsum("rij,rij->r", whitened, whitened)
        e = sig_hat - dense
        w = p_perp @ (s_neg_half @ e @ s_neg_half) @ p_r
        control = n * np.einsum("rij,rij->r", w, w)
        diffs[done:done + size] = raw - control
        raws_sum += float(raw.sum())
        done += size
        chunk_index += 1

    predicted = math.sqrt(2.0 * df) * math.sqrt(p) * effective_rank(model) / n
    mean_bias = float(diffs.mean())
    return {
        "n": n, "p": p, "reps": config.reps, "df": df,
        "mean_bias": mean_bias,
        "stderr": float(diffs.std(ddof=1) / math.sqrt(config.reps)),
        "mean_raw": raws_sum / config.reps,
        "predicted_scale": float(predicted),
        "ratio": mean_bias / predicted,
    }


def _run_bias_sweep(config):
    ns = config.n_grid or (config.n,)
    ps = config.p_grid or (covmodel.from_description(config.model).p,)
    table = []
    for pi, p in enumerate(ps):
        model = _model_at(config, p)
        if model.num_clusters < 2:
            raise ConfigError("bias_sweep needs a model with at least two clusters")
        for ni, n in enumerate(ns):
            point_seed = derive_seed(config.base_seed, pi * len(ns) + ni)
            table.append(_bias_point(config, model, n, point_seed))
    first = table[0]
    summary = ExperimentSummary(
        mode=config.mode, model=config.model, r=config.r, n=config.n,
        reps=config.reps, base_seed=config.base_seed,
        fisher_kind=config.fisher_kind, alpha=config.alpha,
        df=first["df"], bias_table=table,
    )
    return summary, table


# ---------------------------------------------------------------------------
# Perturbation bound checks
# ---------------------------------------------------------------------------

def _run_perturb_check(config, model, cluster):
    if model.num_clusters < 2:
        raise ConfigError("perturb_check needs a model with at least two clusters")
    counts = [config.reps // 3 + (1 if i < config.reps % 3 else 0) for i in range(3)]
    jobs = []
    for e_i, (kind, count) in enumerate(zip(_ENSEMBLES, counts)):
        seed = derive_seed(config.base_seed, e_i)
        for e in perturbation_ensemble(model, kind, count, seed,
                                       scale_range=config.scale_range, r=config.r):
            jobs.append((kind, e))

    def one(job):
        kind, e = job
        report = check_bounds(expand(model, cluster, e))
        r1, r2, r3 = (c.ratio for c in report.checks)
        norm_e = float(np.max(np.abs(np.linalg.eigvalsh(e))))
        return (kind, norm_e, r1, r2, r3, int(report.all_passed))

    rows = _parallel_map(one, jobs, _worker_count(config))
    violations = sum(1 for row in rows if not row[5])
    ratios = np.array([[row[2], row[3], row[4]] for row in rows])
    summary = ExperimentSummary(
        mode=config.mode, model=config.model, r=config.r, n=config.n,
        reps=config.reps, base_seed=config.base_seed,
        fisher_kind=config.fisher_kind, alpha=config.alpha,
        extra={
            "violations": violations,
            "all_passed": violations == 0,
            "max_ratio_shift": float(ratios[:, 0].max()),
            "max_ratio_quadratic": float(ratios[:, 1].max()),
            "max_ratio_cubic": float(ratios[:, 2].max()),
            "counts": dict(zip(_ENSEMBLES, counts)),
        },
    )
    return summary, rows


# ---------------------------------------------------------------------------
# Operator-norm concentration
# ---------------------------------------------------------------------------

def _run_opnorm_check(config, model):
    check = opnorm_concentration_check(model, config.n, config.reps, config.base_seed)
    rows = [(i, derive_seed(config.base_seed, i), float(v))
            for i, v in enumerate(check.opnorms)]
    summary = ExperimentSummary(
        mode=config.mode, model=config.model, r=config.r, n=config.n,
        reps=config.reps, base_seed=config.base_seed,
        fisher_kind=config.fisher_kind, alpha=config.alpha,
        extra={
            "mean_opnorm": check.mean_opnorm,
            "predicted": check.predicted,
            "ratio": check.ratio,
        },
    )
    return summary, rows


# ---------------------------------------------------------------------------
# CSV rendering (repr for floats: shortest exact round trip)
# ---------------------------------------------------------------------------

def _render_replications(rows) -> str:
    lines = [REPLICATIONS_HEADER]
    for i, seed, raw, normalized, covered in rows:
        lines.append(f"{i},{seed},{raw!r},{normalized!r},{covered}")
    return "\n".join(lines) + "\n"


def _render_bias(rows) -> str:
    lines = ["n,p,reps,df,mean_bias,stderr,mean_raw,predicted_scale,ratio"]
    for row in rows:
        lines.append(",".join([
            str(row["n"]), str(row["p"]), str(row["reps"]), str(row["df"]),
            repr(row["mean_bias"]), repr(row["stderr"]), repr(row["mean_raw"]),
            repr(row["predicted_scale"]), repr(row["ratio"]),
        ]))
    return "\n".join(lines) + "\n"


def _render_perturb(rows) -> str:
    lines = ["ensemble,norm_e,ratio1,ratio2,ratio3,pass"]
    for kind, norm_e, r1, r2, r3, ok in rows:
        lines.append(f"{kind},{norm_e!r},{r1!r},{r2!r},{r3!r},{ok}")
    return "\n".join(lines) + "\n"


def _render_opnorm(rows) -> str:
    lines = ["rep,seed,opnorm"]
    for i, seed, v in rows:
        lines.append(f"{i},{seed},{v!r}")
    return "\n".join(lines) + "\n"
