"""Seed-deterministic Gaussian sampling and empirical spectral quantities.

Rows are drawn as ``X_i = Sigma^{1/2} Z_i`` with standard Gaussian ``Z_i``
from a counter-based generator, where ``Sigma^{1/2}`` comes from the model's
exact spectral form (never from a Cholesky of a reconstructed dense matrix).
Data are generated mean-zero exactly; there is no centering step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pca_wald._linalg import check_symmetric, eigh_descending, frozen
from pca_wald.covmodel import ClusterIndex, CovarianceModel, matrix_power
from pca_wald.rng import derive_seed, make_generator

__all__ = [
    "SampleBatch", "EmpiricalSpectral", "sample", "empirical_covariance",
    "empirical_spectral", "wishart_empirical_covariance", "save_batch",
    "load_batch", "derive_seed",
]


@dataclass(frozen=True)
class SampleBatch:
    """An (n, p) block of centred Gaussian observations plus its provenance."""

    n: int
    p: int
    data: np.ndarray
    seed: int
    model_ref: dict

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample count n must be at least 1")
        data = frozen(self.data)
        if data.shape != (self.n, self.p):
            raise ValueError(f"data must have shape ({self.n}, {self.p})")
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class EmpiricalSpectral:
    """Empirical covariance with its full spectrum and one cluster's projector."""

    sigma_hat: np.ndarray
    eigenvalues_desc: np.ndarray
    p_hat_r: np.ndarray
    lambda_hat_r: float
    lambda_hat_min: float
    cluster: ClusterIndex


def sample(model: CovarianceModel, n: int, seed: int) -> SampleBatch:
    """Draw ``n`` i.i.d. centred Gaussian rows with the model's covariance.

    The same ``(model, n, seed)`` triple reproduces the batch bit-exactly.
    """
    if n < 1:
        raise ValueError("sample count n must be at least 1")
    rng = make_generator(seed)
    z = rng.standard_normal((n, model.p))
    x = z @ matrix_power(model, 0.5)
    return SampleBatch(n=n, p=model.p, data=x, seed=int(seed), model_ref=model.describe())


def empirical_covariance(batch: SampleBatch) -> np.ndarray:
    """Empirical covariance ``(1/n) sum_j X_j X_j^T`` of a batch."""
    x = batch.data
    return x.T @ x / batch.n


def empirical_spectral(sigma_hat: np.ndarray, delta_r: ClusterIndex) -> EmpiricalSpectral:
    """Full descending eigendecomposition plus the projector at the cluster's
    positions.  The cluster eigenvalue is the largest in the cluster; the
    smallest overall eigenvalue is reported as-is (no error here even if the
    input is rank deficient)."""
    sigma_hat = check_symmetric(sigma_hat, "sigma_hat")
    p = sigma_hat.shape[0]
    if max(delta_r.positions) >= p:
        raise ValueError("cluster positions exceed the matrix dimension")
    vals, vecs = eigh_descending(sigma_hat)
    cols = vecs[:, list(delta_r.positions)]
    return EmpiricalSpectral(
        sigma_hat=sigma_hat,
        eigenvalues_desc=vals,
        p_hat_r=cols @ cols.T,
        lambda_hat_r=float(vals[min(delta_r.positions)]),
        lambda_hat_min=float(vals[-1]),
        cluster=delta_r,
    )


def wishart_empirical_covariance(
    model: CovarianceModel, n: int, seed: int, size: int = 1
) -> np.ndarray:
    """Empirical covariances drawn directly from the Wishart law, in a batch.

    Uses the Bartlett decomposition (lower-triangular Gaussian factor with
    chi-square diagonal), which is equal in distribution to forming
    ``(1/n) X^T X`` from ``n`` Gaussian rows but costs O(p^2) per draw instead
    of O(n p).  Requires ``n >= p``.  Returns shape ``(size, p, p)``.
    """
    p = model.p
    if n < p:
        raise ValueError("Bartlett sampling requires n >= p")
    rng = make_generator(seed)
    a = np.tril(rng.standard_normal((size, p, p)), k=-1)
    dfs = n - np.arange(p)
    a[:, np.arange(p), np.arange(p)] = np.sqrt(rng.chisquare(dfs, size=(size, p)))
    f = matrix_power(model, 0.5) @ a
    return (f @ f.transpose(0, 2, 1)) / n


# ---------------------------------------------------------------------------
# Batch persistence: raw float64 rows plus a JSON sidecar
# ---------------------------------------------------------------------------

def save_batch(batch: SampleBatch, path) -> None:
    """Write row-major float64 data to ``path`` and metadata to ``path + '.json'``."""
    path = Path(path)
    batch.data.astype("<f8").tofile(path)
    sidecar = {"n": batch.n, "p": batch.p, "seed": batch.seed, "model": batch.model_ref}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))


def load_batch(path) -> SampleBatch:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    data = np.fromfile(path, dtype="<f8").reshape(meta["n"], meta["p"])
    return SampleBatch(n=meta["n"], p=meta["p"], data=data,
                       seed=meta["seed"], model_ref=meta["model"])
