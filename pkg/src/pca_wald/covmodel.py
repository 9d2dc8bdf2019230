"""Covariance matrices specified by their spectral decomposition.

Models are stored spectrally (distinct eigenvalues with multiplicities plus an
orthogonal eigenbasis), never as raw dense matrices, so eigenvalue clusters,
spectral projectors, gaps and the smallest eigenvalue are exact by
construction.  Three families are provided:

- ``make_spiked``: low-rank signal plus isotropic noise,
  eigenvalues ``{s_i + sigma2} U {sigma2}``;
- ``make_decay``: polynomially decaying spectrum ``lambda_i = i**(-alpha)``
  (constant fixed to 1);
- ``make_custom``: explicit ``(eigenvalue, multiplicity)`` clusters.

Equal eigenvalues are merged into clusters at construction using exact
comparison; inputs are exact, so no floating-point clustering tolerance is
needed on the model side.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from pca_wald._linalg import frozen
from pca_wald.errors import SingleClusterError
from pca_wald.rng import make_generator

_ORTHO_TOL = 1e-10


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterIndex:
    """A distinct-eigenvalue cluster: 1-based rank ``r`` plus the 0-based,
    contiguous sorted-eigenvalue positions it occupies."""

    r: int
    positions: tuple[int, ...]

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("cluster rank r must be a positive integer")
        if not self.positions:
            raise ValueError("cluster positions must be nonempty")
        lo, hi = self.positions[0], self.positions[-1]
        if self.positions != tuple(range(lo, hi + 1)):
            raise ValueError("cluster positions must be a contiguous ascending run")

    @property
    def multiplicity(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class CovarianceModel:
    """Exact spectral description of a covariance matrix.

    Attributes
    ----------
    p : int
        Ambient dimension.
    clusters : tuple of (float, int)
        Distinct eigenvalues with multiplicities, strictly descending and
        strictly positive, multiplicities summing to ``p``.
    basis : (p, p) ndarray, read-only
        Orthogonal matrix whose columns are eigenvectors, grouped by cluster
        in descending eigenvalue order.
    kind, params, seed
        Serialization metadata; ``seed`` is the basis seed when the basis was
        generated rather than supplied.
    """

    p: int
    clusters: tuple[tuple[float, int], ...]
    basis: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("dimension p must be positive")
        if not self.clusters:
            raise ValueError("at least one eigenvalue cluster is required")
        lams = [l for l, _ in self.clusters]
        mults = [m for _, m in self.clusters]
        if any(l <= 0 for l in lams):
            raise ValueError("eigenvalues must be strictly positive")
        if any(m < 1 for m in mults):
            raise ValueError("multiplicities must be positive integers")
        if any(a <= b for a, b in zip(lams, lams[1:])):
            raise ValueError("eigenvalues must be strictly descending")
        if sum(mults) != self.p:
            raise ValueError(f"multiplicities sum to {sum(mults)}, expected p={self.p}")
        basis = frozen(self.basis)
        if basis.shape != (self.p, self.p):
            raise ValueError(f"eigenbasis must be {self.p}x{self.p}")
        if np.max(np.abs(basis.T @ basis - np.eye(self.p))) > _ORTHO_TOL:
            raise ValueError("eigenbasis is not orthogonal to tolerance 1e-10")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "clusters", tuple((float(l), int(m)) for l, m in self.clusters))

    # -- basic spectral quantities ------------------------------------------

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    def eigenvalues(self) -> np.ndarray:
        """All ``p`` eigenvalues, descending, repeated with multiplicity."""
        return np.concatenate([np.full(m, l) for l, m in self.clusters])

    @property
    def trace(self) -> float:
        return float(sum(l * m for l, m in self.clusters))

    @property
    def operator_norm(self) -> float:
        return self.clusters[0][0]

    @property
    def lambda_min(self) -> float:
        return self.clusters[-1][0]

    def cluster(self, r: int) -> ClusterIndex:
        """ClusterIndex for the ``r``-th distinct eigenvalue (1-based)."""
        if not 1 <= r <= self.num_clusters:
            raise ValueError(f"cluster rank r={r} out of range 1..{self.num_clusters}")
        start = sum(m for _, m in self.clusters[: r - 1])
        return ClusterIndex(r=r, positions=tuple(range(start, start + self.clusters[r - 1][1])))

    def dense(self) -> np.ndarray:
        """Reconstructed dense covariance matrix."""
        return matrix_power(self, 1.0)

    def describe(self) -> dict:
        """JSON-ready description {kind, params, seed, p} (+ basis if explicit)."""
        desc = {"kind": self.kind, "params": dict(self.params), "seed": self.seed, "p": self.p}
        if self.seed is None:
            desc["basis"] = self.basis.tolist()
        return desc


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def random_orthogonal(p: int, seed: int) -> np.ndarray:
    """Orthonormalize a seeded standard Gaussian matrix (QR with sign fix)."""
    g = make_generator(seed).standard_normal((p, p))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def _resolve_basis(p: int, basis: Optional[np.ndarray], seed: Optional[int]):
    if basis is not None:
        return np.asarray(basis, dtype=float), None
    used = 0 if seed is None else int(seed)
    return random_orthogonal(p, used), used


def make_spiked(
    spikes: Sequence[float],
    sigma2: float,
    p: int,
    basis: Optional[np.ndarray] = None,
    seed: Optional[int] = 0,
) -> CovarianceModel:
    """Spiked model: rank-``len(spikes)`` signal plus isotropic noise.

    Eigenvalues are ``{s_i + sigma2}`` together with ``sigma2`` at
    multiplicity ``p - len(spikes)``; equal spikes merge into one cluster.

    Raises
    ------
    ValueError
        If ``len(spikes) >= p`` or any input is nonpositive.
    """
    spikes = [float(s) for s in spikes]
    if len(spikes) >= p:
        raise ValueError("number of spikes must be smaller than p")
    if any(s <= 0 for s in spikes):
        raise ValueError("spikes must be strictly positive")
    if sigma2 <= 0:
        raise ValueError("noise variance sigma2 must be strictly positive")
    merged: list[tuple[float, int]] = []
    for s in sorted(spikes, reverse=True):
        lam = s + sigma2
        if merged and merged[-1][0] == lam:
            merged[-1] = (lam, merged[-1][1] + 1)
        else:
            merged.append((lam, 1))
    merged.append((float(sigma2), p - len(spikes)))
    q, used_seed = _resolve_basis(p, basis, seed)
    return CovarianceModel(
        p=p, clusters=tuple(merged), basis=q, kind="spiked",
        params={"spikes": spikes, "sigma2": float(sigma2)}, seed=used_seed,
    )


def make_decay(
    alpha: float,
    p: int,
    basis: Optional[np.ndarray] = None,
    seed: Optional[int] = 0,
) -> CovarianceModel:
    """Polynomial decay ``lambda_i = i**(-alpha)``; ``alpha = 0`` is the identity."""
    if alpha < 0:
        raise ValueError("decay exponent alpha must be nonnegative")
    if p < 1:
        raise ValueError("dimension p must be positive")
    if alpha == 0:
        clusters: tuple[tuple[float, int], ...] = ((1.0, p),)
    else:
        clusters = tuple((float(i) ** (-alpha), 1) for i in range(1, p + 1))
    q, used_seed = _resolve_basis(p, basis, seed)
    return CovarianceModel(
        p=p, clusters=clusters, basis=q, kind="decay",
        params={"alpha": float(alpha)}, seed=used_seed,
    )


def make_custom(
    eigenvalues: Sequence[tuple[float, int]],
    basis: Optional[np.ndarray] = None,
    seed: Optional[int] = 0,
) -> CovarianceModel:
    """Model from explicit ``(eigenvalue, multiplicity)`` clusters (descending)."""
    clusters = tuple((float(l), int(m)) for l, m in eigenvalues)
    p = sum(m for _, m in clusters)
    q, used_seed = _resolve_basis(p, basis, seed)
    return CovarianceModel(
        p=p, clusters=clusters, basis=q, kind="custom",
        params={"eigenvalues": [[l, m] for l, m in clusters]}, seed=used_seed,
    )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def effective_rank(model: CovarianceModel) -> float:
    """trace / operator norm; lies in [1, p] and is scale invariant."""
    return model.trace / model.operator_norm


def spectral_gap(model: CovarianceModel, r) -> float:
    """Distance from the ``r``-th distinct eigenvalue to its nearest neighbor.

    The convention "lambda_0 = infinity" is realized by branching: for ``r=1``
    only the gap below counts, for the last cluster only the gap above.
    """
    cluster = _as_cluster(model, r)
    k = model.num_clusters
    if k == 1:
        raise SingleClusterError("spectral gap undefined for a single-cluster model")
    lams = [l for l, _ in model.clusters]
    i = cluster.r - 1
    below = lams[i] - lams[i + 1] if i + 1 < k else np.inf
    above = lams[i - 1] - lams[i] if i > 0 else np.inf
    return float(min(above, below))


def projector(model: CovarianceModel, r) -> np.ndarray:
    """Orthogonal spectral projector onto the ``r``-th eigenvalue cluster."""
    cluster = _as_cluster(model, r)
    cols = model.basis[:, list(cluster.positions)]
    return cols @ cols.T


def matrix_power(model: CovarianceModel, exponent: float) -> np.ndarray:
    """Dense ``Sigma**exponent`` assembled from the spectral form."""
    lams = model.eigenvalues()
    if exponent < 0 and lams[-1] <= 0:
        raise ValueError("negative power of a model with a nonpositive eigenvalue")
    scaled = model.basis * lams ** exponent
    out = scaled @ model.basis.T
    return (out + out.T) / 2.0


def _as_cluster(model: CovarianceModel, r) -> ClusterIndex:
    if isinstance(r, ClusterIndex):
        expected = model.cluster(r.r)
        if expected.positions != r.positions:
            raise ValueError("ClusterIndex positions do not match the model's multiplicities")
        return r
    return model.cluster(int(r))


# ---------------------------------------------------------------------------
# External interfaces: JSON description, dense CSV export
# ---------------------------------------------------------------------------

def from_description(desc: dict) -> CovarianceModel:
    """Rebuild a model from its ``describe()`` dictionary."""
    kind = desc.get("kind")
    p = int(desc["p"])
    seed = desc.get("seed")
    basis = np.asarray(desc["basis"], dtype=float) if desc.get("basis") is not None else None
    if basis is None and seed is None:
        raise ValueError("model description needs either a seed or an explicit basis")
    if kind == "spiked":
        return make_spiked(desc["params"]["spikes"], desc["params"]["sigma2"], p,
                           basis=basis, seed=seed)
    if kind == "decay":
        return make_decay(desc["params"]["alpha"], p, basis=basis, seed=seed)
    if kind == "custom":
        return make_custom([tuple(c) for c in desc["params"]["eigenvalues"]],
                           basis=basis, seed=seed)
    raise ValueError(f"unknown model kind {kind!r}")


def to_json(model: CovarianceModel) -> str:
    return json.dumps(model.describe())


def from_json(text: str) -> CovarianceModel:
    return from_description(json.loads(text))


def export_dense_csv(model: CovarianceModel, path) -> None:
    """Write the reconstructed dense matrix row-major at full precision."""
    dense = model.dense()
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in dense:
            writer.writerow([repr(float(v)) for v in row])
