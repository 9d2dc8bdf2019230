"""Kronecker-form linear operators on p x p matrices.

Convention: the pair ``(A, B)`` acts on a matrix ``M`` as ``A @ M @ B.T``, and
an operator is a coefficient-weighted sum of such pairs.  Operators are kept
in this factored form and applied in O(p^3); the dense p^2 x p^2 matrix is
materialized only inside test oracles.

Built here are the resolvent of an eigenvalue cluster, the whitening operator
that makes the linear part of the projector error isotropic (true and plug-in
variants), and the limiting covariance of the projector error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pca_wald._linalg import check_symmetric, eigh_descending, frozen
from pca_wald.covmodel import ClusterIndex, CovarianceModel, matrix_power, projector, _as_cluster
from pca_wald.errors import SingleClusterError, SingularCovarianceError

# Plug-in inversion is refused (not regularized) below this relative floor.
EPS_PD_FACTOR = 1e-12

TRUE_FISHER_SQRT = "true_fisher_sqrt"
PLUGIN_FISHER_SQRT = "plugin_fisher_sqrt"
LIMITING_COVARIANCE = "limiting_covariance"


@dataclass(frozen=True)
class KroneckerSum:
    """Sum of Kronecker-pair terms ``M -> sum coeff * A @ M @ B.T``."""

    terms: tuple[tuple[np.ndarray, np.ndarray, float], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("KroneckerSum needs at least one term")
        p = np.asarray(self.terms[0][0]).shape[0]
        fixed = []
        for a, b, coeff in self.terms:
            a = frozen(a)
            b = frozen(b)
            if a.shape != (p, p) or b.shape != (p, p):
                raise ValueError("all factors must be square matrices of equal dimension")
            fixed.append((a, b, float(coeff)))
        object.__setattr__(self, "terms", tuple(fixed))

    @property
    def p(self) -> int:
        return self.terms[0][0].shape[0]

    def apply(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        if m.shape != (self.p, self.p):
            raise ValueError(f"input must be {self.p}x{self.p}, got {m.shape}")
        out = np.zeros_like(m)
        for a, b, coeff in self.terms:
            out += coeff * (a @ m @ b.T)
        return out


@dataclass(frozen=True)
class FisherOperator:
    """A KroneckerSum tagged with its role, cluster and degrees of freedom."""

    kind: str
    op: KroneckerSum
    cluster: ClusterIndex
    df: int

    def apply(self, m: np.ndarray) -> np.ndarray:
        return self.op.apply(m)


def kron_apply(op: KroneckerSum, m: np.ndarray) -> np.ndarray:
    """Apply a factored operator: ``sum coeff * A @ M @ B.T``."""
    return op.apply(m)


# ---------------------------------------------------------------------------
# Operators built from an exact model
# ---------------------------------------------------------------------------

def resolvent(model: CovarianceModel, r) -> np.ndarray:
    """Resolvent of cluster ``r``: sum over other clusters of P_s / (lam_r - lam_s).

    Symmetric, with the cluster's own eigenspace in its kernel.
    """
    cluster = _as_cluster(model, r)
    if model.num_clusters == 1:
        raise SingleClusterError("resolvent undefined for a single-cluster model")
    lam_r = model.clusters[cluster.r - 1][0]
    out = np.zeros((model.p, model.p))
    for s in range(1, model.num_clusters + 1):
        if s == cluster.r:
            continue
        lam_s = model.clusters[s - 1][0]
        out += projector(model, s) / (lam_r - lam_s)
    return out


def fisher_sqrt(model: CovarianceModel, r) -> FisherOperator:
    """Whitening square root of the projector-error covariance at cluster ``r``.

    Two Kronecker terms with coefficient 1/sqrt(2) each, built from
    ``Sigma**(-1/2)``, the cluster projector and ``lam_r I - Sigma``.  Maps
    symmetric matrices to symmetric matrices.
    """
    cluster = _as_cluster(model, r)
    lam_r = model.clusters[cluster.r - 1][0]
    s_neg_half = matrix_power(model, -0.5)
    p_r = projector(model, cluster)
    shifted = lam_r * np.eye(model.p) - model.dense()
    coeff = 1.0 / np.sqrt(2.0)
    op = KroneckerSum((
        (s_neg_half @ shifted, p_r @ s_neg_half, coeff),
        (s_neg_half @ p_r, shifted @ s_neg_half, coeff),
    ))
    m_r = cluster.multiplicity
    return FisherOperator(kind=TRUE_FISHER_SQRT, op=op, cluster=cluster,
                          df=m_r * (model.p - m_r))


def limiting_covariance(model: CovarianceModel, r) -> FisherOperator:
    """Limiting covariance of the projector error: for each other cluster s,
    the pair blocks ``P_s (x) P_r`` and ``P_r (x) P_s`` weighted by
    ``2 lam_r lam_s / (lam_r - lam_s)**2``."""
    cluster = _as_cluster(model, r)
    if model.num_clusters == 1:
        raise SingleClusterError("limiting covariance undefined for a single-cluster model")
    lam_r = model.clusters[cluster.r - 1][0]
    p_r = projector(model, cluster)
    terms = []
    for s in range(1, model.num_clusters + 1):
        if s == cluster.r:
            continue
        lam_s = model.clusters[s - 1][0]
        p_s = projector(model, s)
        coeff = 2.0 * lam_r * lam_s / (lam_r - lam_s) ** 2
        terms.append((p_s, p_r, coeff))
        terms.append((p_r, p_s, coeff))
    m_r = cluster.multiplicity
    return FisherOperator(kind=LIMITING_COVARIANCE, op=KroneckerSum(tuple(terms)),
                          cluster=cluster, df=m_r * (model.p - m_r))


# ---------------------------------------------------------------------------
# Plug-in operator built from an empirical covariance
# ---------------------------------------------------------------------------

def plugin_fisher_sqrt(sigma_hat: np.ndarray, delta_r: ClusterIndex) -> FisherOperator:
    """Plug-in whitening operator assembled from an empirical covariance.

    The input is eigendecomposed (full, sorted descending); the empirical
    projector comes from the eigenvector columns at the cluster's positions,
    and the cluster eigenvalue is the largest one in the cluster (fixed
    tie-break for determinism).

    Raises
    ------
    SingularCovarianceError
        If the smallest eigenvalue is at or below ``1e-12`` times the largest
        (requires ``n >= p`` in practice).
    """
    sigma_hat = check_symmetric(sigma_hat, "sigma_hat")
    p = sigma_hat.shape[0]
    if max(delta_r.positions) >= p:
        raise ValueError("cluster positions exceed the matrix dimension")
    vals, vecs = eigh_descending(sigma_hat)
    if vals[-1] <= EPS_PD_FACTOR * max(vals[0], 0.0):
        raise SingularCovarianceError(
            "empirical covariance not invertible: smallest eigenvalue "
            f"{vals[-1]:.3e} at or below the floor {EPS_PD_FACTOR:.0e} * largest"
        )
    cols = vecs[:, list(delta_r.positions)]
    p_hat_r = cols @ cols.T
    lam_hat_r = vals[min(delta_r.positions)]
    s_neg_half = (vecs * vals ** -0.5) @ vecs.T
    shifted = lam_hat_r * np.eye(p) - sigma_hat
    coeff = 1.0 / np.sqrt(2.0)
    op = KroneckerSum((
        (s_neg_half @ shifted, p_hat_r @ s_neg_half, coeff),
        (s_neg_half @ p_hat_r, shifted @ s_neg_half, coeff),
    ))
    m_r = delta_r.multiplicity
    return FisherOperator(kind=PLUGIN_FISHER_SQRT, op=op, cluster=delta_r,
                          df=m_r * (p - m_r))


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------

def dump_terms(op: KroneckerSum, path) -> None:
    """Tidy CSV of the factored terms: term, coeff, factor (a|b), row, col, value."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "coeff", "factor", "row", "col", "value"])
        for t, (a, b, coeff) in enumerate(op.terms):
            for label, mat in (("a", a), ("b", b)):
                for i in range(mat.shape[0]):
                    for j in range(mat.shape[1]):
                        writer.writerow([t, repr(coeff), label, i, j,
                                         repr(float(mat[i, j]))])
