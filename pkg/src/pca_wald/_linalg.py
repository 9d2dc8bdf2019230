"""Small dense-linear-algebra helpers used throughout the package."""

from __future__ import annotations

import numpy as np


def eigh_descending(sym: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full symmetric eigendecomposition with eigenvalues sorted descending.

    Ties are left in LAPACK input order (a measure-zero event for the Gaussian
    data this package feeds in).
    """
    vals, vecs = np.linalg.eigh(sym)
    return vals[::-1], vecs[:, ::-1]


def operator_norm(sym: np.ndarray) -> float:
    """Operator (spectral) norm of a symmetric matrix via eigendecomposition."""
    if sym.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(sym))))


def check_symmetric(m: np.ndarray, name: str = "matrix", tol: float = 1e-8) -> np.ndarray:
    """Validate approximate symmetry and return the input as a float array."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > tol * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"{name} is not symmetric")
    return a


def frozen(a: np.ndarray) -> np.ndarray:
    """Owned, read-only float64 copy of ``a``."""
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out
