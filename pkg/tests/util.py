"""Shared test helpers, including the dense operator oracle.

The dense oracle materializes a factored Kronecker operator as the full
p^2 x p^2 matrix acting on row-major flattened inputs; with the convention
``(A, B): M -> A @ M @ B.T`` the dense block is ``sum coeff * kron(A, B)``.
Materialization lives here, in tests only, never in the package.
"""

import numpy as np

from pca_wald.linops import KroneckerSum


def dense_matrix(op: KroneckerSum) -> np.ndarray:
    p = op.p
    out = np.zeros((p * p, p * p))
    for a, b, coeff in op.terms:
        out += coeff * np.kron(a, b)
    return out


def dense_apply(op: KroneckerSum, m: np.ndarray) -> np.ndarray:
    p = op.p
    return (dense_matrix(op) @ np.asarray(m, dtype=float).reshape(-1)).reshape(p, p)


def random_symmetric(rng: np.random.Generator, p: int) -> np.ndarray:
    g = rng.standard_normal((p, p))
    return (g + g.T) / 2.0
