"""Seeded toy datasets for tests, benchmarks and the CLI self-checks."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .dataio import Dataset, from_dense


def blobs(n: int, p: int = 2, sep: float = 1.5, seed: int = 0) -> Dataset:
    """Two isotropic Gaussian clouds centered at -sep/2 and +sep/2 along every axis.

    Labels alternate +1, -1 so any prefix split keeps both classes.
    """
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = rng.standard_normal((n, p)) + 0.5 * sep * y[:, None]
    return from_dense(X, y)


def separable(n: int, p: int = 2, margin: float = 0.5, seed: int = 0) -> Dataset:
    """Points on either side of a random hyperplane through the origin, at least ``margin`` away."""
    rng = np.random.default_rng(seed)
    normal = rng.standard_normal(p)
    normal /= np.linalg.norm(normal)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = rng.uniform(-3.0, 3.0, (n, p))
    along = X @ normal
    X += ((margin + np.abs(along)) * y - along)[:, None] * normal[None, :]
    return from_dense(X, y)


def sparse_binary(n: int, p: int = 100, density: float = 0.1, seed: int = 0) -> Dataset:
    """Sparse nonnegative features with labels from a noisy random linear rule."""
    rng = np.random.default_rng(seed)
    X = sp.random(n, p, density=density, format="csr", random_state=rng, dtype=np.float64)
    X.sort_indices()
    w = rng.standard_normal(p)
    s = X @ w
    s = s - np.median(s) + 0.3 * rng.standard_normal(n)
    y = np.where(s >= 0.0, 1.0, -1.0)
    return Dataset(X, y, {-1.0: -1, 1.0: 1})
