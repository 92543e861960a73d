"""Nystrom mapping matrix and virtual features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import sym_eig

EIG_THRESHOLD = 1e-6


@dataclass
class NystromMap:
    """``mapping = V diag(1/sqrt(lam))`` with columns zeroed where lam < 1e-6."""

    mapping: np.ndarray
    eigenvalues: np.ndarray
    retained: np.ndarray

    @property
    def k(self) -> int:
        return self.mapping.shape[0]

    @property
    def rank(self) -> int:
        return int(self.retained.sum())


def build_mapping(K_ll, threshold: float = EIG_THRESHOLD) -> NystromMap:
    eig = sym_eig(K_ll)
    lam = eig.eigenvalues
    retained = lam >= threshold
    scale = np.zeros_like(lam)
    scale[retained] = 1.0 / np.sqrt(lam[retained])
    return NystromMap(eig.eigenvectors * scale[None, :], lam, retained)


def virtual_features(K_xl, nmap: NystromMap) -> np.ndarray:
    """Rows of ``K_xl @ M``: the finite-dimensional stand-ins for the feature map."""
    K_xl = np.atleast_2d(np.asarray(K_xl, dtype=np.float64))
    if K_xl.shape[1] != nmap.k:
        raise DimensionError(f"kernel block has {K_xl.shape[1]} columns, mapping expects {nmap.k}")
    return K_xl @ nmap.mapping


def exact_rank_k_features(K_rr, k: int) -> np.ndarray:
    """Top-k eigenvectors of ``K_rr`` scaled by sqrt(eigenvalue), negatives clamped to 0."""
    K_rr = np.asarray(K_rr, dtype=np.float64)
    n = K_rr.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range [1, {n}]")
    eig = sym_eig(K_rr)
    lam = np.maximum(eig.eigenvalues[:k], 0.0)
    return eig.eigenvectors[:, :k] * np.sqrt(lam)[None, :]
