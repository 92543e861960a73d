"""Kernel functions, Gram blocks and the bandwidth heuristic.

Vectors are handled in CSR form throughout. Pairwise statistics (squared
distance and inner product) come from a two-pointer merge over the sorted
column indices, so sparse samples are never densified; dense inputs such
as k-means centers are converted to CSR first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _accel
from .dataio import Dataset, SparseVector, from_vectors

KINDS = ("rbf", "polynomial", "sigmoid", "linear")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}
GAMMA_CAP = 20000
EXACT_GAMMA_LIMIT = 5000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    ``rbf_convention="divide"`` gives ``exp(-||x - x'||^2 / gamma)``;
    ``"multiply"`` gives ``exp(-gamma ||x - x'||^2)``.
    """

    kind: str = "rbf"
    gamma: float = 1.0
    degree: int = 3
    alpha: float = 1.0
    beta: float = 0.0
    rbf_convention: str = "divide"

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf kernel needs gamma > 0")
        if self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.rbf_convention not in ("divide", "multiply"):
            raise ValueError(f"unknown rbf convention {self.rbf_convention!r}")

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    def params(self):
        conv = 1 if self.rbf_convention == "multiply" else 0
        return (self.code, float(self.gamma), int(self.degree), float(self.alpha), float(self.beta), conv)


@_accel.njit
def _pair_stats(ia, ja, va, i, ib, jb, vb, j):
    # index-ascending merge; term order is the same whichever side is "a"
    pa, ea = ia[i], ia[i + 1]
    pb, eb = ib[j], ib[j + 1]
    sq = 0.0
    dot = 0.0
    while pa < ea and pb < eb:
        ca = ja[pa]
        cb = jb[pb]
        if ca == cb:
            d = va[pa] - vb[pb]
            sq += d * d
            dot += va[pa] * vb[pb]
            pa += 1
            pb += 1
        elif ca < cb:
            sq += va[pa] * va[pa]
            pa += 1
        else:
            sq += vb[pb] * vb[pb]
            pb += 1
    while pa < ea:
        sq += va[pa] * va[pa]
        pa += 1
    while pb < eb:
        sq += vb[pb] * vb[pb]
        pb += 1
    return sq, dot


@_accel.njit
def _kernel_value(sq, dot, code, gamma, degree, alpha, beta, conv):
    if code == 0:
        if conv == 1:
            return math.exp(-gamma * sq)
        return math.exp(-sq / gamma)
    if code == 1:
        return (1.0 + dot) ** degree
    if code == 2:
        return math.tanh(alpha * dot + beta)
    return dot


@_accel.njit
def _gram_nb(ia, ja, va, ib, jb, vb, same, code, gamma, degree, alpha, beta, conv):
    na = ia.shape[0] - 1
    nb = ib.shape[0] - 1
    out = np.empty((na, nb))
    for i in range(na):
        j0 = i if same else 0
        for j in range(j0, nb):
            sq, dot = _pair_stats(ia, ja, va, i, ib, jb, vb, j)
            v = _kernel_value(sq, dot, code, gamma, degree, alpha, beta, conv)
            out[i, j] = v
            if same:
                out[j, i] = v
    return out


def _gram_np(A, B, same, params):
    code, gamma, degree, alpha, beta, conv = params
    dot = (A @ B.T).toarray()
    if code == 0:
        na = np.asarray(A.multiply(A).sum(axis=1)).ravel()
        nb = na if same else np.asarray(B.multiply(B).sum(axis=1)).ravel()
        sq = np.maximum(na[:, None] + nb[None, :] - 2.0 * dot, 0.0)
        out = np.exp(-gamma * sq) if conv == 1 else np.exp(-sq / gamma)
    elif code == 1:
        out = (1.0 + dot) ** degree
    elif code == 2:
        out = np.tanh(alpha * dot + beta)
    else:
        out = dot
    if same:
        out = np.triu(out) + np.triu(out, 1).T
    return out


def as_csr(A) -> sp.csr_matrix:
    """Coerce a Dataset, sparse matrix, dense 2-d array or SparseVector list to CSR."""
    if isinstance(A, Dataset):
        M = A.X
    elif sp.issparse(A):
        M = sp.csr_matrix(A)
    elif isinstance(A, (list, tuple)) and (len(A) == 0 or isinstance(A[0], SparseVector)):
        M = from_vectors(A, np.zeros(len(A))).X
    else:
        arr = np.asarray(A, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        M = sp.csr_matrix(arr)
    if not M.has_sorted_indices:
        M = M.copy()
        M.sort_indices()
    return M


def _csr_arrays(M):
    return (M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.astype(np.float64))


def kernel_eval(spec: KernelSpec, x: SparseVector, x2: SparseVector) -> float:
    Ma = as_csr([x])
    Mb = as_csr([x2])
    sq, dot = _pair_stats(*_csr_arrays(Ma), 0, *_csr_arrays(Mb), 0)
    return float(_kernel_value(sq, dot, *spec.params()))


def gram_block(spec: KernelSpec, A, B, *, use_numba=None) -> np.ndarray:
    """Kernel matrix with entry (i, j) = kernel(A_i, B_j).

    Passing the same object for ``A`` and ``B`` evaluates each unordered
    pair once, so the result is exactly symmetric.
    """
    same = A is B
    Ma = as_csr(A)
    Mb = Ma if same else as_csr(B)
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    if use_numba:
        return _gram_nb(*_csr_arrays(Ma), *_csr_arrays(Mb), same, *spec.params())
    return _gram_np(Ma, Mb, same, spec.params())


@_accel.njit
def _pair_sq_sum_nb(ia, ja, va):
    m = ia.shape[0] - 1
    total = 0.0
    for i in range(m):
        row = 0.0
        for j in range(i + 1, m):
            sq, _ = _pair_stats(ia, ja, va, i, ia, ja, va, j)
            row += sq
        total += row
    return total


def _pair_sq_sum_np(M, block=512):
    m = M.shape[0]
    norms = np.asarray(M.multiply(M).sum(axis=1)).ravel()
    total = 0.0
    for lo in range(0, m, block):
        hi = min(m, lo + block)
        dot = (M[lo:hi] @ M.T).toarray()
        sq = np.maximum(norms[lo:hi, None] + norms[None, :] - 2.0 * dot, 0.0)
        rows = np.arange(lo, hi)[:, None]
        total += float(sq[np.arange(m)[None, :] > rows].sum())
    return total


def mean_pair_sq_distance(M, *, exact=True, use_numba=None) -> float:
    """Average of ||x_i - x_j||^2 over unordered pairs i < j of the rows of M."""
    M = as_csr(M)
    m = M.shape[0]
    if m < 2:
        raise ValueError("need at least two samples")
    if exact:
        use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
        total = _pair_sq_sum_nb(*_csr_arrays(M)) if use_numba else _pair_sq_sum_np(M)
        return 2.0 * total / (m * (m - 1))
    # sum_{i<j} ||x_i - x_j||^2 = m * sum_i ||x_i - mean||^2, expanded over stored entries
    mean = np.asarray(M.sum(axis=0)).ravel() / m
    col = M.indices
    dev = (M.data - mean[col]) ** 2 - mean[col] ** 2
    scatter = float(dev.sum()) + m * float(mean @ mean)
    return 2.0 * scatter / (m - 1)


def gamma_heuristic(train, cap: int = GAMMA_CAP, exact_limit: int = EXACT_GAMMA_LIMIT) -> float:
    """Bandwidth = mean squared distance over pairs among the first min(n, cap) samples.

    Falls back to 1.0 when every participating point is identical.
    """
    M = as_csr(train)
    if cap < 2:
        raise ValueError("cap must be >= 2")
    if M.shape[0] < 2:
        raise ValueError("gamma heuristic needs at least two samples")
    m = min(M.shape[0], cap)
    M = M[:m]
    g = mean_pair_sq_distance(M, exact=m <= exact_limit)
    return g if g > 0.0 else 1.0
