"""Landmark selection by a few seeded Lloyd iterations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .kernel import as_csr

KMEANS_CAP = 20000
DEFAULT_MAX_ITERS = 5


@dataclass
class LandmarkSet:
    centers: np.ndarray  # (k, p), dense
    seed: int
    iterations_run: int
    converged: bool
    sse_history: list = field(default_factory=list)
    init_indices: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.centers.shape[0]


@_accel.njit
def _assign_nb(indptr, indices, data, centers, cnorm):
    n = indptr.shape[0] - 1
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        xn = 0.0
        for t in range(lo, hi):
            xn += data[t] * data[t]
        best = np.inf
        arg = 0
        for c in range(k):
            dot = 0.0
            for t in range(lo, hi):
                dot += data[t] * centers[c, indices[t]]
            d = xn - 2.0 * dot + cnorm[c]
            if d < best:
                best = d
                arg = c
        labels[i] = arg
    return labels


def _assign_np(X, centers, cnorm):
    xn = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    d = xn[:, None] - 2.0 * np.asarray(X @ centers.T) + cnorm[None, :]
    return np.argmin(d, axis=1).astype(np.int64)


@_accel.njit
def _exact_dist_nb(indptr, indices, data, centers, labels):
    # walks every coordinate of the assigned center; no cancellation
    n = indptr.shape[0] - 1
    p = centers.shape[1]
    out = np.empty(n)
    for i in range(n):
        c = labels[i]
        t = indptr[i]
        hi = indptr[i + 1]
        s = 0.0
        for j in range(p):
            v = 0.0
            if t < hi and indices[t] == j:
                v = data[t]
                t += 1
            d = v - centers[c, j]
            s += d * d
        out[i] = s
    return out


def _exact_dist_np(X, centers, labels):
    C = centers[labels]
    rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
    cv = C[rows, X.indices]
    extra = np.zeros(X.shape[0])
    np.add.at(extra, rows, (X.data - cv) ** 2 - cv**2)
    return np.maximum((C * C).sum(axis=1) + extra, 0.0)


@_accel.njit
def _centroid_sums_nb(indptr, indices, data, labels, k, p):
    sums = np.zeros((k, p))
    counts = np.zeros(k, dtype=np.int64)
    for i in range(indptr.shape[0] - 1):
        c = labels[i]
        counts[c] += 1
        for t in range(indptr[i], indptr[i + 1]):
            sums[c, indices[t]] += data[t]
    return sums, counts


def _centroid_sums_np(X, labels, k, p):
    sums = np.zeros((k, p))
    rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
    np.add.at(sums, (labels[rows], X.indices), X.data)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    return sums, counts


def kmeans_landmarks(train, k: int, max_iters: int = DEFAULT_MAX_ITERS, cap: int = KMEANS_CAP,
                     seed: int = 0, *, use_numba=None) -> LandmarkSet:
    """Pick ``k`` landmark centers from the first ``min(n, cap)`` samples.

    Centers start at ``k`` distinct samples drawn uniformly with ``seed``; at
    most ``max_iters`` Lloyd updates follow, stopping early once the
    assignment repeats. An empty cluster is reseeded to the sample farthest
    from its assigned center.
    """
    X = as_csr(train)
    m = min(X.shape[0], cap)
    if not 1 <= k <= m:
        raise ValueError(f"k={k} out of range [1, {m}]")
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")
    X = X[:m]
    X.sort_indices()
    p = X.shape[1]
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    arrays = (X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data.astype(np.float64))

    rng = np.random.default_rng(seed)
    init = np.sort(rng.choice(m, size=k, replace=False))
    centers = X[init].toarray()

    history = []
    prev = None
    iters = 0
    converged = False
    while True:
        cnorm = (centers * centers).sum(axis=1)
        if use_numba:
            labels = _assign_nb(*arrays, centers, cnorm)
            dist = _exact_dist_nb(*arrays, centers, labels)
        else:
            labels = _assign_np(X, centers, cnorm)
            dist = _exact_dist_np(X, centers, labels)
        sse = float(dist.sum())
        if history and sse > history[-1] * (1.0 + 1e-10) + 1e-12:
            raise AssertionError(f"k-means objective increased: {history[-1]!r} -> {sse!r}")
        history.append(sse)
        if prev is not None and np.array_equal(labels, prev):
            converged = True
            break
        if iters >= max_iters:
            break
        if use_numba:
            sums, counts = _centroid_sums_nb(*arrays, labels, k, p)
        else:
            sums, counts = _centroid_sums_np(X, labels, k, p)
        nonempty = counts > 0
        centers = centers.copy()
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            far = np.argsort(-dist, kind="stable")[: empty.size]
            centers[empty] = X[far].toarray()
        prev = labels
        iters += 1
    return LandmarkSet(centers, seed, iters, converged, history, init)
