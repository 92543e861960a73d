"""Approximation-error bound quantities for Nystrom-linearized SVMs.

Everything here works on explicit n x n kernel matrices, so it is meant for
small problems (n <= 2000). Weight vectors are compared for the unbiased
model (no constant-1 column).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, ScaleError
from .kernel import KernelSpec, as_csr, gram_block
from .landmark import kmeans_landmarks
from .linalg import spectral_norm, sym_eig
from .nystrom import build_mapping, exact_rank_k_features, virtual_features
from .oracle import gram_q, recover_primal_w, solve_dual_cd

BOUNDS_LIMIT = 2000
INF = math.inf


@dataclass
class BoundInputs:
    exact_eigenvalues: np.ndarray  # all n, descending
    approx_eigenvalues: np.ndarray  # top k, descending
    xi_f: float
    xi_2: float
    k: int
    C0: float
    rho: float
    G: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["exact_eigenvalues"] = [float(v) for v in self.exact_eigenvalues]
        d["approx_eigenvalues"] = [float(v) for v in self.approx_eigenvalues]
        return d


@dataclass
class BoundReport:
    e_f: float
    e_2: float
    trace_A: float
    lemma_ff: float
    prop_wf: float
    theorem3: float
    feature_gap: float | None = None
    w_gap_sq: float | None = None

    @property
    def prop_wf_holds(self) -> bool | None:
        if self.w_gap_sq is None:
            return None
        return self.w_gap_sq <= self.prop_wf

    @property
    def lemma_ff_holds(self) -> bool | None:
        if self.feature_gap is None:
            return None
        return self.feature_gap <= self.lemma_ff

    @property
    def theorem3_holds(self) -> bool | None:
        if self.w_gap_sq is None:
            return None
        return self.w_gap_sq <= self.theorem3

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(prop_wf_holds=self.prop_wf_holds, lemma_ff_holds=self.lemma_ff_holds,
                 theorem3_holds=self.theorem3_holds)
        return d


def compute_gaps(K_rr, Kt_rr):
    """Frobenius and spectral norms of ``K_rr - Kt_rr``."""
    K_rr = np.asarray(K_rr, dtype=np.float64)
    Kt_rr = np.asarray(Kt_rr, dtype=np.float64)
    if K_rr.shape != Kt_rr.shape or K_rr.ndim != 2 or K_rr.shape[0] != K_rr.shape[1]:
        raise DimensionError(f"gap needs two equal square matrices, got {K_rr.shape} and {Kt_rr.shape}")
    if K_rr.shape[0] > BOUNDS_LIMIT:
        raise ScaleError(f"bounds need n <= {BOUNDS_LIMIT}, got {K_rr.shape[0]}")
    D = K_rr - Kt_rr
    D = 0.5 * (D + D.T)
    xi_f = float(np.linalg.norm(D, "fro"))
    xi_2 = spectral_norm(D) if xi_f > 0.0 else 0.0
    # power iteration stops within its tolerance of the true norm; keep the ordering exact
    return xi_f, min(xi_2, xi_f)


def compute_e(lam, k: int, xi_f: float, xi_2: float):
    lam = np.asarray(lam, dtype=np.float64)
    tail = lam[k:]
    e_f = math.sqrt(float(tail @ tail)) + xi_f
    e_2 = (float(lam[k]) if k < lam.size else 0.0) + xi_2
    return e_f, e_2


def compute_A(lam_k, lamt_k):
    """Diagonal of A and its trace; a nonpositive eigenvalue gives +inf."""
    lam_k = np.asarray(lam_k, dtype=np.float64)
    lamt_k = np.asarray(lamt_k, dtype=np.float64)
    if lam_k.shape != lamt_k.shape:
        raise DimensionError("eigenvalue lists differ in length")
    if np.any(lam_k <= 0.0) or np.any(lamt_k <= 0.0):
        return np.full(lam_k.shape, INF), INF
    diag = np.maximum(1.0 / lamt_k + 1.0 / lam_k, 3.0 / lamt_k - 1.0 / lam_k)
    return diag, float(diag.sum())


def lemma_ff_bound(inp: BoundInputs) -> float:
    k = inp.k
    lam = np.asarray(inp.exact_eigenvalues, dtype=np.float64)
    lamt = np.asarray(inp.approx_eigenvalues, dtype=np.float64)[:k]
    e_f, e_2 = compute_e(lam, k, inp.xi_f, inp.xi_2)
    _, trA = compute_A(lam[:k], lamt)
    if not math.isfinite(trA):
        return INF
    tr_inv = float(np.sum(1.0 / lamt))
    tr_sq = float(lam[:k] @ lam[:k])
    ef4 = e_f ** 0.25
    return k * ef4 + float(lam[0]) * trA + k * e_2 * tr_inv * (ef4 + tr_sq ** 0.25)


def _prefactor(inp: BoundInputs) -> float:
    return 4.0 * inp.C0**2 * inp.G * (inp.G + 1.0) * math.sqrt(inp.rho)


def theorem3_bound(inp: BoundInputs) -> float:
    pre = _prefactor(inp)
    if pre == 0.0:
        return 0.0
    return pre * lemma_ff_bound(inp)


def prop_wf_bound(inp: BoundInputs, gap: float) -> float:
    pre = _prefactor(inp)
    if pre == 0.0:
        return 0.0
    return pre * gap


def estimate_assumption_constants(K_rr, F_exact, F_tilde, w, w_tilde):
    """``rho`` from the three kernel diagonals, ``G`` from both models' training scores."""
    F_exact = np.asarray(F_exact, dtype=np.float64)
    F_tilde = np.asarray(F_tilde, dtype=np.float64)
    rho = max(
        float(np.max(np.diag(np.asarray(K_rr)))),
        float(np.max(np.einsum("ij,ij->i", F_exact, F_exact))),
        float(np.max(np.einsum("ij,ij->i", F_tilde, F_tilde))),
    )
    G = max(float(np.max(np.abs(F_exact @ w))), float(np.max(np.abs(F_tilde @ w_tilde))))
    return rho, G


def procrustes(F_exact, F_tilde):
    """Orthogonal R minimizing ``||F_exact - F_tilde R||_F``; returns (R, that gap)."""
    U, _, Vt = np.linalg.svd(np.asarray(F_tilde).T @ np.asarray(F_exact))
    R = U @ Vt
    return R, float(np.linalg.norm(F_exact - F_tilde @ R, "fro"))


def unbiased_oracle_w(F, y, C, tol=1e-12):
    sol = solve_dual_cd(gram_q(F, y), C, tol=tol)
    return recover_primal_w(sol.lam, F, y)


def nystrom_features(train, spec: KernelSpec, k: int, seed: int = 0, landmarks="kmeans", K_rr=None):
    """Nystrom features for ``train`` with k-means or uniformly sampled landmarks."""
    if landmarks == "kmeans":
        centers = as_csr(kmeans_landmarks(train, k, seed=seed).centers)
        K_rl = gram_block(spec, train, centers)
        K_ll = gram_block(spec, centers, centers)
    elif landmarks == "sample":
        idx = np.sort(np.random.default_rng(seed).permutation(train.n_samples)[:k])
        K_rr = gram_block(spec, train, train) if K_rr is None else K_rr
        K_rl = K_rr[:, idx]
        K_ll = K_rr[np.ix_(idx, idx)]
    else:
        raise ValueError(f"unknown landmark rule {landmarks!r}")
    return virtual_features(K_rl, build_mapping(K_ll))


def bound_check(train, spec: KernelSpec, k: int, C: float, seed: int = 0, landmarks="kmeans"):
    """Compute every bound quantity and the measured gaps on one training set.

    Both weight vectors come from the dual oracle on unbiased features;
    ``C0 = C n``.
    """
    n = train.n_samples
    if n > BOUNDS_LIMIT:
        raise ScaleError(f"bounds need n <= {BOUNDS_LIMIT}, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range [1, {n}]")
    K_rr = gram_block(spec, train, train)
    eig = sym_eig(K_rr)
    lam = eig.eigenvalues
    F_k = exact_rank_k_features(K_rr, k)
    Ft = nystrom_features(train, spec, k, seed, landmarks, K_rr)
    Kt = Ft @ Ft.T
    xi_f, xi_2 = compute_gaps(K_rr, Kt)
    # nonzero spectrum of Ft Ft' equals that of the k x k matrix Ft' Ft
    lamt = sym_eig(Ft.T @ Ft).eigenvalues[:k]

    y = train.y
    w = unbiased_oracle_w(F_k, y, C)
    wt = unbiased_oracle_w(Ft, y, C)
    R, gap = procrustes(F_k, Ft)
    w_gap_sq = float(np.sum((w - R.T @ wt) ** 2))
    rho, G = estimate_assumption_constants(K_rr, F_k, Ft, w, wt)

    inp = BoundInputs(lam, lamt, xi_f, xi_2, k, C * n, rho, G)
    e_f, e_2 = compute_e(lam, k, xi_f, xi_2)
    _, trA = compute_A(lam[:k], lamt)
    rep = BoundReport(e_f, e_2, trA, lemma_ff_bound(inp), prop_wf_bound(inp, gap),
                      theorem3_bound(inp), gap, w_gap_sq)
    return inp, rep


def xi_f_by_k(train, spec: KernelSpec, ks, seeds):
    """Mean Frobenius gap for nested uniformly sampled landmark sets.

    For each seed one permutation is drawn and its first ``k`` indices are the
    landmarks, so the sets grow by inclusion as ``k`` increases.
    """
    K_rr = gram_block(spec, train, train)
    out = np.zeros((len(seeds), len(ks)))
    for a, s in enumerate(seeds):
        order = np.random.default_rng(s).permutation(train.n_samples)
        for b, k in enumerate(ks):
            idx = np.sort(order[:k])
            F = virtual_features(K_rr[:, idx], build_mapping(K_rr[np.ix_(idx, idx)]))
            out[a, b] = np.linalg.norm(K_rr - F @ F.T, "fro")
    return out.mean(axis=0)
