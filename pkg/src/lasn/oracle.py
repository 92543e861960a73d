"""Reference solutions used to cross-check the Newton solver and the linearization.

The dual of the unbiased L2-loss SVM is

    max_{lam >= 0}  sum(lam) - 0.5 lam'Q lam - ||lam||^2 / (4C),
    Q_ij = y_i y_j <x_i, x_j>,

with no equality constraint because the bias lives inside the features as
a constant-1 coordinate (so a kernel route uses ``kappa + 1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import KernelError, ScaleError
from .kernel import KernelSpec, gram_block
from .linalg import spectral_norm, sym_eig
from .snewton import SolverConfig, augment_bias, objective, solve

EQUIVALENCE_LIMIT = 500


@dataclass
class DualSolution:
    lam: np.ndarray
    objective: float
    sweeps: int
    converged: bool
    objective_history: np.ndarray = field(repr=False, default=None)


def dual_objective(lam, Q, C) -> float:
    lam = np.asarray(lam, dtype=np.float64)
    return float(lam.sum() - 0.5 * lam @ (Q @ lam) - lam @ lam / (4.0 * C))


@_accel.njit
def _dual_cd_nb(Q, inv2c, lam, tol, max_sweeps, hist):
    n = Q.shape[0]
    Qlam = np.zeros(n)
    for sweep in range(max_sweeps):
        # refresh Q @ lam each sweep so incremental updates cannot drift
        for r in range(n):
            s = 0.0
            for c in range(n):
                s += Q[r, c] * lam[c]
            Qlam[r] = s
        biggest = 0.0
        for i in range(n):
            g = 1.0 - Qlam[i] - lam[i] * inv2c
            new = lam[i] + g / (Q[i, i] + inv2c)
            if new < 0.0:
                new = 0.0
            delta = new - lam[i]
            if delta != 0.0:
                lam[i] = new
                for r in range(n):
                    Qlam[r] += Q[r, i] * delta
                if abs(delta) > biggest:
                    biggest = abs(delta)
        obj = 0.0
        for i in range(n):
            obj += lam[i] - 0.5 * lam[i] * Qlam[i] - 0.5 * inv2c * lam[i] * lam[i]
        hist[sweep] = obj
        if biggest < tol:
            return sweep + 1
    return -max_sweeps


def _dual_cd_np(Q, inv2c, lam, tol, max_sweeps, hist):
    n = Q.shape[0]
    diag = np.diag(Q) + inv2c
    for sweep in range(max_sweeps):
        Qlam = Q @ lam
        biggest = 0.0
        for i in range(n):
            new = max(0.0, lam[i] + (1.0 - Qlam[i] - lam[i] * inv2c) / diag[i])
            delta = new - lam[i]
            if delta != 0.0:
                lam[i] = new
                Qlam += Q[:, i] * delta
                biggest = max(biggest, abs(delta))
        hist[sweep] = float(lam.sum() - 0.5 * lam @ Qlam - 0.5 * inv2c * lam @ lam)
        if biggest < tol:
            return sweep + 1
    return -max_sweeps


def solve_dual_cd(Q, C, tol=1e-10, max_sweeps=100000, *, use_numba=None) -> DualSolution:
    """Cyclic coordinate ascent with exact per-coordinate maximization.

    Coordinates are visited in ascending order; stops once a full sweep
    changes no coordinate by ``tol`` or more.
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    n = Q.shape[0]
    lam = np.zeros(n)
    hist = np.zeros(max_sweeps)
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    ret = (_dual_cd_nb if use_numba else _dual_cd_np)(Q, 1.0 / (2.0 * C), lam, tol, max_sweeps, hist)
    sweeps = abs(ret)
    return DualSolution(lam, dual_objective(lam, Q, C), sweeps, ret > 0, hist[:sweeps].copy())


def gram_q(features, y) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return (y[:, None] * y[None, :]) * (X @ X.T)


def recover_primal_w(lam, features, y) -> np.ndarray:
    """``w = sum_i lam_i y_i x_i``."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return X.T @ (np.asarray(lam, dtype=np.float64) * np.asarray(y, dtype=np.float64))


def implied_multipliers(w, features, y, C) -> np.ndarray:
    """Multipliers matching a primal point: ``lam_i = 2C max(0, 1 - y_i x_i'w)``."""
    X = np.asarray(features, dtype=np.float64)
    return 2.0 * C * np.maximum(1.0 - y * (X @ w), 0.0)


def kkt_residual(w, lam, features, y, C) -> float:
    """Largest violation among stationarity, complementarity and sign conditions.

    Slack and the multiplier of ``xi >= 0`` are reconstructed from ``w`` and
    ``lam`` as ``xi = max(0, 1 - y x'w)`` and ``mu = 2C xi - lam``.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    margin = y * (X @ w)
    xi = np.maximum(0.0, 1.0 - margin)
    mu = 2.0 * C * xi - lam
    terms = [
        np.max(np.abs(w - recover_primal_w(lam, X, y)), initial=0.0),
        np.max(np.abs(mu * xi), initial=0.0),
        np.max(np.abs(lam * (xi - 1.0 + margin)), initial=0.0),
        np.max(-mu, initial=0.0),
        np.max(-lam, initial=0.0),
        np.max(-xi, initial=0.0),
        np.max(1.0 - margin - xi, initial=0.0),
    ]
    return float(max(terms))


def pivoted_cholesky(K, tol=1e-13) -> np.ndarray:
    """Factor ``K ~= L L'`` with diagonal pivoting; stops when the residual diagonal is tiny."""
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    d = np.diag(K).copy()
    stop = tol * max(float(d.max(initial=0.0)), 1e-300)
    L = np.zeros((n, n))
    r = 0
    while r < n:
        piv = int(np.argmax(d))
        if d[piv] <= stop:
            break
        col = K[:, piv] - L[:, :r] @ L[piv, :r]
        col /= np.sqrt(d[piv])
        col[d <= 0] = 0.0
        col[piv] = np.sqrt(d[piv])
        L[:, r] = col
        d -= col * col
        d[piv] = 0.0
        r += 1
    return L[:, :r]


def decompose_kernel(K, method="eig") -> np.ndarray:
    """Return F with ``F F' = K`` (to roundoff) by the requested factorization."""
    if method == "eig":
        eig = sym_eig(K)
        return eig.eigenvectors * np.sqrt(np.maximum(eig.eigenvalues, 0.0))[None, :]
    if method == "sqrt":
        eig = sym_eig(K)
        root = np.sqrt(np.maximum(eig.eigenvalues, 0.0))
        return (eig.eigenvectors * root[None, :]) @ eig.eigenvectors.T
    if method == "cholesky":
        return pivoted_cholesky(K)
    raise ValueError(f"unknown decomposition {method!r}")


def sign(v) -> np.ndarray:
    return np.where(np.asarray(v) >= 0.0, 1.0, -1.0)


@dataclass
class EquivalenceReport:
    n_train: int
    n_test: int
    decomposition: str
    rank: int
    primal_objective: float
    dual_objective: float
    objective_rel_gap: float
    w_diff_inf: float
    kkt_residual: float
    linear_labels: np.ndarray
    kernel_labels: np.ndarray
    solver_converged: bool
    dual_converged: bool

    @property
    def labels_match(self) -> bool:
        return bool(np.array_equal(self.linear_labels, self.kernel_labels))

    def as_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "decomposition": self.decomposition,
            "rank": self.rank,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "objective_rel_gap": self.objective_rel_gap,
            "w_diff_inf": self.w_diff_inf,
            "kkt_residual": self.kkt_residual,
            "labels_match": self.labels_match,
            "solver_converged": self.solver_converged,
            "dual_converged": self.dual_converged,
        }


def full_kernel(train, test, spec: KernelSpec) -> np.ndarray:
    from .dataio import align_features
    import scipy.sparse as sp

    tr, te = align_features(train, test)
    Z = sp.vstack([tr.X, te.X], format="csr")
    return gram_block(spec, Z, Z)


def check_equivalence(train, test, spec: KernelSpec, C: float, *, decomposition="eig",
                      config: SolverConfig | None = None, dual_tol=1e-10) -> EquivalenceReport:
    """Train the same L2-loss SVM twice: linearly on a factorization of the full
    kernel matrix, and through the kernel-only dual; compare the outcomes."""
    n, m = train.n_samples, test.n_samples
    if n + m > EQUIVALENCE_LIMIT:
        raise ScaleError(f"equivalence check needs n + m <= {EQUIVALENCE_LIMIT}, got {n + m}")
    K = full_kernel(train, test, spec)
    lam_min = sym_eig(K).eigenvalues[-1] if n + m else 0.0
    if lam_min < -1e-8 * max(spectral_norm(K), 1e-300):
        raise KernelError(f"kernel matrix is not PSD (min eigenvalue {lam_min:.3e})")

    F = decompose_kernel(K, decomposition)
    Fr = augment_bias(F[:n])
    Fe = augment_bias(F[n:])
    y = train.y
    cfg = config or SolverConfig(C=C, delta=1e-9)
    rep = solve(Fr, y, cfg)

    # kernel route: only kernel values, bias folded in as kappa + 1
    Khat = K + 1.0
    Q = (y[:, None] * y[None, :]) * Khat[:n, :n]
    dual = solve_dual_cd(Q, C, tol=dual_tol)
    kernel_scores = Khat[n:, :n] @ (dual.lam * y)

    primal = objective(rep.w, Fr, y, C)
    gap = abs(primal - dual.objective) / max(1.0, abs(primal))
    w_rec = recover_primal_w(dual.lam, Fr, y)
    return EquivalenceReport(
        n_train=n,
        n_test=m,
        decomposition=decomposition,
        rank=F.shape[1],
        primal_objective=primal,
        dual_objective=dual.objective,
        objective_rel_gap=gap,
        w_diff_inf=float(np.max(np.abs(w_rec - rep.w), initial=0.0)),
        kkt_residual=kkt_residual(rep.w, dual.lam, Fr, y, C),
        linear_labels=sign(Fe @ rep.w),
        kernel_labels=sign(kernel_scores),
        solver_converged=rep.converged,
        dual_converged=dual.converged,
    )
