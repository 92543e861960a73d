"""Dense symmetric eigensolver, conjugate gradient, spectral norm."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import _accel
from .errors import DimensionError, NumericalError

JACOBI_TOL = 1e-12
MAX_SWEEPS = 100


class EigResult(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns aligned with eigenvalues
    sweeps: int


class CGResult(NamedTuple):
    x: np.ndarray
    iters: int
    residual_norm: float
    truncated: bool


def _check_symmetric(S, rtol=1e-12):
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NumericalError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and float(np.max(np.abs(S - S.T))) > rtol * scale:
        raise DimensionError("matrix is not symmetric")
    return S


@_accel.njit
def _jacobi_sweeps_nb(A, V, tol, max_sweeps):
    n = A.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i, j] * A[i, j]
        if math.sqrt(off) <= tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    if r != p and r != q:
                        arp = A[r, p]
                        arq = A[r, q]
                        nrp = c * arp - s * arq
                        nrq = s * arp + c * arq
                        A[r, p] = nrp
                        A[p, r] = nrp
                        A[r, q] = nrq
                        A[q, r] = nrq
                A[p, p] = A[p, p] - t * apq
                A[q, q] = A[q, q] + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for r in range(n):
                    vrp = V[r, p]
                    vrq = V[r, q]
                    V[r, p] = c * vrp - s * vrq
                    V[r, q] = s * vrp + c * vrq
    return -1


def _jacobi_sweeps_np(A, V, tol, max_sweeps):
    n = A.shape[0]
    mask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        if math.sqrt(float(np.sum(A[mask] ** 2))) <= tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = A[p, p], A[q, q]
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                nrp = c * colp - s * colq
                nrq = s * colp + c * colq
                A[:, p] = nrp
                A[p, :] = nrp
                A[:, q] = nrq
                A[q, :] = nrq
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return -1


def _canonical_signs(V):
    # first component that is nonzero beyond roundoff is made positive
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12)
        if big.size and col[big[0]] < 0:
            V[:, j] = -col
    return V


def sym_eig(S, *, tol=JACOBI_TOL, max_sweeps=MAX_SWEEPS, use_numba=None) -> EigResult:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius mass is at most
    ``tol * ||S||_F``. Eigenvalues come back in descending order; each
    eigenvector's first non-negligible component is positive.
    """
    S = _check_symmetric(S)
    n = S.shape[0]
    A = 0.5 * (S + S.T)
    V = np.eye(n)
    if n == 0:
        return EigResult(np.zeros(0), V, 0)
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    abs_tol = tol * float(np.linalg.norm(A))
    sweeps = (_jacobi_sweeps_nb if use_numba else _jacobi_sweeps_np)(A, V, abs_tol, max_sweeps)
    if sweeps < 0:
        raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return EigResult(vals[order], _canonical_signs(V[:, order]), sweeps)


def cg_solve(apply: Callable[[np.ndarray], np.ndarray], b, tol: float, max_iter: int) -> CGResult:
    """Conjugate gradient from ``x = 0`` for an SPD operator.

    Terminates when the true residual ``||apply(x) - b||`` is at most ``tol``;
    otherwise returns the last iterate with ``truncated=True``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    r = b.copy()
    rr = float(r @ r)
    if not math.isfinite(rr):
        raise NumericalError("non-finite right-hand side")
    res = math.sqrt(rr)
    p = r.copy()
    it = 0
    while res > tol and it < max_iter:
        Ap = apply(p)
        pAp = float(p @ Ap)
        if not math.isfinite(pAp) or pAp <= 0.0:
            raise NumericalError(f"CG breakdown: p'Ap = {pAp}")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rr_new = float(r @ r)
        if not math.isfinite(rr_new):
            raise NumericalError("non-finite residual in CG")
        if math.sqrt(rr_new) <= tol:
            # recursive residual drifts; confirm against the true one
            r = b - apply(x)
            rr_new = float(r @ r)
            if math.sqrt(rr_new) > tol:
                p = r.copy()
                rr = rr_new
                res = math.sqrt(rr)
                continue
        p = r + (rr_new / rr) * p
        rr = rr_new
        res = math.sqrt(rr)
    return CGResult(x, it, res, res > tol)


def _power_iteration(S, x, tol, max_iter) -> float:
    est = 0.0
    for _ in range(max_iter):
        y = S @ x
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0
        est = ny
        z = S @ (y / ny)
        # ||S^2 x - est^2 x|| relative to est^2
        if float(np.linalg.norm(z * ny - est * est * x)) <= tol * est * est:
            break
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            break
        x = z / nz
    # Rayleigh-Ritz on span{x, Sx}: resolves a nearly equal +/- pair that
    # power iteration on S^2 separates only very slowly
    Qb, _ = np.linalg.qr(np.column_stack([x, S @ x]))
    ritz = float(np.max(np.abs(np.linalg.eigvalsh(Qb.T @ S @ Qb))))
    return max(est, ritz)


def spectral_norm(S, tol=1e-10, max_iter=20000) -> float:
    """Largest |eigenvalue| of a symmetric matrix by power iteration.

    Iterates on ``S`` starting from the normalized all-ones vector and stops
    on the residual of the squared operator, so a +/- pair of equal
    magnitude converges like a single eigenvalue. The all-ones start can be
    orthogonal to the top eigenvector (e.g. graph Laplacians), so a second
    pass from a fixed pseudo-random start is run and the larger value kept;
    power iteration never overestimates. With three or more eigenvalues of
    nearly equal magnitude the result can fall short by about their spread.
    """
    S = _check_symmetric(S, rtol=1e-10)
    n = S.shape[0]
    if n == 0:
        return 0.0
    first = _power_iteration(S, np.full(n, 1.0 / math.sqrt(n)), tol, max_iter)
    x = np.random.default_rng(12345).standard_normal(n)
    second = _power_iteration(S, x / np.linalg.norm(x), tol, max_iter)
    return max(first, second)
