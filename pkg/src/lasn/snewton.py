"""Globalized semismooth Newton method for the unbiased L2-loss linear SVM.

Minimizes ``f(w) = 0.5 ||w||^2 + C sum_i max(1 - y_i x_i'w, 0)^2`` where a
constant-1 column appended to the features stands in for the bias. Each
outer step solves ``V d = -grad f(w)`` inexactly by CG, with ``V`` the
generalized Hessian ``I + 2C sum_{i active} x_i x_i'``, then backtracks
along ``d`` under an Armijo condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import LineSearchError, NumericalError
from .linalg import cg_solve


@dataclass(frozen=True)
class SolverConfig:
    C: float = 10.0
    delta: float = 1e-6
    sigma: float = 1e-4
    rho: float = 0.5
    eta0: float = 0.1
    eta1: float = 0.1
    max_newton_iters: int = 200
    max_cg_iters: int | None = None  # None: the feature dimension
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        for name in ("sigma", "rho"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not (self.eta0 > 0 and self.eta1 > 0):
            raise ValueError("eta0 and eta1 must be positive")
        if self.max_newton_iters < 0:
            raise ValueError("max_newton_iters must be >= 0")


@dataclass
class IterationRecord:
    iteration: int
    f: float
    grad_norm: float
    active: int
    cg_iters: int
    cg_residual: float
    cg_tol: float
    cg_truncated: bool
    step: float
    backtracks: int


@dataclass
class SolverReport:
    w: np.ndarray
    newton_iters: int
    converged: bool
    f: float
    grad_norm: float
    history: list = field(default_factory=list)

    @property
    def grad_norms(self):
        return [r.grad_norm for r in self.history] + [self.grad_norm]

    def summary(self) -> dict:
        return {
            "newton_iters": self.newton_iters,
            "converged": self.converged,
            "f": self.f,
            "grad_norm": self.grad_norm,
            "cg_iters_total": sum(r.cg_iters for r in self.history),
        }


def augment_bias(features) -> np.ndarray:
    """Append a constant-1 column: dimension k becomes k + 1."""
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.hstack([F, np.ones((F.shape[0], 1))])


def _slack(w, X, y):
    return 1.0 - y * (X @ w)


def active_set(w, X, y) -> np.ndarray:
    """Indices with strictly positive slack ``1 - y_i x_i'w``."""
    return np.flatnonzero(_slack(w, X, y) > 0.0)


def objective(w, X, y, C) -> float:
    xi = np.maximum(_slack(w, X, y), 0.0)
    return 0.5 * float(w @ w) + C * float(xi @ xi)


def gradient(w, X, y, C) -> np.ndarray:
    xi = np.maximum(_slack(w, X, y), 0.0)
    return w - 2.0 * C * (X.T @ (xi * y))


@_accel.njit
def _hessian_apply_nb(X, active, c2, h):
    d = X.shape[1]
    out = h.copy()
    t = np.empty(active.shape[0])
    for a in range(active.shape[0]):
        i = active[a]
        s = 0.0
        for j in range(d):
            s += X[i, j] * h[j]
        t[a] = s
    for a in range(active.shape[0]):
        i = active[a]
        s = c2 * t[a]
        for j in range(d):
            out[j] += s * X[i, j]
    return out


def hessian_apply(active, X, C, h, *, use_numba=None) -> np.ndarray:
    """``h + 2C sum_{i in active} x_i (x_i'h)`` without forming the d x d matrix."""
    active = np.asarray(active, dtype=np.int64)
    h = np.asarray(h, dtype=np.float64)
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    if use_numba:
        return _hessian_apply_nb(X, active, 2.0 * C, h)
    XI = X[active]
    return h + 2.0 * C * (XI.T @ (XI @ h))


class _GeneralizedHessian:
    def __init__(self, X, active, C, use_numba):
        self.c2 = 2.0 * C
        self.use_numba = use_numba
        self.X = X
        self.active = active
        # the numpy path gathers active rows once per outer iteration
        self.XI = None if use_numba else X[active]

    def __call__(self, h):
        if self.use_numba:
            return _hessian_apply_nb(self.X, self.active, self.c2, h)
        return h + self.c2 * (self.XI.T @ (self.XI @ h))


def solve(X, y, config: SolverConfig | None = None, w0=None, *, use_numba=None) -> SolverReport:
    """Run the semismooth Newton iteration on (already augmented) features ``X``."""
    cfg = config or SolverConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise NumericalError("features contain non-finite values")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be -1 or +1")
    n, d = X.shape
    C = cfg.C
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    max_cg = d if cfg.max_cg_iters is None else cfg.max_cg_iters

    w = np.zeros(d) if w0 is None else np.array(w0, dtype=np.float64)
    Xw = X @ w
    history = []
    j = 0
    while True:
        slack = 1.0 - y * Xw
        act = np.flatnonzero(slack > 0.0)
        xi = slack[act]
        f = 0.5 * float(w @ w) + C * float(xi @ xi)
        g = w - 2.0 * C * (X[act].T @ (xi * y[act]))
        gnorm = float(np.linalg.norm(g))
        if not math.isfinite(gnorm):
            raise NumericalError(f"non-finite gradient at iteration {j}")
        if gnorm <= cfg.delta:
            return SolverReport(w, j, True, f, gnorm, history)
        if j >= cfg.max_newton_iters:
            return SolverReport(w, j, False, f, gnorm, history)

        mu = min(cfg.eta0, cfg.eta1 * gnorm)
        V = _GeneralizedHessian(X, act, C, use_numba)
        cg = cg_solve(V, -g, mu * gnorm, max_cg)
        dvec = cg.x
        slope = float(g @ dvec)
        if not slope < 0.0:
            raise NumericalError(f"no descent direction at iteration {j} (g'd = {slope})")

        Xd = X @ dvec
        step = 1.0
        for m in range(cfg.max_backtracks + 1):
            s_try = 1.0 - y * (Xw + step * Xd)
            s_try = np.maximum(s_try, 0.0)
            w_try = w + step * dvec
            f_try = 0.5 * float(w_try @ w_try) + C * float(s_try @ s_try)
            if f_try <= f + cfg.sigma * step * slope:
                break
            step *= cfg.rho
        else:
            raise LineSearchError(
                f"line search failed after {cfg.max_backtracks} backtracks at iteration {j} "
                f"(f={f!r}, g'd={slope!r}, |g|={gnorm!r})"
            )
        history.append(IterationRecord(j, f, gnorm, int(act.size), cg.iters, cg.residual_norm,
                                       mu * gnorm, cg.truncated, step, m))
        w = w_try
        Xw = X @ w
        j += 1
