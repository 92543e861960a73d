import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_svm_instance
from lasn.dataio import from_dense, subset
from lasn.errors import KernelError, ScaleError
from lasn.kernel import KernelSpec
from lasn.oracle import (
    check_equivalence,
    decompose_kernel,
    dual_objective,
    gram_q,
    implied_multipliers,
    kkt_residual,
    pivoted_cholesky,
    recover_primal_w,
    sign,
    solve_dual_cd,
)
from lasn.snewton import SolverConfig, augment_bias, gradient, objective, solve
from lasn.synthetic import blobs


def test_scalar_dual():
    # stationarity lam * (1 + 1/(2C)) = 1 with C = 1
    sol = solve_dual_cd(np.array([[1.0]]), 1.0)
    assert sol.lam[0] == pytest.approx(2 / 3, abs=1e-12)
    assert sol.converged
    assert sol.objective == pytest.approx(2 / 3 - 0.5 * 4 / 9 - 4 / 9 / 4, rel=1e-12)


@given(st.integers(0, 10_000), st.booleans())
def test_dual_cd_invariants(seed, use_numba):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 30)), int(rng.integers(1, 6))
    X, y = random_svm_instance(rng, n, d)
    C = float(10 ** rng.uniform(-1, 1))
    Q = gram_q(X, y)
    sol = solve_dual_cd(Q, C, use_numba=use_numba)
    assert np.all(sol.lam >= 0)
    assert np.isfinite(sol.objective)
    h = sol.objective_history
    assert np.all(np.diff(h) >= -1e-12 * np.maximum(1.0, np.abs(h[1:])))
    assert sol.objective == pytest.approx(dual_objective(sol.lam, Q, C), rel=1e-12)


def test_recover_primal_w_examples():
    X = np.array([[1.0, 2.0, 1.0], [0.5, -1.0, 1.0]])
    y = np.array([1.0, -1.0])
    np.testing.assert_array_equal(recover_primal_w(np.zeros(2), X, y), np.zeros(3))
    np.testing.assert_array_equal(recover_primal_w([0.3], X[1:], y[1:]), -0.3 * X[1])


@given(st.integers(0, 10_000))
def test_dual_matches_newton_on_20_samples(seed):
    rng = np.random.default_rng(seed)
    X, y = random_svm_instance(rng, 20, int(rng.integers(1, 6)))
    C = float(10 ** rng.uniform(-1, 1))
    sol = solve_dual_cd(gram_q(X, y), C)
    rep = solve(X, y, SolverConfig(C=C))
    assert np.abs(rep.w - recover_primal_w(sol.lam, X, y)).max() <= 1e-6
    # strong duality
    assert abs(objective(rep.w, X, y, C) - sol.objective) <= 1e-6 * max(1.0, objective(rep.w, X, y, C))


def test_kkt_at_oracle_solution(rng):
    X, y = random_svm_instance(rng, 30, 4)
    C = 2.0
    sol = solve_dual_cd(gram_q(X, y), C, tol=1e-10)
    w = recover_primal_w(sol.lam, X, y)
    assert kkt_residual(w, sol.lam, X, y, C) < 1e-6


def test_kkt_nonstationary_origin(rng):
    X, y = random_svm_instance(rng, 10, 3)
    C = 1.0
    assert np.abs(gradient(np.zeros(4), X, y, C)).max() > 0
    assert kkt_residual(np.zeros(4), np.zeros(10), X, y, C) > 0


def test_kkt_degenerate_cases():
    assert kkt_residual(np.zeros(2), np.zeros(0), np.zeros((0, 2)), np.zeros(0), 1.0) == 0.0
    # all margins >= 1 and lam = 0: only stationarity w = 0 can fail
    X = np.array([[2.0, 0.0], [-2.0, 0.0]])
    y = np.array([1.0, -1.0])
    w = np.array([1.0, 0.0])
    assert kkt_residual(w, np.zeros(2), X, y, 1.0) == 1.0


def test_implied_multipliers_close_kkt(rng):
    X, y = random_svm_instance(rng, 40, 5)
    C = 5.0
    rep = solve(X, y, SolverConfig(C=C, delta=1e-10))
    assert kkt_residual(rep.w, implied_multipliers(rep.w, X, y, C), X, y, C) < 1e-8


def _blob_split(seed):
    d = blobs(60, seed=seed)
    return subset(d, range(40)), subset(d, range(40, 60))


def test_equivalence_blobs():
    tr, te = _blob_split(3)
    rep = check_equivalence(tr, te, KernelSpec("rbf", gamma=2.0), 10.0)
    assert rep.objective_rel_gap <= 1e-6
    assert rep.labels_match and len(rep.kernel_labels) == 20
    assert rep.w_diff_inf <= 1e-6


def test_equivalence_linear_kernel_reproduces_raw_training():
    tr, te = _blob_split(4)
    C = 10.0
    rep = check_equivalence(tr, te, KernelSpec("linear"), C)
    raw = solve(augment_bias(tr.X.toarray()), tr.y, SolverConfig(C=C))
    raw_labels = sign(augment_bias(te.X.toarray()) @ raw.w)
    np.testing.assert_array_equal(rep.linear_labels, raw_labels)
    assert rep.primal_objective == pytest.approx(raw.f, rel=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_decomposition_invariance(seed):
    tr, te = _blob_split(seed)
    spec = KernelSpec("rbf", gamma=1.0)
    reps = [check_equivalence(tr, te, spec, 10.0, decomposition=m) for m in ("eig", "sqrt", "cholesky")]
    for r in reps[1:]:
        np.testing.assert_array_equal(r.linear_labels, reps[0].linear_labels)
        assert r.primal_objective == pytest.approx(reps[0].primal_objective, rel=1e-6)


def test_decompositions_reconstruct(rng):
    B = rng.standard_normal((12, 5))
    K = B @ B.T
    for m in ("eig", "sqrt", "cholesky"):
        F = decompose_kernel(K, m)
        assert np.abs(F @ F.T - K).max() <= 1e-10 * np.abs(K).max()
    assert pivoted_cholesky(K).shape[1] == 5
    with pytest.raises(ValueError):
        decompose_kernel(K, "qr")


def test_equivalence_guards(rng):
    big = from_dense(rng.standard_normal((501, 2)), np.where(np.arange(501) % 2, 1.0, -1.0))
    with pytest.raises(ScaleError):
        check_equivalence(subset(big, range(400)), subset(big, range(400, 501)), KernelSpec(), 1.0)
    X = rng.standard_normal((20, 3)) * 3
    d = from_dense(X, np.where(np.arange(20) % 2, 1.0, -1.0))
    with pytest.raises(KernelError):
        check_equivalence(subset(d, range(15)), subset(d, range(15, 20)), KernelSpec("sigmoid", alpha=2.0, beta=-1.0), 1.0)


def test_sign_zero_is_positive():
    np.testing.assert_array_equal(sign([0.0, -0.0, -1e-300, 2.0]), [1.0, 1.0, -1.0, 1.0])
