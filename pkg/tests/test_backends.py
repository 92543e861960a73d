import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from lasn import _accel
from lasn.kernel import KernelSpec, gram_block, mean_pair_sq_distance
from lasn.landmark import kmeans_landmarks
from lasn.dataio import from_dense
from lasn.linalg import sym_eig
from lasn.oracle import solve_dual_cd
from lasn.snewton import SolverConfig, hessian_apply, solve

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("kind", ["rbf", "polynomial", "sigmoid", "linear"])
def test_gram_parity(rng, kind):
    A = sp.random(30, 12, density=0.4, format="csr", random_state=rng)
    B = sp.random(7, 12, density=0.9, format="csr", random_state=rng)
    spec = KernelSpec(kind, gamma=1.7, alpha=0.3)
    for X, Y in ((A, B), (A, A)):
        a = gram_block(spec, X, Y, use_numba=True)
        b = gram_block(spec, X, Y, use_numba=False)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_numba
def test_linalg_and_kmeans_parity(rng):
    S = rng.standard_normal((20, 20))
    S = S + S.T
    a, b = sym_eig(S, use_numba=True), sym_eig(S, use_numba=False)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
    d = from_dense(sp.random(200, 10, density=0.5, random_state=rng).toarray(), np.ones(200))
    ka = kmeans_landmarks(d, 6, seed=3, use_numba=True)
    kb = kmeans_landmarks(d, 6, seed=3, use_numba=False)
    np.testing.assert_allclose(ka.centers, kb.centers, rtol=1e-12, atol=1e-14)
    assert mean_pair_sq_distance(d.X, use_numba=True) == pytest.approx(
        mean_pair_sq_distance(d.X, use_numba=False), rel=1e-12)


@needs_numba
def test_solver_and_oracle_parity(rng):
    X = np.hstack([rng.standard_normal((40, 5)), np.ones((40, 1))])
    y = np.where(rng.random(40) < 0.5, 1.0, -1.0)
    h = rng.standard_normal(6)
    act = np.flatnonzero(rng.random(40) < 0.6)
    np.testing.assert_allclose(hessian_apply(act, X, 3.0, h, use_numba=True),
                               hessian_apply(act, X, 3.0, h, use_numba=False), rtol=1e-12)
    wa = solve(X, y, SolverConfig(C=3.0), use_numba=True).w
    wb = solve(X, y, SolverConfig(C=3.0), use_numba=False).w
    np.testing.assert_allclose(wa, wb, atol=1e-8)
    Q = (y[:, None] * y[None, :]) * (X @ X.T)
    la = solve_dual_cd(Q, 3.0, use_numba=True).lam
    lb = solve_dual_cd(Q, 3.0, use_numba=False).lam
    np.testing.assert_allclose(la, lb, atol=1e-12)


def test_env_flag_forces_numpy(tmp_path):
    code = (
        "from lasn import _accel, train\n"
        "from lasn.synthetic import blobs\n"
        "m, rep = train(blobs(40, seed=1), k=6)\n"
        "print(_accel.backend_name(), _accel.USE_NUMBA, rep.converged)\n"
    )
    env = dict(os.environ, LASN_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False", "True"]
