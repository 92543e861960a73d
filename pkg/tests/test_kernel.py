import math
import os
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from lasn.dataio import SparseVector, from_dense, from_vectors, load_libsvm, normalize_labels
from lasn.kernel import KernelSpec, gamma_heuristic, gram_block, kernel_eval, mean_pair_sq_distance
from lasn.linalg import spectral_norm, sym_eig

PTS = [
    SparseVector((1, 3), (0.5, 2.0)),
    SparseVector((2,), (1.0,)),
    SparseVector((1, 2, 4), (-1.0, 0.25, 3.0)),
    SparseVector(),
    SparseVector((3, 4), (1.5, -0.5)),
]


def test_kernel_eval_examples():
    x = SparseVector((1,), (0.0,))
    x1 = SparseVector((1,), (1.0,))
    assert kernel_eval(KernelSpec("rbf", gamma=3.0), PTS[2], PTS[2]) == 1.0
    assert kernel_eval(KernelSpec("rbf", gamma=1.0), x, x1) == pytest.approx(math.exp(-1.0), rel=1e-15)
    one = SparseVector((1,), (1.0,))
    assert kernel_eval(KernelSpec("polynomial", degree=2), one, one) == 4.0


@pytest.mark.parametrize(
    "spec,expected",
    [
        # frozen from a dict-based pure-Python evaluation
        (KernelSpec("rbf", gamma=2.0), 0.0004730781316127184),
        (KernelSpec("rbf", gamma=0.3, rbf_convention="multiply"), 0.010114856452604551),
        (KernelSpec("polynomial", degree=3), 0.125),
        (KernelSpec("sigmoid", alpha=0.5, beta=-0.2), -0.4218990052500079),
        (KernelSpec("linear"), -0.5),
    ],
)
def test_kernel_eval_frozen(spec, expected):
    assert kernel_eval(spec, PTS[0], PTS[2]) == pytest.approx(expected, rel=1e-13)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("laplace")
    with pytest.raises(ValueError):
        KernelSpec("rbf", gamma=0.0)
    with pytest.raises(ValueError):
        KernelSpec("rbf", rbf_convention="times")


def test_gamma_heuristic_examples():
    assert gamma_heuristic(from_dense([[0.0], [1.0]], [1, -1])) == 1.0
    assert gamma_heuristic(from_dense([[2.0, 1.0]] * 4, [1, -1, 1, -1])) == 1.0
    # mean over the 10 unordered pairs, frozen from a pure-Python loop
    d = from_vectors(PTS, np.ones(5))
    assert gamma_heuristic(d) == pytest.approx(6.875, rel=1e-14)
    with pytest.raises(ValueError):
        gamma_heuristic(from_dense([[1.0]], [1]))


def test_gamma_heuristic_cap_and_fast_path(rng):
    X = rng.standard_normal((300, 5))
    d = from_dense(X, np.ones(300))
    head = from_dense(X[:120], np.ones(120))
    assert gamma_heuristic(d, cap=120) == gamma_heuristic(head)
    exact = mean_pair_sq_distance(d.X, exact=True)
    fast = mean_pair_sq_distance(d.X, exact=False)
    assert fast == pytest.approx(exact, rel=1e-10)
    assert gamma_heuristic(d, exact_limit=10) == pytest.approx(exact, rel=1e-10)


@given(st.integers(0, 10_000))
def test_gamma_heuristic_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    X = sp.random(25, 8, density=0.4, format="csr", random_state=rng)
    d = from_dense(X.toarray(), np.ones(25))
    perm = rng.permutation(25)
    dp = from_dense(X.toarray()[perm], np.ones(25))
    assert gamma_heuristic(dp) == pytest.approx(gamma_heuristic(d), rel=1e-12)


def test_gram_block_matches_kernel_eval():
    d = from_vectors(PTS, np.ones(5))
    for spec in (KernelSpec("rbf", gamma=2.0), KernelSpec("polynomial", degree=2), KernelSpec("sigmoid"),
                 KernelSpec("linear"), KernelSpec("rbf", gamma=0.7, rbf_convention="multiply")):
        K = gram_block(spec, d, d)
        for i in range(5):
            for j in range(5):
                assert K[i, j] == pytest.approx(kernel_eval(spec, PTS[i], PTS[j]), rel=1e-12, abs=1e-14)
        assert np.array_equal(K, K.T)


def test_gram_block_shapes_and_rbf_diagonal(rng):
    X = rng.standard_normal((7, 3))
    spec = KernelSpec("rbf", gamma=1.5)
    K = gram_block(spec, X, X[:1])
    assert K.shape == (7, 1)
    Kll = gram_block(spec, X, X)
    np.testing.assert_array_equal(np.diag(Kll), np.ones(7))
    assert np.array_equal(Kll, Kll.T)


@given(st.integers(0, 10_000), st.sampled_from(["rbf", "polynomial", "linear", "sigmoid"]))
def test_gram_transpose_exact(seed, kind):
    rng = np.random.default_rng(seed)
    A = sp.random(6, 9, density=0.5, format="csr", random_state=rng)
    B = sp.random(4, 9, density=0.5, format="csr", random_state=rng)
    spec = KernelSpec(kind, gamma=2.0)
    assert np.array_equal(gram_block(spec, A, B), gram_block(spec, B, A).T)


@given(st.integers(0, 10_000), st.integers(2, 30))
def test_rbf_gram_psd(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    K = gram_block(KernelSpec("rbf", gamma=float(rng.uniform(0.1, 10))), X, X)
    assert sym_eig(K).eigenvalues[-1] >= -1e-8 * spectral_norm(K)


DATA_DIR = Path(os.environ.get("LASN_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))


def test_gamma_heuristic_a2a_reference_value():
    path = DATA_DIR / "a2a"
    if not path.exists():
        pytest.fail(f"dataset a2a not found at {path}; set LASN_DATA_DIR to a directory holding the LIBSVM files")
    g = gamma_heuristic(normalize_labels(load_libsvm(path)))
    assert g == pytest.approx(7.6484, rel=0.05)
