import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lasn.bounds import (
    BoundInputs,
    bound_check,
    compute_A,
    compute_e,
    compute_gaps,
    estimate_assumption_constants,
    lemma_ff_bound,
    procrustes,
    prop_wf_bound,
    theorem3_bound,
    xi_f_by_k,
)
from lasn.errors import DimensionError
from lasn.kernel import KernelSpec, gram_block
from lasn.nystrom import build_mapping, exact_rank_k_features, virtual_features
from lasn.synthetic import blobs


def test_gaps_zero_for_full_landmarks(rng):
    X = rng.standard_normal((25, 2))
    K = gram_block(KernelSpec("rbf", gamma=0.5), X, X)
    nm = build_mapping(K)
    assert nm.retained.all()
    F = virtual_features(K, nm)
    xi_f, xi_2 = compute_gaps(K, F @ F.T)
    assert xi_f <= 1e-8 and xi_2 <= 1e-8


@given(st.integers(0, 10_000))
def test_gaps_against_dense_spectrum(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 3))
    K = gram_block(KernelSpec("rbf", gamma=2.0), X, X)
    idx = np.sort(rng.choice(30, 5, replace=False))
    F = virtual_features(K[:, idx], build_mapping(K[np.ix_(idx, idx)]))
    xi_f, xi_2 = compute_gaps(K, F @ F.T)
    ev = np.linalg.eigvalsh(K - F @ F.T)  # independent oracle
    assert xi_f == pytest.approx(np.sqrt(np.sum(ev**2)), rel=1e-6)
    assert xi_2 == pytest.approx(np.abs(ev).max(), rel=1e-6)
    assert xi_2 <= xi_f


def test_gaps_dimension_mismatch():
    with pytest.raises(DimensionError):
        compute_gaps(np.eye(3), np.eye(2))


def test_compute_e_examples():
    assert compute_e([2.0, 1.0], 1, 0.5, 0.25) == (1.5, 1.25)
    assert compute_e([3.0, 2.0], 2, 0.0, 0.0) == (0.0, 0.0)
    e_f, _ = compute_e([3.0, 2.0, 1.0], 1, 0.7, 0.1)
    assert e_f >= 0.7


def test_compute_A_examples():
    diag, tr = compute_A([1.0], [0.5])
    assert diag[0] == 5.0 and tr == 5.0
    lam = np.array([4.0, 2.0, 0.5])
    diag, _ = compute_A(lam, lam)
    np.testing.assert_allclose(diag, 2 / lam, rtol=1e-15)
    assert compute_A([1.0, 2.0], [1.0, 0.0])[1] == math.inf
    assert compute_A([1.0, -1e-9], [1.0, 1.0])[1] == math.inf


def _inputs(lam, lamt, xi_f=0.0, xi_2=0.0, k=None, C0=1.0, rho=1.0, G=1.0):
    lam = np.asarray(lam, float)
    return BoundInputs(lam, np.asarray(lamt, float), xi_f, xi_2, k or len(lamt), C0, rho, G)


def test_lemma_exact_case():
    lam = np.array([3.0, 2.0, 0.5])
    b = lemma_ff_bound(_inputs(lam, lam))
    assert b == pytest.approx(3.0 * np.sum(2 / lam), rel=1e-14)


def test_degenerate_bounds_are_inf():
    inp = _inputs([3.0, 1.0], [3.0, 0.0])
    assert lemma_ff_bound(inp) == math.inf
    assert theorem3_bound(inp) == math.inf


def test_prefactor_cases():
    inp = _inputs([2.0, 1.0], [1.9], xi_f=0.1, xi_2=0.05, C0=30.0, rho=1.0, G=0.0)
    assert theorem3_bound(inp) == 0.0 and prop_wf_bound(inp, 3.0) == 0.0
    inp = _inputs([2.0, 1.0], [1.9], xi_f=0.1, xi_2=0.05, C0=30.0, rho=4.0, G=2.0)
    assert prop_wf_bound(inp, 1.0) == pytest.approx(4 * 900 * 2 * 3 * 2, rel=1e-15)
    gap = 0.5 * lemma_ff_bound(inp)
    assert prop_wf_bound(inp, gap) <= theorem3_bound(inp)


@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=8), st.floats(0, 2), st.floats(0, 1))
def test_bounds_nonnegative(lams, xf, x2):
    lam = np.sort(np.array(lams))[::-1]
    k = max(1, len(lam) // 2)
    inp = _inputs(lam, lam[:k] * 0.9, xi_f=xf, xi_2=min(x2, xf), k=k)
    assert lemma_ff_bound(inp) >= 0
    assert theorem3_bound(inp) >= 0


def test_assumption_constants(rng):
    X = rng.standard_normal((20, 3))
    K = gram_block(KernelSpec("rbf", gamma=2.0), X, X)
    F = exact_rank_k_features(K, 5)
    idx = np.arange(5)
    Ft = virtual_features(K[:, idx], build_mapping(K[np.ix_(idx, idx)]))
    w = rng.standard_normal(5)
    wt = rng.standard_normal(5)
    rho, G = estimate_assumption_constants(K, F, Ft, w, wt)
    assert rho == pytest.approx(1.0, abs=1e-12)
    assert G == max(np.abs(F @ w).max(), np.abs(Ft @ wt).max())
    Kl = gram_block(KernelSpec("linear"), X, X)
    rho, _ = estimate_assumption_constants(Kl, exact_rank_k_features(Kl, 3), exact_rank_k_features(Kl, 2), np.ones(3), np.ones(2))
    assert rho == pytest.approx(np.max(np.sum(X**2, axis=1)), rel=1e-10)


def test_procrustes_recovers_rotation(rng):
    F = rng.standard_normal((10, 3))
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    R, gap = procrustes(F, F @ Q.T)
    assert gap <= 1e-12
    np.testing.assert_allclose(R, Q, atol=1e-12)


def test_lemma_covers_measured_gap_on_100_point_instances():
    held = 0
    seeds = range(20)
    for s in seeds:
        d = blobs(100, seed=s)
        _, rep = bound_check(d, KernelSpec("rbf", gamma=2.0), 10, 10.0, seed=s)
        held += rep.lemma_ff_holds
    assert held >= 0.95 * len(seeds)


@pytest.mark.parametrize("seed", range(5))
def test_prop_wf_on_60_point_instances(seed):
    d = blobs(60, seed=seed)
    inp, rep = bound_check(d, KernelSpec("rbf", gamma=1.0), 6, 1.0, seed=seed)
    assert inp.C0 == 60.0
    assert rep.prop_wf_holds
    assert inp.xi_2 <= inp.xi_f
    assert np.all(np.diff(inp.exact_eigenvalues) <= 0) and np.all(np.diff(inp.approx_eigenvalues) <= 0)
    assert rep.as_dict()["prop_wf_holds"] is True


def test_xi_f_nested_landmarks_decreases_on_average():
    d = blobs(60, seed=0)
    means = xi_f_by_k(d, KernelSpec("rbf", gamma=2.0), [2, 5, 10, 20, 40], range(20))
    assert np.all(np.diff(means) <= 1e-9)
