"""Wall-clock measurements of the training steps and of the compiled kernels."""

from __future__ import annotations

import time

import numpy as np

from . import _accel
from .kernel import KernelSpec, as_csr, gamma_heuristic, gram_block
from .landmark import kmeans_landmarks
from .linalg import sym_eig
from .model import train
from .oracle import solve_dual_cd
from .snewton import hessian_apply
from .synthetic import sparse_binary

STEPS = ("kmeans", "gram", "eig", "product", "solve")
# growth in k of each step with n and p fixed
EXPECTED_ORDER = {"kmeans": 1.0, "gram": 1.0, "eig": 3.0, "product": 2.0}
DEFAULT_KS = (50, 100, 200, 400)


def fit_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def slope_ok(slope: float, expected: float, factor: float) -> bool:
    return expected / factor <= slope <= expected * factor


def _mean_std(v):
    v = np.asarray(v, dtype=np.float64)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if v.size > 1 else 0.0}


def time_steps(data=None, ks=DEFAULT_KS, repeats=3, seed=0, C=10.0, spec: KernelSpec | None = None):
    """Time each training step for every k, ``repeats`` times with seeds seed, seed+1, ...

    k-means time is also reported per assignment pass (``kmeans_per_pass``),
    which removes the effect of early stopping on the scaling fit.
    """
    if data is None:
        data = sparse_binary(3000, 60, 0.5, seed=seed)
    if spec is None:
        spec = KernelSpec("rbf", gamma=gamma_heuristic(data))
    # warm the compiled kernels so compilation is not timed
    train(data, C=C, k=min(ks), seed=seed, kernel=spec)
    out = {}
    for k in ks:
        rows = {s: [] for s in STEPS + ("kmeans_per_pass",)}
        acc_iters = []
        for r in range(repeats):
            model, rep = train(data, C=C, k=k, seed=seed + r, kernel=spec)
            t = model.meta["timings"]
            for s in STEPS:
                rows[s].append(t[s])
            rows["kmeans_per_pass"].append(t["kmeans"] / len(model.landmarks.sse_history))
            acc_iters.append(rep.newton_iters)
        out[k] = {s: _mean_std(v) for s, v in rows.items()}
        out[k]["newton_iters"] = _mean_std(acc_iters)
    return out


def step_slopes(timings: dict, factor: float = 3.0) -> dict:
    ks = sorted(timings)
    res = {}
    for step, expected in EXPECTED_ORDER.items():
        key = "kmeans_per_pass" if step == "kmeans" else step
        slope = fit_slope(ks, [timings[k][key]["mean"] for k in ks])
        res[step] = {"slope": slope, "expected": expected, "ok": slope_ok(slope, expected, factor)}
    return res


def _best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def hessian_scaling(n=40000, d=201, sizes=(2500, 5000, 10000, 20000, 40000), repeats=7, seed=0,
                    use_numba=None):
    """Time ``hessian_apply`` against the active-set size with X and d fixed."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    h = rng.standard_normal(d)
    perm = rng.permutation(n)
    hessian_apply(perm[:10], X, 1.0, h, use_numba=use_numba)
    times = []
    for s in sizes:
        act = np.sort(perm[:s])
        times.append(_best_time(lambda: hessian_apply(act, X, 1.0, h, use_numba=use_numba), repeats))
    return {"sizes": list(sizes), "times": times, "slope": fit_slope(sizes, times)}


def backend_comparison(n=1500, p=60, k=200, repeats=3, seed=0) -> dict:
    """Best-of-``repeats`` time of each compiled kernel under both backends."""
    data = sparse_binary(n, p, 0.5, seed=seed)
    spec = KernelSpec("rbf", gamma=gamma_heuristic(data))
    centers = as_csr(kmeans_landmarks(data, k, seed=seed).centers)
    K_ll = gram_block(spec, centers, centers)
    rng = np.random.default_rng(seed)
    Xh = rng.standard_normal((20000, k + 1))
    act = np.sort(rng.permutation(20000)[:10000])
    h = rng.standard_normal(k + 1)
    Kq = gram_block(spec, data, data)[:300, :300] + 1.0
    tasks = {
        "gram": lambda nb: gram_block(spec, data, centers, use_numba=nb),
        "sym_eig": lambda nb: sym_eig(K_ll, use_numba=nb),
        "kmeans": lambda nb: kmeans_landmarks(data, k, seed=seed, use_numba=nb),
        "hessian_apply": lambda nb: hessian_apply(act, Xh, 1.0, h, use_numba=nb),
        "dual_cd": lambda nb: solve_dual_cd(Kq, 10.0, tol=1e-8, use_numba=nb),
    }
    out = {}
    for name, fn in tasks.items():
        row = {"numpy": _best_time(lambda: fn(False), repeats)}
        if _accel.HAVE_NUMBA:
            fn(True)
            row["numba"] = _best_time(lambda: fn(True), repeats)
            row["speedup"] = row["numpy"] / row["numba"]
        out[name] = row
    return out


def run(data=None, ks=DEFAULT_KS, repeats=3, seed=0, C=10.0, spec=None, backends=True) -> dict:
    timings = time_steps(data, ks, repeats, seed, C, spec)
    report = {
        "backend": _accel.backend_name(),
        "ks": list(ks),
        "repeats": repeats,
        "seed": seed,
        "steps": {str(k): v for k, v in timings.items()},
        "slopes": step_slopes(timings),
        "hessian_apply": hessian_scaling(seed=seed),
    }
    if backends:
        report["backends"] = backend_comparison(seed=seed)
    return report


if __name__ == "__main__":  # pragma: no cover
    import json

    print(json.dumps(run(), indent=2))
