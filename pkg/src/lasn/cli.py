"""Command-line front end: ``lasn {train,predict,eval,diagnose,bench}``.

Exit codes: 0 ok, 2 I/O, 3 dimension mismatch, 4 problem too large for a
desk-scale check, 5 solver did not converge. Other component errors exit 1.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bench, bounds, model as lasn_model, oracle
from .dataio import Dataset, apply_label_map, load_libsvm, normalize_labels, split_dataset, align_features
from .errors import DimensionError, LasnError, NumericalError, ParseError, ScaleError
from .kernel import KernelSpec, gamma_heuristic
from .snewton import SolverConfig

EXIT_OK, EXIT_ERROR, EXIT_IO, EXIT_DIM, EXIT_SCALE, EXIT_NOCONV = 0, 1, 2, 3, 4, 5
_KERNEL_ALIASES = {"rbf": "rbf", "poly": "polynomial", "sigmoid": "sigmoid", "linear": "linear"}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# -- helpers -----------------------------------------------------------------

def _load(path, label_map=None) -> Dataset:
    p = Path(path)
    try:
        raw = load_libsvm(p)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {p}: {exc.strerror or exc}") from None
    except ParseError as exc:
        raise CliError(EXIT_IO, f"{p}: {exc}") from None
    if label_map is not None:
        return apply_label_map(raw, label_map)
    if set(raw.y.tolist()) <= {-1.0, 1.0}:
        return apply_label_map(raw, {-1.0: -1, 1.0: 1})
    return normalize_labels(raw)


def _train_test(args):
    """Training data, and test data from --test or from --split of --data."""
    train = _load(args.data)
    test = None
    if getattr(args, "test", None):
        test = _load(args.test, train.label_map)
    elif args.split is not None:
        train, test = split_dataset(train, args.split)
    return train, test


def _kernel(args, train: Dataset):
    kind = _KERNEL_ALIASES[args.kernel]
    source = "given"
    gamma = args.gamma
    if kind == "rbf" and gamma is None:
        gamma = gamma_heuristic(train)
        source = "heuristic"
    spec = KernelSpec(kind, gamma=gamma if gamma is not None else 1.0, degree=args.degree,
                      alpha=args.alpha, beta=args.beta, rbf_convention=args.rbf_conv)
    return spec, source


def _solver(args) -> SolverConfig:
    kw = {"C": args.C}
    if args.max_iter is not None:
        kw["max_newton_iters"] = args.max_iter
    if args.tol is not None:
        kw["delta"] = args.tol
    return SolverConfig(**kw)


def _config_hash(args) -> str:
    skip = {"func", "json", "out", "model"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class _Log:
    """JSON-lines sink; every record carries the seed and config hash."""

    def __init__(self, path, seed, chash):
        self.path = path
        self.base = {"seed": seed, "config_hash": chash}
        self.lines = []

    def __call__(self, event, **fields):
        rec = {"event": event, **self.base, **_jsonable(fields)}
        self.lines.append(json.dumps(rec, sort_keys=True))

    def flush(self):
        if self.path:
            _write_text(self.path, "".join(line + "\n" for line in self.lines))


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def _fit(args, train, log):
    spec, source = _kernel(args, train)
    log("config", n=train.n_samples, p=train.n_features, kernel=spec.kind, gamma=spec.gamma,
        gamma_source=source, rbf_conv=spec.rbf_convention, C=args.C,
        k=args.k if args.k is not None else lasn_model.default_k(train.n_samples))
    model, rep = lasn_model.train(train, C=args.C, k=args.k, seed=args.seed, config=_solver(args),
                                  kernel=spec)
    for r in rep.history:
        log("iteration", **vars(r))
    log("timings", **model.meta["timings"])
    log("solver", **rep.summary())
    if not rep.converged:
        log.flush()
        raise CliError(EXIT_NOCONV, f"solver stopped after {rep.newton_iters} iterations with "
                                    f"|grad| = {rep.grad_norm:.3e} > {_solver(args).delta:g}")
    return model


# -- commands ----------------------------------------------------------------

def cmd_train(args) -> int:
    train, _ = _train_test(args)
    log = _Log(args.json, args.seed, _config_hash(args))
    model = _fit(args, train, log)
    out = args.out or args.model
    if not out:
        raise CliError(EXIT_IO, "train needs --out (model path)")
    try:
        lasn_model.save(model, out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {out}: {exc.strerror or exc}") from None
    log("saved", path=str(out), k=model.k)
    log.flush()
    return EXIT_OK


def _get_model(args, log):
    if args.model:
        try:
            return lasn_model.load(args.model), None
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {args.model}: {exc.strerror or exc}") from None
    if not args.data:
        raise CliError(EXIT_IO, "need --model, or --data to train on")
    train, test = _train_test(args)
    return _fit(args, train, log), test


def _predict_common(args):
    log = _Log(args.json, args.seed, _config_hash(args))
    model, test = _get_model(args, log)
    if args.model and args.test:
        test = _load(args.test)
    if test is None:
        raise CliError(EXIT_IO, "need --test (or --data with --split)")
    labels, scores = lasn_model.predict(model, test)
    if args.out:
        _write_text(args.out, "".join(f"{int(v):d}\n" for v in labels))
    return log, test, labels, scores


def cmd_predict(args) -> int:
    log, test, labels, _ = _predict_common(args)
    if not args.out:
        sys.stdout.write("".join(f"{int(v):d}\n" for v in labels))
    log("predict", n=test.n_samples, positive=int(np.sum(labels > 0)))
    log.flush()
    return EXIT_OK


def cmd_eval(args) -> int:
    log, test, labels, _ = _predict_common(args)
    acc = lasn_model.accuracy(labels, test.y)
    print(f"accuracy {acc:.4f}")
    log("eval", n=test.n_samples, accuracy=acc)
    log.flush()
    return EXIT_OK


def cmd_diagnose(args) -> int:
    train, test = _train_test(args)
    if test is None:
        train, test = split_dataset(train, 2.0 / 3.0)
    n, m = train.n_samples, test.n_samples
    if n + m > oracle.EQUIVALENCE_LIMIT or n > bounds.BOUNDS_LIMIT:
        raise CliError(EXIT_SCALE, f"diagnose is desk-scale only: equivalence check needs n + m <= "
                                   f"{oracle.EQUIVALENCE_LIMIT} and bounds need n <= {bounds.BOUNDS_LIMIT} "
                                   f"(got n={n}, m={m})")
    train, test = align_features(train, test)
    spec, source = _kernel(args, train)
    k = args.k if args.k is not None else lasn_model.default_k(n)
    eq = oracle.check_equivalence(train, test, spec, args.C)
    inp, rep = bounds.bound_check(train, spec, k, args.C, seed=args.seed)
    result = {
        "seed": args.seed,
        "config_hash": _config_hash(args),
        "kernel": spec.kind,
        "gamma": spec.gamma,
        "gamma_source": source,
        "C": args.C,
        "k": k,
        "equivalence": eq.as_dict(),
        "equivalence_labels_match": eq.labels_match,
        "bounds": {"inputs": inp.as_dict(), "report": rep.as_dict(),
                   "approx_eigenvalues_from": "F'F of the Nystrom features (no n/k rescaling)",
                   "feature_alignment": "orthogonal Procrustes"},
        "prop_wf_holds": rep.prop_wf_holds,
        "theorem3_holds": rep.theorem3_holds,
        "lemma_ff_holds": rep.lemma_ff_holds,
    }
    text = json.dumps(_jsonable(result), indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    data = None
    spec = None
    if args.data:
        data, _ = _train_test(args)
        spec, _ = _kernel(args, data)
    ks = tuple(int(v) for v in args.ks.split(","))
    report = bench.run(data, ks=ks, repeats=args.repeats, seed=args.seed, C=args.C, spec=spec,
                       backends=not args.no_backends)
    report["config_hash"] = _config_hash(args)
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _common(p, data_required=False):
    p.add_argument("--data", required=data_required, help="LIBSVM training file")
    p.add_argument("--test", help="LIBSVM test file")
    p.add_argument("--model", help="model file to read (predict/eval) or write (train)")
    p.add_argument("--out", help="output path")
    p.add_argument("--k", type=int, help="landmark count (default round(sqrt(n)))")
    p.add_argument("--C", type=float, default=10.0, help="penalty (default 10)")
    p.add_argument("--kernel", choices=sorted(_KERNEL_ALIASES), default="rbf")
    p.add_argument("--gamma", type=float, help="rbf bandwidth; omit for the mean-distance heuristic")
    p.add_argument("--rbf-conv", choices=("divide", "multiply"), default="divide")
    p.add_argument("--degree", type=int, default=3, help="polynomial degree")
    p.add_argument("--alpha", type=float, default=1.0, help="sigmoid slope")
    p.add_argument("--beta", type=float, default=0.0, help="sigmoid offset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, help="train on the first fraction of --data, test on the rest")
    p.add_argument("--max-iter", type=int, help="Newton iteration cap (default 200)")
    p.add_argument("--tol", type=float, help="gradient-norm tolerance (default 1e-6)")
    p.add_argument("--json", help="JSON-lines log path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lasn", description="Nystrom-linearized kernel SVM with a semismooth Newton solver")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, need_data in (("train", cmd_train, True), ("predict", cmd_predict, False),
                                ("eval", cmd_eval, False), ("diagnose", cmd_diagnose, True)):
        p = sub.add_parser(name)
        _common(p, need_data)
        p.set_defaults(func=fn)
    p = sub.add_parser("bench")
    _common(p)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--ks", default=",".join(str(k) for k in bench.DEFAULT_KS), help="comma-separated k values")
    p.add_argument("--no-backends", action="store_true", help="skip the numba/numpy comparison")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"lasn: {exc}", file=sys.stderr)
        return exc.code
    except DimensionError as exc:
        print(f"lasn: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except ScaleError as exc:
        print(f"lasn: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except NumericalError as exc:
        print(f"lasn: solver failed: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (LasnError, ValueError) as exc:
        print(f"lasn: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
