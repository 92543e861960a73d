"""End-to-end training and prediction, plus the text model format."""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataio import Dataset
from .errors import DimensionError, ModelFormatError, ModelTruncatedError, ModelVersionError
from .kernel import KernelSpec, as_csr, gamma_heuristic, gram_block
from .landmark import DEFAULT_MAX_ITERS, KMEANS_CAP, LandmarkSet, kmeans_landmarks
from .nystrom import NystromMap, build_mapping, virtual_features
from .snewton import SolverConfig, SolverReport, augment_bias, solve

FORMAT_VERSION = 1
_MAGIC = "LASN"


@dataclass(frozen=True)
class LasnModel:
    kernel: KernelSpec
    landmarks: LandmarkSet
    mapping: np.ndarray  # (k, k)
    weights: np.ndarray  # (k + 1,), last entry multiplies the constant-1 column
    C: float
    seed: int
    n_features: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = self.landmarks.k
        if self.mapping.shape != (k, k):
            raise DimensionError(f"mapping is {self.mapping.shape}, expected ({k}, {k})")
        if self.weights.shape != (k + 1,):
            raise DimensionError(f"weights have length {self.weights.shape[0]}, expected {k + 1}")
        if self.landmarks.centers.shape[1] != self.n_features:
            raise DimensionError("landmark dimension differs from n_features")

    @property
    def k(self) -> int:
        return self.landmarks.k

    def identical(self, other: "LasnModel") -> bool:
        """Bitwise equality of every numeric part."""
        return (
            self.kernel == other.kernel
            and self.C == other.C
            and self.seed == other.seed
            and self.n_features == other.n_features
            and _same_bits(self.landmarks.centers, other.landmarks.centers)
            and _same_bits(self.mapping, other.mapping)
            and _same_bits(self.weights, other.weights)
        )


def _same_bits(a, b) -> bool:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def default_k(n: int) -> int:
    return max(1, round(math.sqrt(n)))


def train(train_data: Dataset, C: float = 10.0, k: int | None = None, seed: int = 0,
          config: SolverConfig | None = None, kernel: KernelSpec | None = None,
          kmeans_iters: int = DEFAULT_MAX_ITERS, kmeans_cap: int = KMEANS_CAP):
    """Fit landmarks, build the Nystrom map and solve the reduced linear SVM.

    ``kernel=None`` means an rbf kernel with the bandwidth heuristic. Returns
    ``(model, report)``; step timings land in ``model.meta["timings"]``.
    """
    n = train_data.n_samples
    if n == 0:
        raise ValueError("training set is empty")
    if not np.all(np.abs(train_data.y) == 1.0):
        raise ValueError("training labels must be -1 or +1")
    k = default_k(n) if k is None else int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range [1, {n}]")
    if config is None:
        config = SolverConfig(C=C)
    elif config.C != C:
        raise ValueError(f"solver config C={config.C} disagrees with C={C}")

    timings = {}
    gamma_source = "given"
    if kernel is None:
        t = time.perf_counter()
        kernel = KernelSpec("rbf", gamma=gamma_heuristic(train_data))
        timings["gamma"] = time.perf_counter() - t
        gamma_source = "heuristic"

    t = time.perf_counter()
    lms = kmeans_landmarks(train_data, k, max_iters=kmeans_iters, cap=kmeans_cap, seed=seed)
    timings["kmeans"] = time.perf_counter() - t

    t = time.perf_counter()
    centers = as_csr(lms.centers)
    K_ll = gram_block(kernel, centers, centers)
    K_rl = gram_block(kernel, train_data, centers)
    timings["gram"] = time.perf_counter() - t

    t = time.perf_counter()
    nmap = build_mapping(K_ll)
    timings["eig"] = time.perf_counter() - t

    t = time.perf_counter()
    F = virtual_features(K_rl, nmap)
    timings["product"] = time.perf_counter() - t

    t = time.perf_counter()
    Fa = augment_bias(F)
    report = solve(Fa, train_data.y, config)
    timings["solve"] = time.perf_counter() - t

    meta = {
        "format_version": FORMAT_VERSION,
        "k": k,
        "gamma_source": gamma_source,
        "mapping_rank": nmap.rank,
        "solver": report.summary(),
        "timings": timings,
        "train_scores": Fa @ report.w,
    }
    model = LasnModel(kernel, lms, nmap.mapping, report.w, float(C), int(seed), train_data.n_features, meta)
    return model, report


def _test_matrix(model: LasnModel, data):
    X = as_csr(data)
    p = X.shape[1]
    if p > model.n_features:
        # columns beyond the model's dimension are only an error if they hold data
        if X[:, model.n_features:].nnz:
            raise DimensionError(f"test data uses feature ids up to {p}, model has {model.n_features}")
        X = X[:, : model.n_features]
    elif p < model.n_features:
        X = X.copy()
        X.resize((X.shape[0], model.n_features))
    return X


def predict(model: LasnModel, data):
    """Return ``(labels, scores)``; ``scores = [K_el M, 1] w`` and ``sign(0) = +1``."""
    X = _test_matrix(model, data)
    K_el = gram_block(model.kernel, X, as_csr(model.landmarks.centers))
    F = virtual_features(K_el, NystromMap(model.mapping, np.ones(model.k), np.ones(model.k, bool)))
    scores = augment_bias(F) @ model.weights
    labels = np.where(scores >= 0.0, 1.0, -1.0)
    return labels, scores


def accuracy(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("no labels to compare")
    return 100.0 * float(np.count_nonzero(predicted == truth)) / predicted.size


# -- persistence -------------------------------------------------------------

def _g(v: float) -> str:
    return format(float(v), ".17g")


def _row(vals) -> str:
    return " ".join(_g(v) for v in vals)


def dumps(model: LasnModel) -> str:
    ks = model.kernel
    kind = ks.kind
    gamma = ks.gamma if kind == "rbf" else 0.0
    degree = ks.degree if kind == "polynomial" else 0
    alpha = ks.alpha if kind == "sigmoid" else 0.0
    beta = ks.beta if kind == "sigmoid" else 0.0
    lines = [
        f"{_MAGIC} {FORMAT_VERSION}",
        f"kernel {kind} gamma={_g(gamma)} degree={degree} alpha={_g(alpha)} beta={_g(beta)} "
        f"conv={ks.rbf_convention}",
        f"dims k={model.k} p={model.n_features} C={_g(model.C)} seed={model.seed}",
    ]
    lines += [_row(r) for r in model.landmarks.centers]
    lines += [_row(r) for r in model.mapping]
    lines.append(_row(model.weights))
    return "\n".join(lines) + "\n"


def save(model: LasnModel, sink) -> None:
    """Write to a path or a text stream."""
    text = dumps(model)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _fields(line: str, lineno: int, head: str) -> dict:
    parts = line.split()
    if not parts or parts[0] != head:
        raise ModelFormatError(f"line {lineno}: expected '{head} ...', got {line!r}")
    out = {}
    for tok in parts[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ModelFormatError(f"line {lineno}: malformed field {tok!r}")
        out[key] = val
    return out


def _floats(line: str, lineno: int, count: int) -> np.ndarray:
    toks = line.split()
    if len(toks) != count:
        raise DimensionError(f"line {lineno}: expected {count} values, got {len(toks)}")
    try:
        return np.array([float(t) for t in toks], dtype=np.float64)
    except ValueError as exc:
        raise ModelFormatError(f"line {lineno}: {exc}") from None


def loads(text: str) -> LasnModel:
    lines = text.splitlines()
    if not lines:
        raise ModelTruncatedError("empty model file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != _MAGIC:
        raise ModelFormatError(f"line 1: not a model file header: {lines[0]!r}")
    if head[1] != str(FORMAT_VERSION):
        raise ModelVersionError(f"model format version {head[1]} not supported (expected {FORMAT_VERSION})")
    if len(lines) < 3:
        raise ModelTruncatedError(f"model file ends after {len(lines)} lines, header is incomplete")
    kline = lines[1].split()
    if len(kline) < 2 or kline[0] != "kernel":
        raise ModelFormatError(f"line 2: expected kernel line, got {lines[1]!r}")
    kf = _fields(" ".join(["kernel"] + kline[2:]), 2, "kernel")
    dims = _fields(lines[2], 3, "dims")
    try:
        kind = kline[1]
        spec = KernelSpec(
            kind,
            gamma=float(kf["gamma"]) if kind == "rbf" else 1.0,
            degree=int(kf["degree"]) if kind == "polynomial" else 3,
            alpha=float(kf["alpha"]) if kind == "sigmoid" else 1.0,
            beta=float(kf["beta"]) if kind == "sigmoid" else 0.0,
            rbf_convention=kf["conv"],
        )
        k, p = int(dims["k"]), int(dims["p"])
        C, seed = float(dims["C"]), int(dims["seed"])
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"bad header field: {exc}") from None
    if k < 1 or p < 0:
        raise DimensionError(f"invalid dims k={k} p={p}")
    need = 3 + 2 * k + 1
    body = [ln for ln in lines[3:]]
    while body and not body[-1].strip():
        body.pop()
    if 3 + len(body) < need:
        raise ModelTruncatedError(f"model file has {3 + len(body)} lines, expected {need}")
    if 3 + len(body) > need:
        raise DimensionError(f"model file has {3 + len(body)} lines, expected {need} for k={k}")
    centers = np.vstack([_floats(body[i], 4 + i, p) for i in range(k)]) if p else np.zeros((k, 0))
    mapping = np.vstack([_floats(body[k + i], 4 + k + i, k) for i in range(k)])
    weights = _floats(body[2 * k], 4 + 2 * k, k + 1)
    lms = LandmarkSet(centers, seed, iterations_run=-1, converged=False)
    return LasnModel(spec, lms, mapping, weights, C, seed, p, {"format_version": FORMAT_VERSION})


def load(source) -> LasnModel:
    """Read from a path or a text stream."""
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return loads(source.read())
    with open(source, encoding="utf-8") as fh:
        return loads(fh.read())
