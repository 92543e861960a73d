"""LIBSVM sparse text format: parsing, canonical emission, labels and splits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import LabelError, ParseError


@dataclass(frozen=True)
class SparseVector:
    """One sample. ``indices`` are 1-based feature ids, strictly increasing."""

    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        prev = 0
        for i in self.indices:
            if i <= prev:
                raise ValueError("indices must be positive and strictly increasing")
            prev = i
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("non-finite value in sparse vector")

    @property
    def nnz(self):
        return len(self.indices)


@dataclass(frozen=True)
class Dataset:
    """Samples stored row-wise as CSR (0-based columns) plus a label vector.

    ``label_map`` records the raw-label -> {-1, +1} mapping once
    :func:`normalize_labels` has been applied; it is ``None`` for raw data.
    """

    X: sp.csr_matrix
    y: np.ndarray
    label_map: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("sample and label counts differ")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> list[float]:
        return self.y.tolist()

    def sample(self, i: int) -> SparseVector:
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        idx = tuple(int(j) + 1 for j in self.X.indices[lo:hi])
        return SparseVector(idx, tuple(float(v) for v in self.X.data[lo:hi]))

    @property
    def samples(self) -> list[SparseVector]:
        return [self.sample(i) for i in range(self.n_samples)]

    def class_counts(self) -> dict[float, int]:
        vals, counts = np.unique(self.y, return_counts=True)
        return {float(v): int(c) for v, c in zip(vals, counts)}

    def __len__(self):
        return self.n_samples


def from_vectors(samples: Iterable[SparseVector], labels, n_features: int | None = None,
                 label_map=None) -> Dataset:
    samples = list(samples)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for s in samples:
        indices.extend(i - 1 for i in s.indices)
        data.extend(s.values)
        indptr.append(len(indices))
    p_min = max(indices) + 1 if indices else 0
    p = p_min if n_features is None else n_features
    if p < p_min:
        raise ValueError(f"n_features={p} smaller than largest feature id {p_min}")
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(samples), p),
    )
    return Dataset(X, np.asarray(labels, dtype=np.float64).reshape(-1), label_map)


def from_dense(X, y, label_map=None) -> Dataset:
    """Wrap a dense array; exact zeros are not stored."""
    X = sp.csr_matrix(np.asarray(X, dtype=np.float64))
    X.sort_indices()
    return Dataset(X, np.asarray(y, dtype=np.float64).reshape(-1), label_map)


def parse_libsvm(text: bytes | str) -> Dataset:
    """Parse LIBSVM text. Labels are returned raw (see :func:`normalize_labels`)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples = []
    labels = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(line_no, f"non-numeric label {tokens[0]!r}") from None
        if not math.isfinite(label):
            raise ParseError(line_no, f"non-finite label {tokens[0]!r}")
        idx = []
        vals = []
        prev = 0
        for tok in tokens[1:]:
            head, sep, tail = tok.partition(":")
            if not sep:
                raise ParseError(line_no, f"malformed pair {tok!r}")
            try:
                j = int(head)
                v = float(tail)
            except ValueError:
                raise ParseError(line_no, f"malformed pair {tok!r}") from None
            if j <= 0:
                raise ParseError(line_no, f"non-positive index {j}")
            if j == prev:
                raise ParseError(line_no, f"duplicate index {j}")
            if j < prev:
                raise ParseError(line_no, f"index {j} not increasing (after {prev})")
            if not math.isfinite(v):
                raise ParseError(line_no, f"non-finite value at index {j}")
            idx.append(j)
            vals.append(v)
            prev = j
        samples.append(SparseVector(tuple(idx), tuple(vals)))
        labels.append(label)
    return from_vectors(samples, labels)


def load_libsvm(path) -> Dataset:
    return parse_libsvm(Path(path).read_bytes())


def _fmt_label(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def format_libsvm(d: Dataset) -> str:
    """Canonical text: integral labels as integers, values via shortest repr."""
    X = d.X
    out = []
    for i in range(d.n_samples):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        parts = [_fmt_label(d.y[i])]
        parts.extend(f"{int(j) + 1}:{float(v)!r}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]))
        out.append(" ".join(parts) + "\n")
    return "".join(out)


def normalize_labels(raw: Dataset) -> Dataset:
    """Map the larger of exactly two raw labels to +1 and the smaller to -1."""
    observed = sorted(set(raw.y.tolist()))
    if len(observed) != 2:
        raise LabelError(f"{len(observed)} distinct labels {observed}; exactly two required")
    lo, hi = observed
    y = np.where(raw.y == hi, 1.0, -1.0)
    return replace(raw, y=y, label_map={lo: -1, hi: 1})


def apply_label_map(d: Dataset, label_map: dict) -> Dataset:
    """Relabel ``d`` (e.g. a test file) with a mapping fixed on training data."""
    try:
        y = np.array([label_map[v] for v in d.y.tolist()], dtype=np.float64)
    except KeyError as exc:
        raise LabelError(f"label {exc.args[0]} not in training label map {label_map}") from None
    return replace(d, y=y, label_map=dict(label_map))


def with_n_features(d: Dataset, p: int) -> Dataset:
    if p < d.n_features:
        raise ValueError(f"cannot shrink feature space from {d.n_features} to {p}")
    if p == d.n_features:
        return d
    X = sp.csr_matrix((d.X.data, d.X.indices, d.X.indptr), shape=(d.n_samples, p))
    return replace(d, X=X)


def align_features(*datasets: Dataset) -> list[Dataset]:
    """Give every dataset the same feature dimension (the largest id seen)."""
    p = max(d.n_features for d in datasets)
    return [with_n_features(d, p) for d in datasets]


def subset(d: Dataset, rows) -> Dataset:
    rows = np.asarray(rows, dtype=np.int64)
    X = d.X[rows]
    X.sort_indices()
    return replace(d, X=X, y=d.y[rows].copy())


def split_dataset(d: Dataset, train_fraction: float) -> tuple[Dataset, Dataset]:
    """First ``floor(train_fraction * n)`` rows train, the rest test; file order kept."""
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    # decimal reading of the fraction, so 0.29 * 100 floors to 29 and not 28
    n_train = math.floor(Fraction(repr(float(train_fraction))) * d.n_samples)
    idx = np.arange(d.n_samples)
    return subset(d, idx[:n_train]), subset(d, idx[n_train:])
