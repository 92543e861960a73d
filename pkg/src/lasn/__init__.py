"""Nystrom-linearized L2-loss kernel SVM trained by a semismooth Newton method."""

from ._accel import backend_name
from .dataio import Dataset, SparseVector, load_libsvm, normalize_labels, parse_libsvm, split_dataset
from .kernel import KernelSpec, gamma_heuristic, gram_block, kernel_eval
from .model import LasnModel, accuracy, load, predict, save, train
from .snewton import SolverConfig, SolverReport

__all__ = [
    "Dataset",
    "KernelSpec",
    "LasnModel",
    "SolverConfig",
    "SolverReport",
    "SparseVector",
    "accuracy",
    "backend_name",
    "gamma_heuristic",
    "gram_block",
    "kernel_eval",
    "load",
    "load_libsvm",
    "normalize_labels",
    "parse_libsvm",
    "predict",
    "save",
    "split_dataset",
    "train",
]

__version__ = "0.1.0"
