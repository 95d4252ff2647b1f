"""Robust node classification on sparse text-attributed graphs."""

from .graph import TextAttributedGraph, SplitMasks, load_dataset, save_dataset, accuracy
from .sparsify import SparsityConfig, sparsify

__version__ = "0.1.0"

__all__ = [
    "TextAttributedGraph",
    "SplitMasks",
    "load_dataset",
    "save_dataset",
    "accuracy",
    "SparsityConfig",
    "sparsify",
    "__version__",
]
