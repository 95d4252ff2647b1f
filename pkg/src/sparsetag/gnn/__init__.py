from .model import (
    GcnParams,
    DualGnnModel,
    TrainConfig,
    TrainHistory,
    sym_normalize,
    gcn_forward,
    cross_entropy,
    similarity_matrix,
    fuse_adjacency,
    train_dual,
    train_gcn,
    train_mlp,
    predict,
)
from .gradcheck import finite_diff_grad, max_relative_error

__all__ = [
    "GcnParams",
    "DualGnnModel",
    "TrainConfig",
    "TrainHistory",
    "sym_normalize",
    "gcn_forward",
    "cross_entropy",
    "similarity_matrix",
    "fuse_adjacency",
    "train_dual",
    "train_gcn",
    "train_mlp",
    "predict",
    "finite_diff_grad",
    "max_relative_error",
]
