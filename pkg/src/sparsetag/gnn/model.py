"""Dense GNN core: convolution, cross-entropy training, similarity fusion.

Two training modes share the machinery. The plain mode trains one
two-layer graph convolution. The dual mode trains a structure-learning
pair jointly: the first network's output similarity matrix is fused
into the adjacency (outside the selected-node block, whose entries stay
as judged), the second network classifies on the fused graph, and the
gradient reaches the first network only through that fusion path.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import ConfigError, NumericError
from ..text import substream_rng
from . import autodiff as ad

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
    "save_checkpoint",
    "load_checkpoint",
    "save_history",
]


@dataclass
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 5e-4
    dropout: float = 0.5
    epochs: int = 100
    seed: int = 0
    hidden: int = 64
    float_mode: str = "float64"  # "float64" | "float32"

    def __post_init__(self):
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.float_mode not in ("float64", "float32"):
            raise ConfigError(f"unknown float mode {self.float_mode!r}")

    @property
    def dtype(self):
        return np.float64 if self.float_mode == "float64" else np.float32


@dataclass
class GcnParams:
    """Per-layer weight matrices and bias vectors of one GCN."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("need matching, non-empty weight/bias lists")
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise ConfigError(f"bias shape {b.shape} does not match weight {w.shape}")
        for prev, nxt in zip(self.weights, self.weights[1:]):
            if prev.shape[1] != nxt.shape[0]:
                raise ConfigError("layer dimensions are not chained consistently")

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "GcnParams":
        return GcnParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class DualGnnModel:
    """Jointly trained structure-learning and classification networks."""

    gnn1: GcnParams
    gnn2: GcnParams
    seed: int
    epoch: int  # epoch of the selected (best validation) parameters


@dataclass
class TrainHistory:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    gnn1_grad_absmax: list[float] = field(default_factory=list)
    gnn2_grad_absmax: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = float("nan")


def _init_gcn(dims: Sequence[int], rng: np.random.Generator, dtype) -> GcnParams:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return GcnParams(weights, biases)


def _edges_to_dense(edges: Iterable[tuple[int, int]], n: int, dtype=np.float64) -> np.ndarray:
    A = np.zeros((n, n), dtype=dtype)
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ConfigError(f"edge ({u}, {v}) out of range for n={n}")
        A[u, v] = 1.0
        A[v, u] = 1.0
    return A


def sym_normalize(adjacency, n: int | None = None) -> np.ndarray:
    """D^{-1/2} (A + I) D^{-1/2} with unit self-loops.

    Accepts an edge iterable (with ``n``) or a square non-negative
    weight matrix. Isolated nodes reduce to a self-loop entry of 1.
    """
    if isinstance(adjacency, np.ndarray):
        A = np.asarray(adjacency, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"adjacency must be square, got {A.shape}")
        if np.any(A < 0):
            raise ConfigError("adjacency weights must be non-negative")
    else:
        if n is None:
            raise ConfigError("n is required when passing an edge list")
        A = _edges_to_dense(adjacency, n)
    A_hat = A + np.eye(A.shape[0], dtype=A.dtype)
    deg = A_hat.sum(axis=1)
    d_inv_sqrt = deg ** -0.5
    return A_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


# -- shared computation-graph builders ---------------------------------


def _dropout_masks(shapes, p: float, rng: np.random.Generator, dtype) -> list[np.ndarray] | None:
    if p <= 0.0:
        return None
    return [
        (rng.random(shape) >= p).astype(dtype) / dtype(1.0 - p)
        for shape in shapes
    ]


def _layer_input_shapes(n: int, params: GcnParams) -> list[tuple[int, int]]:
    return [(n, w.shape[0]) for w in params.weights]


def _gcn_graph(A_hat_t: ad.Tensor, X_t: ad.Tensor, param_ts: list[ad.Tensor],
               masks: list[np.ndarray] | None) -> ad.Tensor:
    """Two-or-more-layer graph convolution; ReLU between layers, linear last.

    ``param_ts`` interleaves (W, b) per layer; ``masks`` (one per layer)
    multiply each layer's input when given.
    """
    x = X_t
    num_layers = len(param_ts) // 2
    for layer in range(num_layers):
        if masks is not None:
            x = ad.mul(x, ad.Tensor(masks[layer]))
        w, b = param_ts[2 * layer], param_ts[2 * layer + 1]
        x = ad.add(ad.matmul(ad.matmul(A_hat_t, x), w), b)
        if layer < num_layers - 1:
            x = ad.relu(x)
    return x


def _sym_normalize_graph(A_t: ad.Tensor, n: int, dtype) -> ad.Tensor:
    A_hat = ad.add(A_t, ad.Tensor(np.eye(n, dtype=dtype)))
    deg = ad.tsum(A_hat, axis=1)
    d_inv_sqrt = ad.power(deg, -0.5)
    row = ad.reshape(d_inv_sqrt, (n, 1))
    col = ad.reshape(d_inv_sqrt, (1, n))
    return ad.mul(ad.mul(row, A_hat), col)


def _similarity_graph(H1_t: ad.Tensor, offdiag: np.ndarray,
                      presence: np.ndarray | None = None) -> ad.Tensor:
    """Similarity weights for fusion: centered cosine, clamped, row-balanced.

    Centering subtracts the per-feature mean over represented rows;
    without it the ReLU hidden layer gives every pair of nodes a large
    positive cosine floor and the fused graph degenerates into noise.
    The clamped matrix is then normalized to unit row mass (and
    symmetrized), so the similarity channel carries roughly one edge
    worth of weight per node instead of drowning the judged edges and
    self-loops. Rows flagged absent in ``presence`` stay exactly zero.
    """
    if presence is None:
        presence = np.ones((H1_t.value.shape[0], 1), dtype=H1_t.value.dtype)
    count = float(presence.sum())
    masked = ad.mul(H1_t, ad.Tensor(presence))
    col_mean = ad.mul(ad.tsum(masked, axis=0, keepdims=True), ad.Tensor(np.float64(1.0 / count)))
    centered = ad.mul(ad.add(masked, ad.mul(col_mean, ad.Tensor(np.float64(-1.0)))), ad.Tensor(presence))
    rn = ad.row_l2_normalize(centered)
    sims = ad.matmul(rn, ad.transpose(rn))
    clamped = ad.mul(ad.clip01(sims), ad.Tensor(offdiag))
    if SIMILARITY_FLOOR > 0.0:
        clamped = ad.relu(ad.add(clamped, ad.Tensor(np.float64(-SIMILARITY_FLOOR))))
    row_mass = ad.tsum(clamped, axis=1, keepdims=True)
    inv_mass = ad.power(ad.add(row_mass, ad.Tensor(np.float64(1e-12))), -1.0)
    stochastic = ad.mul(clamped, inv_mass)
    return ad.mul(ad.add(stochastic, ad.transpose(stochastic)), ad.Tensor(np.float64(0.5)))


def _dual_graph(
    H: np.ndarray,
    A_hat_star: np.ndarray,
    A_star: np.ndarray,
    fuse_mask: np.ndarray,
    params1: list[ad.Tensor],
    params2: list[ad.Tensor],
    masks1: list[np.ndarray] | None,
    masks2: list[np.ndarray] | None,
):
    """Logits of the dual model; gradient reaches ``params1`` only via the
    similarity -> fused adjacency -> renormalization path.

    Nodes whose input representation is the zero row carry no text
    signal; their structure-learning output is masked to zero so bias
    terms cannot manufacture similarity between featureless nodes.
    """
    n = H.shape[0]
    dtype = H.dtype
    H_t = ad.Tensor(H)
    offdiag = np.ones((n, n), dtype=dtype) - np.eye(n, dtype=dtype)
    presence = (np.linalg.norm(H, axis=1, keepdims=True) > 0).astype(dtype)

    H1 = _gcn_graph(ad.Tensor(A_hat_star), H_t, params1, masks1)
    S = _similarity_graph(H1, offdiag, presence)
    fused = ad.add(ad.Tensor(A_star), ad.mul(S, ad.Tensor(fuse_mask)))
    A_hat_fused = _sym_normalize_graph(fused, n, dtype)
    logits = _gcn_graph(A_hat_fused, H_t, params2, masks2)
    return logits, S, fused


# -- public numpy-facing operations ------------------------------------


def gcn_forward(
    A_hat: np.ndarray,
    H: np.ndarray,
    params: GcnParams,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    train_mode: bool = False,
) -> np.ndarray:
    """Logits of a plain graph convolution (dropout only in train mode)."""
    if A_hat.shape[1] != H.shape[0]:
        raise ConfigError(f"shape mismatch: adjacency {A_hat.shape} vs features {H.shape}")
    masks = None
    if train_mode and dropout > 0.0:
        if rng is None:
            raise ConfigError("train-mode dropout requires an rng")
        masks = _dropout_masks(_layer_input_shapes(H.shape[0], params), dropout, rng, H.dtype)
    param_ts = [ad.Tensor(a) for a in params.arrays()]
    logits = _gcn_graph(ad.Tensor(A_hat), ad.Tensor(H), param_ts, masks)
    return logits.value


def cross_entropy(logits: np.ndarray, labels: Sequence[int | None], mask: Iterable[int]) -> float:
    """Mean over masked nodes of -log softmax(logits)[label]."""
    idx = np.asarray(sorted(mask), dtype=np.int64)
    if idx.size == 0:
        raise ConfigError("cross entropy over an empty mask is undefined")
    label_arr = np.zeros(logits.shape[0], dtype=np.int64)
    for i in idx:
        if labels[i] is None:
            raise ConfigError(f"masked node {i} has no label")
        label_arr[i] = labels[i]
    probs = ad.softmax(logits[idx])
    picked = probs[np.arange(idx.size), label_arr[idx]]
    return float(-np.log(picked).mean())


def similarity_matrix(H1: np.ndarray) -> np.ndarray:
    """Pairwise cosine of rows, clamped into [0, 1], zero diagonal.

    Zero rows stay zero, so textless nodes never gain similarity edges.
    """
    norms = np.linalg.norm(H1, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    rn = H1 / safe
    S = np.clip(rn @ rn.T, 0.0, 1.0)
    np.fill_diagonal(S, 0.0)
    return S


def fuse_adjacency(Astar: np.ndarray, S: np.ndarray, Vc: Iterable[int]) -> np.ndarray:
    """Astar + S outside the selected block; Astar alone inside it."""
    n = Astar.shape[0]
    if S.shape != (n, n):
        raise ConfigError(f"S shape {S.shape} does not match adjacency {Astar.shape}")
    mask = np.ones((n, n), dtype=Astar.dtype)
    vc = sorted(set(Vc))
    if vc:
        mask[np.ix_(vc, vc)] = 0.0
    return Astar + S * mask


def _fuse_mask(n: int, Vc: Iterable[int], dtype) -> np.ndarray:
    mask = np.ones((n, n), dtype=dtype)
    vc = sorted(set(Vc))
    if vc:
        mask[np.ix_(vc, vc)] = 0.0
    return mask


STRUCTURE_PATH_DROPOUT = True
SIMILARITY_FLOOR = 0.0


# -- optimizer ----------------------------------------------------------


class AdamW:
    """Adam moments with decoupled weight decay."""

    def __init__(self, arrays: list[np.ndarray], lr: float, weight_decay: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            a -= self.lr * update
            if self.weight_decay:
                a -= self.lr * self.weight_decay * a


# -- training loops ------------------------------------------------------


def _check_splits(labels, splits) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    train_idx = np.asarray(sorted(splits.train), dtype=np.int64)
    val_idx = np.asarray(sorted(splits.val), dtype=np.int64)
    if train_idx.size == 0:
        raise ConfigError("empty train split")
    label_arr = np.zeros(len(labels), dtype=np.int64)
    for i, label in enumerate(labels):
        if label is not None:
            label_arr[i] = label
    return train_idx, val_idx, label_arr


def _masked_accuracy(logits: np.ndarray, label_arr: np.ndarray, idx: np.ndarray) -> float:
    if idx.size == 0:
        return float("nan")
    preds = np.argmax(logits[idx], axis=1)
    return float((preds == label_arr[idx]).mean())


def _collect_grads(param_ts: list[ad.Tensor]) -> list[np.ndarray]:
    return [t.grad if t.grad is not None else np.zeros_like(t.value) for t in param_ts]


def train_dual(
    H: np.ndarray,
    Astar_edges: Iterable[tuple[int, int]],
    Vc: Iterable[int],
    labels: Sequence[int | None],
    splits,
    cfg: TrainConfig,
) -> tuple[DualGnnModel, TrainHistory]:
    """Joint full-batch training of both networks (best epoch by val acc)."""
    dtype = cfg.dtype
    H = np.asarray(H, dtype=dtype)
    n, d = H.shape
    num_classes = int(max(l for l in labels if l is not None)) + 1
    train_idx, val_idx, label_arr = _check_splits(labels, splits)

    A_star = _edges_to_dense(Astar_edges, n, dtype)
    A_hat_star = sym_normalize(A_star).astype(dtype)
    fuse_mask = _fuse_mask(n, Vc, dtype)

    rng1 = substream_rng(cfg.seed, "init-gnn1")
    rng2 = substream_rng(cfg.seed, "init-gnn2")
    drop_rng = substream_rng(cfg.seed, "dropout")
    gnn1 = _init_gcn([d, cfg.hidden, d], rng1, dtype)
    gnn2 = _init_gcn([d, cfg.hidden, num_classes], rng2, dtype)

    optimizer = AdamW(gnn1.arrays() + gnn2.arrays(), cfg.lr, cfg.weight_decay)
    history = TrainHistory()
    best = (-1.0, 0, gnn1.copy(), gnn2.copy())

    for epoch in range(1, cfg.epochs + 1):
        masks1 = (_dropout_masks(_layer_input_shapes(n, gnn1), cfg.dropout, drop_rng, dtype)
                  if STRUCTURE_PATH_DROPOUT else None)
        masks2 = _dropout_masks(_layer_input_shapes(n, gnn2), cfg.dropout, drop_rng, dtype)
        params1 = [ad.parameter(a) for a in gnn1.arrays()]
        params2 = [ad.parameter(a) for a in gnn2.arrays()]
        logits, _, _ = _dual_graph(H, A_hat_star, A_star, fuse_mask,
                                   params1, params2, masks1, masks2)
        loss = ad.masked_softmax_cross_entropy(logits, label_arr, train_idx)
        loss_value = float(loss.value)
        if not np.isfinite(loss_value):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        ad.backward(loss)
        grads1 = _collect_grads(params1)
        grads2 = _collect_grads(params2)
        optimizer.step(gnn1.arrays() + gnn2.arrays(), grads1 + grads2)

        eval_logits = dual_forward_eval(gnn1, gnn2, H, A_hat_star, A_star, fuse_mask)
        val_acc = _masked_accuracy(eval_logits, label_arr, val_idx)

        history.epochs.append(epoch)
        history.train_loss.append(loss_value)
        history.val_acc.append(val_acc)
        history.gnn1_grad_absmax.append(max(float(np.abs(g).max()) for g in grads1))
        history.gnn2_grad_absmax.append(max(float(np.abs(g).max()) for g in grads2))

        if not np.isnan(val_acc) and val_acc > best[0]:
            best = (val_acc, epoch, gnn1.copy(), gnn2.copy())

    if best[1] == 0:  # no validation split: keep final parameters
        best = (float("nan"), cfg.epochs, gnn1.copy(), gnn2.copy())
    history.best_epoch = best[1]
    history.best_val_acc = best[0]
    model = DualGnnModel(gnn1=best[2], gnn2=best[3], seed=cfg.seed, epoch=best[1])
    return model, history


def dual_forward_eval(
    gnn1: GcnParams,
    gnn2: GcnParams,
    H: np.ndarray,
    A_hat_star: np.ndarray,
    A_star: np.ndarray,
    fuse_mask: np.ndarray,
) -> np.ndarray:
    """Dropout-free forward pass of the dual model."""
    params1 = [ad.Tensor(a) for a in gnn1.arrays()]
    params2 = [ad.Tensor(a) for a in gnn2.arrays()]
    logits, _, _ = _dual_graph(H, A_hat_star, A_star, fuse_mask,
                               params1, params2, None, None)
    return logits.value


def train_gcn(
    H: np.ndarray,
    edges: Iterable[tuple[int, int]],
    labels: Sequence[int | None],
    splits,
    cfg: TrainConfig,
) -> tuple[GcnParams, TrainHistory]:
    """Plain two-layer GCN baseline (same contracts, single network)."""
    dtype = cfg.dtype
    H = np.asarray(H, dtype=dtype)
    n, d = H.shape
    num_classes = int(max(l for l in labels if l is not None)) + 1
    train_idx, val_idx, label_arr = _check_splits(labels, splits)

    A_hat = sym_normalize(_edges_to_dense(edges, n, dtype)).astype(dtype)
    rng = substream_rng(cfg.seed, "init-gcn")
    drop_rng = substream_rng(cfg.seed, "dropout")
    params = _init_gcn([d, cfg.hidden, num_classes], rng, dtype)

    optimizer = AdamW(params.arrays(), cfg.lr, cfg.weight_decay)
    history = TrainHistory()
    best = (-1.0, 0, params.copy())

    for epoch in range(1, cfg.epochs + 1):
        masks = _dropout_masks(_layer_input_shapes(n, params), cfg.dropout, drop_rng, dtype)
        param_ts = [ad.parameter(a) for a in params.arrays()]
        logits = _gcn_graph(ad.Tensor(A_hat), ad.Tensor(H), param_ts, masks)
        loss = ad.masked_softmax_cross_entropy(logits, label_arr, train_idx)
        loss_value = float(loss.value)
        if not np.isfinite(loss_value):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        ad.backward(loss)
        grads = _collect_grads(param_ts)
        optimizer.step(params.arrays(), grads)

        eval_logits = gcn_forward(A_hat, H, params)
        val_acc = _masked_accuracy(eval_logits, label_arr, val_idx)

        history.epochs.append(epoch)
        history.train_loss.append(loss_value)
        history.val_acc.append(val_acc)
        history.gnn1_grad_absmax.append(0.0)
        history.gnn2_grad_absmax.append(max(float(np.abs(g).max()) for g in grads))

        if not np.isnan(val_acc) and val_acc > best[0]:
            best = (val_acc, epoch, params.copy())

    if best[1] == 0:
        best = (float("nan"), cfg.epochs, params.copy())
    history.best_epoch = best[1]
    history.best_val_acc = best[0]
    return best[2], history


def train_mlp(H: np.ndarray, labels, splits, cfg: TrainConfig) -> tuple[GcnParams, TrainHistory]:
    """Structure-free baseline: a GCN over the empty edge set is an MLP."""
    return train_gcn(H, (), labels, splits, cfg)


def predict(model, H: np.ndarray, adjacency) -> np.ndarray:
    """Per-node class ids (argmax; ties go to the lowest class id).

    For a dual model ``adjacency`` must expose ``reconfigured`` and
    ``selected`` (an AdjacencyStage); for plain params it is an edge
    iterable.
    """
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if isinstance(model, DualGnnModel):
        edges = adjacency.reconfigured
        Vc = adjacency.selected
        A_star = _edges_to_dense(edges, n)
        A_hat_star = sym_normalize(A_star)
        fuse_mask = _fuse_mask(n, Vc, np.float64)
        logits = dual_forward_eval(model.gnn1, model.gnn2, H, A_hat_star, A_star, fuse_mask)
    else:
        if hasattr(adjacency, "reconfigured"):
            adjacency = adjacency.reconfigured
        A_hat = sym_normalize(_edges_to_dense(adjacency, n))
        logits = gcn_forward(A_hat, H, model)
    return np.argmax(logits, axis=1)


# -- persistence ---------------------------------------------------------


_CKPT_MAGIC = b"TAGCKPT1"


def _named_arrays(model) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    if isinstance(model, DualGnnModel):
        header = {"kind": "dual", "seed": model.seed, "epoch": model.epoch}
        pairs = []
        for tag, params in (("gnn1", model.gnn1), ("gnn2", model.gnn2)):
            for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
                pairs.append((f"{tag}_w{layer}", w))
                pairs.append((f"{tag}_b{layer}", b))
    else:
        header = {"kind": "gcn", "seed": 0, "epoch": 0}
        pairs = []
        for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
            pairs.append((f"gnn_w{layer}", w))
            pairs.append((f"gnn_b{layer}", b))
    return header, pairs


def save_checkpoint(model, path: str | Path) -> None:
    """Magic + JSON header (layer shapes, seed, epoch) + float64 payloads.

    Byte-deterministic: the same model always serializes identically.
    """
    header, pairs = _named_arrays(model)
    header["arrays"] = [{"name": name, "shape": list(a.shape)} for name, a in pairs]
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = bytearray()
    blob += _CKPT_MAGIC
    blob += len(header_bytes).to_bytes(8, "little")
    blob += header_bytes
    for _, a in pairs:
        blob += np.ascontiguousarray(a, dtype=np.float64).tobytes(order="C")
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path):
    blob = Path(path).read_bytes()
    if blob[: len(_CKPT_MAGIC)] != _CKPT_MAGIC:
        raise ConfigError(f"{path} is not a checkpoint file (bad magic)")
    offset = len(_CKPT_MAGIC)
    header_len = int.from_bytes(blob[offset : offset + 8], "little")
    offset += 8
    header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arrays[entry["name"]] = np.frombuffer(
            blob, dtype=np.float64, count=count, offset=offset
        ).reshape(shape).copy()
        offset += count * 8

    def params_for(tag: str) -> GcnParams:
        weights, biases = [], []
        layer = 0
        while f"{tag}_w{layer}" in arrays:
            weights.append(arrays[f"{tag}_w{layer}"])
            biases.append(arrays[f"{tag}_b{layer}"])
            layer += 1
        return GcnParams(weights, biases)

    if header["kind"] == "dual":
        return DualGnnModel(
            gnn1=params_for("gnn1"),
            gnn2=params_for("gnn2"),
            seed=int(header["seed"]),
            epoch=int(header["epoch"]),
        )
    return params_for("gnn")


def save_history(history: TrainHistory, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_acc"])
        for epoch, loss, acc in zip(history.epochs, history.train_loss, history.val_acc):
            writer.writerow([epoch, repr(loss), repr(acc)])
