"""Finite-difference gradient oracle and the standard check fixture.

Central differences per coordinate, independent of the reverse-mode
tape, so the two gradient routes can be compared. The relative error of
a comparison is the largest absolute deviation normalized by the
largest gradient magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..graph import SplitMasks
from ..text import substream_rng
from . import autodiff as ad
from .model import (
    GcnParams,
    _dual_graph,
    _edges_to_dense,
    _fuse_mask,
    _gcn_graph,
    _init_gcn,
    sym_normalize,
)

__all__ = [
    "finite_diff_grad",
    "max_relative_error",
    "GradCheckFixture",
    "make_fixture",
    "dual_loss_and_grads",
    "gcn_loss_and_grads",
    "run_gradient_checks",
]

DEFAULT_EPSILON = 1e-5


def finite_diff_grad(
    loss_fn: Callable[[Sequence[np.ndarray]], float],
    params: Sequence[np.ndarray],
    epsilon: float = DEFAULT_EPSILON,
) -> list[np.ndarray]:
    """Central differences of ``loss_fn`` per parameter coordinate."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    work = [p.astype(np.float64).copy() for p in params]
    grads = [np.zeros_like(p) for p in work]
    for p, g in zip(work, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + epsilon
            hi = loss_fn(work)
            flat_p[i] = orig - epsilon
            lo = loss_fn(work)
            flat_p[i] = orig
            flat_g[i] = (hi - lo) / (2.0 * epsilon)
    return grads


def max_relative_error(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    """max |a - b| over all coordinates, relative to the gradient scale."""
    diff = max(float(np.abs(x - y).max()) for x, y in zip(a, b))
    scale = max(
        max(float(np.abs(x).max()) for x in a),
        max(float(np.abs(y).max()) for y in b),
        1e-12,
    )
    return diff / scale


@dataclass(frozen=True)
class GradCheckFixture:
    """Small deterministic instance shared by both gradient checks."""

    H: np.ndarray
    edges: tuple[tuple[int, int], ...]
    Vc: frozenset[int]
    labels: tuple[int, ...]
    splits: SplitMasks
    gnn1: GcnParams
    gnn2: GcnParams


def make_fixture(
    n: int = 12,
    dim: int = 6,
    hidden: int = 8,
    num_classes: int = 2,
    seed: int = 7,
) -> GradCheckFixture:
    """Planted two-block graph with random features (64-bit, no dropout)."""
    rng = substream_rng(seed, "gradcheck")
    half = n // 2
    labels = tuple([0] * half + [1] * (n - half)) if num_classes == 2 else tuple(
        int(i * num_classes / n) for i in range(n)
    )
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            p = 0.55 if labels[i] == labels[j] else 0.15
            if rng.random() < p:
                edges.add((i, j))
    H = rng.normal(size=(n, dim))
    H /= np.linalg.norm(H, axis=1, keepdims=True)
    Vc = frozenset(range(0, n, 3))
    splits = SplitMasks(train=frozenset(range(0, n, 2)), val=frozenset(range(1, n, 2)))
    gnn1 = _init_gcn([dim, hidden, dim], substream_rng(seed, "init-gnn1"), np.float64)
    gnn2 = _init_gcn([dim, hidden, num_classes], substream_rng(seed, "init-gnn2"), np.float64)
    return GradCheckFixture(
        H=H, edges=tuple(sorted(edges)), Vc=Vc, labels=labels, splits=splits,
        gnn1=gnn1, gnn2=gnn2,
    )


def _split_params(arrays: Sequence[np.ndarray], n_first: int):
    return list(arrays[:n_first]), list(arrays[n_first:])


def dual_loss_and_grads(fixture: GradCheckFixture):
    """(loss_fn over flat param list, reverse-mode grads, param arrays)."""
    n = fixture.H.shape[0]
    A_star = _edges_to_dense(fixture.edges, n)
    A_hat_star = sym_normalize(A_star)
    fuse_mask = _fuse_mask(n, fixture.Vc, np.float64)
    label_arr = np.asarray(fixture.labels, dtype=np.int64)
    train_idx = np.asarray(sorted(fixture.splits.train), dtype=np.int64)
    n_first = len(fixture.gnn1.arrays())
    arrays = [a.copy() for a in fixture.gnn1.arrays() + fixture.gnn2.arrays()]

    def loss_fn(params: Sequence[np.ndarray]) -> float:
        p1, p2 = _split_params([ad.Tensor(p) for p in params], n_first)
        logits, _, _ = _dual_graph(fixture.H, A_hat_star, A_star, fuse_mask, p1, p2, None, None)
        loss = ad.masked_softmax_cross_entropy(logits, label_arr, train_idx)
        return float(loss.value)

    param_ts = [ad.parameter(p) for p in arrays]
    p1, p2 = _split_params(param_ts, n_first)
    logits, _, _ = _dual_graph(fixture.H, A_hat_star, A_star, fuse_mask, p1, p2, None, None)
    loss = ad.masked_softmax_cross_entropy(logits, label_arr, train_idx)
    ad.backward(loss)
    reverse_grads = [t.grad for t in param_ts]
    return loss_fn, reverse_grads, arrays


def gcn_loss_and_grads(fixture: GradCheckFixture):
    """Same as :func:`dual_loss_and_grads` for the plain-GCN objective."""
    n = fixture.H.shape[0]
    A_hat = sym_normalize(_edges_to_dense(fixture.edges, n))
    label_arr = np.asarray(fixture.labels, dtype=np.int64)
    train_idx = np.asarray(sorted(fixture.splits.train), dtype=np.int64)
    arrays = [a.copy() for a in fixture.gnn2.arrays()]

    def loss_fn(params: Sequence[np.ndarray]) -> float:
        param_ts = [ad.Tensor(p) for p in params]
        logits = _gcn_graph(ad.Tensor(A_hat), ad.Tensor(fixture.H), param_ts, None)
        loss = ad.masked_softmax_cross_entropy(logits, label_arr, train_idx)
        return float(loss.value)

    param_ts = [ad.parameter(p) for p in arrays]
    logits = _gcn_graph(ad.Tensor(A_hat), ad.Tensor(fixture.H), param_ts, None)
    loss = ad.masked_softmax_cross_entropy(logits, label_arr, train_idx)
    ad.backward(loss)
    reverse_grads = [t.grad for t in param_ts]
    return loss_fn, reverse_grads, arrays


def run_gradient_checks(epsilon: float = DEFAULT_EPSILON) -> dict[str, float]:
    """Max relative error of reverse-mode vs central differences."""
    fixture = make_fixture()
    results: dict[str, float] = {}
    for name, builder in (("gcn", gcn_loss_and_grads), ("dual", dual_loss_and_grads)):
        loss_fn, reverse_grads, arrays = builder(fixture)
        numeric = finite_diff_grad(loss_fn, arrays, epsilon)
        results[name] = max_relative_error(reverse_grads, numeric)
    return results
