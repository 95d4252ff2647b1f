"""Minimal reverse-mode autodiff over dense numpy arrays.

Just enough ops for graph convolutions and the differentiable
similarity-fusion path: matmul, broadcasting add/mul, relu, reductions,
elementwise powers, row normalization, clamping, and a fused masked
softmax cross-entropy. Backward runs once over a topologically sorted
tape; everything is float64 unless the caller feeds float32 leaves.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "constant",
    "parameter",
    "matmul",
    "add",
    "mul",
    "relu",
    "tsum",
    "power",
    "transpose",
    "reshape",
    "row_l2_normalize",
    "clip01",
    "masked_softmax_cross_entropy",
    "softmax",
    "backward",
]


class Tensor:
    """A node in the computation graph wrapping one ndarray."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, value, requires_grad=False, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64) if not isinstance(value, np.ndarray) else value
        self.grad = None
        self._parents = parents
        self._vjp = vjp
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


def constant(value) -> Tensor:
    return Tensor(np.asarray(value, dtype=np.float64))


def parameter(value) -> Tensor:
    return Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_value = a.value @ b.value

    def vjp(grad):
        return grad @ b.value.T, a.value.T @ grad

    return Tensor(out_value, parents=(a, b), vjp=vjp)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_value = a.value + b.value

    def vjp(grad):
        return _unbroadcast(grad, a.value.shape), _unbroadcast(grad, b.value.shape)

    return Tensor(out_value, parents=(a, b), vjp=vjp)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_value = a.value * b.value

    def vjp(grad):
        return (
            _unbroadcast(grad * b.value, a.value.shape),
            _unbroadcast(grad * a.value, b.value.shape),
        )

    return Tensor(out_value, parents=(a, b), vjp=vjp)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.value > 0
    out_value = np.where(mask, a.value, 0.0)

    def vjp(grad):
        return (grad * mask,)

    return Tensor(out_value, parents=(a,), vjp=vjp)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    out_value = a.value.sum(axis=axis, keepdims=keepdims)

    def vjp(grad):
        g = np.asarray(grad)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape).copy(),)

    return Tensor(out_value, parents=(a,), vjp=vjp)


def power(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    out_value = a.value ** exponent

    def vjp(grad):
        return (grad * exponent * a.value ** (exponent - 1.0),)

    return Tensor(out_value, parents=(a,), vjp=vjp)


def transpose(a) -> Tensor:
    a = _as_tensor(a)

    def vjp(grad):
        return (grad.T,)

    return Tensor(a.value.T, parents=(a,), vjp=vjp)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    old_shape = a.value.shape

    def vjp(grad):
        return (grad.reshape(old_shape),)

    return Tensor(a.value.reshape(shape), parents=(a,), vjp=vjp)


def row_l2_normalize(a) -> Tensor:
    """Rows scaled to unit norm; exactly-zero rows stay zero."""
    a = _as_tensor(a)
    norms = np.linalg.norm(a.value, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    out_value = a.value / safe

    def vjp(grad):
        # d(x/r)/dx with r = ||x||: g/r - x (x.g)/r^3; zero rows get zero
        dots = (a.value * grad).sum(axis=1, keepdims=True)
        gx = grad / safe - a.value * dots / safe**3
        return (np.where(norms > 0.0, gx, 0.0),)

    return Tensor(out_value, parents=(a,), vjp=vjp)


def clip01(a) -> Tensor:
    """Clamp into [0, 1]; gradient passes only through the interior."""
    a = _as_tensor(a)
    out_value = np.clip(a.value, 0.0, 1.0)
    interior = (a.value > 0.0) & (a.value < 1.0)

    def vjp(grad):
        return (grad * interior,)

    return Tensor(out_value, parents=(a,), vjp=vjp)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row softmax with max subtraction (plain numpy, no graph)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def masked_softmax_cross_entropy(logits, labels: np.ndarray, mask_idx: np.ndarray) -> Tensor:
    """Mean over ``mask_idx`` rows of -log softmax(logits)[label].

    ``labels`` holds a class id per node (ignored off-mask).
    """
    logits = _as_tensor(logits)
    mask_idx = np.asarray(mask_idx, dtype=np.int64)
    if mask_idx.size == 0:
        raise ValueError("cross entropy over an empty mask is undefined")
    probs = softmax(logits.value[mask_idx])
    picked = probs[np.arange(mask_idx.size), labels[mask_idx]]
    loss = float(-np.log(picked).mean())

    def vjp(grad):
        g = np.zeros_like(logits.value)
        delta = probs.copy()
        delta[np.arange(mask_idx.size), labels[mask_idx]] -= 1.0
        g[mask_idx] = delta / mask_idx.size
        return (g * grad,)

    return Tensor(np.float64(loss), parents=(logits,), vjp=vjp)


def backward(loss: Tensor) -> None:
    """Accumulate gradients of ``loss`` into every reachable tensor."""
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad:
                stack.append((parent, False))

    for node in topo:
        node.grad = np.zeros_like(node.value)
    loss.grad = np.ones_like(loss.value)
    for node in reversed(topo):
        if node._vjp is None:
            continue
        grads = node._vjp(node.grad)
        for parent, grad in zip(node._parents, grads):
            if parent.requires_grad:
                parent.grad = parent.grad + grad if parent.grad is not None else grad
