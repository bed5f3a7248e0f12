"""Reverse-mode automatic differentiation over dense float64 arrays.

Values live in numpy arrays; the differentiation machinery is built here.
Every operation returns a :class:`Node` that records its parent nodes and a
closure pushing the output gradient back to them.  :func:`backward` visits
the graph once in reverse topological order, so a node feeding several
consumers accumulates the sum of all path gradients.

The op set is deliberately small: exactly what an LSTM tagger with softmax
heads needs.  No control flow, no higher-order gradients, no broadcasting
beyond what the ops document.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DimensionError, LabelError


def as_tensor(values, shape=None) -> np.ndarray:
    """Coerce to a C-ordered float64 array, optionally reshaped.

    Scalars become 0-d arrays (np.ascontiguousarray would promote to 1-d).
    """
    arr = np.asarray(values, dtype=np.float64, order="C")
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


class Node:
    """A tensor value in the computation graph plus storage for its gradient.

    ``grad`` is None until :func:`backward` runs; afterwards it holds
    d(loss)/d(value) with the same shape as ``value``.  Leaf nodes (created
    via :func:`parameter` or the constructor) have no parents.
    """

    __slots__ = ("value", "grad", "parents", "_push", "name")

    def __init__(self, value, parents=(), push=None, name=""):
        self.value = as_tensor(value)
        self.grad = None
        self.parents = tuple(parents)
        self._push = push
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = self.name or "node"
        return f"Node({tag}, shape={self.value.shape})"


def parameter(values, name="") -> Node:
    """Create a leaf node (model parameter or constant input)."""
    return Node(values, name=name)


def _same_shape(op: str, a: Node, b: Node) -> None:
    if a.value.shape != b.value.shape:
        raise DimensionError(
            f"{op}: operand shapes {a.value.shape} and {b.value.shape} differ"
        )


def add(a: Node, b: Node) -> Node:
    """Elementwise sum of two same-shape nodes."""
    _same_shape("add", a, b)

    def push(g):
        a.grad += g
        b.grad += g

    return Node(a.value + b.value, (a, b), push, "add")


def mul(a: Node, b: Node) -> Node:
    """Elementwise (Hadamard) product of two same-shape nodes."""
    _same_shape("mul", a, b)
    av, bv = a.value, b.value

    def push(g):
        a.grad += g * bv
        b.grad += g * av

    return Node(av * bv, (a, b), push, "mul")


def scale(x: Node, c: float) -> Node:
    """Multiply by a python scalar constant."""
    c = float(c)

    def push(g):
        x.grad += c * g

    return Node(c * x.value, (x,), push, "scale")


def sigmoid(x: Node) -> Node:
    """Logistic sigmoid, computed in the overflow-safe branch per sign."""
    z = x.value
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)

    def push(g):
        x.grad += g * out * (1.0 - out)

    return Node(out, (x,), push, "sigmoid")


def tanh(x: Node) -> Node:
    out = np.tanh(x.value)

    def push(g):
        x.grad += g * (1.0 - out * out)

    return Node(out, (x,), push, "tanh")


def matmul(x: Node, w: Node) -> Node:
    """x @ w for x of shape (d_in,) or (n, d_in) and w of shape (d_in, d_out)."""
    xv, wv = x.value, w.value
    if wv.ndim != 2:
        raise DimensionError(f"matmul: weight must be 2-D, got shape {wv.shape}")
    if xv.ndim not in (1, 2) or xv.shape[-1] != wv.shape[0]:
        raise DimensionError(
            f"matmul: input last axis {xv.shape} does not match weight rows "
            f"{wv.shape[0]}"
        )

    def push(g):
        x.grad += g @ wv.T
        if xv.ndim == 1:
            w.grad += np.outer(xv, g)
        else:
            w.grad += xv.T @ g

    return Node(xv @ wv, (x, w), push, "matmul")


def affine(x: Node, w: Node, b: Node) -> Node:
    """x @ w + b with b of shape (d_out,). x may be (d_in,) or (n, d_in)."""
    xv, wv = x.value, w.value
    if wv.ndim != 2:
        raise DimensionError(f"affine: weight must be 2-D, got shape {wv.shape}")
    if xv.ndim not in (1, 2) or xv.shape[-1] != wv.shape[0]:
        raise DimensionError(
            f"affine: input last axis {xv.shape} does not match weight rows "
            f"{wv.shape[0]}"
        )
    if b.value.shape != (wv.shape[1],):
        raise DimensionError(
            f"affine: bias shape {b.value.shape} does not match weight columns "
            f"{wv.shape[1]}"
        )

    def push(g):
        x.grad += g @ wv.T
        if xv.ndim == 1:
            w.grad += np.outer(xv, g)
            b.grad += g
        else:
            w.grad += xv.T @ g
            b.grad += g.sum(axis=0)

    return Node(xv @ wv + b.value, (x, w, b), push, "affine")


def concat(parts) -> Node:
    """Concatenate 1-D nodes into one 1-D node."""
    parts = tuple(parts)
    for p in parts:
        if p.value.ndim != 1:
            raise DimensionError(
                f"concat: expected 1-D parts, got shape {p.value.shape}"
            )
    sizes = [p.value.shape[0] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def push(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.grad += g[lo:hi]

    return Node(np.concatenate([p.value for p in parts]), parts, push, "concat")


def stack_rows(rows) -> Node:
    """Stack n same-length 1-D nodes into an (n, d) node."""
    rows = tuple(rows)
    if not rows:
        raise DimensionError("stack_rows: need at least one row")
    d = rows[0].value.shape
    for r in rows:
        if r.value.shape != d:
            raise DimensionError(
                f"stack_rows: row shapes {d} and {r.value.shape} differ"
            )

    def push(g):
        for i, r in enumerate(rows):
            r.grad += g[i]

    return Node(np.stack([r.value for r in rows]), rows, push, "stack_rows")


def row(x: Node, i: int) -> Node:
    """Extract row i of a 2-D node as a 1-D node (used for lookup tables)."""
    if x.value.ndim != 2:
        raise DimensionError(f"row: expected a 2-D node, got shape {x.value.shape}")
    n = x.value.shape[0]
    if not 0 <= i < n:
        raise DimensionError(f"row: index {i} out of range for axis of length {n}")

    def push(g):
        x.grad[i] += g

    return Node(x.value[i].copy(), (x,), push, "row")


def sum_all(x: Node) -> Node:
    """Sum of all entries, as a scalar node."""

    def push(g):
        x.grad += g  # broadcasts the 0-d upstream gradient

    return Node(x.value.sum(), (x,), push, "sum_all")


def softmax(values: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis (plain numpy, no graph)."""
    v = np.asarray(values, dtype=np.float64)
    shifted = v - v.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Node, gold: int) -> Node:
    """-log softmax(logits)[gold] for a 1-D logit node, max-stabilized.

    The gradient w.r.t. the logits is softmax(logits) - onehot(gold).
    """
    v = logits.value
    if v.ndim != 1:
        raise DimensionError(
            f"softmax_cross_entropy: expected 1-D logits, got shape {v.shape}"
        )
    k = v.shape[0]
    if k < 2:
        raise DimensionError("softmax_cross_entropy: need at least 2 classes")
    if not isinstance(gold, (int, np.integer)) or not 0 <= gold < k:
        raise LabelError(
            f"softmax_cross_entropy: gold index {gold!r} out of range [0, {k})"
        )
    m = v.max()
    shifted = v - m
    e = np.exp(shifted)
    z = e.sum()
    probs = e / z
    loss = (m + np.log(z)) - v[gold]

    def push(g):
        delta = probs.copy()
        delta[gold] -= 1.0
        logits.grad += g * delta

    return Node(loss, (logits,), push, "softmax_cross_entropy")


def _topo_order(root: Node):
    """All nodes reachable from root, parents before consumers (iterative)."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Node) -> None:
    """Populate .grad on every node reachable from the scalar ``loss``.

    Gradients of all reachable nodes are reset to zero first, so each
    backward call stands alone; fan-out within one graph still accumulates
    additively.
    """
    if loss.value.size != 1:
        raise ContractError(
            f"backward requires a scalar loss, got shape {loss.value.shape}"
        )
    order = _topo_order(loss)
    for node in order:
        node.grad = np.zeros_like(node.value)
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._push is not None:
            node._push(node.grad)
