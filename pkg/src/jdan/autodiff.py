"""Minimal reverse-mode tape over numpy arrays.

The training objective is a modest composition (conditioning net ->
positivity/tanh squashes -> marginal nets and their input-derivatives ->
pair combiner -> log), so a small scalar/tensor tape is all that is
needed; no external framework. Build the graph with the ops below, call
``backward`` on a scalar result, and read ``.grad`` off the leaves.

Gradients broadcast the numpy way and are summed back onto each parent's
shape. Only nodes that (transitively) depend on a leaf created with
``leaf()`` receive gradients.
"""

import numpy as np

from .numerics import sigmoid as _sigmoid_np


class Tensor:
    __slots__ = ("data", "grad", "parents", "bwd", "needs")

    def __init__(self, data, parents=(), bwd=None, needs=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.bwd = bwd
        self.needs = needs

    @property
    def shape(self):
        return self.data.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, idx):
        return getitem(self, idx)


def leaf(data):
    """Wrap a parameter array (not copied) as a gradient-receiving leaf."""
    return Tensor(data, needs=True)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, bwd):
    return Tensor(data, parents=parents, bwd=bwd, needs=any(p.needs for p in parents))


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b):
    a, b = _lift(a), _lift(b)
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))


def sub(a, b):
    a, b = _lift(a), _lift(b)
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)))


def mul(a, b):
    a, b = _lift(a), _lift(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.data.shape),
                            _unbroadcast(g * a.data, b.data.shape)))


def div(a, b):
    a, b = _lift(a), _lift(b)
    return _node(a.data / b.data, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.data.shape),
                            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)))


def matmul(a, b):
    """2-D matrix product."""
    a, b = _lift(a), _lift(b)
    return _node(a.data @ b.data, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def transpose(a):
    a = _lift(a)
    return _node(a.data.T, (a,), lambda g: (g.T,))


def bmv(a, b):
    """Batched matrix-vector product: (n, o, i) x (n, i) -> (n, o)."""
    a, b = _lift(a), _lift(b)
    out = np.einsum("noi,ni->no", a.data, b.data)
    return _node(out, (a, b),
                 lambda g: (g[:, :, None] * b.data[:, None, :],
                            np.einsum("no,noi->ni", g, a.data)))


def reshape(a, shape):
    a = _lift(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.data.shape),))


def getitem(a, idx):
    # idx must not select the same element twice (plain assignment below,
    # not scatter-add); ints, slices and tuples of those are all fine.
    a = _lift(a)

    def bwd(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return _node(a.data[idx], (a,), bwd)


def sumall(a):
    a = _lift(a)
    return _node(a.data.sum(), (a,), lambda g: (np.broadcast_to(g, a.data.shape).copy(),))


def mean(a):
    a = _lift(a)
    n = a.data.size
    return _node(a.data.mean(), (a,),
                 lambda g: (np.broadcast_to(g / n, a.data.shape).copy(),))


def log(a):
    a = _lift(a)
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def exp(a):
    a = _lift(a)
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def tanh(a):
    a = _lift(a)
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a):
    a = _lift(a)
    out = _sigmoid_np(a.data)
    return _node(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a):
    a = _lift(a)
    return _node(np.logaddexp(0.0, a.data), (a,),
                 lambda g: (g * _sigmoid_np(a.data),))


def relu(a):
    a = _lift(a)
    return _node(np.maximum(a.data, 0.0), (a,),
                 lambda g: (g * (a.data > 0),))


def step(a):
    """Heaviside with value 0 at 0; gradient defined as zero everywhere."""
    a = _lift(a)
    return _node((a.data > 0).astype(np.float64), (a,), lambda g: (None,))


def backward(root: Tensor):
    """Reverse accumulation from a scalar root into every leaf's .grad."""
    if root.data.size != 1:
        raise ValueError("backward expects a scalar root")
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.needs:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node.bwd is None or node.grad is None:
            continue
        for parent, g in zip(node.parents, node.bwd(node.grad)):
            if g is None or not parent.needs:
                continue
            if parent.grad is None:
                parent.grad = np.array(g, dtype=np.float64, copy=True)
            else:
                parent.grad = parent.grad + g
    return root.grad
