# Severity Curriculum - Arabic medical QA generation

"""
Minimal reverse-mode automatic differentiation over dense float64 arrays.

Each forward op returns a Tensor that remembers its parents and a closure
mapping the output gradient to one gradient per parent. ``backward`` walks
the recorded graph once in reverse topological order and accumulates into
``grad`` of the leaf tensors that require it.
"""

import math
import threading
from contextlib import contextmanager

import numpy as np

from utils.errors import AllMasked, AlreadyConsumed, NonScalarLoss, ShapeMismatch

MASK_VALUE = -1e9
GELU_COEF = 0.044715
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

_state = threading.local()


def is_grad_enabled():
    return getattr(_state, 'enabled', True)


@contextmanager
def no_grad():
    """Run forward ops without recording a graph (inference, evaluation)"""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    __slots__ = ('data', 'requires_grad', 'grad', 'name', '_parents', '_backward', '_op', '_consumed')

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None
        self._op = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def item(self):
        if self.data.size != 1:
            raise NonScalarLoss(f'tensor of shape {self.shape} is not a scalar')
        return float(self.data.reshape(()))

    def backward(self):
        backward(self)

    def __repr__(self):
        label = f' {self.name}' if self.name else ''
        return f'<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>'


def _result(data, parents, backward_fn, op):
    out = Tensor(data)
    if is_grad_enabled() and any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
        out._op = op
    return out


def matmul(a, b):
    """(..., m, k) @ (k, n) or batched (B, m, k) @ (B, k, n)"""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch('matmul', a.shape, b.shape)
    if b.ndim == 3 and (a.ndim != 3 or a.shape[0] != b.shape[0]):
        raise ShapeMismatch('matmul', a.shape, b.shape)
    if b.ndim > 3 or a.ndim > 3:
        raise ShapeMismatch('matmul', a.shape, b.shape)

    a_data, b_data = a.data, b.data

    def backward_fn(grad):
        grad_a = grad @ np.swapaxes(b_data, -1, -2) if a.requires_grad else None
        grad_b = None
        if b.requires_grad:
            if b_data.ndim == 2:
                grad_b = a_data.reshape(-1, a_data.shape[-1]).T @ grad.reshape(-1, grad.shape[-1])
            else:
                grad_b = np.swapaxes(a_data, -1, -2) @ grad
        return grad_a, grad_b

    return _result(a_data @ b_data, (a, b), backward_fn, 'matmul')


def add(a, b):
    """Elementwise sum; b may broadcast over the leading dimensions of a"""
    if a.shape == b.shape:
        def backward_fn(grad):
            return grad, grad
        return _result(a.data + b.data, (a, b), backward_fn, 'add')

    if b.ndim > a.ndim or a.shape[a.ndim - b.ndim:] != b.shape:
        raise ShapeMismatch('add', a.shape, b.shape)

    b_shape = b.shape

    def backward_fn(grad):
        return grad, grad.reshape((-1,) + b_shape).sum(axis=0)

    return _result(a.data + b.data, (a, b), backward_fn, 'add')


def scale(a, c):
    c = float(c)

    def backward_fn(grad):
        return (grad * c,)

    return _result(a.data * c, (a,), backward_fn, 'scale')


def gelu(a):
    """tanh approximation of GELU"""
    x = a.data
    inner = _SQRT_2_OVER_PI * (x + GELU_COEF * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward_fn(grad):
        d_inner = _SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEF * x ** 2)
        local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * d_inner
        return (grad * local,)

    return _result(out, (a,), backward_fn, 'gelu')


def softmax_rows(a):
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=-1, keepdims=True)

    def backward_fn(grad):
        return (probs * (grad - (grad * probs).sum(axis=-1, keepdims=True)),)

    return _result(probs, (a,), backward_fn, 'softmax_rows')


def layer_norm_rows(a, gain, bias, eps=1e-5):
    if eps <= 0:
        raise ValueError('layer_norm eps must be > 0')
    width = a.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise ShapeMismatch('layer_norm_rows', a.shape, gain.shape)

    x = a.data
    centered = x - x.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std
    gain_data = gain.data

    def backward_fn(grad):
        grad_hat = grad * gain_data
        grad_x = inv_std / width * (
            width * grad_hat
            - grad_hat.sum(axis=-1, keepdims=True)
            - x_hat * (grad_hat * x_hat).sum(axis=-1, keepdims=True)
        )
        grad_gain = (grad * x_hat).reshape(-1, width).sum(axis=0)
        grad_bias = grad.reshape(-1, width).sum(axis=0)
        return grad_x, grad_gain, grad_bias

    return _result(x_hat * gain_data + bias.data, (a, gain, bias), backward_fn, 'layer_norm_rows')


def embedding_gather(table, indices):
    """Rows of a (V, d) table for an integer index array of any shape"""
    indices = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeMismatch('embedding_gather', table.shape, indices.shape)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ValueError(f'embedding index out of range [0, {table.shape[0]})')

    table_shape = table.shape

    def backward_fn(grad):
        grad_table = np.zeros(table_shape)
        np.add.at(grad_table, indices.reshape(-1), grad.reshape(-1, table_shape[1]))
        return (grad_table,)

    return _result(table.data[indices], (table,), backward_fn, 'embedding_gather')


def transpose_last(a):
    if a.ndim < 2:
        raise ShapeMismatch('transpose_last', a.shape, a.shape)

    def backward_fn(grad):
        return (np.swapaxes(grad, -1, -2),)

    return _result(np.swapaxes(a.data, -1, -2), (a,), backward_fn, 'transpose_last')


def reshape(a, shape):
    original = a.shape

    def backward_fn(grad):
        return (grad.reshape(original),)

    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatch('reshape', original, shape)
    return _result(data, (a,), backward_fn, 'reshape')


def slice_last(a, start, stop):
    original = a.shape

    def backward_fn(grad):
        full = np.zeros(original)
        full[..., start:stop] = grad
        return (full,)

    return _result(a.data[..., start:stop], (a,), backward_fn, 'slice_last')


def concat_last(tensors):
    widths = [t.shape[-1] for t in tensors]
    leading = tensors[0].shape[:-1]
    for t in tensors[1:]:
        if t.shape[:-1] != leading:
            raise ShapeMismatch('concat_last', tensors[0].shape, t.shape)
    bounds = np.cumsum([0] + widths)

    def backward_fn(grad):
        return tuple(grad[..., bounds[i]:bounds[i + 1]] for i in range(len(tensors)))

    return _result(np.concatenate([t.data for t in tensors], axis=-1), tuple(tensors), backward_fn, 'concat_last')


def causal_mask(scores):
    """Hide key positions after the query position in (..., T, T) scores"""
    size = scores.shape[-1]
    if scores.ndim < 2 or scores.shape[-2] != size:
        raise ShapeMismatch('causal_mask', scores.shape, scores.shape)
    visible = np.tril(np.ones((size, size), dtype=bool))

    def backward_fn(grad):
        return (np.where(visible, grad, 0.0),)

    return _result(np.where(visible, scores.data, MASK_VALUE), (scores,), backward_fn, 'causal_mask')


def cross_entropy_masked(logits, targets, mask):
    """Mean negative log-likelihood over positions whose mask is 1"""
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.float64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],) or mask.shape != targets.shape:
        raise ShapeMismatch('cross_entropy_masked', logits.shape, targets.shape)
    vocab = logits.shape[1]
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise ValueError(f'target id out of range [0, {vocab})')

    active = mask.sum()
    if active == 0:
        raise AllMasked('loss mask has no active positions')

    rows = np.arange(targets.shape[0])
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    target_log_probs = shifted[rows, targets] - log_norm
    loss = -(mask * target_log_probs).sum() / active

    def backward_fn(grad):
        probs = np.exp(shifted - log_norm[:, None])
        probs[rows, targets] -= 1.0
        return (probs * (mask / active)[:, None] * grad,)

    return _result(np.asarray(loss), (logits,), backward_fn, 'cross_entropy_masked')


def _topological_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """Populate .grad on every leaf that requires it; the graph is consumed"""
    if loss.data.size != 1:
        raise NonScalarLoss(f'backward needs a scalar loss, got shape {loss.shape}')
    if loss._consumed:
        raise AlreadyConsumed('this loss was already backpropagated; run the forward pass again')
    loss._consumed = True
    if not loss.requires_grad:
        return

    order = _topological_order(loss)
    pending = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + parent_grad if key in pending else parent_grad

    # Release saved activations
    for node in order:
        if node._backward is not None:
            node._parents = ()
            node._backward = None
            node._consumed = True
