# -*- coding: utf-8 -*-

#
# Copyright (C) 2024 DiSK collection contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Dense float64 arrays with taped reverse-mode differentiation.

Every primitive evaluates with numpy, checks its output for non-finite values
and, when one of its inputs requires a gradient, appends an entry to the
computation record of the current thread. ``backward`` replays the record in
reverse execution order, accumulates adjoints and clears the record.
"""

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import contextlib
import threading

import numpy as np
from scipy.special import erf

from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskNumericalError,
    DiskShapeError,
)

__all__ = [
    'Tensor',
    'ComputationRecord',
    'current_record',
    'no_record',
    'backward',
    'add', 'sub', 'mul', 'div', 'scale', 'matmul',
    'softmax', 'layer_norm', 'gelu', 'sin', 'cos', 'log', 'sigmoid', 'clip',
    'mean', 'sum', 'concat', 'slice', 'transpose', 'reshape',
    'numerical_gradient',
    'relative_error',
]

_SQRT_2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

_local = threading.local()


class Tensor(object):
    """A dense float64 array, optionally tracked for differentiation"""

    # make numpy defer to Tensor operators for `ndarray <op> Tensor`
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False):
        # type: (any, bool) -> None
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.recorded = False

    @classmethod
    def _wrap(cls, data, requires_grad):
        # type: (np.ndarray, bool) -> Tensor
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = requires_grad
        out.grad = None
        out.recorded = False
        return out

    @property
    def shape(self):
        # type: () -> tuple
        return self.data.shape

    @property
    def ndim(self):
        # type: () -> int
        return self.data.ndim

    @property
    def size(self):
        # type: () -> int
        return self.data.size

    def numpy(self):
        # type: () -> np.ndarray
        return self.data

    def item(self):
        # type: () -> float
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={list(self.shape)}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return slice(self, index)


class _Entry(object):
    __slots__ = ('name', 'output', 'inputs', 'adjoint')

    def __init__(self, name, output, inputs, adjoint):
        self.name = name
        self.output = output
        self.inputs = inputs
        self.adjoint = adjoint


class ComputationRecord(object):
    """Ordered list of the primitives executed on tracked tensors"""

    def __init__(self):
        self.entries = []
        self.enabled = True
        self.last_replay_count = 0

    def __len__(self):
        return len(self.entries)

    def append(self, name, output, inputs, adjoint):
        # type: (str, Tensor, tuple, callable) -> None
        output.recorded = True
        self.entries.append(_Entry(name, output, inputs, adjoint))

    def clear(self):
        # type: () -> None
        self.entries = []


def current_record():
    # type: () -> ComputationRecord
    """Returns the computation record owned by the calling thread"""
    record = getattr(_local, 'record', None)
    if record is None:
        record = ComputationRecord()
        _local.record = record
    return record


@contextlib.contextmanager
def no_record():
    """Evaluate primitives without recording them, e.g. for inference"""
    record = current_record()
    previous = record.enabled
    record.enabled = False
    try:
        yield record
    finally:
        record.enabled = previous


def _as_tensor(value):
    # type: (any) -> Tensor
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _emit(name, data, inputs, adjoint):
    # type: (str, np.ndarray, tuple, callable) -> Tensor
    if not np.all(np.isfinite(data)):
        raise DiskNumericalError(
            f"Primitive '{name}' produced a non-finite value",
            details={'primitive': name, 'shape': list(np.shape(data))},
        )

    record = current_record()
    tracked = record.enabled and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(np.asarray(data, dtype=np.float64), tracked)
    if tracked:
        record.append(name, out, inputs, adjoint)
    return out


def _unbroadcast(grad, shape):
    # type: (np.ndarray, tuple) -> np.ndarray
    """Sum a broadcast gradient back to the shape of an operand"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(name, a, b):
    # type: (str, Tensor, Tensor) -> None
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DiskShapeError(f"{name}: shapes {list(a.shape)} and {list(b.shape)} do not agree")


def add(a, b):
    # type: (Tensor, Tensor) -> Tensor
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('add', a, b)

    def adjoint(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit('add', a.data + b.data, (a, b), adjoint)


def sub(a, b):
    # type: (Tensor, Tensor) -> Tensor
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('sub', a, b)

    def adjoint(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _emit('sub', a.data - b.data, (a, b), adjoint)


def mul(a, b):
    # type: (Tensor, Tensor) -> Tensor
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('mul', a, b)

    def adjoint(g):
        grad_a = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        grad_b = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return grad_a, grad_b

    return _emit('mul', a.data * b.data, (a, b), adjoint)


def div(a, b):
    # type: (Tensor, Tensor) -> Tensor
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('div', a, b)
    out = a.data / b.data

    def adjoint(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return _emit('div', out, (a, b), adjoint)


def scale(a, factor):
    # type: (Tensor, float) -> Tensor
    a = _as_tensor(a)
    factor = float(factor)

    def adjoint(g):
        return (g * factor,)

    return _emit('scale', a.data * factor, (a,), adjoint)


def matmul(a, b):
    # type: (Tensor, Tensor) -> Tensor
    """Matrix product over the last two axes, leading batch axes broadcast"""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DiskShapeError(f"matmul: cannot multiply {list(a.shape)} by {list(b.shape)}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DiskShapeError(
            f"matmul: batch dimensions of {list(a.shape)} and {list(b.shape)} do not agree"
        )

    def adjoint(g):
        grad_a = grad_b = None
        if a.requires_grad:
            grad_a = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            grad_b = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return grad_a, grad_b

    return _emit('matmul', np.matmul(a.data, b.data), (a, b), adjoint)


def softmax(x, axis=-1):
    # type: (Tensor, int) -> Tensor
    x = _as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise DiskShapeError(f"softmax: axis {axis} is invalid for shape {list(x.shape)}")

    shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    out = shifted / shifted.sum(axis=axis, keepdims=True)

    def adjoint(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _emit('softmax', out, (x,), adjoint)


def layer_norm(x, gain, bias, eps=1e-5):
    # type: (Tensor, Tensor, Tensor, float) -> Tensor
    """Normalize over the last axis, then apply the affine gain and bias"""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    if eps <= 0:
        raise ValueError("layer_norm requires eps > 0")
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise DiskShapeError(
            f"layer_norm: gain {list(gain.shape)} and bias {list(bias.shape)} "
            f"do not match input {list(x.shape)}"
        )

    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def adjoint(g):
        lead = tuple(range(g.ndim - 1))
        grad_gain = (g * normed).sum(axis=lead)
        grad_bias = g.sum(axis=lead)
        if not x.requires_grad:
            return None, grad_gain, grad_bias
        g_normed = g * gain.data
        grad_x = inv_std * (
            g_normed
            - g_normed.mean(axis=-1, keepdims=True)
            - normed * (g_normed * normed).mean(axis=-1, keepdims=True)
        )
        return grad_x, grad_gain, grad_bias

    return _emit('layer_norm', normed * gain.data + bias.data, (x, gain, bias), adjoint)


def gelu(x):
    # type: (Tensor) -> Tensor
    """Exact GELU, x * Phi(x)"""
    x = _as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.data / _SQRT_2))

    def adjoint(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data ** 2)
        return (g * (cdf + x.data * pdf),)

    return _emit('gelu', x.data * cdf, (x,), adjoint)


def sin(x):
    # type: (Tensor) -> Tensor
    x = _as_tensor(x)

    def adjoint(g):
        return (g * np.cos(x.data),)

    return _emit('sin', np.sin(x.data), (x,), adjoint)


def cos(x):
    # type: (Tensor) -> Tensor
    x = _as_tensor(x)

    def adjoint(g):
        return (-g * np.sin(x.data),)

    return _emit('cos', np.cos(x.data), (x,), adjoint)


def log(x):
    # type: (Tensor) -> Tensor
    x = _as_tensor(x)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = np.log(x.data)

    def adjoint(g):
        return (g / x.data,)

    return _emit('log', out, (x,), adjoint)


def sigmoid(x):
    # type: (Tensor) -> Tensor
    x = _as_tensor(x)
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def adjoint(g):
        return (g * out * (1.0 - out),)

    return _emit('sigmoid', out, (x,), adjoint)


def clip(x, low, high):
    # type: (Tensor, float, float) -> Tensor
    """Clamp into [low, high]; the gradient is zero where clamping is active"""
    x = _as_tensor(x)
    inside = (x.data >= low) & (x.data <= high)

    def adjoint(g):
        return (g * inside,)

    return _emit('clip', np.clip(x.data, low, high), (x,), adjoint)


def _normalize_axes(axis, ndim):
    # type: (any, int) -> tuple
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def sum(x, axis=None, keepdims=False):
    # type: (Tensor, any, bool) -> Tensor
    # pylint: disable=redefined-builtin
    x = _as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)

    def adjoint(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _emit('sum', x.data.sum(axis=axes, keepdims=keepdims), (x,), adjoint)


def mean(x, axis=None, keepdims=False):
    # type: (Tensor, any, bool) -> Tensor
    x = _as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    count = float(np.prod([x.shape[a] for a in axes])) if axes else 1.0

    def adjoint(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return _emit('mean', x.data.mean(axis=axes, keepdims=keepdims), (x,), adjoint)


def concat(tensors, axis=0):
    # type: (List[Tensor], int) -> Tensor
    tensors = tuple(_as_tensor(t) for t in tensors)
    if len(tensors) == 0:
        raise DiskShapeError("concat: no tensors given")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = [list(t.shape) for t in tensors]
        raise DiskShapeError(f"concat: shapes {shapes} do not agree along axis {axis}")
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def adjoint(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit('concat', out, tensors, adjoint)


def slice(x, index):
    # type: (Tensor, any) -> Tensor
    """Basic or integer-array indexing; repeated indices accumulate"""
    # pylint: disable=redefined-builtin
    x = _as_tensor(x)

    def adjoint(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return _emit('slice', np.array(x.data[index]), (x,), adjoint)


def transpose(x, axes=None):
    # type: (Tensor, tuple) -> Tensor
    """Permute axes; by default swap the last two"""
    x = _as_tensor(x)
    if axes is None:
        axes = list(range(x.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def adjoint(g):
        return (np.transpose(g, inverse),)

    return _emit('transpose', np.transpose(x.data, axes), (x,), adjoint)


def reshape(x, shape):
    # type: (Tensor, tuple) -> Tensor
    x = _as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise DiskShapeError(f"reshape: cannot reshape {list(x.shape)} into {list(shape)}")

    def adjoint(g):
        return (g.reshape(x.shape),)

    return _emit('reshape', out, (x,), adjoint)


def backward(loss):
    # type: (Tensor) -> dict
    """Replay the record in reverse and return a map of leaf -> gradient

    Leaf gradients are also stored on ``tensor.grad``. The record of the
    calling thread is cleared afterwards.
    """
    if loss.size != 1:
        raise DiskShapeError(f"backward requires a scalar loss, got shape {list(loss.shape)}")

    record = current_record()
    gradients = {}

    if not loss.requires_grad:
        record.clear()
        return gradients

    adjoints = {id(loss): np.ones_like(loss.data)}
    leaves = {}
    if not loss.recorded:
        leaves[id(loss)] = loss

    replayed = 0
    for entry in reversed(record.entries):
        replayed += 1
        grad_out = adjoints.pop(id(entry.output), None)
        if grad_out is None:
            continue

        input_grads = entry.adjoint(grad_out)
        for tensor, grad in zip(entry.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue

            key = id(tensor)
            if key in adjoints:
                adjoints[key] = adjoints[key] + grad
            else:
                adjoints[key] = grad

            if not tensor.recorded:
                leaves[key] = tensor

    for key, tensor in leaves.items():
        grad = adjoints.get(key)
        if grad is None:
            continue
        grad = np.array(grad, dtype=np.float64).reshape(tensor.shape)
        tensor.grad = grad
        gradients[tensor] = grad

    record.last_replay_count = replayed
    record.clear()
    return gradients


def numerical_gradient(fn, array, h=1e-5):
    # type: (callable, np.ndarray, float) -> np.ndarray
    """Central finite differences of a scalar function of ``array``

    ``array`` is perturbed in place and restored entry by entry.
    """
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = fn()
        flat[i] = original - h
        lower = fn()
        flat[i] = original
        flat_grad[i] = (upper - lower) / (2.0 * h)
    return grad


def relative_error(a, b):
    # type: (np.ndarray, np.ndarray) -> float
    """Ratio test |a - b| / (|a| + |b|) on flattened vectors"""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    denom = np.linalg.norm(a) + np.linalg.norm(b)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / denom)
