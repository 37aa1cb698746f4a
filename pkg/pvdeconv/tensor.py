#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Dense tensors with reverse-mode differentiation.

Only the operations the point-voxel autoencoder needs are provided. Each one is an
L{Operation} subclass whose C{forward} computes a numpy array and whose C{backward}
returns one gradient per input. Graphs are built while running (define-by-run) and
replayed backwards once by L{backward}.

Reductions and scatter loops always run in index order, so identical inputs give
bit-identical outputs and gradients.
"""
import os
import logging
from gettext import gettext as _

import numpy as np

from .utils import Error, ConfigurationError


logger = logging.getLogger(__name__)


DEBUG_ENV = 'PVDECONV_DEBUG'

TRAIN, EVAL = 'train', 'eval'
MODES = (TRAIN, EVAL)

_debug = bool(os.environ.get(DEBUG_ENV))


def set_debug(flag):
    """
    Enable finite-value checks after every forward and backward rule.
    """
    global _debug
    _debug = bool(flag)


class TensorError(Error):
    pass

class GraphError(TensorError):
    pass

class NonFiniteError(TensorError):
    pass


class DimensionError(TensorError):
    """
    Exception when an operand has the wrong size along one axis.
    """

    def __init__(self, what, axis, expected, actual):
        super(DimensionError, self).__init__(_("%s: axis %s has size %s, expected %s") %
                                             (what, axis, actual, expected))
        self.what = what
        self.axis = axis
        self.expected = expected
        self.actual = actual


def check_mode(mode):
    if mode not in MODES:
        raise ConfigurationError(_("Unknown mode '%s', expected 'train' or 'eval'") % mode)


class Tensor(object):
    """
    A dense array, optionally tracking gradients.
    """

    def __init__(self, data, requires_grad=False, name=None, dtype=None):
        data = np.asarray(data)
        if dtype is not None:
            data = data.astype(dtype, copy=False)
        elif data.dtype.kind != 'f':
            data = data.astype(np.float64)
        if not data.flags["C_CONTIGUOUS"]:
            data = data.copy(order="C")
        self.data = data
        self.requires_grad = requires_grad
        self.name = name
        #: same-shape array, allocated by the first backward pass reaching this tensor
        self.grad = None
        #: L{Operation} that produced this tensor, None for leaves
        self.record = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return self.data.item()

    def zeroGrad(self):
        self.grad = None

    def backward(self):
        return backward(self)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __repr__(self):
        name = "" if self.name is None else " %s" % self.name
        return "Tensor%s(shape=%s, dtype=%s, requires_grad=%s)" % \
            (name, self.shape, self.dtype, self.requires_grad)


def as_tensor(value, dtype=None):
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


def _check_finite(array, where):
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(_("Non-finite value produced by %s") % where)


class Operation(object):
    """
    One executed step of a graph: its inputs, its output and the backward rule.
    Subclasses implement C{forward} and C{backward}, and C{branches} when the
    operation is only piecewise smooth.
    """
    label = ''

    def __init__(self, *inputs):
        #: list of L{Tensor}
        self.inputs = list(inputs)
        self.output = None
        self.saved = {}
        self.released = False

    def forward(self):
        """
        @rtype: numpy array
        """
        raise NotImplementedError

    def backward(self, grad):
        """
        @param grad : gradient of the output
        @return: one gradient (or None) per input
        """
        raise NotImplementedError

    def branches(self):
        """
        Discrete decisions taken by a piecewise-smooth operation (masks, argmax and
        match indices). Two evaluations with different branches are not comparable
        by finite differences.
        """
        return ()

    def run(self):
        data = self.forward()
        if _debug:
            _check_finite(data, self.label)
        out = Tensor(data, requires_grad=any(t.requires_grad for t in self.inputs))
        if out.requires_grad:
            out.record = self
            self.output = out
        return out

    def release(self):
        self.saved = {}
        self.released = True

    def __repr__(self):
        return "%s(%s)" % (self.__class__.__name__, ", ".join("%s" % (t.shape,) for t in self.inputs))


class ComputeGraph(object):
    """
    Executed operations reachable from one tensor, in topological order:
    every record's producing inputs appear before it.
    """

    def __init__(self, records):
        self.records = records

    @classmethod
    def fromTensor(cls, tensor):
        """
        @type tensor : L{Tensor}
        @rtype: L{ComputeGraph}
        """
        records = []
        visited = set()
        stack = [(tensor.record, False)]
        while stack:
            op, expanded = stack.pop()
            if op is None:
                continue
            if expanded:
                records.append(op)
                continue
            if id(op) in visited:
                continue
            visited.add(id(op))
            stack.append((op, True))
            for t in reversed(op.inputs):
                if t.record is not None and id(t.record) not in visited:
                    stack.append((t.record, False))
        return cls(records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def branchSignature(self):
        """
        @rtype: list of (label, tuple of arrays)
        """
        return [(op.label, tuple(op.branches())) for op in self.records]


def _accumulate(tensor, grad):
    grad = np.asarray(grad, dtype=tensor.dtype)
    if grad.shape != tensor.shape:
        grad = grad.reshape(tensor.shape)
    if tensor.grad is None:
        tensor.grad = grad.copy()
    else:
        tensor.grad = tensor.grad + grad


def backward(loss):
    """
    Populate C{grad} on every tensor requiring gradients that ``loss`` depends on.
    Gradients add to whatever the leaves already hold, so several losses can be
    accumulated by calling this once per graph.
    @type loss : L{Tensor} holding a single value
    @rtype: L{ComputeGraph}
    """
    if loss.size != 1:
        raise GraphError(_("backward needs a scalar loss, got shape %s") % (loss.shape,))
    if not loss.requires_grad:
        raise GraphError(_("Loss is detached from any tensor requiring gradients"))
    graph = ComputeGraph.fromTensor(loss)
    if loss._consumed or any(op.released for op in graph):
        raise GraphError(_("Graph already consumed by a previous backward; run the forward pass again"))

    _accumulate(loss, np.ones(loss.shape, dtype=loss.dtype))
    for op in reversed(graph.records):
        grad = op.output.grad
        if grad is None:
            continue
        grads = op.backward(grad)
        for t, g in zip(op.inputs, grads):
            if g is None or not t.requires_grad:
                continue
            if _debug:
                _check_finite(g, "%s backward" % op.label)
            _accumulate(t, g)
    for op in graph:
        op.release()
    loss._consumed = True
    logger.debug(_("Backward through %d operations") % len(graph))
    return graph


#
#    Pointwise and structural operations
#


class Add(Operation):
    label = 'add'

    def forward(self):
        a, b = self.inputs
        if a.shape != b.shape:
            axis = _first_mismatch(a.shape, b.shape)
            raise DimensionError('add', axis, a.shape[axis] if axis < a.ndim else None,
                                 b.shape[axis] if axis < b.ndim else None)
        return a.data + b.data

    def backward(self, grad):
        return grad, grad


class Mul(Operation):
    label = 'mul'

    def forward(self):
        a, b = self.inputs
        if a.shape != b.shape:
            axis = _first_mismatch(a.shape, b.shape)
            raise DimensionError('mul', axis, a.shape[axis] if axis < a.ndim else None,
                                 b.shape[axis] if axis < b.ndim else None)
        return a.data * b.data

    def backward(self, grad):
        a, b = self.inputs
        return grad * b.data, grad * a.data


class Scale(Operation):
    label = 'scale'

    def __init__(self, x, alpha):
        Operation.__init__(self, x)
        self.alpha = alpha

    def forward(self):
        x = self.inputs[0]
        return (x.data * self.alpha).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (grad * self.alpha,)


class Sum(Operation):
    label = 'sum'

    def forward(self):
        return np.asarray(self.inputs[0].data.sum())

    def backward(self, grad):
        x = self.inputs[0]
        return (np.full(x.shape, grad.reshape(()), dtype=x.dtype),)


class Relu(Operation):
    label = 'relu'

    def forward(self):
        x = self.inputs[0].data
        self.saved['mask'] = x > 0
        return np.where(self.saved['mask'], x, 0).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (grad * self.saved['mask'],)

    def branches(self):
        return (self.saved['mask'],)


class Dropout(Operation):
    label = 'dropout'

    def __init__(self, x, rate, seed):
        Operation.__init__(self, x)
        self.rate = rate
        self.seed = seed

    def forward(self):
        x = self.inputs[0].data
        rng = np.random.default_rng(self.seed)
        keep = rng.random(x.shape) >= self.rate
        self.saved['keep'] = keep
        self.saved['factor'] = (keep / (1.0 - self.rate)).astype(x.dtype)
        return x * self.saved['factor']

    def backward(self, grad):
        return (grad * self.saved['factor'],)

    def branches(self):
        return (self.saved['keep'],)


class Concat(Operation):
    label = 'concat'

    def __init__(self, tensors, axis):
        Operation.__init__(self, *tensors)
        self.axis = axis

    def forward(self):
        first = self.inputs[0]
        for t in self.inputs[1:]:
            if t.ndim != first.ndim:
                raise DimensionError('concat', 'rank', first.ndim, t.ndim)
            for axis in range(first.ndim):
                if axis != self.axis % first.ndim and t.shape[axis] != first.shape[axis]:
                    raise DimensionError('concat', axis, first.shape[axis], t.shape[axis])
        return np.concatenate([t.data for t in self.inputs], axis=self.axis)

    def backward(self, grad):
        bounds = np.cumsum([t.shape[self.axis] for t in self.inputs])[:-1]
        return tuple(np.split(grad, bounds, axis=self.axis))


class MaxRows(Operation):
    """
    Max over the first axis; ties resolve to the lowest row.
    """
    label = 'max_rows'

    def forward(self):
        x = self.inputs[0].data
        if x.ndim != 2 or x.shape[0] == 0:
            raise DimensionError('max_rows', 0, '>= 1', x.shape[0] if x.ndim else 0)
        self.saved['argmax'] = np.argmax(x, axis=0)
        return x[self.saved['argmax'], np.arange(x.shape[1])]

    def backward(self, grad):
        x = self.inputs[0]
        g = np.zeros(x.shape, dtype=x.dtype)
        g[self.saved['argmax'], np.arange(x.shape[1])] = grad
        return (g,)

    def branches(self):
        return (self.saved['argmax'],)


class TileRows(Operation):
    label = 'tile_rows'

    def __init__(self, v, n):
        Operation.__init__(self, v)
        self.n = n

    def forward(self):
        v = self.inputs[0].data
        if v.ndim != 1:
            raise DimensionError('tile_rows', 'rank', 1, v.ndim)
        return np.tile(v, (self.n, 1))

    def backward(self, grad):
        return (grad.sum(axis=0),)


def _first_mismatch(a, b):
    for axis in range(max(len(a), len(b))):
        if axis >= len(a) or axis >= len(b) or a[axis] != b[axis]:
            return axis
    return 0


def add(a, b):
    return Add(a, b).run()


def mul(a, b):
    return Mul(a, b).run()


def scale(x, alpha):
    return Scale(x, alpha).run()


def sum(x):
    return Sum(x).run()


def relu(x):
    """
    max(0, x) elementwise; the derivative at 0 is taken as 0.
    """
    return Relu(x).run()


def dropout(x, rate, mode, seed):
    """
    In train mode, zero each element with probability ``rate`` and scale the
    survivors by 1/(1-rate). Eval mode, or a zero rate, returns ``x`` itself.
    The mask depends only on ``seed`` and the shape of ``x``.
    """
    if not 0 <= rate < 1:
        raise ConfigurationError(_("Dropout rate must be in [0, 1), got %s") % rate)
    check_mode(mode)
    if mode == EVAL or rate == 0:
        return x
    return Dropout(x, rate, seed).run()


def concat(tensors, axis=1):
    return Concat(tensors, axis).run()


def max_rows(x):
    return MaxRows(x).run()


def tile_rows(v, n):
    return TileRows(v, n).run()


#
#    Learnable layers
#


class LinearPointwise(Operation):
    label = 'linear_pointwise'

    def forward(self):
        x, w, b = self.inputs
        if x.ndim != 2:
            raise DimensionError('linear_pointwise input', 'rank', 2, x.ndim)
        if x.shape[0] < 1:
            raise DimensionError('linear_pointwise input', 0, '>= 1', x.shape[0])
        if w.ndim != 2 or w.shape[0] != x.shape[1]:
            raise DimensionError('linear_pointwise weight', 0, x.shape[1], w.shape[0] if w.ndim else None)
        if b.shape != (w.shape[1],):
            raise DimensionError('linear_pointwise bias', 0, w.shape[1], b.shape[0] if b.ndim else None)
        return np.dot(x.data, w.data) + b.data

    def backward(self, grad):
        x, w, b = self.inputs
        return np.dot(grad, w.data.T), np.dot(x.data.T, grad), grad.sum(axis=0)


def linear_pointwise(x, weight, bias):
    """
    out[n, j] = sum_i x[n, i] * weight[i, j] + bias[j]
    @type x : L{Tensor} N x Cin
    @type weight : L{Tensor} Cin x Cout
    @type bias : L{Tensor} Cout
    """
    return LinearPointwise(x, weight, bias).run()


def conv_output_size(r, k, stride, padding):
    """
    @raise ConfigurationError: when the output size is not a positive integer
    """
    if stride < 1 or padding < 0 or k < 1:
        raise ConfigurationError(_("Invalid convolution geometry: k=%s stride=%s padding=%s") % (k, stride, padding))
    span = r + 2 * padding - k
    if span < 0 or span % stride != 0:
        raise ConfigurationError(_("Convolution output size (%d + 2*%d - %d)/%d + 1 is not a positive integer") %
                                 (r, padding, k, stride))
    return span // stride + 1


def deconv_output_size(r, k, stride, padding):
    if stride < 1 or padding < 0 or k < 1:
        raise ConfigurationError(_("Invalid deconvolution geometry: k=%s stride=%s padding=%s") % (k, stride, padding))
    size = (r - 1) * stride - 2 * padding + k
    if size < 1:
        raise ConfigurationError(_("Deconvolution output size (%d - 1)*%d - 2*%d + %d is not positive") %
                                 (r, stride, padding, k))
    return size


def _offsets(k):
    for a in range(k):
        for b in range(k):
            for c in range(k):
                yield a, b, c


def _window(offset, counts, stride):
    """
    Channel-wide strided window starting at ``offset`` with ``counts`` cells per axis.
    """
    return (slice(None),) + tuple(slice(o, o + stride * (n - 1) + 1, stride)
                                  for o, n in zip(offset, counts))


class Conv3d(Operation):
    label = 'conv3d'

    def __init__(self, grid, kernel, bias, stride, padding):
        Operation.__init__(self, grid, kernel, bias)
        self.stride = stride
        self.padding = padding

    def forward(self):
        grid, kernel, bias = self.inputs
        if grid.ndim != 4:
            raise DimensionError('conv3d grid', 'rank', 4, grid.ndim)
        if kernel.ndim != 5:
            raise DimensionError('conv3d kernel', 'rank', 5, kernel.ndim)
        cout, cin, k = kernel.shape[0], kernel.shape[1], kernel.shape[2]
        if cin != grid.shape[0]:
            raise DimensionError('conv3d kernel', 1, grid.shape[0], cin)
        if kernel.shape[3] != k or kernel.shape[4] != k:
            raise DimensionError('conv3d kernel', 3, k, kernel.shape[3])
        if k % 2 == 0:
            raise ConfigurationError(_("conv3d kernel size must be odd, got %d") % k)
        if bias.shape != (cout,):
            raise DimensionError('conv3d bias', 0, cout, bias.shape[0] if bias.ndim else None)
        sizes = [conv_output_size(r, k, self.stride, self.padding) for r in grid.shape[1:]]
        p = self.padding
        padded = np.pad(grid.data, ((0, 0), (p, p), (p, p), (p, p)))
        self.saved['padded'] = padded
        self.saved['sizes'] = sizes
        out = np.zeros([cout] + sizes, dtype=grid.dtype)
        for offset in _offsets(k):
            window = padded[_window(offset, sizes, self.stride)]
            out += np.tensordot(kernel.data[(slice(None), slice(None)) + offset], window, axes=(1, 0))
        out += bias.data.reshape(-1, 1, 1, 1)
        return out

    def backward(self, grad):
        grid, kernel, bias = self.inputs
        k = kernel.shape[2]
        p = self.padding
        padded = self.saved['padded']
        sizes = self.saved['sizes']
        gpadded = np.zeros_like(padded)
        gkernel = np.zeros_like(kernel.data)
        for offset in _offsets(k):
            sl = _window(offset, sizes, self.stride)
            kslice = (slice(None), slice(None)) + offset
            gpadded[sl] += np.tensordot(kernel.data[kslice].T, grad, axes=(1, 0))
            gkernel[kslice] = np.tensordot(grad, padded[sl], axes=([1, 2, 3], [1, 2, 3]))
        r = grid.shape[1:]
        ggrid = gpadded[:, p:p + r[0], p:p + r[1], p:p + r[2]]
        return ggrid, gkernel, grad.sum(axis=(1, 2, 3))


class Deconv3d(Operation):
    label = 'deconv3d'

    def __init__(self, grid, kernel, bias, stride, padding):
        Operation.__init__(self, grid, kernel, bias)
        self.stride = stride
        self.padding = padding

    def forward(self):
        grid, kernel, bias = self.inputs
        if grid.ndim != 4:
            raise DimensionError('deconv3d grid', 'rank', 4, grid.ndim)
        if kernel.ndim != 5:
            raise DimensionError('deconv3d kernel', 'rank', 5, kernel.ndim)
        cin, cout, k = kernel.shape[0], kernel.shape[1], kernel.shape[2]
        if cin != grid.shape[0]:
            raise DimensionError('deconv3d kernel', 0, grid.shape[0], cin)
        if kernel.shape[3] != k or kernel.shape[4] != k:
            raise DimensionError('deconv3d kernel', 3, k, kernel.shape[3])
        if bias.shape != (cout,):
            raise DimensionError('deconv3d bias', 0, cout, bias.shape[0] if bias.ndim else None)
        r = grid.shape[1:]
        sizes = [deconv_output_size(n, k, self.stride, self.padding) for n in r]
        full = np.zeros([cout] + [(n - 1) * self.stride + k for n in r], dtype=grid.dtype)
        for offset in _offsets(k):
            sl = _window(offset, r, self.stride)
            full[sl] += np.tensordot(kernel.data[(slice(None), slice(None)) + offset].T, grid.data, axes=(1, 0))
        p = self.padding
        self.saved['full_shape'] = full.shape
        self.saved['sizes'] = sizes
        out = full[:, p:p + sizes[0], p:p + sizes[1], p:p + sizes[2]]
        return out + bias.data.reshape(-1, 1, 1, 1)

    def backward(self, grad):
        grid, kernel, bias = self.inputs
        k = kernel.shape[2]
        p = self.padding
        sizes = self.saved['sizes']
        gfull = np.zeros(self.saved['full_shape'], dtype=grad.dtype)
        gfull[:, p:p + sizes[0], p:p + sizes[1], p:p + sizes[2]] = grad
        r = grid.shape[1:]
        ggrid = np.zeros_like(grid.data)
        gkernel = np.zeros_like(kernel.data)
        for offset in _offsets(k):
            sl = _window(offset, r, self.stride)
            kslice = (slice(None), slice(None)) + offset
            window = gfull[sl]
            ggrid += np.tensordot(kernel.data[kslice], window, axes=(1, 0))
            gkernel[kslice] = np.tensordot(grid.data, window, axes=([1, 2, 3], [1, 2, 3]))
        return ggrid, gkernel, grad.sum(axis=(1, 2, 3))


def conv3d(grid, kernel, bias, stride=1, padding=0):
    """
    Cross-correlation of a C x r x r x r grid.
    @type kernel : L{Tensor} Cout x Cin x k x k x k, k odd
    """
    return Conv3d(grid, kernel, bias, stride, padding).run()


def deconv3d(grid, kernel, bias, stride=1, padding=0):
    """
    Transposed cross-correlation: each input cell scatters a copy of the kernel,
    scaled by its value, into the output. The adjoint of L{conv3d} for the same kernel.
    @type kernel : L{Tensor} Cin x Cout x k x k x k
    """
    return Deconv3d(grid, kernel, bias, stride, padding).run()


class BatchNorm(Operation):
    label = 'batch_norm'

    def __init__(self, x, gamma, beta, running_mean, running_var, axis, mode, momentum, eps):
        Operation.__init__(self, x, gamma, beta)
        self.running_mean = running_mean
        self.running_var = running_var
        self.axis = axis
        self.mode = mode
        self.momentum = momentum
        self.eps = eps

    def _flat(self, array):
        return np.moveaxis(array, self.axis, 0).reshape(array.shape[self.axis], -1)

    def _unflat(self, flat, shape):
        moved = [shape[self.axis]] + [n for i, n in enumerate(shape) if i != self.axis % len(shape)]
        return np.moveaxis(flat.reshape(moved), 0, self.axis)

    def forward(self):
        x, gamma, beta = self.inputs
        channels = x.shape[self.axis]
        if gamma.shape != (channels,):
            raise DimensionError('batch_norm gamma', 0, channels, gamma.shape[0] if gamma.ndim else None)
        if beta.shape != (channels,):
            raise DimensionError('batch_norm beta', 0, channels, beta.shape[0] if beta.ndim else None)
        flat = self._flat(x.data)
        count = flat.shape[1]
        if count == 0:
            raise ConfigurationError(_("batch_norm: no elements per channel"))
        if self.mode == TRAIN:
            mean = flat.mean(axis=1)
            var = flat.var(axis=1)
            if self.running_mean is not None:
                m = self.momentum
                unbiased = var * count / (count - 1) if count > 1 else var
                self.running_mean.data[...] = (1 - m) * self.running_mean.data + m * mean
                self.running_var.data[...] = (1 - m) * self.running_var.data + m * unbiased
        else:
            mean = self.running_mean.data
            var = self.running_var.data
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (flat - mean[:, None]) * inv[:, None]
        self.saved['xhat'] = xhat
        self.saved['inv'] = inv
        out = gamma.data[:, None] * xhat + beta.data[:, None]
        return self._unflat(out.astype(x.dtype, copy=False), x.shape)

    def backward(self, grad):
        x, gamma, beta = self.inputs
        g = self._flat(grad)
        xhat = self.saved['xhat']
        inv = self.saved['inv']
        ggamma = (g * xhat).sum(axis=1)
        gbeta = g.sum(axis=1)
        if self.mode == TRAIN:
            gx = (gamma.data * inv)[:, None] * (g - g.mean(axis=1)[:, None] -
                                                 xhat * (g * xhat).mean(axis=1)[:, None])
        else:
            gx = (gamma.data * inv)[:, None] * g
        return self._unflat(gx, x.shape), ggamma, gbeta


def batch_norm(x, gamma, beta, running_mean, running_var, mode, axis=0, momentum=0.1, eps=1e-5):
    """
    Normalize each channel of ``x`` (along ``axis``) over all its other positions.
    Train mode uses the batch statistics and moves the running statistics towards
    them by ``momentum``; eval mode uses the running statistics.
    @type running_mean : L{Tensor} updated in place in train mode
    """
    check_mode(mode)
    if eps <= 0:
        raise ConfigurationError(_("batch_norm epsilon must be positive"))
    return BatchNorm(x, gamma, beta, running_mean, running_var, axis, mode, momentum, eps).run()


#
#    Verification harness
#


class GradientReport(object):
    """
    Outcome of L{finite_diff_check}.
    """

    def __init__(self, tolerance):
        self.tolerance = tolerance
        self.checked = 0
        self.skipped = 0
        self.max_rel_error = 0.0
        self.max_abs_error = 0.0
        #: (input index, coordinate) of the largest relative error
        self.worst = None

    @property
    def passed(self):
        return self.checked > 0 and self.max_rel_error < self.tolerance

    def __repr__(self):
        return "GradientReport(checked=%d, skipped=%d, max_rel_error=%.3g, passed=%s)" % \
            (self.checked, self.skipped, self.max_rel_error, self.passed)


def _same_branches(a, b):
    if len(a) != len(b):
        return False
    for (la, xa), (lb, xb) in zip(a, b):
        if la != lb or len(xa) != len(xb):
            return False
        for u, v in zip(xa, xb):
            if not np.array_equal(u, v):
                return False
    return True


def _evaluate(op, inputs):
    out = op(*inputs)
    return float(out.data.reshape(())), ComputeGraph.fromTensor(out).branchSignature()


def finite_diff_check(op, inputs, epsilon=1e-5, tolerance=1e-4, samples=None, seed=0, floor=1e-6):
    """
    Compare autodiff gradients of a scalar-valued ``op(*inputs)`` with central
    differences (f(x+e) - f(x-e)) / 2e, one coordinate at a time.

    Coordinates whose two evaluations take different branches of a piecewise
    operation (a relu crossing zero, a new nearest neighbour) are skipped.
    Relative error is |a - n| / max(|a|, |n|, floor).

    @param inputs : float64 tensors requiring gradients, perturbed in place and restored
    @param samples : check at most this many random coordinates per input
    @rtype: L{GradientReport}
    """
    for t in inputs:
        t.zeroGrad()
    out = op(*inputs)
    backward(out)
    analytic = [np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in inputs]
    report = GradientReport(tolerance)
    rng = np.random.default_rng(seed)
    for i, t in enumerate(inputs):
        coords = np.arange(t.size)
        if samples is not None and samples < t.size:
            coords = np.sort(rng.choice(t.size, samples, replace=False))
        for j in coords:
            idx = np.unravel_index(j, t.shape)
            orig = t.data[idx]
            t.data[idx] = orig + epsilon
            fplus, bplus = _evaluate(op, inputs)
            t.data[idx] = orig - epsilon
            fminus, bminus = _evaluate(op, inputs)
            t.data[idx] = orig
            if not _same_branches(bplus, bminus):
                report.skipped += 1
                continue
            numeric = (fplus - fminus) / (2 * epsilon)
            a = float(analytic[i][idx])
            err = abs(a - numeric)
            rel = err / max(abs(a), abs(numeric), floor)
            report.checked += 1
            report.max_abs_error = max(report.max_abs_error, err)
            if rel > report.max_rel_error or report.worst is None:
                report.max_rel_error = max(rel, report.max_rel_error)
                report.worst = (i, idx)
    for t in inputs:
        t.zeroGrad()
    logger.debug("%s" % report)
    return report
