#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Bridge between points and voxels, and the blocks built on it.

A block runs two branches on the same point features and adds them:

 - coarse: voxelize (per-cell mean) -> 3D (de)convolution -> normalization -> relu
   -> trilinear devoxelization back at the point coordinates;
 - fine: shared pointwise affine map -> normalization -> relu.

Point coordinates pass through every block untouched; only features flow.
"""
import logging
import itertools
from gettext import gettext as _

import numpy as np

from .utils import ConfigurationError, ContractError, derive_seed
from .tensor import (Operation, Tensor, TRAIN, DimensionError, add, batch_norm, conv3d, deconv3d,
                     dropout, linear_pointwise, relu)


logger = logging.getLogger(__name__)


ENCODE, DECODE = 'encode', 'decode'


class PointCloud(object):
    """
    Ordered 3D points, optionally carrying an n x C feature L{Tensor}.
    """

    def __init__(self, coords, features=None):
        coords = np.asarray(coords)
        if coords.dtype.kind != 'f':
            coords = coords.astype(np.float64)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ContractError(_("Point coordinates must be n x 3, got shape %s") % (coords.shape,))
        if coords.shape[0] == 0:
            raise ContractError(_("Point cloud is empty"))
        if not np.all(np.isfinite(coords)):
            raise ContractError(_("Point coordinates must be finite"))
        if features is not None and features.shape[0] != coords.shape[0]:
            raise DimensionError('point features', 0, coords.shape[0], features.shape[0])
        self.coords = coords
        self.features = features

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def channels(self):
        return 0 if self.features is None else self.features.shape[1]

    def withFeatures(self, features):
        """
        Same coordinates (the same array object), new features.
        """
        return PointCloud(self.coords, features)

    def __len__(self):
        return self.n

    def __repr__(self):
        return "PointCloud(n=%d, channels=%d)" % (self.n, self.channels)


class VoxelGrid(object):
    """
    r x r x r feature grid over the unit cube.
    """

    def __init__(self, resolution, values, occupancy):
        self.resolution = resolution
        #: L{Tensor} C x r x r x r
        self.values = values
        #: per-cell point counts, r x r x r integers
        self.occupancy = occupancy

    @property
    def channels(self):
        return self.values.shape[0]


class PVBlockConfig(object):
    """
    One stage of blocks: (channels, num_blocks, voxel_resolution) plus the
    voxel kernel size, decoder dropout rate and normalization options.
    """

    def __init__(self, channels, num_blocks=1, voxel_resolution=16, kernel_size=3,
                 dropout_rate=0.1, direction=ENCODE, bn_momentum=0.1, bn_eps=1e-5):
        self.channels = channels
        self.num_blocks = num_blocks
        self.voxel_resolution = voxel_resolution
        self.kernel_size = kernel_size
        self.dropout_rate = dropout_rate
        self.direction = direction
        self.bn_momentum = bn_momentum
        self.bn_eps = bn_eps
        self.validate()

    def validate(self):
        if self.channels <= 0:
            raise ConfigurationError(_("Block channels must be positive, got %s") % self.channels)
        if self.num_blocks < 1:
            raise ConfigurationError(_("Block count must be at least 1, got %s") % self.num_blocks)
        if self.voxel_resolution < 2:
            raise ConfigurationError(_("Voxel resolution must be at least 2, got %s") % self.voxel_resolution)
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigurationError(_("Voxel kernel size must be odd, got %s") % self.kernel_size)
        if not 0 <= self.dropout_rate < 1:
            raise ConfigurationError(_("Dropout rate must be in [0, 1), got %s") % self.dropout_rate)
        if self.direction not in (ENCODE, DECODE):
            raise ConfigurationError(_("Unknown block direction '%s'") % self.direction)
        return self

    def __repr__(self):
        return "PVBlockConfig(%d, %d, %d, %s)" % (self.channels, self.num_blocks,
                                                  self.voxel_resolution, self.direction)


#
#    Voxelization
#


def voxel_indices(coords, r):
    """
    Cell of each point: floor(x * r) clamped to [0, r-1] on each axis.
    @rtype: n x 3 integer array
    """
    return np.clip(np.floor(coords * r), 0, r - 1).astype(np.int64)


def _flat(cells, r):
    return (cells[:, 0] * r + cells[:, 1]) * r + cells[:, 2]


def scatter_rows(index, rows, size):
    """
    out[i] = sum of rows[j] for index[j] == i, summed in increasing j.
    @rtype: size x C array
    """
    order = np.argsort(index, kind='stable')
    sorted_index = index[order]
    out = np.zeros((size,) + rows.shape[1:], dtype=rows.dtype)
    if len(order) == 0:
        return out
    starts = np.flatnonzero(np.r_[True, sorted_index[1:] != sorted_index[:-1]])
    out[sorted_index[starts]] = np.add.reduceat(rows[order], starts, axis=0)
    return out


class Voxelize(Operation):
    label = 'voxelize'

    def __init__(self, features, flat, counts, r):
        Operation.__init__(self, features)
        self.flat = flat
        self.counts = counts
        self.r = r

    def forward(self):
        features = self.inputs[0].data
        sums = scatter_rows(self.flat, features, self.r ** 3)
        means = sums / np.maximum(self.counts, 1)[:, None]
        r = self.r
        return means.T.reshape(features.shape[1], r, r, r).astype(features.dtype, copy=False)

    def backward(self, grad):
        g = grad.reshape(grad.shape[0], -1).T
        return (g[self.flat] / self.counts[self.flat][:, None],)


def voxelize(cloud, r):
    """
    Average point features into an r x r x r grid; empty cells hold 0.
    @type cloud : L{PointCloud} with features
    @rtype: L{VoxelGrid}
    """
    if cloud.features is None or cloud.channels == 0:
        raise ContractError(_("voxelize needs point features with at least one channel"))
    if r < 2:
        raise ConfigurationError(_("Voxel resolution must be at least 2, got %s") % r)
    flat = _flat(voxel_indices(cloud.coords, r), r)
    counts = np.bincount(flat, minlength=r ** 3)
    values = Voxelize(cloud.features, flat, counts, r).run()
    return VoxelGrid(r, values, counts.reshape(r, r, r))


def trilinear_weights(coords, r):
    """
    The 8 cells surrounding each query and their trilinear weights. Cell i has its
    center at (i + 0.5) / r; queries outside the centers' hull are clamped to it.
    @rtype: (n x 8 flat cell indices, n x 8 weights)
    """
    u = np.clip(coords * r - 0.5, 0, r - 1)
    base = np.minimum(np.floor(u).astype(np.int64), r - 2)
    t = u - base
    indices = []
    weights = []
    for corner in itertools.product((0, 1), repeat=3):
        w = np.ones(len(coords))
        for axis, d in enumerate(corner):
            w = w * (t[:, axis] if d else 1 - t[:, axis])
        cell = base + np.asarray(corner)
        indices.append(_flat(cell, r))
        weights.append(w)
    return np.stack(indices, axis=1), np.stack(weights, axis=1)


class Devoxelize(Operation):
    label = 'devoxelize'

    def __init__(self, values, indices, weights):
        Operation.__init__(self, values)
        self.indices = indices
        self.weights = weights

    def forward(self):
        values = self.inputs[0].data
        flat = values.reshape(values.shape[0], -1)
        w = self.weights.astype(values.dtype, copy=False)
        gathered = flat[:, self.indices]
        return (gathered * w[None]).sum(axis=2).T

    def backward(self, grad):
        values = self.inputs[0]
        channels = values.shape[0]
        w = self.weights.astype(grad.dtype, copy=False)
        rows = (w[:, :, None] * grad[:, None, :]).reshape(-1, channels)
        cells = scatter_rows(self.indices.reshape(-1), rows, values.size // channels)
        return (cells.T.reshape(values.shape),)


def devoxelize(grid, coords):
    """
    Trilinear interpolation of the grid values at ``coords``.
    @type grid : L{VoxelGrid}
    @rtype: L{Tensor} n x C
    """
    indices, weights = trilinear_weights(np.asarray(coords), grid.resolution)
    return Devoxelize(grid.values, indices, weights).run()


#
#    Blocks
#


class ParameterSpec(object):
    """
    Name, shape and initialization of one learnable tensor or normalization buffer.
    """
    GLOROT, ZEROS, ONES = ('glorot', 'zeros', 'ones')

    def __init__(self, name, shape, init, fan_in=0, fan_out=0, learnable=True):
        self.name = name
        self.shape = tuple(shape)
        self.init = init
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.learnable = learnable

    def __repr__(self):
        return "ParameterSpec(%s, %s)" % (self.name, self.shape)


def norm_specs(prefix, channels):
    return [ParameterSpec(prefix + '.gamma', (channels,), ParameterSpec.ONES),
            ParameterSpec(prefix + '.beta', (channels,), ParameterSpec.ZEROS),
            ParameterSpec(prefix + '.running_mean', (channels,), ParameterSpec.ZEROS, learnable=False),
            ParameterSpec(prefix + '.running_var', (channels,), ParameterSpec.ONES, learnable=False)]


def linear_specs(prefix, cin, cout):
    return [ParameterSpec(prefix + '.weight', (cin, cout), ParameterSpec.GLOROT, cin, cout),
            ParameterSpec(prefix + '.bias', (cout,), ParameterSpec.ZEROS)]


def block_specs(prefix, in_channels, config):
    """
    Parameters of a stage named "<prefix>.<j>.voxel.*" and "<prefix>.<j>.point.*".
    """
    specs = []
    cin = in_channels
    k = config.kernel_size
    c = config.channels
    for j in range(config.num_blocks):
        p = "%s.%d" % (prefix, j)
        if config.direction == ENCODE:
            shape = (c, cin, k, k, k)
        else:
            shape = (cin, c, k, k, k)
        specs.append(ParameterSpec(p + '.voxel.kernel', shape, ParameterSpec.GLOROT, cin * k ** 3, c * k ** 3))
        specs.append(ParameterSpec(p + '.voxel.bias', (c,), ParameterSpec.ZEROS))
        specs.extend(norm_specs(p + '.voxel.bn', c))
        specs.extend(linear_specs(p + '.point', cin, c))
        specs.extend(norm_specs(p + '.point.bn', c))
        cin = c
    return specs


def normalize(x, params, prefix, mode, axis, config):
    return batch_norm(x, params[prefix + '.gamma'], params[prefix + '.beta'],
                      params[prefix + '.running_mean'], params[prefix + '.running_var'],
                      mode, axis=axis, momentum=config.bn_momentum, eps=config.bn_eps)


def shared_mlp(features, params, prefix, mode, config):
    """
    Pointwise affine map, normalization over points, relu.
    """
    out = linear_pointwise(features, params[prefix + '.weight'], params[prefix + '.bias'])
    return relu(normalize(out, params, prefix + '.bn', mode, 1, config))


def _check_stage(cloud, config, params, prefix, direction):
    if config.direction != direction:
        raise ConfigurationError(_("Block '%s' configured for %s, used for %s") %
                                 (prefix, config.direction, direction))
    if cloud.features is None:
        raise ContractError(_("Block '%s' needs point features") % prefix)
    kernel = params["%s.0.voxel.kernel" % prefix]
    expected = kernel.shape[1] if direction == ENCODE else kernel.shape[0]
    if expected != cloud.channels:
        raise DimensionError("%s input features" % prefix, 1, expected, cloud.channels)


def pvconv_block(cloud, config, params, prefix, mode=TRAIN):
    """
    Encoder stage: C{config.num_blocks} point-voxel convolutions.
    @type cloud : L{PointCloud} with features
    @param params : mapping of parameter name -> L{Tensor}
    @rtype: L{PointCloud} with C{config.channels} features
    """
    _check_stage(cloud, config, params, prefix, ENCODE)
    k = config.kernel_size
    features = cloud.features
    for j in range(config.num_blocks):
        p = "%s.%d" % (prefix, j)
        grid = voxelize(cloud.withFeatures(features), config.voxel_resolution)
        values = conv3d(grid.values, params[p + '.voxel.kernel'], params[p + '.voxel.bias'],
                        stride=1, padding=k // 2)
        values = relu(normalize(values, params, p + '.voxel.bn', mode, 0, config))
        coarse = devoxelize(VoxelGrid(grid.resolution, values, grid.occupancy), cloud.coords)
        fine = shared_mlp(features, params, p + '.point', mode, config)
        features = add(coarse, fine)
    return cloud.withFeatures(features)


def pvdeconv_block(cloud, config, params, prefix, mode=TRAIN, seed=0):
    """
    Decoder stage: C{config.num_blocks} point-voxel deconvolutions.
    The coarse branch runs deconvolution, dropout, normalization and relu in that
    order; the fine branch is a shared transposed MLP. The point count never changes.
    @param seed : dropout seed; each block derives its own from it
    @rtype: L{PointCloud} with C{config.channels} features
    """
    _check_stage(cloud, config, params, prefix, DECODE)
    k = config.kernel_size
    features = cloud.features
    for j in range(config.num_blocks):
        p = "%s.%d" % (prefix, j)
        grid = voxelize(cloud.withFeatures(features), config.voxel_resolution)
        values = deconv3d(grid.values, params[p + '.voxel.kernel'], params[p + '.voxel.bias'],
                          stride=1, padding=k // 2)
        values = dropout(values, config.dropout_rate, mode, derive_seed(seed, p))
        values = relu(normalize(values, params, p + '.voxel.bn', mode, 0, config))
        coarse = devoxelize(VoxelGrid(grid.resolution, values, grid.occupancy), cloud.coords)
        fine = shared_mlp(features, params, p + '.point', mode, config)
        features = add(coarse, fine)
    return cloud.withFeatures(features)
