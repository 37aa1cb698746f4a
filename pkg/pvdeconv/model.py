#!/usr/bin/python
# -*- coding: utf8 -*-
"""
The point-cloud autoencoder.

Encoder: PVConv stages on the xyz coordinates, a widening shared layer max-pooled
into a global vector, and a cloud MLP on the last stage. The embedding is the
global vector plus per-point features (first-stage features and both cloud MLP
outputs); the default configuration gives 1024 + 64 + 256 + 128 = 1472.

Decoder: every point gets the global vector concatenated to its own features,
goes through PVDeConv stages anchored at the input coordinates, a width layer, a
fine MLP, and an affine head giving absolute output coordinates.
"""
import logging
from collections import OrderedDict
from gettext import gettext as _

import numpy as np

from .utils import ConfigurationError, ContractError, derive_seed
from .config import KeyValueConfig, Field, INT, FLOAT, WORD, INTS, TRIPLETS
from .tensor import EVAL, Tensor, DimensionError, concat, linear_pointwise, max_rows, tile_rows
from .pointvoxel import (ENCODE, DECODE, ParameterSpec, PVBlockConfig, PointCloud, block_specs,
                         linear_specs, norm_specs, pvconv_block, pvdeconv_block, shared_mlp)
from . import checkpoint


logger = logging.getLogger(__name__)


DEFAULT_ENCODER = ((64, 1, 32), (64, 2, 16), (128, 1, 16))
DEFAULT_DECODER = ((128, 1, 16), (64, 2, 16), (64, 1, 32))

TOY = {
    'encoder_coarse': ((8, 1, 8), (8, 1, 4), (16, 1, 4)),
    'encoder_global': 32,
    'encoder_cloud_mlp': (16, 8),
    'decoder_coarse': ((16, 1, 4), (8, 1, 4), (8, 1, 8)),
    'decoder_width': 16,
    'decoder_fine_mlp': (16, 8),
    'n_points': 512,
    'precision': 'f64',
}

PRECISIONS = {'f32': np.float32, 'f64': np.float64}

CONFIG_KEY = 'meta.model_config'


class ModelConfig(KeyValueConfig):
    """
    Architecture: (channels, blocks, resolution) triplets per stage and layer widths.
    """
    FIELDS = (
        Field('encoder_coarse', DEFAULT_ENCODER, TRIPLETS, "encoder PVConv stages"),
        Field('encoder_global', 1024, INT, "width of the max-pooled global feature"),
        Field('encoder_cloud_mlp', (256, 128), INTS, "cloud MLP widths"),
        Field('decoder_coarse', DEFAULT_DECODER, TRIPLETS, "decoder PVDeConv stages"),
        Field('decoder_width', 128, INT, "width layer after the decoder stages"),
        Field('decoder_fine_mlp', (256, 128), INTS, "fine MLP widths before the head"),
        Field('n_points', 10000, INT, "points per cloud"),
        Field('kernel_size', 3, INT, "voxel (de)convolution kernel size, odd"),
        Field('dropout_rate', 0.1, FLOAT, "decoder dropout rate"),
        Field('bn_momentum', 0.1, FLOAT, "running statistics momentum"),
        Field('bn_eps', 1e-5, FLOAT, "normalization epsilon"),
        Field('precision', 'f32', WORD, "f32 or f64"),
    )
    PRESETS = {
        'cc3d': {},
        'shapenet': {'n_points': 2500},
        'toy': TOY,
    }

    def validate(self):
        for name in ('encoder_coarse', 'decoder_coarse'):
            if len(getattr(self, name)) == 0:
                raise ConfigurationError(_("'%s' needs at least one stage") % name)
        for name in ('encoder_cloud_mlp', 'decoder_fine_mlp'):
            if any(w <= 0 for w in getattr(self, name)):
                raise ConfigurationError(_("'%s' widths must be positive") % name)
        if self.encoder_global <= 0 or self.decoder_width <= 0:
            raise ConfigurationError(_("Layer widths must be positive"))
        if self.n_points < 1:
            raise ConfigurationError(_("n_points must be positive, got %s") % self.n_points)
        if self.precision not in PRECISIONS:
            raise ConfigurationError(_("Unknown precision '%s' (f32 or f64)") % self.precision)
        for stage in self.stages(ENCODE) + self.stages(DECODE):
            stage.validate()
        return self

    @property
    def dtype(self):
        return PRECISIONS[self.precision]

    def stages(self, direction):
        triplets = self.encoder_coarse if direction == ENCODE else self.decoder_coarse
        return [PVBlockConfig(c, b, r, kernel_size=self.kernel_size,
                              dropout_rate=self.dropout_rate if direction == DECODE else 0.0,
                              direction=direction, bn_momentum=self.bn_momentum, bn_eps=self.bn_eps)
                for c, b, r in triplets]

    @property
    def per_point_dim(self):
        return self.encoder_coarse[0][0] + sum(self.encoder_cloud_mlp)

    @property
    def embedding_dim(self):
        return self.encoder_global + self.per_point_dim

    def parameterSpecs(self):
        """
        @rtype: list of L{ParameterSpec}, in a fixed order
        """
        specs = []
        cin = 3
        for i, stage in enumerate(self.stages(ENCODE)):
            specs += block_specs("enc.block%d" % i, cin, stage)
            cin = stage.channels
        last = cin
        specs += linear_specs("enc.global", last, self.encoder_global)
        specs += norm_specs("enc.global.bn", self.encoder_global)
        cin = last
        for j, width in enumerate(self.encoder_cloud_mlp):
            specs += linear_specs("enc.cloud.%d" % j, cin, width) + norm_specs("enc.cloud.%d.bn" % j, width)
            cin = width
        cin = self.embedding_dim
        for i, stage in enumerate(self.stages(DECODE)):
            specs += block_specs("dec.block%d" % i, cin, stage)
            cin = stage.channels
        specs += linear_specs("dec.width", cin, self.decoder_width)
        specs += norm_specs("dec.width.bn", self.decoder_width)
        cin = self.decoder_width
        for j, width in enumerate(self.decoder_fine_mlp):
            specs += linear_specs("dec.fine.%d" % j, cin, width) + norm_specs("dec.fine.%d.bn" % j, width)
            cin = width
        specs += linear_specs("dec.head", cin, 3)
        return specs


class Parameters(object):
    """
    Named learnable tensors and normalization buffers of one model.
    """

    def __init__(self, specs, tensors):
        self.specs = OrderedDict((s.name, s) for s in specs)
        self.tensors = tensors

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def __iter__(self):
        return iter(self.tensors)

    def __len__(self):
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def learnable(self):
        """
        @rtype: list of (name, L{Tensor})
        """
        return [(n, t) for n, t in self.tensors.items() if self.specs[n].learnable]

    def count(self):
        return int(sum(t.size for _n, t in self.learnable()))

    def zeroGrad(self):
        for t in self.tensors.values():
            t.zeroGrad()

    def arrays(self):
        return OrderedDict((n, t.data) for n, t in self.tensors.items())

    def assign(self, arrays):
        """
        Copy values from a name -> array mapping; every parameter must be present.
        """
        for name, t in self.tensors.items():
            if name not in arrays:
                raise checkpoint.CheckpointError(_("Parameter '%s' missing from checkpoint") % name)
            value = np.asarray(arrays[name])
            if value.shape != t.shape:
                raise DimensionError(name, 'shape', t.shape, value.shape)
            t.data[...] = value
        return self


def init_params(config, seed):
    """
    Glorot-uniform kernels and weights, zero biases and betas, unit gammas and
    running variances. Each tensor draws from its own seed, derived from ``seed``
    and its name.
    @rtype: L{Parameters}
    """
    config.validate()
    dtype = config.dtype
    specs = config.parameterSpecs()
    tensors = OrderedDict()
    for spec in specs:
        if spec.init == ParameterSpec.GLOROT:
            limit = np.sqrt(6.0 / (spec.fan_in + spec.fan_out))
            rng = np.random.default_rng(derive_seed(seed, spec.name))
            data = rng.uniform(-limit, limit, spec.shape)
        elif spec.init == ParameterSpec.ONES:
            data = np.ones(spec.shape)
        else:
            data = np.zeros(spec.shape)
        tensors[spec.name] = Tensor(data, requires_grad=spec.learnable, name=spec.name, dtype=dtype)
    params = Parameters(specs, tensors)
    logger.debug(_("Initialized %d parameters in %d tensors") % (params.count(), len(params)))
    return params


class Embedding(object):

    def __init__(self, global_feature, per_point):
        #: L{Tensor}, encoder_global values
        self.global_feature = global_feature
        #: L{Tensor}, n x per-point channels
        self.per_point = per_point

    @property
    def dim(self):
        return self.global_feature.shape[0] + self.per_point.shape[1]

    @property
    def n(self):
        return self.per_point.shape[0]


def _check_count(config, n, what):
    if n != config.n_points:
        raise ContractError(_("%s has %d points, the model expects %d") % (what, n, config.n_points))


def encode(cloud, config, params, mode=EVAL):
    """
    @type cloud : L{PointCloud} normalized to the unit cube
    @rtype: L{Embedding}
    """
    _check_count(config, cloud.n, _("Input cloud"))
    features = Tensor(cloud.coords, dtype=config.dtype)
    current = cloud.withFeatures(features)
    first = None
    for i, stage in enumerate(config.stages(ENCODE)):
        current = pvconv_block(current, stage, params, "enc.block%d" % i, mode)
        if first is None:
            first = current.features
    options = config.stages(ENCODE)[-1]
    pooled = max_rows(shared_mlp(current.features, params, "enc.global", mode, options))
    per_point = [first]
    x = current.features
    for j in range(len(config.encoder_cloud_mlp)):
        x = shared_mlp(x, params, "enc.cloud.%d" % j, mode, options)
        per_point.append(x)
    return Embedding(pooled, concat(per_point, axis=1))


def decode_tensor(embedding, anchor_coords, config, params, mode=EVAL, seed=0):
    """
    Decoder output as an n x 3 L{Tensor}.
    @param seed : dropout seed, used in train mode only
    """
    anchors = np.asarray(anchor_coords)
    if len(anchors) != embedding.n:
        raise ContractError(_("Decoder got %d anchors for %d embedded points") % (len(anchors), embedding.n))
    n = embedding.n
    x = concat([tile_rows(embedding.global_feature, n), embedding.per_point], axis=1)
    current = PointCloud(anchors, x)
    for i, stage in enumerate(config.stages(DECODE)):
        current = pvdeconv_block(current, stage, params, "dec.block%d" % i, mode, derive_seed(seed, 'dec', i))
    options = config.stages(DECODE)[-1]
    x = shared_mlp(current.features, params, "dec.width", mode, options)
    for j in range(len(config.decoder_fine_mlp)):
        x = shared_mlp(x, params, "dec.fine.%d" % j, mode, options)
    return linear_pointwise(x, params["dec.head.weight"], params["dec.head.bias"])


def decode(embedding, anchor_coords, config, params, mode=EVAL, seed=0):
    """
    @rtype: L{PointCloud} whose coordinates are the predicted points; its
        features hold the same values as a L{Tensor} connected to the graph
    """
    out = decode_tensor(embedding, anchor_coords, config, params, mode, seed)
    return PointCloud(out.data, out)


class Autoencoder(object):
    """
    A configuration with its parameters.
    """

    def __init__(self, config, params=None, seed=0):
        self.config = config.validate()
        self.params = params if params is not None else init_params(config, seed)

    def encode(self, cloud, mode=EVAL):
        return encode(cloud, self.config, self.params, mode)

    def forward(self, cloud, mode=EVAL, seed=0):
        """
        @rtype: n x 3 L{Tensor}
        """
        embedding = self.encode(cloud, mode)
        return decode_tensor(embedding, cloud.coords, self.config, self.params, mode, seed)

    def reconstruct(self, cloud):
        out = self.forward(cloud, EVAL)
        return PointCloud(out.data.astype(np.float64))

    def checkpointArrays(self):
        arrays = OrderedDict()
        arrays[CONFIG_KEY] = checkpoint.encode_text(self.config.dumps())
        arrays.update(self.params.arrays())
        return arrays

    def save(self, filename):
        checkpoint.save(filename, self.checkpointArrays())

    @classmethod
    def fromArrays(cls, arrays):
        if CONFIG_KEY not in arrays:
            raise checkpoint.CheckpointError(_("Checkpoint holds no model configuration"))
        config = ModelConfig().loads(checkpoint.decode_text(arrays[CONFIG_KEY]))
        model = cls(config)
        model.params.assign(arrays)
        return model

    @classmethod
    def load(cls, filename):
        return cls.fromArrays(checkpoint.load(filename))
