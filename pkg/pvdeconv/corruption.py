#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Virtual scans: scan-like artifacts applied to clean shapes.

The pair pipeline is smooth (mesh) -> sample -> gaussian noise -> holes.
Every step takes its own seed, derived from the pair seed with
L{utils.derive_seed}, so pairs can be regenerated independently and in any order.
"""
import logging
from gettext import gettext as _

import numpy as np
from scipy import sparse

from .utils import Error, ConfigurationError, derive_seed
from .config import KeyValueConfig, Field, INT, FLOAT
from .chamfer import pair_distances
from .geometry import TriangleMesh, normalize, sample_uniform
from .pointvoxel import PointCloud


logger = logging.getLogger(__name__)


class CorruptionError(Error):
    pass


class CorruptionSpec(KeyValueConfig):
    """
    Artifact strengths, in normalized unit-cube units.
    """
    FIELDS = (
        Field('gaussian_sigma', 0.0, FLOAT, "per-axis noise standard deviation"),
        Field('hole_count', 0, INT, "holes punched per cloud"),
        Field('hole_radius', 0.05, FLOAT, "hole radius, in [0, 0.5)"),
        Field('smoothing_lambda', 0.5, FLOAT, "Laplacian step, in (0, 1]"),
        Field('smoothing_iterations', 0, INT, "Laplacian iterations on the mesh"),
        Field('seed', 0, INT, "pair seed"),
    )
    PRESETS = {
        'clean': {},
        'shapenet': {'gaussian_sigma': 0.03},
        'scan': {'gaussian_sigma': 0.01, 'hole_count': 4, 'hole_radius': 0.05,
                 'smoothing_lambda': 0.5, 'smoothing_iterations': 10},
    }

    def validate(self):
        if self.gaussian_sigma < 0:
            raise ConfigurationError(_("gaussian_sigma must be >= 0, got %s") % self.gaussian_sigma)
        if self.hole_count < 0:
            raise ConfigurationError(_("hole_count must be >= 0, got %s") % self.hole_count)
        if not 0 <= self.hole_radius < 0.5:
            raise ConfigurationError(_("hole_radius must be in [0, 0.5), got %s") % self.hole_radius)
        if not 0 < self.smoothing_lambda <= 1:
            raise ConfigurationError(_("smoothing_lambda must be in (0, 1], got %s") % self.smoothing_lambda)
        if self.smoothing_iterations < 0:
            raise ConfigurationError(_("smoothing_iterations must be >= 0, got %s") % self.smoothing_iterations)
        return self


def add_gaussian_noise(cloud, sigma, seed):
    """
    Perturb every coordinate by N(0, sigma^2). The result is not re-normalized.
    """
    if sigma < 0:
        raise ConfigurationError(_("Noise sigma must be >= 0, got %s") % sigma)
    if sigma == 0:
        return PointCloud(cloud.coords)
    rng = np.random.default_rng(seed)
    return PointCloud(cloud.coords + rng.normal(0.0, sigma, cloud.coords.shape))


def hole_mask(coords, centers, radius):
    """
    @rtype: boolean array, True for points within ``radius`` of any center
    """
    removed = np.zeros(len(coords), dtype=bool)
    for center in np.asarray(centers).reshape(-1, 3):
        removed |= pair_distances(coords, center[None])[:, 0] <= radius * radius
    return removed


def punch_holes(cloud, count, radius, seed, centers=None):
    """
    Remove the points within ``radius`` of ``count`` randomly chosen cloud points,
    then refill to the original size by resampling survivors with gaussian jitter
    of sigma radius / 10. Survivors come first, in their original order.
    @param centers : explicit hole centers, replacing the random choice
    """
    if count < 0:
        raise ConfigurationError(_("Hole count must be >= 0, got %s") % count)
    if not 0 <= radius < 0.5:
        raise ConfigurationError(_("Hole radius must be in [0, 0.5), got %s") % radius)
    rng = np.random.default_rng(seed)
    n = cloud.n
    if centers is None:
        if count == 0:
            return PointCloud(cloud.coords)
        centers = cloud.coords[rng.choice(n, count, replace=count > n)]
    removed = hole_mask(cloud.coords, centers, radius)
    survivors = cloud.coords[~removed]
    if len(survivors) == 0:
        raise CorruptionError(_("Holes of radius %s removed all %d points") % (radius, n))
    missing = n - len(survivors)
    logger.debug(_("Holes removed %d of %d points") % (missing, n))
    if missing == 0:
        return PointCloud(survivors)
    picks = rng.integers(0, len(survivors), missing)
    refill = survivors[picks] + rng.normal(0.0, radius / 10.0, (missing, 3))
    return PointCloud(np.vstack([survivors, refill]))


def adjacency(mesh):
    """
    Symmetric 0/1 vertex adjacency from the face edges.
    @rtype: scipy.sparse CSR matrix, v x v
    """
    f = mesh.faces
    rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2], f[:, 1], f[:, 2], f[:, 0]])
    cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0], f[:, 0], f[:, 1], f[:, 2]])
    # degenerate faces would add self loops
    keep = rows != cols
    rows, cols = rows[keep], cols[keep]
    v = len(mesh.vertices)
    matrix = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(v, v)).tocsr()
    matrix.sum_duplicates()
    matrix.data[:] = 1.0
    return matrix


def smooth_mesh(mesh, lam, iterations):
    """
    Laplacian smoothing: every vertex moves by ``lam`` towards the mean of its
    1-ring neighbours, ``iterations`` times. Isolated vertices stay in place;
    faces are unchanged.
    @rtype: L{TriangleMesh}
    """
    if not 0 < lam <= 1:
        raise ConfigurationError(_("Smoothing lambda must be in (0, 1], got %s") % lam)
    if iterations < 0:
        raise ConfigurationError(_("Smoothing iterations must be >= 0, got %s") % iterations)
    if iterations == 0:
        return TriangleMesh(mesh.vertices.copy(), mesh.faces)
    matrix = adjacency(mesh)
    degree = np.asarray(matrix.sum(axis=1)).ravel()
    connected = degree > 0
    vertices = mesh.vertices.copy()
    for _i in range(iterations):
        mean = matrix.dot(vertices)[connected] / degree[connected, None]
        vertices[connected] += lam * (mean - vertices[connected])
    return TriangleMesh(vertices, mesh.faces)


class PairSample(object):
    """
    Corrupted input cloud, clean ground-truth cloud and where they come from.
    """

    def __init__(self, input, target, mesh_id, spec, source=None, scan=None, transform=None):
        self.input = input
        self.target = target
        self.mesh_id = mesh_id
        #: L{CorruptionSpec}, its seed included
        self.spec = spec
        self.source = source
        self.scan = scan
        self.transform = transform

    def __repr__(self):
        return "PairSample(%s, n=%d, seed=%d)" % (self.mesh_id, self.target.n, self.spec.seed)


def corrupt_cloud(cloud, spec):
    """
    Point-level steps of the pipeline: noise, then holes.
    """
    spec.validate()
    noisy = add_gaussian_noise(cloud, spec.gaussian_sigma, derive_seed(spec.seed, 'noise'))
    return punch_holes(noisy, spec.hole_count, spec.hole_radius, derive_seed(spec.seed, 'holes'))


def make_pair(mesh, spec, n, mesh_id='', source=None, scan_mesh=None, scan=None):
    """
    Build one training pair from a CAD mesh.

    The mesh is normalized to the unit cube and sampled for the target. The input
    is sampled from the scan mesh when one is given (normalized with the CAD
    transform so both share a frame), otherwise from the smoothed CAD mesh; it then
    gets noise and holes. Both samplings use the same seed, so without smoothing,
    scan and point-level corruption the input equals the target.

    @type mesh : L{TriangleMesh}
    @type scan_mesh : L{TriangleMesh} or None
    @param source, scan : file names recorded as provenance
    @rtype: L{PairSample}
    """
    spec.validate()
    clean, transform = normalize(mesh)
    surface_seed = derive_seed(spec.seed, 'surface')
    target = sample_uniform(clean, n, surface_seed)
    if scan_mesh is not None:
        scanned, _transform = normalize(scan_mesh, transform)
    else:
        scanned = smooth_mesh(clean, spec.smoothing_lambda, spec.smoothing_iterations)
    if scan_mesh is None and spec.smoothing_iterations == 0:
        raw = target
    else:
        raw = sample_uniform(scanned, n, surface_seed)
    return PairSample(corrupt_cloud(raw, spec), target, mesh_id, spec, source, scan, transform)
