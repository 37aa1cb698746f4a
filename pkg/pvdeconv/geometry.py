#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Triangle meshes: reading, writing, uniform surface sampling and normalization
to the unit cube. Point clouds are stored in the "PVPC" file format::

    magic    4 bytes  b"PVPC"
    version  u32
    n        u32      point count
    c        u32      values per point
    data     n x c little-endian f32, row-major
"""
import io
import os
import struct
import logging
from gettext import gettext as _

import numpy as np

import pvdeconv
from .utils import Error, ContractError, derive_seed, empty, import_plugins, itersubclasses
from .config import KeyValueConfig, Field, FLOAT, FLOATS
from .pointvoxel import PointCloud
from .chamfer import chamfer_distance


logger = logging.getLogger(__name__)


CLOUD_MAGIC = b"PVPC"
CLOUD_VERSION = 1


class MeshError(Error):
    pass

class EmptyMeshError(MeshError):
    pass

class DegenerateInputError(MeshError):
    pass

class CloudFormatError(MeshError):
    pass


class MeshParseError(MeshError):
    """
    Exception raised while reading a mesh file, located by line (text formats)
    or byte offset (binary formats).
    """

    def __init__(self, path, message, line=None, offset=None):
        if line is not None:
            where = _("%s:%d") % (path, line)
        elif offset is not None:
            where = _("%s at byte %d") % (path, offset)
        else:
            where = path
        super(MeshParseError, self).__init__("%s: %s" % (where, message))
        self.path = path
        self.line = line
        self.offset = offset


class TriangleMesh(object):
    """
    Vertices (v x 3) and triangular faces (f x 3 vertex indices).
    Degenerate faces are kept; they simply have zero area.
    """

    def __init__(self, vertices, faces):
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError(_("Face index out of range (%d vertices)") % len(vertices))
        self.vertices = vertices
        self.faces = faces
        self._areas = None

    @property
    def areas(self):
        if self._areas is None:
            a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
            self._areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        return self._areas

    @property
    def total_area(self):
        return float(self.areas.sum())

    def withVertices(self, vertices):
        return TriangleMesh(vertices, self.faces)

    def __repr__(self):
        return "TriangleMesh(v=%d, f=%d)" % (len(self.vertices), len(self.faces))


class MeshReader(object):
    """
    Base class of mesh file readers. Plugins in the C{readers} package subclass it.
    """
    label = ''
    extensions = ()

    def read(self, path):
        """
        @rtype: L{TriangleMesh}
        @raise MeshParseError: on malformed content
        """
        raise NotImplementedError


def mesh_readers():
    """
    @rtype: dict of format name -> L{MeshReader} subclass
    """
    import_plugins(pvdeconv.readers_dirs, 'pvdeconv.readers')
    readers = {}
    for cls in itersubclasses(MeshReader):
        for ext in cls.extensions:
            readers[ext] = cls
    return readers


def fan_triangulate(polygon):
    """
    [a, b, c, d, ...] -> [(a, b, c), (a, c, d), ...]
    """
    return [(polygon[0], polygon[i], polygon[i + 1]) for i in range(1, len(polygon) - 1)]


def load_mesh(path, format=None):
    """
    @param format : 'obj', 'ply' or 'stl'; guessed from the extension by default
    @rtype: L{TriangleMesh}
    """
    if format is None:
        format = os.path.splitext(path)[1].lstrip('.').lower()
    readers = mesh_readers()
    if format not in readers:
        raise MeshError(_("Unknown mesh format '%s' for '%s'") % (format, path))
    logger.info(_("Load mesh from file '%s'") % path)
    mesh = readers[format]().read(path)
    if empty(mesh.faces):
        raise EmptyMeshError(_("Mesh '%s' has no faces") % path)
    logger.debug(_("%s: %d vertices, %d faces") % (path, len(mesh.vertices), len(mesh.faces)))
    return mesh


def save_obj(filename, mesh):
    logger.info(_("Save mesh to file '%s'") % filename)
    with io.open(filename, 'w', encoding='utf-8') as fd:
        for v in mesh.vertices:
            fd.write(u"v %r %r %r\n" % tuple(float(x) for x in v))
        for f in mesh.faces:
            fd.write(u"f %d %d %d\n" % tuple(int(i) + 1 for i in f))


#
#    Sampling
#


def sample_surface(mesh, n, seed):
    """
    Area-weighted face choice through a cumulative table and binary search, then
    a uniform point in each face from folded barycentric coordinates.
    @rtype: (n x 3 points, n face indices)
    """
    if n < 1:
        raise ContractError(_("Sample count must be at least 1, got %s") % n)
    areas = mesh.areas
    cumulative = np.cumsum(areas)
    if len(cumulative) == 0 or cumulative[-1] <= 0:
        raise ContractError(_("Cannot sample a mesh with zero surface area"))
    rng = np.random.default_rng(seed)
    picks = rng.random(n) * cumulative[-1]
    faces = np.minimum(np.searchsorted(cumulative, picks, side='right'), len(areas) - 1)
    uv = rng.random((n, 2))
    folded = uv.sum(axis=1) > 1
    uv[folded] = 1 - uv[folded]
    a, b, c = (mesh.vertices[mesh.faces[faces, i]] for i in range(3))
    points = a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)
    return points, faces


def sample_uniform(mesh, n, seed):
    """
    n points uniformly distributed over the surface, deterministic under ``seed``.
    @rtype: L{PointCloud}
    """
    points, _faces = sample_surface(mesh, n, seed)
    return PointCloud(points)


class NormalizationTransform(KeyValueConfig):
    """
    Uniform scale then translation: x' = x * scale + translation.
    Saved next to sampled clouds in the key-value grammar.
    """
    FIELDS = (
        Field('translation', (0.0, 0.0, 0.0), FLOATS, "added after scaling"),
        Field('scale', 1.0, FLOAT, "uniform scale factor, positive"),
    )

    def apply(self, points):
        return np.asarray(points) * self.scale + np.asarray(self.translation)

    def inverse(self, points):
        return (np.asarray(points) - np.asarray(self.translation)) / self.scale


def fit_normalization(points):
    """
    Transform placing the bounding box of ``points`` in [0, 1]^3 with its longest
    side exactly 1 and the shorter sides centered.
    @rtype: L{NormalizationTransform}
    """
    points = np.asarray(points, dtype=np.float64)
    lo = points.min(axis=0)
    extent = points.max(axis=0) - lo
    longest = extent.max()
    if not longest > 0:
        raise DegenerateInputError(_("Cannot normalize: all %d points coincide") % len(points))
    scale = 1.0 / longest
    translation = -lo * scale + (1 - extent * scale) / 2
    return NormalizationTransform(translation=tuple(float(t) for t in translation), scale=scale)


def normalize(obj, transform=None):
    """
    @type obj : L{TriangleMesh} or L{PointCloud}
    @param transform : apply this transform instead of fitting one to ``obj``
    @rtype: (normalized copy of obj, L{NormalizationTransform})
    """
    if isinstance(obj, TriangleMesh):
        if transform is None:
            transform = fit_normalization(obj.vertices)
        return obj.withVertices(transform.apply(obj.vertices)), transform
    if transform is None:
        transform = fit_normalization(obj.coords)
    return PointCloud(transform.apply(obj.coords)), transform


#
#    Point cloud files
#


def save_cloud(filename, points):
    """
    @type points : n x c array or L{PointCloud} (coordinates only)
    """
    if isinstance(points, PointCloud):
        points = points.coords
    points = np.asarray(points)
    if points.ndim != 2:
        raise CloudFormatError(_("Cloud must be n x c, got shape %s") % (points.shape,))
    logger.info(_("Save cloud to file '%s'") % filename)
    with open(filename, 'wb') as fd:
        fd.write(CLOUD_MAGIC)
        fd.write(struct.pack('<III', CLOUD_VERSION, points.shape[0], points.shape[1]))
        fd.write(np.ascontiguousarray(points, dtype='<f4').tobytes())


def load_cloud(filename):
    """
    @rtype: n x c float32 array
    """
    logger.info(_("Load cloud from file '%s'") % filename)
    with open(filename, 'rb') as fd:
        content = fd.read()
    if len(content) < 16 or content[:4] != CLOUD_MAGIC:
        raise CloudFormatError(_("'%s' is not a point cloud file") % filename)
    version, n, c = struct.unpack('<III', content[4:16])
    if version != CLOUD_VERSION:
        raise CloudFormatError(_("'%s': unsupported cloud version %d") % (filename, version))
    if len(content) != 16 + 4 * n * c:
        raise CloudFormatError(_("'%s': expected %d points of %d values, file has %d bytes") %
                               (filename, n, c, len(content)))
    return np.frombuffer(content[16:], dtype='<f4').reshape(n, c).astype(np.float32)


def load_points(filename):
    """
    Coordinates of a cloud file as a L{PointCloud}.
    """
    points = load_cloud(filename)
    if points.shape[1] < 3:
        raise CloudFormatError(_("'%s' holds %d values per point, need 3") % (filename, points.shape[1]))
    return PointCloud(points[:, :3].astype(np.float64))


def save_xyz(filename, points):
    if isinstance(points, PointCloud):
        points = points.coords
    logger.info(_("Save cloud to file '%s'") % filename)
    np.savetxt(filename, np.asarray(points), fmt='%.9g')


def sampling_noise_floor(mesh, n, seed, search='kdtree'):
    """
    Normalized Chamfer distance between two independent samplings of the same
    surface: the smallest reconstruction error a perfect model could show.
    """
    a = sample_uniform(mesh, n, derive_seed(seed, 'floor', 0))
    b = sample_uniform(mesh, n, derive_seed(seed, 'floor', 1))
    return chamfer_distance(a, b, search).normalized


#
#    Primitives
#


def _cube():
    vertices = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    faces = [t for q in quads for t in fan_triangulate(q)]
    return TriangleMesh(vertices, faces)


def _tetrahedron():
    vertices = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    faces = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    return TriangleMesh(vertices, faces)


def _octahedron():
    vertices = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    faces = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
             (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return TriangleMesh(vertices, faces)


def _cylinder(segments=32):
    angles = 2 * np.pi * np.arange(segments) / segments
    ring = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    bottom = np.hstack([ring, np.zeros((segments, 1))])
    top = np.hstack([ring, np.full((segments, 1), 2.0)])
    vertices = np.vstack([bottom, top, [(0, 0, 0), (0, 0, 2)]])
    faces = []
    cb, ct = 2 * segments, 2 * segments + 1
    for i in range(segments):
        j = (i + 1) % segments
        faces += [(i, j, segments + j), (i, segments + j, segments + i),
                  (cb, j, i), (ct, segments + i, segments + j)]
    return TriangleMesh(vertices, faces)


def _sphere(rings=16, segments=32):
    vertices = [(0, 0, 1)]
    for i in range(1, rings):
        theta = np.pi * i / rings
        for j in range(segments):
            phi = 2 * np.pi * j / segments
            vertices.append((np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)))
    vertices.append((0, 0, -1))
    south = len(vertices) - 1

    def at(i, j):
        return 1 + (i - 1) * segments + j % segments

    faces = []
    for j in range(segments):
        faces.append((0, at(1, j), at(1, j + 1)))
        faces.append((south, at(rings - 1, j + 1), at(rings - 1, j)))
    for i in range(1, rings - 1):
        for j in range(segments):
            faces += fan_triangulate([at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)])
    return TriangleMesh(vertices, faces)


PRIMITIVES = {
    'cube': _cube,
    'tetrahedron': _tetrahedron,
    'octahedron': _octahedron,
    'cylinder': _cylinder,
    'sphere': _sphere,
}


def primitive(name):
    """
    @param name : one of C{PRIMITIVES}
    @rtype: L{TriangleMesh}
    """
    if name not in PRIMITIVES:
        raise MeshError(_("Unknown primitive '%s' (known: %s)") % (name, ", ".join(sorted(PRIMITIVES))))
    return PRIMITIVES[name]()
