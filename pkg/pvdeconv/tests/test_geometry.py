#!/usr/bin/python
# -*- coding: utf8 -*-
import os
import struct
import shutil
import unittest
import tempfile

import numpy as np
from scipy import stats

from pvdeconv.utils import ContractError
from pvdeconv.pointvoxel import PointCloud
from pvdeconv.geometry import (TriangleMesh, MeshError, MeshParseError, EmptyMeshError, DegenerateInputError,
                               CloudFormatError, NormalizationTransform, PRIMITIVES, primitive, load_mesh,
                               save_obj, sample_surface, sample_uniform, fit_normalization, normalize,
                               save_cloud, load_cloud, load_points, save_xyz, sampling_noise_floor,
                               mesh_readers, fan_triangulate)


CUBE_OBJ = u"""# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6/1 5/1
f 2//1 3//1 7//1 6//1
f 3/1/1 4/1/1 8/1/1 7/1/1
f -8 -4 -1 -5
"""

PLY_HEADER = u"""ply
format %s 1.0
comment two triangles
element vertex 4
property float x
property float y
property float z
property uchar red
element face 2
property list uchar int vertex_indices
end_header
"""

SQUARE = [(0.0, 0.0, 0.0), (2.0, 0.0, 0.0), (2.0, 2.0, 0.0), (0.0, 2.0, 0.0)]


class TestReaders(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def write(self, name, content):
        path = os.path.join(self.tmp, name)
        mode = 'wb' if isinstance(content, bytes) else 'w'
        with open(path, mode) as fd:
            fd.write(content)
        return path

    def test_registry(self):
        self.assertEqual(sorted(mesh_readers()), ['obj', 'ply', 'stl'])
        self.assertRaises(MeshError, load_mesh, self.write('a.off', u"OFF\n"))

    def test_obj(self):
        mesh = load_mesh(self.write('cube.obj', CUBE_OBJ))
        self.assertEqual(mesh.vertices.shape, (8, 3))
        self.assertEqual(mesh.faces.shape, (12, 3))
        self.assertAlmostEqual(mesh.total_area, 6.0)

    def test_obj_errors(self):
        try:
            load_mesh(self.write('bad.obj', u"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"))
        except MeshParseError as e:
            self.assertEqual(e.line, 4)
            self.assertTrue(e.path.endswith('bad.obj'))
        else:
            self.fail("MeshParseError not raised")
        self.assertRaises(MeshParseError, load_mesh, self.write('v.obj', u"v 0 zero 0\n"))
        self.assertRaises(EmptyMeshError, load_mesh, self.write('empty.obj', u"v 0 0 0\n"))

    def test_ply_ascii(self):
        body = u"".join(u"%g %g %g 255\n" % v for v in SQUARE) + u"3 0 1 2\n3 0 2 3\n"
        mesh = load_mesh(self.write('square.ply', PLY_HEADER % 'ascii' + body))
        np.testing.assert_allclose(mesh.vertices, SQUARE)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])
        self.assertAlmostEqual(mesh.total_area, 4.0)

    def test_ply_ascii_errors(self):
        body = u"".join(u"%g %g %g 255\n" % v for v in SQUARE[:3]) + u"oops\n3 0 1 2\n"
        try:
            load_mesh(self.write('bad.ply', PLY_HEADER % 'ascii' + body))
        except MeshParseError as e:
            self.assertEqual(e.line, 15)
        else:
            self.fail("MeshParseError not raised")

    def test_ply_binary(self):
        body = b"".join(struct.pack('<fffB', *(v + (255,))) for v in SQUARE)
        body += struct.pack('<Biii', 3, 0, 1, 2) + struct.pack('<Biiii', 4, 0, 1, 2, 3)
        mesh = load_mesh(self.write('square.ply', (PLY_HEADER % 'binary_little_endian').encode('ascii') + body))
        np.testing.assert_allclose(mesh.vertices, SQUARE)
        self.assertEqual(len(mesh.faces), 3)
        truncated = (PLY_HEADER % 'binary_little_endian').encode('ascii') + body[:-6]
        self.assertRaises(MeshParseError, load_mesh, self.write('cut.ply', truncated))

    def test_stl(self):
        triangles = [(SQUARE[0], SQUARE[1], SQUARE[2]), (SQUARE[0], SQUARE[2], SQUARE[3])]
        content = b"\0" * 80 + struct.pack('<I', 2)
        for t in triangles:
            content += struct.pack('<3f', 0, 0, 1) + b"".join(struct.pack('<3f', *v) for v in t) + b"\0\0"
        mesh = load_mesh(self.write('square.stl', content))
        self.assertEqual(len(mesh.vertices), 4)
        self.assertEqual(len(mesh.faces), 2)
        self.assertAlmostEqual(mesh.total_area, 4.0)
        try:
            load_mesh(self.write('cut.stl', content[:-10]))
        except MeshParseError as e:
            self.assertEqual(e.offset, len(content) - 10)
        else:
            self.fail("MeshParseError not raised")

    def test_save_obj(self):
        path = os.path.join(self.tmp, 'octahedron.obj')
        mesh = primitive('octahedron')
        save_obj(path, mesh)
        loaded = load_mesh(path)
        np.testing.assert_array_equal(loaded.vertices, mesh.vertices)
        np.testing.assert_array_equal(loaded.faces, mesh.faces)


class TestMesh(unittest.TestCase):

    def test_contract(self):
        self.assertRaises(MeshError, TriangleMesh, SQUARE, [(0, 1, 4)])
        self.assertEqual(fan_triangulate([0, 1, 2, 3, 4]), [(0, 1, 2), (0, 2, 3), (0, 3, 4)])

    def test_primitives(self):
        self.assertAlmostEqual(primitive('cube').total_area, 6.0)
        self.assertAlmostEqual(primitive('tetrahedron').total_area, 4 * np.sqrt(3) * 2)
        self.assertAlmostEqual(primitive('octahedron').total_area, 4 * np.sqrt(3))
        sphere = primitive('sphere')
        self.assertTrue(0.95 * 4 * np.pi < sphere.total_area < 4 * np.pi)
        self.assertTrue(np.all(sphere.areas > 0))
        cylinder = primitive('cylinder')
        self.assertTrue(0.95 * 6 * np.pi < cylinder.total_area < 6 * np.pi)
        self.assertEqual(sorted(PRIMITIVES), ['cube', 'cylinder', 'octahedron', 'sphere', 'tetrahedron'])
        self.assertRaises(MeshError, primitive, 'torus')


class TestSampling(unittest.TestCase):

    def test_deterministic(self):
        mesh = primitive('cube')
        a = sample_uniform(mesh, 500, 3)
        b = sample_uniform(mesh, 500, 3)
        np.testing.assert_array_equal(a.coords, b.coords)
        self.assertFalse(np.array_equal(a.coords, sample_uniform(mesh, 500, 4).coords))

    def test_points_on_surface(self):
        points, faces = sample_surface(primitive('tetrahedron'), 1000, 0)
        mesh = primitive('tetrahedron')
        a, b, c = (mesh.vertices[mesh.faces[faces, i]] for i in range(3))
        normal = np.cross(b - a, c - a)
        offsets = np.einsum('ij,ij->i', points - a, normal)
        np.testing.assert_allclose(offsets, 0, atol=1e-9)

    def test_area_weighted(self):
        # unit square split into triangles of area 0.5, 0.25 and 0.25, plus one zero-area face
        mesh = TriangleMesh([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0.5, 1, 0)],
                            [(0, 1, 4), (0, 4, 3), (1, 2, 4), (0, 0, 1)])
        _points, faces = sample_surface(mesh, 20000, 1)
        counts = np.bincount(faces, minlength=4)
        self.assertEqual(counts[3], 0)
        expected = 20000 * mesh.areas[:3] / mesh.total_area
        _stat, p = stats.chisquare(counts[:3], expected)
        self.assertTrue(p > 1e-4, p)

    def test_area_split(self):
        mesh = TriangleMesh([(0, 0, 0), (2, 0, 0), (0, 1, 0), (0, 0, 1), (3, 0, 1), (0, 2, 1)],
                            [(0, 1, 2), (3, 4, 5)])
        np.testing.assert_allclose(mesh.areas, [1.0, 3.0])
        _points, faces = sample_surface(mesh, 40000, 6)
        self.assertTrue(abs(int((faces == 1).sum()) - 30000) <= 500)

    def test_uniform_within_face(self):
        mesh = TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])
        points = sample_uniform(mesh, 20000, 5).coords
        self.assertTrue(np.all(points[:, 0] + points[:, 1] <= 1 + 1e-12))
        # u = x + y on a uniform triangle has density 2u
        _stat, p = stats.kstest((points[:, 0] + points[:, 1]) ** 2, 'uniform')
        self.assertTrue(p > 1e-4, p)

    def test_contract(self):
        self.assertRaises(ContractError, sample_surface, primitive('cube'), 0, 0)
        self.assertRaises(ContractError, sample_surface, TriangleMesh([(0, 0, 0), (1, 0, 0)], [(0, 1, 1)]), 5, 0)

    def test_noise_floor(self):
        mesh = normalize(primitive('sphere'))[0]
        floor = sampling_noise_floor(mesh, 400, 0)
        self.assertTrue(floor > 0)
        self.assertEqual(floor, sampling_noise_floor(mesh, 400, 0))
        self.assertTrue(sampling_noise_floor(mesh, 1600, 0) < floor)


class TestNormalization(unittest.TestCase):

    def test_fit(self):
        points = np.asarray([(1.0, 2.0, 3.0), (5.0, 4.0, 3.5)])
        t = fit_normalization(points)
        self.assertEqual(t.scale, 0.25)
        out = t.apply(points)
        np.testing.assert_allclose(out.min(axis=0), [0.0, 0.25, 0.4375])
        np.testing.assert_allclose(out.max(axis=0), [1.0, 0.75, 0.5625])
        np.testing.assert_allclose(t.inverse(out), points)
        self.assertRaises(DegenerateInputError, fit_normalization, np.ones((4, 3)))

    def test_normalize_mesh_and_cloud(self):
        mesh, t = normalize(primitive('cylinder'))
        self.assertAlmostEqual(float(mesh.vertices.max() - mesh.vertices.min()), 1.0)
        cloud, same = normalize(PointCloud(primitive('cylinder').vertices), t)
        self.assertTrue(same is t)
        np.testing.assert_allclose(cloud.coords, mesh.vertices)

    def test_idempotent(self):
        mesh, _t = normalize(primitive('sphere'))
        again, t = normalize(mesh)
        self.assertTrue(abs(t.scale - 1.0) <= 1e-12)
        np.testing.assert_allclose(t.translation, 0.0, rtol=0, atol=1e-12)
        np.testing.assert_allclose(again.vertices, mesh.vertices, rtol=0, atol=1e-12)

    def test_sidecar(self):
        t = NormalizationTransform(translation=(0.1, 0.2, 1.0 / 3), scale=0.125)
        self.assertEqual(NormalizationTransform().loads(t.dumps()), t)


class TestCloudFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.points = np.random.default_rng(0).random((100, 3))

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_layout(self):
        path = os.path.join(self.tmp, 'a.pvpc')
        save_cloud(path, PointCloud(self.points))
        with open(path, 'rb') as fd:
            content = fd.read()
        self.assertEqual(content[:4], b"PVPC")
        self.assertEqual(struct.unpack('<III', content[4:16]), (1, 100, 3))
        self.assertEqual(len(content), 16 + 100 * 3 * 4)
        loaded = load_cloud(path)
        self.assertEqual(loaded.dtype, np.float32)
        np.testing.assert_array_equal(loaded, self.points.astype(np.float32))
        self.assertEqual(load_points(path).n, 100)

    def test_errors(self):
        path = os.path.join(self.tmp, 'a.pvpc')
        save_cloud(path, self.points)
        with open(path, 'rb') as fd:
            content = fd.read()
        for name, data in (('magic', b"XXXX" + content[4:]), ('cut', content[:-4]),
                           ('version', content[:4] + struct.pack('<I', 9) + content[8:])):
            bad = os.path.join(self.tmp, name + '.pvpc')
            with open(bad, 'wb') as fd:
                fd.write(data)
            self.assertRaises(CloudFormatError, load_cloud, bad)
        flat = os.path.join(self.tmp, 'flat.pvpc')
        save_cloud(flat, self.points[:, :2])
        self.assertRaises(CloudFormatError, load_points, flat)

    def test_xyz(self):
        path = os.path.join(self.tmp, 'a.xyz')
        save_xyz(path, PointCloud(self.points))
        np.testing.assert_allclose(np.loadtxt(path), self.points, rtol=1e-8)


if __name__ == '__main__':
    unittest.main()
