#!/usr/bin/python
# -*- coding: utf8 -*-
import unittest

import numpy as np
from scipy import stats

from pvdeconv.utils import ConfigurationError
from pvdeconv.pointvoxel import PointCloud
from pvdeconv.chamfer import chamfer_distance
from pvdeconv.geometry import TriangleMesh, normalize, primitive
from pvdeconv.corruption import (CorruptionSpec, CorruptionError, add_gaussian_noise, hole_mask, punch_holes,
                                 adjacency, smooth_mesh, corrupt_cloud, make_pair)


class TestNoise(unittest.TestCase):

    def setUp(self):
        self.cloud = PointCloud(np.random.default_rng(0).random((5000, 3)))

    def test_gaussian(self):
        noisy = add_gaussian_noise(self.cloud, 0.03, 7)
        delta = (noisy.coords - self.cloud.coords).ravel()
        _stat, p = stats.kstest(delta / 0.03, 'norm')
        self.assertTrue(p > 1e-4, p)
        np.testing.assert_array_equal(noisy.coords, add_gaussian_noise(self.cloud, 0.03, 7).coords)

    def test_distance_grows_with_sigma(self):
        sigmas = np.linspace(0.005, 0.1, 10)
        clouds = [PointCloud(np.random.default_rng(10 + k).random((200, 3))) for k in range(3)]
        means = [np.mean([chamfer_distance(add_gaussian_noise(c, s, k), c).value for k, c in enumerate(clouds)])
                 for s in sigmas]
        self.assertTrue(min(means) > 0)
        rho, _p = stats.spearmanr(sigmas, means)
        self.assertTrue(rho > 0.9, rho)

    def test_zero_sigma(self):
        np.testing.assert_array_equal(add_gaussian_noise(self.cloud, 0.0, 1).coords, self.cloud.coords)
        self.assertRaises(ConfigurationError, add_gaussian_noise, self.cloud, -0.1, 1)


class TestHoles(unittest.TestCase):

    def setUp(self):
        self.cloud = PointCloud(np.random.default_rng(1).random((2000, 3)))

    def test_explicit_center(self):
        center = np.asarray([[0.5, 0.5, 0.5]])
        removed = hole_mask(self.cloud.coords, center, 0.2)
        out = punch_holes(self.cloud, 1, 0.2, 3, centers=center)
        self.assertEqual(out.n, self.cloud.n)
        survivors = self.cloud.coords[~removed]
        np.testing.assert_array_equal(out.coords[:len(survivors)], survivors)
        refill = out.coords[len(survivors):]
        self.assertEqual(len(refill), removed.sum())
        # refills sit near survivors, at the jitter scale
        gaps = np.sqrt(((refill[:, None] - survivors[None]) ** 2).sum(axis=2)).min(axis=1)
        self.assertTrue(np.all(gaps < 0.2))

    def test_random_centers(self):
        a = punch_holes(self.cloud, 3, 0.1, 5)
        b = punch_holes(self.cloud, 3, 0.1, 5)
        np.testing.assert_array_equal(a.coords, b.coords)
        self.assertEqual(a.n, 2000)
        np.testing.assert_array_equal(punch_holes(self.cloud, 0, 0.1, 5).coords, self.cloud.coords)

    def test_errors(self):
        tiny = PointCloud([[0.5, 0.5, 0.5], [0.51, 0.5, 0.5]])
        self.assertRaises(CorruptionError, punch_holes, tiny, 1, 0.2, 0)
        self.assertRaises(ConfigurationError, punch_holes, self.cloud, -1, 0.1, 0)
        self.assertRaises(ConfigurationError, punch_holes, self.cloud, 1, 0.5, 0)


class TestSmoothing(unittest.TestCase):

    def test_adjacency(self):
        matrix = adjacency(primitive('tetrahedron'))
        np.testing.assert_array_equal(matrix.toarray(), np.ones((4, 4)) - np.eye(4))

    def test_smooth_shrinks(self):
        mesh = normalize(primitive('cube'))[0]
        smoothed = smooth_mesh(mesh, 0.5, 10)
        np.testing.assert_array_equal(smoothed.faces, mesh.faces)
        center = mesh.vertices.mean(axis=0)
        before = np.linalg.norm(mesh.vertices - center, axis=1)
        after = np.linalg.norm(smoothed.vertices - center, axis=1)
        self.assertTrue(np.all(after < before))
        np.testing.assert_array_equal(smooth_mesh(mesh, 0.5, 0).vertices, mesh.vertices)

    def test_one_step(self):
        mesh = TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0), (5, 5, 5)], [(0, 1, 2)])
        smoothed = smooth_mesh(mesh, 1.0, 1)
        np.testing.assert_allclose(smoothed.vertices[0], [0.5, 0.5, 0.0])
        np.testing.assert_allclose(smoothed.vertices[3], [5, 5, 5])

    def test_errors(self):
        mesh = primitive('cube')
        self.assertRaises(ConfigurationError, smooth_mesh, mesh, 0.0, 1)
        self.assertRaises(ConfigurationError, smooth_mesh, mesh, 1.5, 1)
        self.assertRaises(ConfigurationError, smooth_mesh, mesh, 0.5, -1)


class TestPairs(unittest.TestCase):

    def setUp(self):
        self.mesh = primitive('sphere')

    def test_spec(self):
        self.assertEqual(CorruptionSpec.preset('shapenet').gaussian_sigma, 0.03)
        self.assertRaises(ConfigurationError, CorruptionSpec(hole_radius=0.5).validate)
        self.assertRaises(ConfigurationError, CorruptionSpec(smoothing_lambda=0.0).validate)
        self.assertRaises(ConfigurationError, CorruptionSpec(gaussian_sigma=-1.0).validate)

    def test_clean_pair(self):
        pair = make_pair(self.mesh, CorruptionSpec(seed=4), 300, 'sphere')
        np.testing.assert_array_equal(pair.input.coords, pair.target.coords)
        self.assertTrue(pair.target.coords.min() >= -1e-12)
        self.assertTrue(pair.target.coords.max() <= 1 + 1e-12)
        self.assertEqual(pair.mesh_id, 'sphere')

    def test_corrupted_pair(self):
        spec = CorruptionSpec.preset('scan')
        spec.seed = 2
        a = make_pair(self.mesh, spec, 400)
        b = make_pair(self.mesh, spec, 400)
        np.testing.assert_array_equal(a.input.coords, b.input.coords)
        np.testing.assert_array_equal(a.target.coords, b.target.coords)
        self.assertEqual(a.input.n, 400)
        self.assertFalse(np.array_equal(a.input.coords, a.target.coords))
        np.testing.assert_array_equal(a.target.coords, make_pair(self.mesh, CorruptionSpec(seed=2), 400).target.coords)

    def test_scan_pair(self):
        # the scan lives in the CAD frame, so it shares the CAD normalization
        scan = self.mesh.withVertices(self.mesh.vertices * 0.9)
        pair = make_pair(self.mesh, CorruptionSpec(seed=1), 200, 'sphere', scan_mesh=scan, scan='scan.obj')
        self.assertEqual(pair.scan, 'scan.obj')
        center = np.full(3, 0.5)
        inner = np.linalg.norm(pair.input.coords - center, axis=1)
        outer = np.linalg.norm(pair.target.coords - center, axis=1)
        self.assertTrue(inner.max() < outer.min())

    def test_corrupt_cloud(self):
        cloud = PointCloud(np.random.default_rng(3).random((500, 3)))
        spec = CorruptionSpec(gaussian_sigma=0.01, hole_count=2, hole_radius=0.1, seed=9)
        np.testing.assert_array_equal(corrupt_cloud(cloud, spec).coords, corrupt_cloud(cloud, spec).coords)
        self.assertEqual(corrupt_cloud(cloud, spec).n, 500)


if __name__ == '__main__':
    unittest.main()
