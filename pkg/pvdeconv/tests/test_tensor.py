#!/usr/bin/python
# -*- coding: utf8 -*-
import unittest

import numpy as np

from pvdeconv.utils import ConfigurationError
from pvdeconv.tensor import (TRAIN, EVAL, Tensor, GraphError, DimensionError, NonFiniteError,
                             add, mul, scale, sum, relu, dropout, concat, max_rows, tile_rows,
                             linear_pointwise, conv3d, deconv3d, batch_norm, backward, set_debug,
                             conv_output_size, deconv_output_size, finite_diff_check)


def param(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


class TestGraph(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_backward_accumulates(self):
        x = param(self.rng, 4)
        loss = sum(mul(x, x))
        backward(loss)
        np.testing.assert_allclose(x.grad, 2 * x.data)
        backward(sum(scale(x, 3.0)))
        np.testing.assert_allclose(x.grad, 2 * x.data + 3)

    def test_backward_errors(self):
        x = param(self.rng, 3)
        self.assertRaises(GraphError, backward, scale(x, 2.0))
        self.assertRaises(GraphError, backward, sum(Tensor([1.0, 2.0])))
        loss = sum(x)
        backward(loss)
        self.assertRaises(GraphError, backward, loss)

    def test_shared_subgraph(self):
        x = param(self.rng, 3)
        y = relu(x)
        backward(sum(add(y, y)))
        np.testing.assert_allclose(x.grad, 2.0 * (x.data > 0))

    def test_dimension_error(self):
        try:
            add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))))
        except DimensionError as e:
            self.assertEqual(e.axis, 1)
            self.assertEqual(e.expected, 3)
            self.assertEqual(e.actual, 4)
        else:
            self.fail("DimensionError not raised")

    def test_integer_data_is_float(self):
        self.assertEqual(Tensor([1, 2]).dtype, np.float64)
        self.assertEqual(Tensor(np.zeros(2, dtype=np.float32)).dtype, np.float32)

    def test_debug_mode(self):
        set_debug(True)
        try:
            self.assertRaises(NonFiniteError, scale, Tensor([1e308]), 10.0)
        finally:
            set_debug(False)
        self.assertTrue(np.isinf(scale(Tensor([1e308]), 10.0).item()))


class TestElementaryOps(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_max_rows_ties(self):
        x = param(self.rng, 3, 2)
        x.data[:] = [[1.0, 0.0], [1.0, 2.0], [0.0, 2.0]]
        out = max_rows(x)
        np.testing.assert_array_equal(out.data, [1.0, 2.0])
        backward(sum(out))
        np.testing.assert_array_equal(x.grad, [[1, 0], [0, 1], [0, 0]])

    def test_concat_and_tile(self):
        v = param(self.rng, 2)
        m = param(self.rng, 4, 3)
        out = concat([tile_rows(v, 4), m], axis=1)
        self.assertEqual(out.shape, (4, 5))
        backward(sum(out))
        np.testing.assert_allclose(v.grad, [4.0, 4.0])
        np.testing.assert_allclose(m.grad, np.ones((4, 3)))
        self.assertRaises(DimensionError, concat, [m, param(self.rng, 5, 3)], 1)

    def test_dropout(self):
        x = param(self.rng, 50, 4)
        self.assertTrue(dropout(x, 0.5, EVAL, 1) is x)
        self.assertTrue(dropout(x, 0.0, TRAIN, 1) is x)
        a = dropout(x, 0.5, TRAIN, 7)
        b = dropout(x, 0.5, TRAIN, 7)
        np.testing.assert_array_equal(a.data, b.data)
        kept = a.data != 0
        np.testing.assert_allclose(a.data[kept], 2 * x.data[kept])
        self.assertRaises(ConfigurationError, dropout, x, 1.0, TRAIN, 1)
        self.assertRaises(ConfigurationError, dropout, x, 0.1, 'test', 1)

    def test_relu_skips_kink(self):
        x = Tensor([0.0, 1.0, -2.0], requires_grad=True)
        report = finite_diff_check(lambda t: sum(relu(t)), [x])
        self.assertEqual(report.skipped, 1)
        self.assertEqual(report.checked, 2)
        self.assertTrue(report.passed)


class TestLayers(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def weighted(self, out_shape):
        w = Tensor(self.rng.standard_normal(out_shape))
        return lambda out: sum(mul(out, w))

    def test_linear_pointwise_gradients(self):
        x, w, b = param(self.rng, 5, 3), param(self.rng, 3, 4), param(self.rng, 4)
        f = self.weighted((5, 4))
        report = finite_diff_check(lambda x, w, b: f(linear_pointwise(x, w, b)), [x, w, b])
        self.assertTrue(report.passed, report)

    def test_linear_pointwise_shapes(self):
        self.assertRaises(DimensionError, linear_pointwise, param(self.rng, 5, 3),
                          param(self.rng, 2, 4), param(self.rng, 4))
        self.assertRaises(DimensionError, linear_pointwise, param(self.rng, 5, 3),
                          param(self.rng, 3, 4), param(self.rng, 3))

    def test_conv3d_gradients(self):
        grid, kernel, bias = param(self.rng, 2, 3, 3, 3), param(self.rng, 2, 2, 3, 3, 3), param(self.rng, 2)
        f = self.weighted((2, 3, 3, 3))
        report = finite_diff_check(lambda g, k, b: f(conv3d(g, k, b, 1, 1)), [grid, kernel, bias])
        self.assertTrue(report.passed, report)

    def test_deconv3d_gradients(self):
        grid, kernel, bias = param(self.rng, 2, 3, 3, 3), param(self.rng, 2, 3, 3, 3, 3), param(self.rng, 3)
        f = self.weighted((3, 3, 3, 3))
        report = finite_diff_check(lambda g, k, b: f(deconv3d(g, k, b, 1, 1)), [grid, kernel, bias])
        self.assertTrue(report.passed, report)

    def test_deconv_is_conv_adjoint(self):
        geometries = []
        for r in (2, 4, 8):
            for k in (1, 3):
                for stride in (1, 2):
                    for padding in sorted(set((0, (k - 1) // 2))):
                        geometries.append((r, k, stride, padding))
        for i in range(50):
            r, k, stride, padding = geometries[i % len(geometries)]
            cin, cout = self.rng.integers(1, 4, size=2)
            # the conv input is sized so that conv maps it back onto r cells
            size = deconv_output_size(r, k, stride, padding)
            self.assertEqual(conv_output_size(size, k, stride, padding), r)
            kernel = Tensor(self.rng.standard_normal((cout, cin, k, k, k)))
            x = Tensor(self.rng.standard_normal((cin, size, size, size)))
            y = Tensor(self.rng.standard_normal((cout, r, r, r)))
            cx = conv3d(x, kernel, Tensor(np.zeros(cout)), stride, padding)
            dy = deconv3d(y, kernel, Tensor(np.zeros(cin)), stride, padding)
            lhs = float((cx.data * y.data).sum())
            rhs = float((x.data * dy.data).sum())
            self.assertTrue(abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs)), (r, k, stride, padding, lhs - rhs))

    def test_conv3d_linearity(self):
        kernel = Tensor(self.rng.standard_normal((2, 3, 3, 3, 3)))
        bias = Tensor(np.zeros(2))
        a = self.rng.standard_normal((3, 5, 5, 5))
        b = self.rng.standard_normal((3, 5, 5, 5))
        combined = conv3d(Tensor(2.5 * a - 0.75 * b), kernel, bias, 1, 1).data
        separate = 2.5 * conv3d(Tensor(a), kernel, bias, 1, 1).data - 0.75 * conv3d(Tensor(b), kernel, bias, 1, 1).data
        np.testing.assert_allclose(combined, separate, rtol=0, atol=1e-10)

    def test_conv3d_delta(self):
        grid = np.zeros((1, 3, 3, 3))
        grid[0, 1, 1, 1] = 1.0
        out = conv3d(Tensor(grid), Tensor(np.ones((1, 1, 3, 3, 3))), Tensor([0.0]), 1, 1)
        np.testing.assert_array_equal(out.data, np.ones((1, 3, 3, 3)))

    def test_deconv3d_single_cell(self):
        out = deconv3d(Tensor(np.ones((1, 1, 1, 1))), Tensor(np.ones((1, 1, 2, 2, 2))), Tensor([0.0]), 1, 0)
        np.testing.assert_array_equal(out.data, np.ones((1, 2, 2, 2)))

    def test_conv3d_identity_kernel(self):
        kernel = np.zeros((1, 1, 3, 3, 3))
        kernel[0, 0, 1, 1, 1] = 1.0
        grid = Tensor(self.rng.standard_normal((1, 4, 4, 4)))
        out = conv3d(grid, Tensor(kernel), Tensor([0.5]), 1, 1)
        np.testing.assert_allclose(out.data, grid.data + 0.5)

    def test_conv3d_even_kernel(self):
        self.assertRaises(ConfigurationError, conv3d, param(self.rng, 1, 4, 4, 4),
                          param(self.rng, 1, 1, 2, 2, 2), param(self.rng, 1))

    def test_output_sizes(self):
        self.assertEqual(conv_output_size(16, 3, 1, 1), 16)
        self.assertEqual(conv_output_size(5, 3, 2, 0), 2)
        self.assertRaises(ConfigurationError, conv_output_size, 4, 3, 2, 0)
        self.assertRaises(ConfigurationError, conv_output_size, 2, 5, 1, 0)
        self.assertEqual(deconv_output_size(16, 3, 1, 1), 16)
        self.assertEqual(deconv_output_size(2, 3, 2, 0), 5)
        self.assertRaises(ConfigurationError, deconv_output_size, 1, 1, 1, 1)

    def test_batch_norm_train_gradients(self):
        x, gamma, beta = param(self.rng, 6, 3), param(self.rng, 3), param(self.rng, 3)
        mean, var = Tensor(np.zeros(3)), Tensor(np.ones(3))
        f = self.weighted((6, 3))
        report = finite_diff_check(lambda x, g, b: f(batch_norm(x, g, b, mean, var, TRAIN, axis=1)),
                                   [x, gamma, beta])
        self.assertTrue(report.passed, report)

    def test_batch_norm_statistics(self):
        x = Tensor(self.rng.standard_normal((2, 4, 4, 4)) * 3 + 1)
        mean, var = Tensor(np.zeros(2)), Tensor(np.ones(2))
        out = batch_norm(x, Tensor(np.ones(2)), Tensor(np.zeros(2)), mean, var, TRAIN, axis=0, eps=1e-12)
        np.testing.assert_allclose(out.data.reshape(2, -1).mean(axis=1), 0, atol=1e-12)
        np.testing.assert_allclose(out.data.reshape(2, -1).std(axis=1), 1, atol=1e-9)
        flat = x.data.reshape(2, -1)
        np.testing.assert_allclose(mean.data, 0.1 * flat.mean(axis=1))
        np.testing.assert_allclose(var.data, 0.9 + 0.1 * flat.var(axis=1, ddof=1))

    def test_batch_norm_eval(self):
        x = Tensor(self.rng.standard_normal((5, 2)))
        out = batch_norm(x, Tensor([2.0, 1.0]), Tensor([0.0, 1.0]), Tensor([1.0, 0.0]), Tensor([4.0, 1.0]),
                         EVAL, axis=1, eps=1e-12)
        np.testing.assert_allclose(out.data[:, 0], (x.data[:, 0] - 1) / 2 * 2)
        np.testing.assert_allclose(out.data[:, 1], x.data[:, 1] + 1)
        self.assertRaises(ConfigurationError, batch_norm, x, Tensor([1.0, 1.0]), Tensor([0.0, 0.0]),
                          Tensor([0.0, 0.0]), Tensor([1.0, 1.0]), EVAL, 1, 0.1, 0.0)

    def test_batch_norm_two_values(self):
        x = Tensor([[1.0], [3.0]])
        out = batch_norm(x, Tensor([1.0]), Tensor([0.0]), Tensor([0.0]), Tensor([1.0]), TRAIN, axis=1, eps=1e-12)
        np.testing.assert_allclose(out.data[:, 0], [-1.0, 1.0], atol=1e-9)

    def test_batch_norm_constant_channel(self):
        x = Tensor(np.tile([4.0, -1.0], (6, 1)))
        out = batch_norm(x, Tensor([2.0, 3.0]), Tensor([0.5, -0.25]), Tensor(np.zeros(2)), Tensor(np.ones(2)),
                         TRAIN, axis=1)
        np.testing.assert_array_equal(out.data, np.tile([0.5, -0.25], (6, 1)))


if __name__ == '__main__':
    unittest.main()
