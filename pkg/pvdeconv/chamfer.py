#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Bidirectional Chamfer distance between two point sets::

    d(S, G) = sum_{x in S} min_{y in G} |x - y|^2 + sum_{y in G} min_{x in S} |x - y|^2

Two exact nearest-neighbour searches are provided, a linear scan and a KD-tree,
and they agree bit for bit: same squared distances, same matches, ties going to
the lowest index. Sums run over sorted distances so that the value does not
depend on point order.
"""
import logging
from gettext import gettext as _

import numpy as np

from .utils import ConfigurationError, ContractError
from .tensor import Operation, as_tensor


logger = logging.getLogger(__name__)


BRUTE, KDTREE = 'brute', 'kdtree'
SEARCHES = (BRUTE, KDTREE)

LEAF_SIZE = 16
BRUTE_CHUNK = 1024


def _points(cloud, what):
    if hasattr(cloud, 'coords'):
        cloud = cloud.coords
    elif hasattr(cloud, 'data'):
        cloud = cloud.data
    points = np.asarray(cloud, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ContractError(_("%s must be an n x 3 point set, got shape %s") % (what, points.shape))
    if points.shape[0] == 0:
        raise ContractError(_("%s is empty") % what)
    return points


def pair_distances(queries, points):
    """
    Squared distances, q x m. Every search computes distances with this
    expression so that results are comparable bit for bit.
    """
    dx = queries[:, None, 0] - points[None, :, 0]
    dy = queries[:, None, 1] - points[None, :, 1]
    dz = queries[:, None, 2] - points[None, :, 2]
    return dx * dx + dy * dy + dz * dz


def _update(best_d, best_i, rows, candidates, queries, points):
    """
    Fold ``candidates`` (ascending point indices) into the running best match of
    each query in ``rows``: smaller distance wins, then smaller index.
    """
    d = pair_distances(queries[rows], points[candidates])
    local = np.argmin(d, axis=1)
    dist = d[np.arange(len(rows)), local]
    index = candidates[local]
    better = (dist < best_d[rows]) | ((dist == best_d[rows]) & (index < best_i[rows]))
    rows = rows[better]
    best_d[rows] = dist[better]
    best_i[rows] = index[better]


def nearest_brute(queries, points):
    """
    Linear scan.
    @rtype: (indices, squared distances) per query
    """
    n = len(queries)
    best_d = np.full(n, np.inf)
    best_i = np.zeros(n, dtype=np.int64)
    for start in range(0, n, BRUTE_CHUNK):
        stop = min(n, start + BRUTE_CHUNK)
        d = pair_distances(queries[start:stop], points)
        best_i[start:stop] = np.argmin(d, axis=1)
        best_d[start:stop] = d[np.arange(stop - start), best_i[start:stop]]
    return best_i, best_d


class KdTree(object):
    """
    Median-split tree over a fixed point set. Each node covers a contiguous range
    of C{perm} and stores the bounding box of its points; leaves list their points
    in increasing original index.
    """

    def __init__(self, points, leaf_size=LEAF_SIZE):
        if leaf_size < 1:
            raise ConfigurationError(_("KD-tree leaf size must be positive"))
        self.points = points
        self.leaf_size = leaf_size
        self.perm = np.arange(len(points))
        self._nodes = []
        self._build(0, len(points))
        (self.axis, self.split, self.start, self.end,
         self.left, self.right, self.lo, self.hi) = [np.asarray(column) for column in zip(*self._nodes)]
        del self._nodes

    def _build(self, s, e):
        """
        Nodes are numbered in preorder.
        @rtype: node number
        """
        node = len(self._nodes)
        pts = self.points[self.perm[s:e]]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        self._nodes.append([-1, 0.0, s, e, -1, -1, lo, hi])
        if e - s <= self.leaf_size:
            self.perm[s:e] = np.sort(self.perm[s:e])
            return node
        a = int(np.argmax(hi - lo))
        self.perm[s:e] = self.perm[s:e][np.argsort(pts[:, a], kind='stable')]
        mid = s + (e - s) // 2
        record = self._nodes[node]
        record[0] = a
        record[1] = self.points[self.perm[mid], a]
        record[4] = self._build(s, mid)
        record[5] = self._build(mid, e)
        return node

    def __len__(self):
        return len(self.start)

    def isLeaf(self, node):
        return self.axis[node] < 0

    def leafOf(self, queries):
        """
        Leaf each query falls into when descending by split values.
        """
        node = np.zeros(len(queries), dtype=np.int64)
        active = ~(self.axis[node] < 0)
        while np.any(active):
            rows = np.flatnonzero(active)
            current = node[rows]
            goes_left = queries[rows, self.axis[current]] < self.split[current]
            node[rows] = np.where(goes_left, self.left[current], self.right[current])
            active[rows] = self.axis[node[rows]] >= 0
        return node

    def _boxDistance(self, queries, node):
        below = np.maximum(self.lo[node] - queries, 0)
        above = np.maximum(queries - self.hi[node], 0)
        gap = np.maximum(below, above)
        return gap[:, 0] * gap[:, 0] + gap[:, 1] * gap[:, 1] + gap[:, 2] * gap[:, 2]

    def _leafPoints(self, node):
        return self.perm[self.start[node]:self.end[node]]

    def query(self, queries):
        """
        Exact nearest neighbour of every query.
        @rtype: (indices, squared distances)
        """
        n = len(queries)
        best_d = np.full(n, np.inf)
        best_i = np.full(n, len(self.points), dtype=np.int64)
        home = self.leafOf(queries)
        for leaf in np.unique(home):
            _update(best_d, best_i, np.flatnonzero(home == leaf), self._leafPoints(leaf), queries, self.points)
        visited = 0
        stack = [(0, np.arange(n))]
        while stack:
            node, rows = stack.pop()
            # ties must survive pruning so the lowest index can win
            rows = rows[self._boxDistance(queries[rows], node) <= best_d[rows]]
            if len(rows) == 0:
                continue
            visited += 1
            if self.isLeaf(node):
                rows = rows[home[rows] != node]
                if len(rows):
                    _update(best_d, best_i, rows, self._leafPoints(node), queries, self.points)
            else:
                stack.append((self.right[node], rows))
                stack.append((self.left[node], rows))
        logger.debug(_("KD-tree query of %d points visited %d of %d nodes") % (n, visited, len(self)))
        return best_i, best_d


def nearest(queries, points, search=KDTREE):
    if search == BRUTE:
        return nearest_brute(queries, points)
    if search == KDTREE:
        return KdTree(points).query(queries)
    raise ConfigurationError(_("Unknown nearest-neighbour search '%s'") % search)


class ChamferResult(object):
    """
    @ivar value: raw distance, sum of both directions
    @ivar normalized: fwd_sum / n + bwd_sum / m
    @ivar fwd_nn: for each predicted point, index of its nearest target point
    @ivar bwd_nn: for each target point, index of its nearest predicted point
    """

    def __init__(self, fwd_nn, fwd_dist, bwd_nn, bwd_dist):
        self.fwd_nn = fwd_nn
        self.bwd_nn = bwd_nn
        self.fwd_dist = fwd_dist
        self.bwd_dist = bwd_dist
        self.fwd_sum = float(np.sort(fwd_dist).sum())
        self.bwd_sum = float(np.sort(bwd_dist).sum())
        self.value = self.fwd_sum + self.bwd_sum
        self.normalized = self.fwd_sum / len(fwd_dist) + self.bwd_sum / len(bwd_dist)

    def __repr__(self):
        return "ChamferResult(value=%.6g, normalized=%.6g)" % (self.value, self.normalized)


def chamfer_distance(S, S_G, search=KDTREE):
    """
    @type S : L{PointCloud}, L{Tensor} or n x 3 array (prediction)
    @type S_G : idem (ground truth)
    @rtype: L{ChamferResult}
    """
    x = _points(S, _("Predicted cloud"))
    y = _points(S_G, _("Ground-truth cloud"))
    fwd_nn, fwd_dist = nearest(x, y, search)
    bwd_nn, bwd_dist = nearest(y, x, search)
    return ChamferResult(fwd_nn, fwd_dist, bwd_nn, bwd_dist)


def chamfer_brute(S, S_G):
    return chamfer_distance(S, S_G, BRUTE)


def chamfer_kdtree(S, S_G):
    return chamfer_distance(S, S_G, KDTREE)


def chamfer_grad(S, S_G, result, normalized=False):
    """
    Gradients of the distance for fixed matches. Each forward pair (x, y) adds
    2(x - y) to x and 2(y - x) to y, each backward pair likewise; the normalized
    variant divides the forward term by n and the backward term by m.
    @rtype: (gradient on S, gradient on S_G)
    """
    x = _points(S, _("Predicted cloud"))
    y = _points(S_G, _("Ground-truth cloud"))
    wf, wb = (1.0 / len(x), 1.0 / len(y)) if normalized else (1.0, 1.0)
    fwd = 2 * wf * (x - y[result.fwd_nn])
    bwd = 2 * wb * (y - x[result.bwd_nn])
    gx = fwd.copy()
    gy = bwd.copy()
    np.add.at(gx, result.bwd_nn, -bwd)
    np.add.at(gy, result.fwd_nn, -fwd)
    return gx, gy


class Chamfer(Operation):
    label = 'chamfer'

    def __init__(self, pred, target, search, normalized):
        Operation.__init__(self, pred, target)
        self.search = search
        self.normalized = normalized
        self.result = None

    def forward(self):
        pred, target = self.inputs
        self.result = chamfer_distance(pred, target, self.search)
        value = self.result.normalized if self.normalized else self.result.value
        return np.asarray(value, dtype=pred.dtype)

    def backward(self, grad):
        pred, target = self.inputs
        gx, gy = chamfer_grad(pred, target, self.result, self.normalized)
        g = float(grad.reshape(()))
        return (g * gx).astype(pred.dtype), (g * gy).astype(target.dtype)

    def branches(self):
        return (self.result.fwd_nn, self.result.bwd_nn)


def chamfer(pred, target, search=KDTREE, normalized=True):
    """
    Differentiable Chamfer loss between a predicted n x 3 L{Tensor} and a target
    (tensor or array). Matches are held fixed in the backward pass.
    @rtype: (scalar L{Tensor}, L{ChamferResult})
    """
    op = Chamfer(as_tensor(pred), as_tensor(target), search, normalized)
    loss = op.run()
    return loss, op.result
