#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Training pairs from manifest entries, and a thread preparing batches ahead of
the optimizer.
"""
import os
import math
import queue
import logging
import threading
from gettext import gettext as _

import numpy as np

from .utils import ConfigurationError, derive_seed
from .corruption import make_pair
from .geometry import load_mesh


logger = logging.getLogger(__name__)


class PairDataset(object):
    """
    Lazily built L{PairSample}s for a list of manifest entries. Each pair only
    depends on its entry (mesh, scan, corruption spec and seed).
    """

    def __init__(self, entries, n_points, root=None, cache=True):
        self.entries = list(entries)
        self.n_points = n_points
        self.root = root
        self.cache = cache
        self._pairs = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.entries)

    def path(self, name):
        if self.root is None or os.path.isabs(name):
            return name
        return os.path.join(self.root, name)

    def pair(self, index):
        """
        @rtype: L{PairSample}
        """
        with self._lock:
            if index in self._pairs:
                return self._pairs[index]
        entry = self.entries[index]
        mesh = load_mesh(self.path(entry.source))
        scan_mesh = load_mesh(self.path(entry.scan)) if entry.scan else None
        pair = make_pair(mesh, entry.spec, self.n_points, entry.mesh_id, entry.source, scan_mesh, entry.scan)
        if self.cache:
            with self._lock:
                self._pairs[index] = pair
        return pair

    def batch(self, indices):
        return [self.pair(i) for i in indices]


def steps_per_epoch(size, batch_size):
    if size < 1:
        raise ConfigurationError(_("Cannot make batches from an empty fold"))
    return int(math.ceil(size / float(batch_size)))


def batch_indices(size, batch_size, seed, step):
    """
    Entries of global step ``step``: epoch e = step // steps_per_epoch visits the
    entries in a permutation seeded by (seed, e), cut into consecutive batches.
    Any step can be computed without replaying the previous ones.
    """
    per_epoch = steps_per_epoch(size, batch_size)
    epoch, k = divmod(step, per_epoch)
    order = np.random.default_rng(derive_seed(seed, 'epoch', epoch)).permutation(size)
    return [int(i) for i in order[k * batch_size:(k + 1) * batch_size]]


def schedule(size, batch_size, seed, start, stop):
    for step in range(start, stop):
        yield step, batch_indices(size, batch_size, seed, step)


class PrefetchRunner(threading.Thread):
    """
    Builds the batches of a schedule in the background, at most C{depth} ahead.
    Iterating yields (step, list of L{PairSample}); an error raised while building
    is raised again in the consumer.
    """

    def __init__(self, dataset, steps, depth=2):
        threading.Thread.__init__(self)
        self.daemon = True
        self.dataset = dataset
        self.steps = steps
        self.queue = queue.Queue(maxsize=max(1, depth))
        self.stopped = threading.Event()
        self.error = None

    def run(self):
        try:
            for step, indices in self.steps:
                if self.stopped.is_set():
                    return
                batch = self.dataset.batch(indices)
                logger.debug(_("Prefetched batch of step %d") % step)
                if not self._put((step, batch)):
                    return
        except Exception as e:
            self.error = e
        self._put(None)

    def _put(self, item):
        while not self.stopped.is_set():
            try:
                self.queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def __iter__(self):
        if not self.is_alive() and self.ident is None:
            self.start()
        while True:
            item = self.queue.get()
            if item is None:
                break
            yield item
        if self.error is not None:
            raise self.error

    def stop(self):
        self.stopped.set()
        if self.ident is not None:
            self.join()
