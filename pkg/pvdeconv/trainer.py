#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Dataset manifests, training with the Chamfer loss, checkpoints and evaluation.

Randomness is counter-based: batch order, dropout masks and corruption seeds are
derived from the master seed and (epoch, step, sample) counters, so a run
resumed from any checkpoint continues exactly like an uninterrupted one.
"""
import io
import os
import csv
import glob
import time
import logging
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from gettext import gettext as _

import numpy as np

from .utils import Error, ConfigurationError, derive_seed, thread_count
from .config import KeyValueConfig, Field, INT, FLOAT, WORD
from .tensor import TRAIN, backward, scale
from .chamfer import KDTREE, SEARCHES, chamfer, chamfer_distance
from .corruption import CorruptionSpec
from .geometry import load_mesh, normalize, sampling_noise_floor
from .loader import PairDataset, PrefetchRunner, schedule, steps_per_epoch
from .model import Autoencoder
from . import checkpoint


logger = logging.getLogger(__name__)


TRAIN_SPLIT, VAL_SPLIT, TEST_SPLIT = ('train', 'val', 'test')
SPLITS = (TRAIN_SPLIT, VAL_SPLIT, TEST_SPLIT)

MANIFEST_HEADER = "# pvdeconv manifest v1"
MANIFEST_FIELDS = ('mesh_id', 'split', 'seed', 'sigma', 'holes', 'radius', 'lambda', 'iters', 'source', 'scan')

LOG_FIELDS = ('step', 'epoch', 'train_loss', 'train_raw', 'val_loss', 'wall_time')
EVAL_FIELDS = ('mesh_id', 'chamfer_raw', 'chamfer_normalized', 'noise_floor')

BEST_NAME = 'best.pvdc'
LOG_NAME = 'train.csv'


class TrainingError(Error):
    pass


class NonFiniteLossError(TrainingError):
    """
    Exception when a batch produces a NaN or infinite loss.
    """

    def __init__(self, step, mesh_ids):
        super(NonFiniteLossError, self).__init__(_("Non-finite loss at step %d, batch: %s") %
                                                 (step, ", ".join(mesh_ids)))
        self.step = step
        self.mesh_ids = mesh_ids


class TrainConfig(KeyValueConfig):
    FIELDS = (
        Field('epochs', 50, INT, "passes over the training fold"),
        Field('batch_size', 8, INT, "pairs per optimization step"),
        Field('n_points', 2500, INT, "points per cloud"),
        Field('learning_rate', 1e-3, FLOAT, "Adam step size"),
        Field('beta1', 0.9, FLOAT, "Adam first moment decay"),
        Field('beta2', 0.999, FLOAT, "Adam second moment decay"),
        Field('adam_eps', 1e-8, FLOAT, "Adam denominator epsilon"),
        Field('lr_schedule', 'constant', WORD, "constant or step"),
        Field('lr_decay', 0.5, FLOAT, "step schedule factor"),
        Field('lr_step', 1000, INT, "step schedule period, in steps"),
        Field('eval_every', 0, INT, "validation period in steps, 0 for every epoch"),
        Field('seed', 0, INT, "master seed"),
        Field('max_steps', 0, INT, "stop after this many steps, 0 for no limit"),
        Field('keep_last', 3, INT, "periodic checkpoints kept"),
        Field('prefetch', 2, INT, "batches prepared ahead"),
        Field('nn_search', KDTREE, WORD, "kdtree or brute"),
        Field('gaussian_sigma', 0.0, FLOAT, "input noise, for new manifests"),
        Field('hole_count', 0, INT, "input holes, for new manifests"),
        Field('hole_radius', 0.05, FLOAT, "hole radius, for new manifests"),
        Field('smoothing_lambda', 0.5, FLOAT, "mesh smoothing step, for new manifests"),
        Field('smoothing_iterations', 0, INT, "mesh smoothing iterations, for new manifests"),
    )
    PRESETS = {
        'cc3d': {'epochs': 50, 'batch_size': 80, 'n_points': 10000},
        'shapenet': {'epochs': 50, 'batch_size': 80, 'n_points': 2500, 'gaussian_sigma': 0.03},
        'desk': {'batch_size': 8, 'n_points': 2500},
        'toy': {'batch_size': 8, 'n_points': 512, 'gaussian_sigma': 0.03},
    }

    def validate(self):
        if self.epochs < 1:
            raise ConfigurationError(_("epochs must be >= 1, got %s") % self.epochs)
        if self.batch_size < 1:
            raise ConfigurationError(_("batch_size must be >= 1, got %s") % self.batch_size)
        if self.n_points < 1:
            raise ConfigurationError(_("n_points must be >= 1, got %s") % self.n_points)
        if self.learning_rate < 0:
            raise ConfigurationError(_("learning_rate must be >= 0"))
        if self.lr_schedule not in ('constant', 'step'):
            raise ConfigurationError(_("Unknown lr_schedule '%s' (constant or step)") % self.lr_schedule)
        if self.lr_schedule == 'step' and self.lr_step < 1:
            raise ConfigurationError(_("lr_step must be >= 1"))
        if self.nn_search not in SEARCHES:
            raise ConfigurationError(_("Unknown nn_search '%s' (kdtree or brute)") % self.nn_search)
        if self.keep_last < 1:
            raise ConfigurationError(_("keep_last must be >= 1"))
        self.corruptionSpec(0).validate()
        return self

    def corruptionSpec(self, seed):
        return CorruptionSpec(gaussian_sigma=self.gaussian_sigma, hole_count=self.hole_count,
                              hole_radius=self.hole_radius, smoothing_lambda=self.smoothing_lambda,
                              smoothing_iterations=self.smoothing_iterations, seed=seed)

    def learningRate(self, step):
        if self.lr_schedule == 'step':
            return self.learning_rate * self.lr_decay ** (step // self.lr_step)
        return self.learning_rate


#
#    Manifest
#


class ManifestEntry(object):

    def __init__(self, mesh_id, source, spec, split=None, scan=None):
        self.mesh_id = mesh_id
        self.source = source
        #: L{CorruptionSpec}; its seed is the pair seed
        self.spec = spec
        self.split = split
        self.scan = scan

    @property
    def seed(self):
        return self.spec.seed

    def __eq__(self, other):
        return isinstance(other, ManifestEntry) and self.fields() == other.fields()

    def __ne__(self, other):
        return not self == other

    def fields(self):
        s = self.spec
        return (self.mesh_id, self.split or '-', "%d" % s.seed, repr(float(s.gaussian_sigma)),
                "%d" % s.hole_count, repr(float(s.hole_radius)), repr(float(s.smoothing_lambda)),
                "%d" % s.smoothing_iterations, self.source, self.scan or '-')

    def __repr__(self):
        return "ManifestEntry(%s, %s)" % (self.mesh_id, self.split)


class DatasetManifest(object):
    """
    Entries with their fold. Stored as a tab-separated text file under a
    versioned header line, one entry per line, with columns C{MANIFEST_FIELDS};
    '-' marks an absent scan.
    """
    VERSION = 1

    def __init__(self, entries, root=None):
        self.entries = list(entries)
        #: directory relative source paths are resolved against
        self.root = root

    def fold(self, split):
        return [e for e in self.entries if e.split == split]

    def sizes(self):
        return tuple(len(self.fold(s)) for s in SPLITS)

    def __len__(self):
        return len(self.entries)

    def dumps(self):
        lines = [MANIFEST_HEADER, "# " + "\t".join(MANIFEST_FIELDS)]
        lines += ["\t".join(e.fields()) for e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text, root=None):
        lines = text.splitlines()
        if not lines or lines[0].strip() != MANIFEST_HEADER:
            raise ConfigurationError(_("Not a manifest: expected '%s' on the first line") % MANIFEST_HEADER)
        entries = []
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip() or line.startswith('#'):
                continue
            fields = line.split('\t')
            if len(fields) != len(MANIFEST_FIELDS):
                raise ConfigurationError(_("Manifest line %d: expected %d fields, got %d") %
                                         (lineno, len(MANIFEST_FIELDS), len(fields)))
            mesh_id, split, seed, sigma, holes, radius, lam, iters, source, scan = fields
            if split not in SPLITS:
                raise ConfigurationError(_("Manifest line %d: unknown split '%s'") % (lineno, split))
            try:
                spec = CorruptionSpec(seed=int(seed), gaussian_sigma=float(sigma), hole_count=int(holes),
                                      hole_radius=float(radius), smoothing_lambda=float(lam),
                                      smoothing_iterations=int(iters))
            except ValueError:
                raise ConfigurationError(_("Manifest line %d: invalid number") % lineno)
            entries.append(ManifestEntry(mesh_id, source, spec.validate(), split, None if scan == '-' else scan))
        return cls(entries, root)

    def save(self, filename):
        logger.info(_("Save manifest to file '%s'") % filename)
        with io.open(filename, 'w', encoding='utf-8') as fd:
            fd.write(self.dumps())

    @classmethod
    def load(cls, filename):
        logger.info(_("Load manifest from file '%s'") % filename)
        with io.open(filename, encoding='utf-8') as fd:
            content = fd.read()
        return cls.loads(content, os.path.dirname(os.path.abspath(filename)))


def make_entries(sources, train_config, seed, scans=None):
    """
    One entry per mesh file, named after it. Pair seeds derive from ``seed`` and
    the entry name.
    @param scans : optional dict of mesh id -> scan mesh file
    """
    entries = []
    for source in sources:
        mesh_id = os.path.splitext(os.path.basename(source))[0]
        spec = train_config.corruptionSpec(derive_seed(seed, 'entry', mesh_id))
        scan = (scans or {}).get(mesh_id)
        entries.append(ManifestEntry(mesh_id, source, spec, scan=scan))
    return entries


def split_dataset(entries, proportions=(0.8, 0.1, 0.1), seed=0):
    """
    Shuffle ``entries`` with ``seed`` and assign consecutive runs to train, val
    and test. Validation and test sizes are rounded from their proportion (at
    least one entry each when their proportion is not zero); train takes the rest.
    @rtype: L{DatasetManifest}
    """
    if len(proportions) != 3 or any(p < 0 for p in proportions) or abs(sum(proportions) - 1) > 1e-9:
        raise ConfigurationError(_("Split proportions must be 3 non-negative values summing to 1, got %s") %
                                 (proportions,))
    n = len(entries)
    folds = sum(1 for p in proportions if p > 0)
    if n < folds:
        raise ConfigurationError(_("Cannot split %d entries into %d folds") % (n, folds))
    sizes = [0, 0, 0]
    for i in (1, 2):
        if proportions[i] > 0:
            sizes[i] = max(1, int(round(n * proportions[i])))
    sizes[0] = n - sizes[1] - sizes[2]
    if proportions[0] > 0 and sizes[0] < 1:
        raise ConfigurationError(_("Cannot split %d entries into %d folds") % (n, folds))
    order = np.random.default_rng(derive_seed(seed, 'split')).permutation(n)
    assigned = []
    bounds = np.cumsum(sizes)
    for position, index in enumerate(order):
        entry = entries[index]
        split = SPLITS[int(np.searchsorted(bounds, position, side='right'))]
        assigned.append(ManifestEntry(entry.mesh_id, entry.source, entry.spec, split, entry.scan))
    logger.info(_("Split %d entries into train/val/test = %d/%d/%d") % ((n,) + tuple(sizes)))
    return DatasetManifest(assigned)


#
#    Optimization
#


class Adam(object):

    def __init__(self, named_params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(named_params)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = OrderedDict((n, np.zeros_like(p.data)) for n, p in self.params)
        self.v = OrderedDict((n, np.zeros_like(p.data)) for n, p in self.params)

    def step(self, learning_rate=None):
        lr = self.learning_rate if learning_rate is None else learning_rate
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for name, p in self.params:
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            update = (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data -= (lr * update).astype(p.dtype, copy=False)

    def stateArrays(self):
        arrays = OrderedDict()
        arrays['adam.t'] = np.asarray([self.t], dtype=np.int64)
        for name in self.m:
            arrays['adam.m.' + name] = self.m[name]
            arrays['adam.v.' + name] = self.v[name]
        return arrays

    def loadState(self, arrays):
        self.t = int(arrays['adam.t'][0])
        for name in self.m:
            self.m[name][...] = arrays['adam.m.' + name]
            self.v[name][...] = arrays['adam.v.' + name]


class TrainState(object):
    """
    Counters of a run. Parameters and moments live in the L{Trainer}.
    """

    def __init__(self, step=0, best_val=float('inf'), best_step=-1, best_path=None):
        #: completed optimization steps
        self.step = step
        self.best_val = best_val
        self.best_step = best_step
        self.best_path = best_path
        self.last_train_loss = None

    def arrays(self):
        arrays = OrderedDict()
        arrays['state.step'] = np.asarray([self.step], dtype=np.int64)
        arrays['state.best_val'] = np.asarray([self.best_val], dtype=np.float64)
        arrays['state.best_step'] = np.asarray([self.best_step], dtype=np.int64)
        if self.best_path:
            arrays['state.best_path'] = checkpoint.encode_text(self.best_path)
        return arrays

    @classmethod
    def fromArrays(cls, arrays):
        if 'state.step' not in arrays:
            raise checkpoint.CheckpointError(_("Checkpoint holds no training state"))
        best_path = checkpoint.decode_text(arrays['state.best_path']) if 'state.best_path' in arrays else None
        return cls(int(arrays['state.step'][0]), float(arrays['state.best_val'][0]),
                   int(arrays['state.best_step'][0]), best_path)

    def __repr__(self):
        return "TrainState(step=%d, best_val=%g, best_step=%d)" % (self.step, self.best_val, self.best_step)


class Trainer(object):
    """
    Mini-batch Chamfer training of one L{Autoencoder} on a manifest.
    Every sample is forwarded on its own; its normalized Chamfer loss is scaled by
    1/batch and back-propagated, so gradients add up in batch order.
    """

    def __init__(self, manifest, model_config, train_config, out_dir, model=None):
        self.train_config = train_config.validate()
        if model_config.n_points != train_config.n_points:
            raise ConfigurationError(_("Model expects %d points, training uses %d") %
                                     (model_config.n_points, train_config.n_points))
        self.manifest = manifest
        self.out_dir = out_dir
        self.model = model if model is not None else Autoencoder(model_config, seed=derive_seed(train_config.seed, 'init'))
        tc = train_config
        self.optimizer = Adam(self.model.params.learnable(), tc.learning_rate, tc.beta1, tc.beta2, tc.adam_eps)
        self.state = TrainState()
        self.train_set = PairDataset(manifest.fold(TRAIN_SPLIT), tc.n_points, manifest.root)
        self.val_set = PairDataset(manifest.fold(VAL_SPLIT), tc.n_points, manifest.root)
        if len(self.train_set) == 0 or len(self.val_set) == 0:
            raise ConfigurationError(_("Training needs non-empty train and val folds, got %d/%d") %
                                     (len(self.train_set), len(self.val_set)))
        self.per_epoch = steps_per_epoch(len(self.train_set), tc.batch_size)
        self.total_steps = tc.epochs * self.per_epoch
        if tc.max_steps > 0:
            self.total_steps = min(self.total_steps, tc.max_steps)

    #
    #    Checkpoints
    #

    def checkpointArrays(self):
        arrays = self.model.checkpointArrays()
        arrays['meta.train_config'] = checkpoint.encode_text(self.train_config.dumps())
        arrays.update(self.optimizer.stateArrays())
        arrays.update(self.state.arrays())
        return arrays

    def checkpointPath(self, step):
        return os.path.join(self.out_dir, "ckpt-step%08d.pvdc" % step)

    def saveCheckpoint(self):
        path = self.checkpointPath(self.state.step)
        checkpoint.save(path, self.checkpointArrays())
        kept = sorted(glob.glob(os.path.join(self.out_dir, "ckpt-step*.pvdc")))
        for old in kept[:-self.train_config.keep_last]:
            logger.debug(_("Remove old checkpoint '%s'") % old)
            os.remove(old)
        return path

    def resume(self, filename):
        """
        Restore parameters, moments and counters from a checkpoint.
        """
        arrays = checkpoint.load(filename)
        self.model.params.assign(arrays)
        self.optimizer.loadState(arrays)
        self.state = TrainState.fromArrays(arrays)
        logger.info(_("Resume training at step %d") % self.state.step)
        return self.state

    #
    #    Steps
    #

    def trainStep(self, step, batch):
        """
        @rtype: (mean normalized Chamfer, mean raw Chamfer) of the batch
        """
        tc = self.train_config
        params = self.model.params
        params.zeroGrad()
        normalized = []
        raw = []
        for k, pair in enumerate(batch):
            out = self.model.forward(pair.input, TRAIN, derive_seed(tc.seed, 'step', step, k))
            loss, result = chamfer(out, pair.target.coords, tc.nn_search, normalized=True)
            if not np.isfinite(loss.item()):
                raise NonFiniteLossError(step, [p.mesh_id for p in batch])
            backward(scale(loss, 1.0 / len(batch)))
            normalized.append(result.normalized)
            raw.append(result.value)
        self.optimizer.step(tc.learningRate(step))
        return float(np.mean(normalized)), float(np.mean(raw))

    def validate(self):
        """
        Mean normalized Chamfer over the validation fold, eval mode.
        """
        values = []
        for i in range(len(self.val_set)):
            pair = self.val_set.pair(i)
            out = self.model.reconstruct(pair.input)
            values.append(chamfer_distance(out, pair.target, self.train_config.nn_search).normalized)
        return float(np.mean(values))

    def isEvalStep(self, step):
        """
        ``step`` counts completed steps.
        """
        every = self.train_config.eval_every
        if every > 0:
            return step % every == 0 or step == self.total_steps
        return step % self.per_epoch == 0 or step == self.total_steps

    #
    #    Log
    #

    def _openLog(self):
        path = os.path.join(self.out_dir, LOG_NAME)
        rows = []
        if self.state.step > 0 and os.path.exists(path):
            with io.open(path, newline='') as fd:
                rows = [r for r in csv.DictReader(fd) if int(r['step']) < self.state.step]
        fd = io.open(path, 'w', newline='')
        writer = csv.DictWriter(fd, fieldnames=LOG_FIELDS)
        writer.writeheader()
        for r in rows:
            writer.writerow(r)
        fd.flush()
        return fd, writer

    def run(self):
        """
        Train until the configured number of steps.
        @rtype: L{TrainState}
        """
        if not os.path.isdir(self.out_dir):
            os.makedirs(self.out_dir)
        tc = self.train_config
        logger.info(_("Train %d parameters for %d steps (%d per epoch) on %d pairs") %
                    (self.model.params.count(), self.total_steps, self.per_epoch, len(self.train_set)))
        fd, writer = self._openLog()
        started = time.time()
        steps = schedule(len(self.train_set), tc.batch_size, tc.seed, self.state.step, self.total_steps)
        runner = PrefetchRunner(self.train_set, steps, tc.prefetch)
        try:
            for step, batch in runner:
                loss, raw = self.trainStep(step, batch)
                self.state.step = step + 1
                self.state.last_train_loss = loss
                row = {'step': step, 'epoch': step // self.per_epoch, 'train_loss': repr(loss),
                       'train_raw': repr(raw), 'val_loss': '', 'wall_time': "%.3f" % (time.time() - started)}
                logger.debug(_("Step %d: loss %.6g") % (step, loss))
                if self.isEvalStep(self.state.step):
                    val = self.validate()
                    row['val_loss'] = repr(val)
                    logger.info(_("Step %d (epoch %d): train %.6g, validation %.6g") %
                                (step, row['epoch'], loss, val))
                    if val < self.state.best_val:
                        self.state.best_val = val
                        self.state.best_step = self.state.step
                        self.state.best_path = BEST_NAME
                        checkpoint.save(os.path.join(self.out_dir, BEST_NAME), self.checkpointArrays())
                writer.writerow(row)
                fd.flush()
                if self.state.step % self.per_epoch == 0 or self.state.step == self.total_steps:
                    self.saveCheckpoint()
        except KeyboardInterrupt:
            logger.warning(_("Interrupted at step %d, saving checkpoint") % self.state.step)
            self.saveCheckpoint()
            raise
        except NonFiniteLossError as e:
            dump = os.path.join(self.out_dir, "nonfinite-step%08d.txt" % e.step)
            with io.open(dump, 'w', encoding='utf-8') as out:
                out.write(u"\n".join(e.mesh_ids) + u"\n")
            logger.error(_("%s (batch ids written to '%s')") % (e, dump))
            raise
        finally:
            runner.stop()
            fd.close()
        logger.info(_("Done. Best validation %.6g at step %d") % (self.state.best_val, self.state.best_step))
        return self.state


def train(manifest, model_config, train_config, out_dir, resume=None):
    """
    @param resume : checkpoint to continue from
    @rtype: L{TrainState}
    """
    trainer = Trainer(manifest, model_config, train_config, out_dir)
    if resume:
        trainer.resume(resume)
    return trainer.run()


#
#    Evaluation
#


def summarize(values):
    """
    @rtype: dict with count, mean and population std
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return {'count': 0, 'mean': float('nan'), 'std': float('nan')}
    return {'count': int(values.size), 'mean': float(values.mean()), 'std': float(values.std())}


class EvaluationResult(object):

    def __init__(self, rows, missing):
        #: list of dicts with C{EVAL_FIELDS} keys, in fold order
        self.rows = rows
        #: entries whose files could not be read
        self.missing = missing

    @property
    def status(self):
        return 1 if self.missing else 0

    def summary(self):
        summary = OrderedDict()
        summary['raw'] = summarize([r['chamfer_raw'] for r in self.rows])
        summary['normalized'] = summarize([r['chamfer_normalized'] for r in self.rows])
        summary['missing'] = list(self.missing)
        return summary

    def save(self, filename):
        logger.info(_("Save evaluation to file '%s'") % filename)
        with io.open(filename, 'w', newline='') as fd:
            writer = csv.DictWriter(fd, fieldnames=EVAL_FIELDS)
            writer.writeheader()
            for r in self.rows:
                writer.writerow(dict((k, '' if r[k] is None else (r[k] if k == 'mesh_id' else repr(r[k])))
                                     for k in EVAL_FIELDS))


def evaluate(entries, model, n_points, root=None, search=KDTREE, reconstruct_fn=None, noise_floor=False):
    """
    Eval-mode reconstruction of every entry and its Chamfer distance to the
    ground truth. Entries are processed by C{utils.thread_count()} workers;
    unreadable ones are listed in the result and skipped.
    @param model : L{Autoencoder}, unused when ``reconstruct_fn`` is given
    @param reconstruct_fn : pair -> predicted L{PointCloud}
    @rtype: L{EvaluationResult}
    """
    dataset = PairDataset(entries, n_points, root, cache=False)
    if reconstruct_fn is None:
        reconstruct_fn = lambda pair: model.reconstruct(pair.input)

    def measure(index):
        try:
            pair = dataset.pair(index)
        except (IOError, OSError, Error) as e:
            logger.warning(_("Skip '%s': %s") % (dataset.entries[index].mesh_id, e))
            return None
        result = chamfer_distance(reconstruct_fn(pair), pair.target, search)
        floor = None
        if noise_floor:
            mesh, _transform = normalize(load_mesh(dataset.path(pair.source)))
            floor = sampling_noise_floor(mesh, n_points, pair.spec.seed, search)
        return {'mesh_id': pair.mesh_id, 'chamfer_raw': result.value,
                'chamfer_normalized': result.normalized, 'noise_floor': floor}

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            measured = list(pool.map(measure, range(len(dataset))))
    else:
        measured = [measure(i) for i in range(len(dataset))]
    rows = [r for r in measured if r is not None]
    missing = [dataset.entries[i].mesh_id for i, r in enumerate(measured) if r is None]
    if missing:
        logger.warning(_("%d of %d entries could not be evaluated: %s") %
                       (len(missing), len(dataset), ", ".join(missing)))
    return EvaluationResult(rows, missing)
