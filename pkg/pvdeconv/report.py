#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Summaries of evaluation files: statistics as JSON, and a histogram of the
per-shape Chamfer distances as CSV bins and an SVG figure.
"""
import io
import csv
import json
import logging
from collections import OrderedDict
from gettext import gettext as _

import numpy as np
import matplotlib
matplotlib.use('Agg')
from matplotlib import pyplot

from .utils import ContractError
from .trainer import summarize


logger = logging.getLogger(__name__)


MIN_BINS = 10
COLUMNS = ('chamfer_raw', 'chamfer_normalized')


def read_evaluation(filename, column='chamfer_normalized'):
    """
    @rtype: (list of mesh ids, float array of ``column``)
    """
    logger.info(_("Load evaluation from file '%s'") % filename)
    with io.open(filename, newline='') as fd:
        rows = list(csv.DictReader(fd))
    if not rows:
        raise ContractError(_("'%s' holds no evaluated shape") % filename)
    if column not in rows[0]:
        raise ContractError(_("'%s' has no column '%s'") % (filename, column))
    return [r['mesh_id'] for r in rows], np.asarray([float(r[column]) for r in rows])


def bin_count(values):
    """
    Freedman-Diaconis rule, at least C{MIN_BINS} bins; a single distinct value
    makes a single bin.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2 or values.max() == values.min():
        return 1
    edges = np.histogram_bin_edges(values, bins='fd')
    return max(MIN_BINS, len(edges) - 1)


def histogram(values):
    """
    @rtype: (counts, bin edges)
    """
    return np.histogram(values, bins=bin_count(values))


def save_histogram_csv(filename, counts, edges):
    with io.open(filename, 'w', newline='') as fd:
        writer = csv.writer(fd)
        writer.writerow(('low', 'high', 'count'))
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            writer.writerow((repr(float(lo)), repr(float(hi)), int(c)))


def plot_histogram(filename, values, counts, edges, title):
    stats = summarize(values)
    figure, axes = pyplot.subplots(figsize=(6, 4))
    axes.hist(edges[:-1], bins=edges, weights=counts, color='#4c72b0', edgecolor='white')
    axes.axvline(stats['mean'], color='#c44e52', linestyle='--')
    axes.set_xlabel(title)
    axes.set_ylabel(_("shapes"))
    axes.set_title(_("mean %.4g, std %.4g, %d shapes") % (stats['mean'], stats['std'], stats['count']))
    figure.tight_layout()
    figure.savefig(filename, format='svg')
    pyplot.close(figure)
    logger.info(_("Save histogram to file '%s'") % filename)


def report(filename, prefix, column='chamfer_normalized'):
    """
    Write C{prefix}.json, C{prefix}.hist.csv and C{prefix}.svg for an evaluation file.
    @rtype: summary dict
    """
    ids, values = read_evaluation(filename, column)
    counts, edges = histogram(values)
    summary = OrderedDict()
    summary['source'] = filename
    summary['column'] = column
    summary.update(summarize(values))
    summary['min'] = float(values.min())
    summary['max'] = float(values.max())
    summary['worst'] = ids[int(np.argmax(values))]
    summary['bins'] = int(len(counts))
    with io.open(prefix + '.json', 'w', encoding='utf-8') as fd:
        fd.write(json.dumps(summary, indent=2) + u"\n")
    save_histogram_csv(prefix + '.hist.csv', counts, edges)
    plot_histogram(prefix + '.svg', values, counts, edges, column)
    return summary
