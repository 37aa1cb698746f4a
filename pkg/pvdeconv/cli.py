#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Command-line entry point: one subcommand per pipeline stage.

Exit status is 0 on success, 1 for user errors (bad input files, invalid
configurations, incompatible checkpoints) and 2 for training failures and
internal errors.
"""
import os
import sys
import json
import errno
import logging
import argparse
from concurrent.futures import ThreadPoolExecutor
from gettext import gettext as _

import pvdeconv
from .utils import Error, ContractError, derive_seed, thread_count
from .chamfer import SEARCHES, KDTREE, chamfer_distance
from .corruption import CorruptionSpec, corrupt_cloud, make_pair
from .geometry import (PRIMITIVES, load_mesh, load_points, mesh_readers, normalize, primitive,
                       sample_uniform, save_cloud, save_obj, save_xyz)
from .model import ModelConfig, Autoencoder, CONFIG_KEY
from .trainer import (TrainConfig, TrainingError, DatasetManifest, TEST_SPLIT, SPLITS,
                      evaluate, make_entries, split_dataset, train)
from . import checkpoint
from . import report


logger = logging.getLogger(__name__)


LEVELS = ('error', 'warning', 'info', 'debug')


#
#    Configuration flags
#


def add_config_flags(parser, cls, prefix=''):
    """
    One ``--key`` flag per field of ``cls``, left unset by default.
    """
    group = parser.add_argument_group(_("%s keys") % cls.__name__)
    for f in cls.FIELDS:
        group.add_argument('--%s%s' % (prefix, f.name.replace('_', '-')), dest=_dest(prefix, f.name),
                           default=None, metavar=f.kind.upper(), help=f.doc)


def _dest(prefix, name):
    return prefix.replace('-', '_') + name


def overrides(args, cls, prefix=''):
    return dict((f.name, getattr(args, _dest(prefix, f.name))) for f in cls.FIELDS)


def resolve(cls, preset, filename, flags):
    """
    Flag over file over preset.
    @rtype: L{KeyValueConfig}
    """
    config = cls.preset(preset) if preset else cls()
    if filename:
        config = cls.load(filename, config)
    config.update(flags)
    return config.validate()


def arguments_text(command, args):
    """
    Plain arguments of ``command`` in the key-value grammar.
    @type args : C{argparse.Namespace}
    """
    lines = ["# %s" % command]
    for key, value in sorted(vars(args).items()):
        if key in ('func', 'level') or value is None:
            continue
        lines.append("%s = %s" % (key, value))
    return "\n".join(lines) + "\n"


def echo(command, args, *configs):
    """
    Write the arguments, then the resolved configurations.
    """
    sys.stdout.write(arguments_text(command, args))
    for config in configs:
        sys.stdout.write(config.dumps())
    sys.stdout.flush()


def mesh_files(directory):
    if not os.path.isdir(directory):
        raise ContractError(_("'%s' is not a directory") % directory)
    extensions = set(mesh_readers())
    names = sorted(n for n in os.listdir(directory)
                   if os.path.splitext(n)[1].lstrip('.').lower() in extensions)
    if not names:
        raise ContractError(_("No mesh file (%s) in '%s'") % (", ".join(sorted(extensions)), directory))
    return [os.path.join(directory, n) for n in names]


def stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def makedirs(directory):
    if directory and not os.path.isdir(directory):
        os.makedirs(directory)


def parallel(function, items):
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(function, items))
    return [function(i) for i in items]


#
#    Subcommands
#


def cmd_primitives(args):
    echo('primitives', args)
    names = args.names.split(',') if args.names else sorted(PRIMITIVES)
    makedirs(args.out_dir)
    for name in names:
        save_obj(os.path.join(args.out_dir, "%s.obj" % name.strip()), primitive(name.strip()))
    return 0


def cmd_sample(args):
    echo('sample', args)
    sources = mesh_files(args.mesh_dir)
    makedirs(args.out_dir)

    def sample(source):
        mesh_id = stem(source)
        try:
            mesh, transform = normalize(load_mesh(source))
        except (IOError, OSError, Error) as e:
            logger.warning(_("Skip unreadable mesh '%s': %s") % (source, e))
            return False
        cloud = sample_uniform(mesh, args.n, derive_seed(args.seed, 'sample', mesh_id))
        save_cloud(os.path.join(args.out_dir, mesh_id + '.pvpc'), cloud)
        transform.save(os.path.join(args.out_dir, mesh_id + '.transform'))
        return True

    done = parallel(sample, sources)
    skipped = done.count(False)
    logger.info(_("Sampled %d of %d meshes") % (len(done) - skipped, len(done)))
    return 1 if skipped else 0


def cmd_corrupt(args):
    spec = resolve(CorruptionSpec, args.preset, args.config, overrides(args, CorruptionSpec))
    echo('corrupt', args, spec)
    if not os.path.isdir(args.in_dir):
        raise ContractError(_("'%s' is not a directory") % args.in_dir)
    extensions = set(mesh_readers())
    names = sorted(n for n in os.listdir(args.in_dir)
                   if n.endswith('.pvpc') or os.path.splitext(n)[1].lstrip('.').lower() in extensions)
    if not names:
        raise ContractError(_("No cloud or mesh file in '%s'") % args.in_dir)
    makedirs(args.out_dir)
    for name in names:
        path = os.path.join(args.in_dir, name)
        mesh_id = stem(name)
        entry_spec = spec.copy()
        entry_spec.seed = derive_seed(spec.seed, 'entry', mesh_id)
        if name.endswith('.pvpc'):
            corrupted = corrupt_cloud(load_points(path), entry_spec)
        else:
            pair = make_pair(load_mesh(path), entry_spec, args.n, mesh_id, path)
            save_cloud(os.path.join(args.out_dir, mesh_id + '.target.pvpc'), pair.target)
            corrupted = pair.input
        save_cloud(os.path.join(args.out_dir, mesh_id + '.pvpc'), corrupted)
    return 0


def cmd_split(args):
    config = resolve(TrainConfig, args.preset, args.train_config, overrides(args, TrainConfig))
    echo('split', args, config)
    sources = mesh_files(args.mesh_dir)
    root = os.path.dirname(os.path.abspath(args.out))
    scans = None
    if args.scan_dir:
        scans = dict((stem(p), os.path.relpath(p, root)) for p in mesh_files(args.scan_dir))
    relative = [os.path.relpath(os.path.abspath(p), root) for p in sources]
    proportions = tuple(float(p) for p in args.proportions.split(','))
    manifest = split_dataset(make_entries(relative, config, config.seed, scans), proportions, config.seed)
    makedirs(os.path.dirname(args.out))
    manifest.save(args.out)
    sys.stdout.write("train/val/test = %d/%d/%d\n" % manifest.sizes())
    return 0


def cmd_train(args):
    train_config = resolve(TrainConfig, args.preset, args.train_config, overrides(args, TrainConfig))
    flags = overrides(args, ModelConfig, 'model-')
    model_config = resolve(ModelConfig, args.model_preset, args.model_config, flags)
    if flags['n_points'] is None and model_config.n_points != train_config.n_points:
        # the cloud size is a training choice unless the model pins it
        model_config.n_points = train_config.n_points
    echo('train', args, model_config, train_config)
    manifest = DatasetManifest.load(args.manifest)
    state = train(manifest, model_config, train_config, args.out, args.resume)
    sys.stdout.write("best_val = %r\nbest_step = %d\nsteps = %d\n" % (state.best_val, state.best_step, state.step))
    return 0


def cmd_eval(args):
    echo('eval', args)
    model = Autoencoder.load(args.checkpoint)
    manifest = DatasetManifest.load(args.manifest)
    entries = manifest.fold(args.split)
    if not entries:
        raise ContractError(_("Fold '%s' of '%s' is empty") % (args.split, args.manifest))
    result = evaluate(entries, model, model.config.n_points, manifest.root, args.search,
                      noise_floor=args.noise_floor)
    makedirs(os.path.dirname(args.out))
    result.save(args.out)
    sys.stdout.write(json.dumps(result.summary(), indent=2) + "\n")
    return result.status


def cmd_embed(args):
    echo('embed', args)
    model = Autoencoder.load(args.checkpoint)
    embedding = model.encode(load_points(args.cloud))
    arrays = {
        'emb.global': embedding.global_feature.data,
        'emb.per_point': embedding.per_point.data,
        CONFIG_KEY: checkpoint.encode_text(model.config.dumps()),
    }
    checkpoint.save(args.out, arrays)
    sys.stdout.write("global = %d\nper_point = %d x %d\n" %
                     ((embedding.global_feature.shape[0],) + embedding.per_point.shape))
    return 0


def cmd_reconstruct(args):
    echo('reconstruct', args)
    model = Autoencoder.load(args.checkpoint)
    cloud = load_points(args.cloud)
    if cloud.n != model.config.n_points:
        raise ContractError(_("Cloud '%s' has %d points, checkpoint '%s' expects %d") %
                            (args.cloud, cloud.n, args.checkpoint, model.config.n_points))
    output = model.reconstruct(cloud)
    if args.out.endswith('.xyz'):
        save_xyz(args.out, output)
    else:
        save_cloud(args.out, output)
    sys.stdout.write("chamfer = %r\n" % chamfer_distance(output, cloud, args.search).value)
    return 0


def cmd_report(args):
    echo('report', args)
    summary = report.report(args.eval_csv, args.out, args.column)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


#
#    Parser
#


def build_parser():
    parser = argparse.ArgumentParser(prog='pvdeconv-run', description=pvdeconv.__description__)
    parser.add_argument('--version', action='version', version='%(prog)s ' + pvdeconv.__version__)
    parser.add_argument('--level', choices=LEVELS, default='info', help=_("logging level"))
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    p = commands.add_parser('primitives', help=_("write primitive meshes as OBJ files"))
    p.add_argument('--out-dir', required=True)
    p.add_argument('--names', default=None, help=_("comma-separated subset of %s") % ", ".join(sorted(PRIMITIVES)))
    p.set_defaults(func=cmd_primitives)

    p = commands.add_parser('sample', help=_("sample normalized point clouds from meshes"))
    p.add_argument('--mesh-dir', required=True)
    p.add_argument('--out-dir', required=True)
    p.add_argument('--n', type=int, default=2500, help=_("points per cloud"))
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = commands.add_parser('corrupt', help=_("apply virtual-scan artifacts to clouds or meshes"))
    p.add_argument('--in-dir', required=True)
    p.add_argument('--out-dir', required=True)
    p.add_argument('--n', type=int, default=2500, help=_("points sampled from meshes"))
    p.add_argument('--preset', choices=sorted(CorruptionSpec.PRESETS), default=None)
    p.add_argument('--config', default=None, help=_("corruption configuration file"))
    add_config_flags(p, CorruptionSpec)
    p.set_defaults(func=cmd_corrupt)

    p = commands.add_parser('split', help=_("write a train/val/test manifest for a mesh directory"))
    p.add_argument('--mesh-dir', required=True)
    p.add_argument('--scan-dir', default=None, help=_("scan meshes named like their CAD mesh"))
    p.add_argument('--out', required=True, help=_("manifest file"))
    p.add_argument('--proportions', default='0.8,0.1,0.1')
    p.add_argument('--preset', choices=sorted(TrainConfig.PRESETS), default=None)
    p.add_argument('--train-config', default=None)
    add_config_flags(p, TrainConfig)
    p.set_defaults(func=cmd_split)

    p = commands.add_parser('train', help=_("train an autoencoder on a manifest"))
    p.add_argument('--manifest', required=True)
    p.add_argument('--out', required=True, help=_("output directory"))
    p.add_argument('--resume', default=None, help=_("checkpoint to continue from"))
    p.add_argument('--preset', choices=sorted(TrainConfig.PRESETS), default=None)
    p.add_argument('--train-config', default=None)
    p.add_argument('--model-preset', choices=sorted(ModelConfig.PRESETS), default=None)
    p.add_argument('--model-config', default=None)
    add_config_flags(p, TrainConfig)
    add_config_flags(p, ModelConfig, 'model-')
    p.set_defaults(func=cmd_train)

    p = commands.add_parser('eval', help=_("Chamfer distances of a fold"))
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--manifest', required=True)
    p.add_argument('--split', choices=SPLITS, default=TEST_SPLIT)
    p.add_argument('--out', required=True, help=_("CSV file"))
    p.add_argument('--search', choices=SEARCHES, default=KDTREE)
    p.add_argument('--noise-floor', action='store_true', help=_("also record the sampling noise floor"))
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser('embed', help=_("write the embedding of a cloud"))
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--cloud', required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_embed)

    p = commands.add_parser('reconstruct', help=_("reconstruct a cloud through the autoencoder"))
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--cloud', required=True)
    p.add_argument('--out', required=True, help=_("output cloud, .pvpc or .xyz"))
    p.add_argument('--search', choices=SEARCHES, default=KDTREE)
    p.set_defaults(func=cmd_reconstruct)

    p = commands.add_parser('report', help=_("histogram and summary of an evaluation CSV"))
    p.add_argument('--eval-csv', required=True)
    p.add_argument('--out', required=True, help=_("prefix of the .json, .hist.csv and .svg outputs"))
    p.add_argument('--column', choices=report.COLUMNS, default='chamfer_normalized')
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.level.upper()),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except KeyboardInterrupt:
        sys.exit(errno.EINTR)
    except TrainingError as e:
        logger.exception(e)
        return 2
    except (Error, IOError, OSError) as e:
        logger.error(e)
        return 1
    except Exception as e:
        logger.exception(_("Unexpected error: %s") % e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
