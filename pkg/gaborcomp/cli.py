# -*- coding: utf-8 -*-
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#

"""Command line interface of gaborcomp.

Every stage of the pipeline is a subcommand that reads the artifacts
written by the previous one, so stages can be run and inspected on
their own. `pipeline` chains them all from a single configuration.
"""

import argparse
import contextlib
import glob
import json
import logging
import os
import sys

import redis
import rq

from ._version import __version__
from .classifier import count_params
from .common import (BATCH_SIZE,
                     D_HEAD,
                     EPOCHS,
                     LEARNING_RATE,
                     MOMENTUM,
                     N_FOLDS,
                     N_HEADS,
                     Q_PURSUIT_JOBS,
                     RANK_TOL,
                     SAMPLE_RATE,
                     SEED,
                     SEGMENT_LENGTH,
                     SPARSITY_LEVEL)
from .config import (FEATURE_MODES,
                     FIT_METHODS,
                     GROUPING_KEYS,
                     PursuitConfig,
                     RunConfig,
                     SynthSpec,
                     TrainConfig)
from .dictionary import AtomParams, build_multires
from .errors import (BaseError,
                     DimError,
                     FormatError,
                     InvalidResolutionError,
                     NotFoundError)
from .evaluation import cross_validate, holdout_split, sweep_architectures
from .features import MAGNITUDE, featurize
from .formats import (CODE_EXT,
                      code_filename,
                      list_codes,
                      read_code,
                      read_dictionary,
                      read_features,
                      read_model,
                      write_atom,
                      write_code,
                      write_curves,
                      write_dictionary,
                      write_features,
                      write_model,
                      write_predictions,
                      write_stack_csv)
from .scheduler import PursuitScheduler
from .signals import (MurmurClass,
                      load_segments,
                      make_synth_dataset,
                      recording_of,
                      write_segment_set)
from .training import dataset_labels, predict_batch, train
from .utils import write_json
from .worker import PursuitWorker


logger = logging.getLogger(__name__)


PROG = 'gaborcomp'
DEFAULT_DATABASE = 'redis://localhost/8'

LOG_FORMAT = "[%(asctime)s] - %(message)s"
DEBUG_LOG_FORMAT = "[%(asctime)s - %(name)s - %(levelname)s] - %(message)s"
LOG_FILENAME = 'gaborcomp.log'

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

VALIDATION_ERRORS = (FormatError, InvalidResolutionError, DimError)

# Artifacts written by `pipeline` inside the working directory
PIPELINE_DATA = 'data'
PIPELINE_DICTIONARY = 'dict.mrgd'
PIPELINE_CODES = 'codes'
PIPELINE_FEATURES = 'feats.mrgf'
PIPELINE_REPORT = 'report.json'
PIPELINE_MODEL = 'model.mrgm'
PIPELINE_CURVES = 'curves.csv'
PIPELINE_CONFIG = 'config.json'


@contextlib.contextmanager
def stage(name):
    """Tag the errors raised inside the block with the stage `name`."""

    try:
        yield
    except (BaseError, ValueError) as e:
        if not hasattr(e, 'pipeline_stage'):
            e.pipeline_stage = name
        raise


def configure_logging(log_path=None, debug=False):
    """Configure the logging system.

    :param log_path: directory where the log file is stored; when it
        is `None`, records are written to stderr
    :param debug: set the debug mode
    """
    level = logging.DEBUG if debug else logging.INFO
    fmt = DEBUG_LOG_FORMAT if debug else LOG_FORMAT

    if log_path:
        os.makedirs(log_path, exist_ok=True)
        logfile = os.path.join(log_path, LOG_FILENAME)
        logging.basicConfig(filename=logfile, level=level, format=fmt)
    else:
        logging.basicConfig(stream=sys.stderr, level=level, format=fmt)

    if not debug:
        logging.getLogger('rq').setLevel(logging.WARNING)


def connect_to_database(url):
    """Connection to the Redis database of the pursuit queues"""

    if url is None:
        return None

    conn = redis.StrictRedis.from_url(url)
    try:
        conn.ping()
    except redis.exceptions.ConnectionError as e:
        logger.error("Cannot connect to %s; %s", url, str(e))
        raise NotFoundError(element="Redis database at %s" % url)
    return conn


def build_dictionary(M, out, dump_atom=None, dump_out=None):
    """Build the dictionary of length `M` and write it to `out`.

    When `dump_atom` is given as 'j,t,f', the normalized atom is
    also written as CSV to `dump_out` or to the standard output.
    """
    dictionary = build_multires(M)
    write_dictionary(dictionary, out)

    logger.info("Dictionary with %d atoms written to %s", dictionary.n_atoms, out)

    if dump_atom:
        atom = dictionary.atom(AtomParams.parse(dump_atom))
        write_atom(atom, dump_out if dump_out else sys.stdout)

    return dictionary


def write_synth(specs, out, M=SEGMENT_LENGTH, sample_rate=SAMPLE_RATE):
    """Generate a synthetic dataset and write it to `out`."""

    segment_set = make_synth_dataset(specs, M=M, sample_rate=sample_rate)
    manifest = write_segment_set(segment_set, out)

    logger.info("Synthetic dataset written to %s", manifest)

    return manifest


def decompose(dict_path, manifest, out, M=None, pursuit_cfg=None, joint_by=None,
              fit='interpolate', conn=None, async_mode=True):
    """Decompose the segments of a manifest and write their codes.

    Code files are named after the position of the segment on the
    manifest. Previous code files of `out` are removed.

    :returns: list of written paths
    """
    dictionary = read_dictionary(dict_path, M=M)

    segment_set = load_segments(manifest, M=dictionary.M, fit=fit)
    segment_set.validate(dictionary.M)

    scheduler = PursuitScheduler(os.path.abspath(dict_path), cfg=pursuit_cfg,
                                 conn=conn, async_mode=async_mode)
    codes = scheduler.decompose(segment_set, joint_by=joint_by)

    os.makedirs(out, exist_ok=True)
    for stale in glob.glob(os.path.join(out, '*' + CODE_EXT)):
        os.remove(stale)

    paths = []
    for i, (segment, code) in enumerate(zip(segment_set, codes)):
        path = os.path.join(out, code_filename(i))
        write_code(code, path, dictionary.M,
                   label=segment.label,
                   recording_id=segment.recording_id,
                   group=segment.recording_id if joint_by else None)
        paths.append(path)

    logger.info("%d codes written to %s", len(paths), out)

    return paths


def _code_label(header):
    label = header.get('label')
    return None if label is None else MurmurClass.from_label(label)


def featurize_codes(codes_dir, out, mode='sq', max_normalize=False,
                    dump=None, dump_dir=None, dump_mode=MAGNITUDE):
    """Turn the codes of a directory into a feature bundle.

    When `dump` is given, the stack whose reference or position
    matches it is also written as CSV matrices to `dump_dir`.

    :returns: list of `FeatureStack`
    """
    stacks = []
    dumped = False

    for i, path in enumerate(list_codes(codes_dir)):
        code, header = read_code(path)
        label = _code_label(header)
        stacks.append(featurize(code, mode=mode, label=label,
                                max_normalize=max_normalize, M=header['M']))

        if dump is not None and dump in (str(i), code.segment_ref):
            view = featurize(code, mode=dump_mode, label=label,
                             max_normalize=max_normalize, M=header['M'])
            for csv_path in write_stack_csv(view, dump_dir or os.path.dirname(out) or '.'):
                logger.info("Matrix written to %s", csv_path)
            dumped = True

    if dump is not None and not dumped:
        raise NotFoundError(element="stack %s" % dump)

    write_features(stacks, out)

    logger.info("%d feature stacks written to %s", len(stacks), out)

    return stacks


def train_model(feats, out, cfg=None, heads=N_HEADS, d_head=D_HEAD, val_split=0.0,
                curves=None):
    """Train a model on a feature bundle and write the checkpoint.

    With a positive `val_split`, a stratified part of the stacks is
    held out to validate the model after every epoch.
    """
    cfg = cfg or TrainConfig()
    stacks = read_features(feats)

    validation = None
    if val_split > 0:
        training, held_out = holdout_split(dataset_labels(stacks), val_split, seed=cfg.seed)
        validation = [stacks[i] for i in held_out] or None
        stacks = [stacks[i] for i in training]

    model, history = train(stacks, cfg=cfg, heads=heads, d_head=d_head,
                           validation=validation)
    write_model(model, out)

    if curves:
        write_curves(history, curves)

    total, _ = count_params(model)
    logger.info("Model with %d parameters written to %s", total, out)

    return model, history


def predict_features(model_path, feats, out):
    """Predict the class of every stack of a bundle and write them as CSV."""

    model = read_model(model_path)
    stacks = read_features(feats)

    if stacks and stacks[0].M != model.M:
        raise FormatError(artifact=feats,
                          cause="features M=%d do not match model M=%d"
                          % (stacks[0].M, model.M))

    classes, probs = predict_batch(stacks, model)
    write_predictions(stacks, classes, probs, out)

    logger.info("%d predictions written to %s", len(stacks), out)

    return classes, probs


def _groups_of(stacks, group_by):
    if group_by is None:
        return None
    return [recording_of(stack.segment_ref) for stack in stacks]


def evaluate_features(feats, out, cfg=None, heads=N_HEADS, d_head=D_HEAD, k=N_FOLDS,
                      seed=SEED, group_by=None):
    """Cross-validate the classifier on a bundle and write the report."""

    cfg = cfg or TrainConfig(seed=seed)
    stacks = read_features(feats)

    cv = cross_validate(stacks, k=k, cfg=cfg, heads=heads, d_head=d_head,
                        seed=seed, groups=_groups_of(stacks, group_by))

    report = cv.to_dict()
    report['heads'] = heads
    report['d_head'] = d_head
    report['group_by'] = group_by
    report['train'] = cfg.to_dict()
    write_json(report, out)

    logger.info("Evaluation report written to %s; macro accuracy %.4f +/- %.4f",
                out, cv.aggregate['macro_accuracy']['mean'],
                cv.aggregate['macro_accuracy']['std'])

    return cv


def sweep_features(feats, out, heads_grid, d_head_grid, cfg=None, k=N_FOLDS,
                   seed=SEED, group_by=None):
    """Cross-validate a grid of architectures and write the results."""

    cfg = cfg or TrainConfig(seed=seed)
    stacks = read_features(feats)

    results = sweep_architectures(stacks, heads_grid, d_head_grid, k=k, cfg=cfg,
                                  seed=seed, groups=_groups_of(stacks, group_by))
    write_json({'k': k, 'seed': seed, 'train': cfg.to_dict(), 'results': results}, out)

    logger.info("Sweep of %d architectures written to %s", len(results), out)

    return results


def run_pipeline(cfg, conn=None, async_mode=True):
    """Run every stage of the pipeline with the configuration `cfg`.

    Artifacts are written to `cfg.workdir`.
    """
    workdir = cfg.workdir
    os.makedirs(workdir, exist_ok=True)

    def path(name):
        return os.path.join(workdir, name)

    write_json(cfg.to_dict(), path(PIPELINE_CONFIG))

    with stage('synth'):
        if cfg.synth:
            manifest = write_synth(cfg.synth, path(PIPELINE_DATA),
                                   M=cfg.segment_length, sample_rate=cfg.sample_rate)
        else:
            manifest = cfg.manifest

    with stage('build-dict'):
        build_dictionary(cfg.segment_length, path(PIPELINE_DICTIONARY))

    with stage('decompose'):
        decompose(path(PIPELINE_DICTIONARY), manifest, path(PIPELINE_CODES),
                  M=cfg.segment_length, pursuit_cfg=cfg.pursuit_config(),
                  joint_by=cfg.joint_by, fit=cfg.fit, conn=conn, async_mode=async_mode)

    with stage('featurize'):
        featurize_codes(path(PIPELINE_CODES), path(PIPELINE_FEATURES),
                        mode=cfg.mode, max_normalize=cfg.max_normalize)

    with stage('eval'):
        evaluate_features(path(PIPELINE_FEATURES), path(PIPELINE_REPORT),
                          cfg=cfg.train_config(), heads=cfg.heads, d_head=cfg.d_head,
                          k=cfg.k, seed=cfg.seed, group_by=cfg.group_by)

    with stage('train'):
        train_model(path(PIPELINE_FEATURES), path(PIPELINE_MODEL),
                    cfg=cfg.train_config(), heads=cfg.heads, d_head=cfg.d_head,
                    val_split=cfg.val_split, curves=path(PIPELINE_CURVES))

    logger.info("Pipeline finished; artifacts written to %s", workdir)


def read_synth_specs(filepath):
    """Read synthetic specs from a JSON file.

    The file contains either a list of specs, a single spec or a
    run configuration with a `synth` entry.

    :returns: a tuple with the list of `SynthSpec`, the segment
        length and the sample rate
    """
    with open(filepath, 'r', encoding='utf-8') as fd:
        try:
            data = json.load(fd)
        except json.JSONDecodeError as e:
            raise ValueError("invalid specs file %s; %s" % (filepath, str(e)))

    if isinstance(data, list):
        return [SynthSpec.from_dict(spec) for spec in data], None, None
    if isinstance(data, dict) and 'synth' in data:
        cfg = RunConfig.from_dict(data)
        return cfg.synth, cfg.segment_length, cfg.sample_rate
    if isinstance(data, dict):
        return [SynthSpec.from_dict(data)], None, None

    raise ValueError("invalid specs file %s; a list or an object is expected" % filepath)


def _int_list(value):
    try:
        values = [int(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("'%s' is not a list of integers" % value)
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_train_arguments(parser):
    group = parser.add_argument_group('training arguments')
    group.add_argument('--heads', dest='heads', type=int, default=N_HEADS,
                       help="number of attention heads")
    group.add_argument('--dhead', dest='d_head', type=int, default=D_HEAD,
                       help="dimension of every head")
    group.add_argument('--lr', dest='learning_rate', type=float, default=LEARNING_RATE,
                       help="learning rate")
    group.add_argument('--momentum', dest='momentum', type=float, default=MOMENTUM,
                       help="momentum factor")
    group.add_argument('--batch', dest='batch_size', type=int, default=BATCH_SIZE,
                       help="batch size")
    group.add_argument('--epochs', dest='epochs', type=int, default=EPOCHS,
                       help="number of epochs")
    group.add_argument('--seed', dest='seed', type=int, default=SEED,
                       help="seed of initialization, shuffling and folds")


def _train_config(args):
    return TrainConfig(learning_rate=args.learning_rate,
                       momentum=args.momentum,
                       batch_size=args.batch_size,
                       epochs=args.epochs,
                       seed=args.seed)


def _cmd_build_dict(args):
    build_dictionary(args.M, args.out, dump_atom=args.dump_atom, dump_out=args.dump_out)


def _cmd_synth(args):
    specs, M, sample_rate = read_synth_specs(args.config)
    write_synth(specs, args.out,
                M=args.M or M or SEGMENT_LENGTH,
                sample_rate=args.sample_rate or sample_rate or SAMPLE_RATE)


def _cmd_decompose(args):
    cfg = PursuitConfig(zeta=args.zeta, residual_tol=args.residual_tol,
                        rank_tol=args.rank_tol)
    conn = connect_to_database(args.database)
    decompose(args.dict_path, args.manifest, args.out, M=args.M, pursuit_cfg=cfg,
              joint_by=args.joint_by, fit=args.fit, conn=conn,
              async_mode=not args.sync)


def _cmd_featurize(args):
    featurize_codes(args.codes, args.out, mode=args.mode,
                    max_normalize=args.max_normalize,
                    dump=args.dump_csv, dump_dir=args.dump_dir)


def _cmd_train(args):
    train_model(args.feats, args.out, cfg=_train_config(args),
                heads=args.heads, d_head=args.d_head,
                val_split=args.val_split, curves=args.log)


def _cmd_predict(args):
    predict_features(args.model, args.feats, args.out)


def _cmd_eval(args):
    evaluate_features(args.feats, args.out, cfg=_train_config(args),
                      heads=args.heads, d_head=args.d_head, k=args.k,
                      seed=args.seed, group_by=args.group_by)


def _cmd_sweep(args):
    sweep_features(args.feats, args.out, args.heads_grid, args.d_head_grid,
                   cfg=_train_config(args), k=args.k, seed=args.seed,
                   group_by=args.group_by)


def _cmd_pipeline(args):
    cfg = RunConfig.from_file(args.config)
    if args.database:
        cfg.database = args.database
    conn = connect_to_database(cfg.database)
    run_pipeline(cfg, conn=conn, async_mode=not args.sync)


def create_parser():
    """Parser of the `gaborcomp` command"""

    parser = argparse.ArgumentParser(prog=PROG,
                                     description="Gabor sparse coding and transformer "
                                                 "classification of murmur segments")
    parser.add_argument('-g', '--debug', dest='debug', action='store_true',
                        help="set debug mode on")
    parser.add_argument('--log-path', dest='log_path',
                        help="path where logs are stored")
    parser.add_argument('-v', '--version', action='version',
                        version="%(prog)s " + __version__)

    subparsers = parser.add_subparsers(dest='command', metavar='<command>')
    subparsers.required = True

    # build-dict
    cmd = subparsers.add_parser('build-dict', help="build the multiresolution dictionary")
    cmd.add_argument('--m', dest='M', type=int, default=SEGMENT_LENGTH,
                     help="segment length; a power of two")
    cmd.add_argument('--out', dest='out', default=PIPELINE_DICTIONARY,
                     help="dictionary file")
    cmd.add_argument('--dump-atom', dest='dump_atom', metavar='J,T,F',
                     help="write the atom (j, t, f) as CSV")
    cmd.add_argument('--dump-out', dest='dump_out',
                     help="file of the dumped atom; stdout by default")
    cmd.set_defaults(func=_cmd_build_dict)

    # synth
    cmd = subparsers.add_parser('synth', help="write a synthetic dataset")
    cmd.add_argument('-c', '--config', dest='config', required=True,
                     help="JSON file with the synthetic specs")
    cmd.add_argument('--m', dest='M', type=int,
                     help="segment length")
    cmd.add_argument('--sample-rate', dest='sample_rate', type=int,
                     help="sampling rate in Hz")
    cmd.add_argument('--out', dest='out', required=True,
                     help="output directory")
    cmd.set_defaults(func=_cmd_synth)

    # decompose
    cmd = subparsers.add_parser('decompose', help="decompose the segments of a manifest")
    cmd.add_argument('--dict', dest='dict_path', required=True,
                     help="dictionary file")
    cmd.add_argument('--manifest', dest='manifest', required=True,
                     help="manifest of segments")
    cmd.add_argument('--m', dest='M', type=int,
                     help="expected segment length")
    cmd.add_argument('--zeta', dest='zeta', type=int, default=SPARSITY_LEVEL,
                     help="sparsity level")
    cmd.add_argument('--residual-tol', dest='residual_tol', type=float, default=0.0,
                     help="relative residual stopping ratio")
    cmd.add_argument('--rank-tol', dest='rank_tol', type=float, default=RANK_TOL,
                     help="least-squares rank threshold")
    cmd.add_argument('--joint-by', dest='joint_by', choices=GROUPING_KEYS,
                     help="decompose jointly the segments sharing this column")
    cmd.add_argument('--fit', dest='fit', choices=FIT_METHODS, default='interpolate',
                     help="length fitting method")
    cmd.add_argument('--out', dest='out', required=True,
                     help="output directory of the codes")
    cmd.add_argument('-d', '--database', dest='database',
                     help="URL of the Redis database of the pursuit queues "
                          "(e.g. '%s')" % DEFAULT_DATABASE)
    cmd.add_argument('-s', '--sync', dest='sync', action='store_true',
                     help="run queued jobs in this process")
    cmd.set_defaults(func=_cmd_decompose)

    # featurize
    cmd = subparsers.add_parser('featurize', help="turn sparse codes into feature stacks")
    cmd.add_argument('--codes', dest='codes', required=True,
                     help="directory of the codes")
    cmd.add_argument('--mode', dest='mode', choices=FEATURE_MODES, default='sq',
                     help="'mag' for magnitudes, 'sq' for squared magnitudes")
    cmd.add_argument('--max-normalize', dest='max_normalize', action='store_true',
                     help="scale every stack to a maximum of 1")
    cmd.add_argument('--out', dest='out', required=True,
                     help="feature bundle")
    cmd.add_argument('--dump-csv', dest='dump_csv', metavar='STACK',
                     help="write the magnitudes of a stack, by reference or position, as CSV")
    cmd.add_argument('--dump-dir', dest='dump_dir',
                     help="directory of the dumped matrices")
    cmd.set_defaults(func=_cmd_featurize)

    # train
    cmd = subparsers.add_parser('train', help="train the classifier")
    cmd.add_argument('--feats', dest='feats', required=True,
                     help="feature bundle")
    _add_train_arguments(cmd)
    cmd.add_argument('--val-split', dest='val_split', type=float, default=0.0,
                     help="fraction of stacks held out for validation")
    cmd.add_argument('--out', dest='out', required=True,
                     help="model file")
    cmd.add_argument('--log', dest='log',
                     help="CSV file of the training curves")
    cmd.set_defaults(func=_cmd_train)

    # predict
    cmd = subparsers.add_parser('predict', help="classify feature stacks")
    cmd.add_argument('--model', dest='model', required=True,
                     help="model file")
    cmd.add_argument('--feats', dest='feats', required=True,
                     help="feature bundle")
    cmd.add_argument('--out', dest='out', required=True,
                     help="CSV file of predictions")
    cmd.set_defaults(func=_cmd_predict)

    # eval
    cmd = subparsers.add_parser('eval', help="cross-validate the classifier")
    cmd.add_argument('--feats', dest='feats', required=True,
                     help="feature bundle")
    cmd.add_argument('--k', dest='k', type=int, default=N_FOLDS,
                     help="number of folds")
    cmd.add_argument('--group-by', dest='group_by', choices=GROUPING_KEYS,
                     help="keep segments sharing this column in the same fold")
    _add_train_arguments(cmd)
    cmd.add_argument('--out', dest='out', required=True,
                     help="JSON report")
    cmd.set_defaults(func=_cmd_eval)

    # sweep
    cmd = subparsers.add_parser('sweep', help="cross-validate a grid of architectures")
    cmd.add_argument('--feats', dest='feats', required=True,
                     help="feature bundle")
    cmd.add_argument('--heads-grid', dest='heads_grid', type=_int_list, default=[1, 2, 4],
                     help="comma separated numbers of heads")
    cmd.add_argument('--dhead-grid', dest='d_head_grid', type=_int_list, default=[8, 16, 32],
                     help="comma separated head dimensions")
    cmd.add_argument('--k', dest='k', type=int, default=N_FOLDS,
                     help="number of folds")
    cmd.add_argument('--group-by', dest='group_by', choices=GROUPING_KEYS,
                     help="keep segments sharing this column in the same fold")
    _add_train_arguments(cmd)
    cmd.add_argument('--out', dest='out', required=True,
                     help="JSON results")
    cmd.set_defaults(func=_cmd_sweep)

    # pipeline
    cmd = subparsers.add_parser('pipeline', help="run every stage from a configuration file")
    cmd.add_argument('-c', '--config', dest='config', required=True,
                     help="JSON run configuration")
    cmd.add_argument('-d', '--database', dest='database',
                     help="URL of the Redis database of the pursuit queues")
    cmd.add_argument('-s', '--sync', dest='sync', action='store_true',
                     help="run queued jobs in this process")
    cmd.set_defaults(func=_cmd_pipeline)

    return parser


def _report_error(stage_name, code, error):
    message = ' '.join(str(error).split())
    sys.stderr.write("%s: error: stage=%s code=%d message=%s\n"
                     % (PROG, stage_name, code, message))
    return code


def main(argv=None):
    """Run a subcommand and return its exit code."""

    parser = create_parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    configure_logging(args.log_path, args.debug)

    try:
        with stage(args.command):
            args.func(args)
    except VALIDATION_ERRORS as e:
        return _report_error(e.pipeline_stage, EXIT_VALIDATION, e)
    except (BaseError, ValueError) as e:
        return _report_error(e.pipeline_stage, EXIT_ERROR, e)
    except OSError as e:
        return _report_error(args.command, EXIT_ERROR, e)

    return EXIT_OK


def create_worker_parser():
    """Parser of the `gaborcompw` command"""

    parser = argparse.ArgumentParser(prog='gaborcompw',
                                     description="Worker of the gaborcomp pursuit queues")
    parser.add_argument('-g', '--debug', dest='debug', action='store_true',
                        help="set debug mode on")
    parser.add_argument('-d', '--database', dest='database', default=DEFAULT_DATABASE,
                        help="URL database connection (default: '%s')" % DEFAULT_DATABASE)
    parser.add_argument('-b', '--burst', dest='burst', action='store_true',
                        help="run in burst mode (quit after all work is done)")
    parser.add_argument('queues', metavar='queues', nargs='*',
                        default=[Q_PURSUIT_JOBS],
                        help="list of queues this worker will listen for")
    return parser


def worker_main(argv=None):
    """Run a pursuit worker until it is stopped or, in burst mode, idle."""

    parser = create_worker_parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    configure_logging(debug=args.debug)

    try:
        conn = connect_to_database(args.database)
    except NotFoundError as e:
        return _report_error('worker', EXIT_ERROR, e)

    queues = [rq.Queue(name, connection=conn) for name in args.queues]
    worker = PursuitWorker(queues, connection=conn)
    worker.work(burst=args.burst)

    return EXIT_OK
