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

import json
import logging
import math
import re

from grimoirelab_toolkit.introspect import find_class_properties

from .common import (BATCH_SIZE,
                     D_HEAD,
                     EPOCHS,
                     LEARNING_RATE,
                     MOMENTUM,
                     N_FOLDS,
                     N_HEADS,
                     RANK_TOL,
                     SAMPLE_RATE,
                     SEED,
                     SEGMENT_LENGTH,
                     SPARSITY_LEVEL,
                     VAL_SPLIT)
from .signals import MurmurClass


logger = logging.getLogger(__name__)


FIT_METHODS = ('interpolate', 'pad')
FEATURE_MODES = ('mag', 'sq')
GROUPING_KEYS = ('recording_id',)


def _check_int(name, value, minimum=None):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError("'%s' must be an int; %s given" % (name, str(type(value))))
    if minimum is not None and value < minimum:
        raise ValueError("'%s' must be greater or equal than %s; %s given"
                         % (name, minimum, value))
    return value


def _check_float(name, value, minimum=None, maximum=None):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValueError("'%s' must be a float; %s given" % (name, str(type(value))))
    value = float(value)
    if minimum is not None and value < minimum:
        raise ValueError("'%s' must be greater or equal than %s; %s given"
                         % (name, minimum, value))
    if maximum is not None and value >= maximum:
        raise ValueError("'%s' must be lower than %s; %s given"
                         % (name, maximum, value))
    return value


def _check_choice(name, value, choices):
    if value not in choices:
        raise ValueError("'%s' must be one of %s; %s given"
                         % (name, ', '.join(choices), str(value)))
    return value


def _check_optional_str(name, value):
    if value is not None and not isinstance(value, str):
        raise ValueError("'%s' must be a str; %s given" % (name, str(type(value))))
    return value


class _Config:
    """Abstract class to store configuration options.

    Configuration options must be defined using `property` and `setter`
    decorators. Setters must check whether the given value is valid
    or not. When it is invalid, a `ValueError` exception should be
    raised. The rationale behind this is to use these methods as
    parsers when `from_dict` class method is called. It will create
    a new instance of the subclass passing its properties from a
    dictionary.
    """
    KW_ARGS_ERROR_REGEX = re.compile(r"^.+ got an unexpected keyword argument '(.+)'$")

    def to_dict(self):
        """Returns a dict with the representation of this configuration object."""

        properties = find_class_properties(self.__class__)
        config = {
            name: self.__getattribute__(name) for name, _ in properties
        }
        return config

    @classmethod
    def from_dict(cls, config):
        """Create a configuration object from a dictionary.

        Key,value pairs will be used to initialize a configuration
        object. If 'config' contains invalid configuration parameters
        a `ValueError` exception will be raised.

        :param config: dictionary used to create an instance of this object

        :returns: a config instance

        :raises ValueError: when an invalid configuration parameter is found
        """
        try:
            obj = cls(**config)
        except TypeError as e:
            m = cls.KW_ARGS_ERROR_REGEX.match(str(e))
            if m:
                raise ValueError("unknown '%s' %s parameter" % (m.group(1), cls.__name__))
            else:
                raise e
        else:
            return obj

    def __eq__(self, other):
        if not isinstance(other, self.__class__):
            return NotImplemented
        return self.to_dict() == other.to_dict()


class PursuitConfig(_Config):
    """Manages the configuration of a complex matching pursuit.

    The `zeta` option sets the sparsity level, that is, the maximum
    number of atoms selected for a segment.

    The `residual_tol` option stops the pursuit once the relative
    residual norm falls below it. Set it to 0 to run `zeta`
    iterations always.

    The `rank_tol` option is the relative threshold, scaled by the
    norm of the input, under which a selected atom is considered
    linearly dependent on the atoms selected before.

    :param zeta: sparsity level
    :param residual_tol: relative residual stopping ratio
    :param rank_tol: least-squares rank threshold
    """
    def __init__(self, zeta=SPARSITY_LEVEL, residual_tol=0.0, rank_tol=RANK_TOL):
        self.zeta = zeta
        self.residual_tol = residual_tol
        self.rank_tol = rank_tol

    @property
    def zeta(self):
        """Maximum number of selected atoms."""

        return self._zeta

    @zeta.setter
    def zeta(self, value):
        self._zeta = _check_int('zeta', value, minimum=1)

    @property
    def residual_tol(self):
        """Relative residual norm that stops the pursuit."""

        return self._residual_tol

    @residual_tol.setter
    def residual_tol(self, value):
        self._residual_tol = _check_float('residual_tol', value, minimum=0.0, maximum=1.0)

    @property
    def rank_tol(self):
        """Rank threshold, relative to the norm of the input."""

        return self._rank_tol

    @rank_tol.setter
    def rank_tol(self, value):
        self._rank_tol = _check_float('rank_tol', value, minimum=0.0)


class TrainConfig(_Config):
    """Manages the training configuration of the classifier.

    Training uses stochastic gradient descent with heavy-ball momentum
    on the mean cross-entropy of each batch. Initialization, shuffling
    and batching are driven by `seed`.

    :param learning_rate: step size
    :param momentum: momentum factor
    :param batch_size: number of stacks per batch
    :param epochs: number of passes over the training set
    :param seed: seed of every random decision taken while training
    """
    def __init__(self, learning_rate=LEARNING_RATE, momentum=MOMENTUM,
                 batch_size=BATCH_SIZE, epochs=EPOCHS, seed=SEED):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    @property
    def learning_rate(self):
        return self._learning_rate

    @learning_rate.setter
    def learning_rate(self, value):
        self._learning_rate = _check_float('learning_rate', value, minimum=0.0)

    @property
    def momentum(self):
        return self._momentum

    @momentum.setter
    def momentum(self, value):
        self._momentum = _check_float('momentum', value, minimum=0.0, maximum=1.0)

    @property
    def batch_size(self):
        return self._batch_size

    @batch_size.setter
    def batch_size(self, value):
        self._batch_size = _check_int('batch_size', value, minimum=1)

    @property
    def epochs(self):
        return self._epochs

    @epochs.setter
    def epochs(self, value):
        self._epochs = _check_int('epochs', value, minimum=1)

    @property
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = _check_int('seed', value, minimum=0)


class SynthSpec(_Config):
    """Describes a batch of synthetic murmur segments.

    Each segment is built multiplying the envelope of the murmur
    `shape` by a noise carrier band-limited to
    `carrier_band`, plus white noise at `noise_snr_db` decibels.
    Set `noise_snr_db` to `None` for noiseless segments.

    Segments are grouped in recordings of `per_recording` consecutive
    segments, which allows to decompose them jointly.

    :param shape: murmur class label
    :param carrier_band: pair of frequencies (low, high) in Hz
    :param noise_snr_db: signal-to-noise ratio in dB or `None`
    :param seed: seed of the generator
    :param count: number of segments to generate
    :param per_recording: number of segments per synthetic recording
    """
    def __init__(self, shape, carrier_band=(25.0, 400.0), noise_snr_db=20.0,
                 seed=SEED, count=1, per_recording=1):
        self.shape = shape
        self.carrier_band = carrier_band
        self.noise_snr_db = noise_snr_db
        self.seed = seed
        self.count = count
        self.per_recording = per_recording

    @property
    def shape(self):
        """Murmur class of the generated segments."""

        return self._shape

    @shape.setter
    def shape(self, value):
        if isinstance(value, MurmurClass):
            self._shape = value
        elif isinstance(value, str):
            self._shape = MurmurClass.from_label(value)
        else:
            raise ValueError("'shape' must be a str; %s given" % str(type(value)))

    @property
    def carrier_band(self):
        """Band (low, high) of the noise carrier, in Hz."""

        return self._carrier_band

    @carrier_band.setter
    def carrier_band(self, value):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ValueError("'carrier_band' must be a pair; %s given" % str(value))
        low = _check_float('carrier_band', value[0])
        high = _check_float('carrier_band', value[1])
        self._carrier_band = (low, high)

    @property
    def noise_snr_db(self):
        """Signal-to-noise ratio in dB; `None` means no noise."""

        return self._noise_snr_db

    @noise_snr_db.setter
    def noise_snr_db(self, value):
        if value is None:
            self._noise_snr_db = None
            return
        value = _check_float('noise_snr_db', value)
        self._noise_snr_db = None if math.isinf(value) and value > 0 else value

    @property
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = _check_int('seed', value, minimum=0)

    @property
    def count(self):
        return self._count

    @count.setter
    def count(self, value):
        self._count = _check_int('count', value)

    @property
    def per_recording(self):
        return self._per_recording

    @per_recording.setter
    def per_recording(self, value):
        self._per_recording = _check_int('per_recording', value, minimum=1)

    def to_dict(self):
        config = super().to_dict()
        config['shape'] = self.shape.label
        config['carrier_band'] = list(self.carrier_band)
        return config


class RunConfig(_Config):
    """Configuration of a whole run of the pipeline.

    It mirrors the options of every stage. Input segments come
    either from a `manifest` or from a list of synthetic specs
    (`synth`). Every random decision of the run derives from `seed`.
    Artifacts are written to `workdir`.

    When `database` is set, pursuit jobs are sent to the rq queues
    of that Redis database instead of being run by local threads.
    """
    def __init__(self, segment_length=SEGMENT_LENGTH, sample_rate=SAMPLE_RATE,
                 fit='interpolate', manifest=None, synth=None,
                 zeta=SPARSITY_LEVEL, residual_tol=0.0, rank_tol=RANK_TOL,
                 joint_by=None, mode='sq', max_normalize=False,
                 heads=N_HEADS, d_head=D_HEAD,
                 learning_rate=LEARNING_RATE, momentum=MOMENTUM,
                 batch_size=BATCH_SIZE, epochs=EPOCHS, val_split=VAL_SPLIT,
                 k=N_FOLDS, group_by=None, seed=SEED,
                 workdir='gaborcomp-run', database=None):
        self.segment_length = segment_length
        self.sample_rate = sample_rate
        self.fit = fit
        self.manifest = manifest
        self.synth = synth
        self.zeta = zeta
        self.residual_tol = residual_tol
        self.rank_tol = rank_tol
        self.joint_by = joint_by
        self.mode = mode
        self.max_normalize = max_normalize
        self.heads = heads
        self.d_head = d_head
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.val_split = val_split
        self.k = k
        self.group_by = group_by
        self.seed = seed
        self.workdir = workdir
        self.database = database

        if self.manifest is None and not self.synth:
            raise ValueError("either 'manifest' or 'synth' must be set")

    @property
    def segment_length(self):
        """Segment length M; a power of two."""

        return self._segment_length

    @segment_length.setter
    def segment_length(self, value):
        self._segment_length = _check_int('segment_length', value, minimum=8)

    @property
    def sample_rate(self):
        return self._sample_rate

    @sample_rate.setter
    def sample_rate(self, value):
        self._sample_rate = _check_int('sample_rate', value, minimum=1)

    @property
    def fit(self):
        """Length fitting method: 'interpolate' or 'pad'."""

        return self._fit

    @fit.setter
    def fit(self, value):
        self._fit = _check_choice('fit', value, FIT_METHODS)

    @property
    def manifest(self):
        return self._manifest

    @manifest.setter
    def manifest(self, value):
        self._manifest = _check_optional_str('manifest', value)

    @property
    def synth(self):
        """List of `SynthSpec` objects, or `None`."""

        return self._synth

    @synth.setter
    def synth(self, value):
        if value is None:
            self._synth = None
        elif isinstance(value, list):
            self._synth = [spec if isinstance(spec, SynthSpec) else SynthSpec.from_dict(spec)
                           for spec in value]
        else:
            raise ValueError("'synth' must be a list; %s given" % str(type(value)))

    @property
    def zeta(self):
        return self._zeta

    @zeta.setter
    def zeta(self, value):
        self._zeta = _check_int('zeta', value, minimum=1)

    @property
    def residual_tol(self):
        return self._residual_tol

    @residual_tol.setter
    def residual_tol(self, value):
        self._residual_tol = _check_float('residual_tol', value, minimum=0.0, maximum=1.0)

    @property
    def rank_tol(self):
        return self._rank_tol

    @rank_tol.setter
    def rank_tol(self, value):
        self._rank_tol = _check_float('rank_tol', value, minimum=0.0)

    @property
    def joint_by(self):
        """Manifest column grouping segments for joint pursuit, or `None`."""

        return self._joint_by

    @joint_by.setter
    def joint_by(self, value):
        self._joint_by = None if value is None else _check_choice('joint_by', value, GROUPING_KEYS)

    @property
    def mode(self):
        """Feature mode: 'mag' or 'sq'."""

        return self._mode

    @mode.setter
    def mode(self, value):
        self._mode = _check_choice('mode', value, FEATURE_MODES)

    @property
    def max_normalize(self):
        return self._max_normalize

    @max_normalize.setter
    def max_normalize(self, value):
        if not isinstance(value, bool):
            raise ValueError("'max_normalize' must be a bool; %s given" % str(type(value)))
        self._max_normalize = value

    @property
    def heads(self):
        return self._heads

    @heads.setter
    def heads(self, value):
        self._heads = _check_int('heads', value, minimum=1)

    @property
    def d_head(self):
        return self._d_head

    @d_head.setter
    def d_head(self, value):
        self._d_head = _check_int('d_head', value, minimum=1)

    @property
    def learning_rate(self):
        return self._learning_rate

    @learning_rate.setter
    def learning_rate(self, value):
        self._learning_rate = _check_float('learning_rate', value, minimum=0.0)

    @property
    def momentum(self):
        return self._momentum

    @momentum.setter
    def momentum(self, value):
        self._momentum = _check_float('momentum', value, minimum=0.0, maximum=1.0)

    @property
    def batch_size(self):
        return self._batch_size

    @batch_size.setter
    def batch_size(self, value):
        self._batch_size = _check_int('batch_size', value, minimum=1)

    @property
    def epochs(self):
        return self._epochs

    @epochs.setter
    def epochs(self, value):
        self._epochs = _check_int('epochs', value, minimum=1)

    @property
    def val_split(self):
        """Fraction of segments held out to validate the final model."""

        return self._val_split

    @val_split.setter
    def val_split(self, value):
        self._val_split = _check_float('val_split', value, minimum=0.0, maximum=1.0)

    @property
    def k(self):
        return self._k

    @k.setter
    def k(self, value):
        self._k = _check_int('k', value)

    @property
    def group_by(self):
        """Manifest column keeping segments together in a fold, or `None`."""

        return self._group_by

    @group_by.setter
    def group_by(self, value):
        self._group_by = None if value is None else _check_choice('group_by', value, GROUPING_KEYS)

    @property
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = _check_int('seed', value, minimum=0)

    @property
    def workdir(self):
        return self._workdir

    @workdir.setter
    def workdir(self, value):
        if not isinstance(value, str):
            raise ValueError("'workdir' must be a str; %s given" % str(type(value)))
        self._workdir = value

    @property
    def database(self):
        """URL of the Redis database used by the pursuit queues, or `None`."""

        return self._database

    @database.setter
    def database(self, value):
        self._database = _check_optional_str('database', value)

    def pursuit_config(self):
        return PursuitConfig(zeta=self.zeta,
                             residual_tol=self.residual_tol,
                             rank_tol=self.rank_tol)

    def train_config(self):
        return TrainConfig(learning_rate=self.learning_rate,
                           momentum=self.momentum,
                           batch_size=self.batch_size,
                           epochs=self.epochs,
                           seed=self.seed)

    def to_dict(self):
        config = super().to_dict()
        if self.synth is not None:
            config['synth'] = [spec.to_dict() for spec in self.synth]
        return config

    @classmethod
    def from_file(cls, filepath):
        """Read a run configuration from a JSON file.

        :param filepath: path to the JSON file

        :returns: a `RunConfig` instance

        :raises ValueError: when the file is not valid
        """
        with open(filepath, 'r', encoding='utf-8') as fd:
            try:
                config = json.load(fd)
            except json.JSONDecodeError as e:
                raise ValueError("invalid config file %s; %s" % (filepath, str(e)))

        if not isinstance(config, dict):
            raise ValueError("invalid config file %s; an object is expected" % filepath)

        logger.debug("Run configuration read from %s", filepath)

        return cls.from_dict(config)
