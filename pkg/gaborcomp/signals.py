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

"""Loading, fitting and synthesis of systolic murmur segments."""

import collections
import enum
import logging
import os.path
import struct

import numpy as np
import pandas as pd
from scipy import signal as sps
from scipy.io import wavfile

from .common import SAMPLE_RATE, SEGMENT_LENGTH, UNDERFLOW
from .errors import (DecodeError,
                     InvalidLabelError,
                     InvalidSegmentError,
                     InvalidSpecError,
                     IoError)


logger = logging.getLogger(__name__)


MANIFEST_COLUMNS = ['recording_id', 'path', 'label', 'location']

# Raised-cosine edges of the plateau envelope, as a fraction of the length
PLATEAU_EDGE = 0.05
# Floor of the linear envelopes
RAMP_FLOOR = 0.05
# Butterworth order of the carrier band-pass filter
CARRIER_ORDER = 4
# Extra noise samples filtered on each side of the segment
CARRIER_MARGIN = 256


@enum.unique
class MurmurClass(enum.IntEnum):
    """Systolic murmur shapes.

    The value of each member is the index of the class in the
    classifier output.
    """
    DIAMOND = 0
    PLATEAU = 1
    DECRESCENDO = 2
    CRESCENDO = 3

    @property
    def label(self):
        return self.name.capitalize()

    @classmethod
    def from_label(cls, label):
        """Get the class named by `label`.

        :raises InvalidLabelError: when the label is unknown
        """
        for member in cls:
            if member.label == label:
                return member
        raise InvalidLabelError(label=label)


@enum.unique
class Location(enum.Enum):
    """Auscultation sites"""

    AP = 'AP'
    PP = 'PP'
    MP = 'MP'
    TP = 'TP'
    UNKNOWN = 'Unknown'

    @classmethod
    def from_label(cls, label):
        try:
            return cls(label)
        except ValueError:
            raise InvalidLabelError(label=label)


class Segment:
    """Real-valued murmur excerpt.

    Samples are stored as a read-only array of float64 values.

    :param samples: sequence of samples
    :param label: murmur class of the segment
    :param recording_id: identifier of the recording the segment comes from
    :param location: auscultation site
    :param sample_rate: sampling rate in Hz
    :param ref: unique reference of the segment; by default, the
        recording identifier
    """
    def __init__(self, samples, label, recording_id, location=Location.UNKNOWN,
                 sample_rate=SAMPLE_RATE, ref=None):
        samples = np.array(samples, dtype=np.float64)
        samples.setflags(write=False)

        self.samples = samples
        self.label = label
        self.recording_id = recording_id
        self.location = location
        self.sample_rate = sample_rate
        self.ref = ref if ref is not None else recording_id

    def __len__(self):
        return len(self.samples)

    def __repr__(self):
        return "Segment(ref=%r, label=%s, M=%d)" % (self.ref, self.label.label, len(self))


def recording_of(ref):
    """Recording identifier of a segment reference `recording_id/n`."""

    return ref.rsplit('/', 1)[0] if ref else ref


class SegmentSet:
    """Ordered, immutable collection of segments sharing the same length.

    :param segments: iterable of `Segment` objects

    :raises InvalidSegmentError: when segments have different lengths
    """
    def __init__(self, segments):
        self._segments = tuple(segments)

        lengths = {len(segment) for segment in self._segments}
        if len(lengths) > 1:
            cause = "segments with different lengths %s" % sorted(lengths)
            raise InvalidSegmentError(cause=cause)

        self._length = lengths.pop() if lengths else 0
        self._class_counts = collections.Counter(s.label for s in self._segments)

    @property
    def segments(self):
        return self._segments

    @property
    def length(self):
        """Common length M of the segments."""

        return self._length

    @property
    def class_counts(self):
        """Number of segments per murmur class, including empty classes."""

        return {label: self._class_counts.get(label, 0) for label in MurmurClass}

    @property
    def labels(self):
        return np.array([int(segment.label) for segment in self._segments], dtype=np.int64)

    def location_counts(self):
        """Number of segments per murmur class and location."""

        counts = collections.Counter((s.label, s.location) for s in self._segments)
        return {
            label: {location: counts.get((label, location), 0) for location in Location}
            for label in MurmurClass
        }

    def groups(self, key='recording_id'):
        """Group the positions of the segments by a segment attribute.

        Groups keep the order of first appearance and positions inside
        each group are ascending.

        :returns: ordered dict of value -> list of positions
        """
        groups = collections.OrderedDict()
        for i, segment in enumerate(self._segments):
            groups.setdefault(getattr(segment, key), []).append(i)
        return groups

    def validate(self, M=None):
        """Check the invariants of the set.

        :raises InvalidSegmentError: when any of the invariants fails
        """
        for segment in self._segments:
            if M is not None and len(segment) != M:
                cause = "segment %s has %d samples; %d expected" % (segment.ref, len(segment), M)
                raise InvalidSegmentError(cause=cause)
            if not isinstance(segment.label, MurmurClass):
                raise InvalidLabelError(label=segment.label)
            peak = np.max(np.abs(segment.samples))
            if peak > 1.0 or (0.0 < peak < 1.0):
                cause = "segment %s is not normalized" % segment.ref
                raise InvalidSegmentError(cause=cause)
        return True

    def __len__(self):
        return len(self._segments)

    def __iter__(self):
        return iter(self._segments)

    def __getitem__(self, index):
        return self._segments[index]


def normalize(samples):
    """Scale a sequence of samples to the range [-1, 1].

    The samples are divided by their maximum absolute value. All-zero
    inputs are returned unchanged.

    :param samples: sequence of samples

    :returns: a float64 array

    :raises InvalidSegmentError: when `samples` is empty
    """
    samples = np.asarray(samples, dtype=np.float64)

    if samples.size == 0:
        raise InvalidSegmentError(cause="no samples to normalize")

    peak = np.max(np.abs(samples))
    if peak == 0.0:
        return samples.copy()
    return samples / peak


def fit_length(samples, M, method='interpolate'):
    """Fit a sequence of samples to length `M`.

    With the 'interpolate' method, the input is resampled by linear
    interpolation onto `M` uniformly spaced points covering the
    original index range, so first and last samples are kept. With
    'pad', the input is zero-padded at the end or truncated.

    :param samples: sequence of samples
    :param M: target length
    :param method: 'interpolate' or 'pad'

    :returns: a float64 array of length `M`

    :raises InvalidSegmentError: when `samples` is empty or `M` is
        lower than 2
    """
    samples = np.asarray(samples, dtype=np.float64)

    if samples.size == 0:
        raise InvalidSegmentError(cause="no samples to fit")
    if M < 2:
        raise InvalidSegmentError(cause="target length must be at least 2; %s given" % M)

    n = samples.size
    if n == M:
        return samples.copy()

    if method == 'pad':
        fitted = np.zeros(M, dtype=np.float64)
        fitted[:min(n, M)] = samples[:M]
        return fitted
    elif method != 'interpolate':
        raise ValueError("unknown fitting method '%s'" % method)

    positions = np.linspace(0.0, n - 1, M)
    return np.interp(positions, np.arange(n, dtype=np.float64), samples)


def read_segment_file(path):
    """Read the samples of a segment file.

    Mono WAV files (16-bit PCM or 32-bit float) and single-column
    CSV files of decimal numbers are accepted.

    :returns: a tuple with the float64 samples and the sample rate,
        which is `None` for CSV files

    :raises DecodeError: when the file cannot be decoded
    """
    if path.lower().endswith('.wav'):
        try:
            rate, data = wavfile.read(path)
        except (ValueError, EOFError, struct.error) as e:
            raise DecodeError(path=path, cause=str(e))

        if data.ndim != 1:
            raise DecodeError(path=path, cause="%d channels found; mono expected" % data.shape[1])

        if data.dtype == np.int16:
            samples = data.astype(np.float64) / 32768.0
        elif data.dtype == np.float32:
            samples = data.astype(np.float64)
        else:
            raise DecodeError(path=path, cause="unsupported sample format %s" % data.dtype)
        return samples, int(rate)

    try:
        frame = pd.read_csv(path, header=None, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DecodeError(path=path, cause=str(e))

    if frame.shape[1] != 1:
        raise DecodeError(path=path, cause="%d columns found; 1 expected" % frame.shape[1])

    column = pd.to_numeric(frame.iloc[:, 0], errors='coerce')
    if column.isnull().any():
        raise DecodeError(path=path, cause="non numeric values found")

    return column.to_numpy(dtype=np.float64), None


def prepare_samples(samples, M, fit='interpolate'):
    """Fit a raw sequence to length `M` and normalize it."""

    return normalize(fit_length(samples, M, method=fit))


def load_segments(manifest_path, M=SEGMENT_LENGTH, fit='interpolate'):
    """Load the segments listed on a manifest.

    The manifest is a CSV file with the header
    `recording_id,path,label,location`. Relative paths are resolved
    against the directory of the manifest. Every segment is
    length-fitted to `M` and then normalized. The set keeps the
    order of the manifest.

    :param manifest_path: path to the manifest
    :param M: segment length
    :param fit: length fitting method

    :returns: a `SegmentSet`

    :raises IoError: when a referenced file does not exist
    :raises InvalidLabelError: when a label or location is unknown
    :raises DecodeError: when a segment file is corrupt
    """
    base_dir = os.path.dirname(os.path.abspath(manifest_path))

    try:
        manifest = pd.read_csv(manifest_path, dtype=str, keep_default_na=False,
                               encoding='utf-8')
    except FileNotFoundError:
        raise IoError(row='-', path=manifest_path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DecodeError(path=manifest_path, cause=str(e))

    if list(manifest.columns) != MANIFEST_COLUMNS:
        cause = "header must be '%s'" % ','.join(MANIFEST_COLUMNS)
        raise DecodeError(path=manifest_path, cause=cause)

    segments = []

    for row, entry in enumerate(manifest.itertuples(index=False), start=1):
        label = MurmurClass.from_label(entry.label)
        location = Location.from_label(entry.location)

        path = entry.path
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.isfile(path):
            raise IoError(row=row, path=entry.path)

        raw, rate = read_segment_file(path)
        if raw.size == 0:
            raise DecodeError(path=entry.path, cause="no samples found")

        samples = prepare_samples(raw, M, fit=fit)
        ref = "%s/%d" % (entry.recording_id, row)

        segments.append(Segment(samples, label, entry.recording_id,
                                location=location,
                                sample_rate=rate if rate else SAMPLE_RATE,
                                ref=ref))

    segment_set = SegmentSet(segments)

    logger.info("%d segments loaded from %s", len(segment_set), manifest_path)

    return segment_set


def murmur_envelope(shape, M):
    """Intensity envelope of a murmur class over `M` samples."""

    n = np.arange(M, dtype=np.float64)

    if shape == MurmurClass.DIAMOND:
        half = M / 2.0
        envelope = np.clip(1.0 - np.abs(n - half) / half, 0.0, 1.0)
    elif shape == MurmurClass.PLATEAU:
        envelope = np.ones(M, dtype=np.float64)
        edge = max(1, int(round(PLATEAU_EDGE * M)))
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
        envelope[:edge] = ramp
        envelope[M - edge:] = ramp[::-1]
    elif shape == MurmurClass.DECRESCENDO:
        envelope = np.linspace(1.0, RAMP_FLOOR, M)
    elif shape == MurmurClass.CRESCENDO:
        envelope = np.linspace(RAMP_FLOOR, 1.0, M)
    else:
        raise InvalidSpecError(cause="unknown shape %s" % shape)

    return envelope


def _band_filter(band, sample_rate):
    """Butterworth filter for `band` in second-order sections, or `None`."""

    low, high = band
    nyquist = sample_rate / 2.0

    if low > 0.0 and high < nyquist:
        return sps.butter(CARRIER_ORDER, [low, high], btype='bandpass',
                          output='sos', fs=sample_rate)
    elif high < nyquist:
        return sps.butter(CARRIER_ORDER, high, btype='lowpass',
                          output='sos', fs=sample_rate)
    elif low > 0.0:
        return sps.butter(CARRIER_ORDER, low, btype='highpass',
                          output='sos', fs=sample_rate)
    else:
        return None


def _carrier(rng, M, band, sample_rate):
    """Band-limited noise carrier with a flat envelope.

    White noise is filtered to `band` and divided by the magnitude
    of its analytic signal, so the amplitude of a synthetic murmur
    comes only from the class envelope. The noise is longer than
    `M` and cropped to its center to keep filter transients out.
    """
    noise = rng.standard_normal(M + 2 * CARRIER_MARGIN)

    sos = _band_filter(band, sample_rate)
    if sos is not None:
        noise = sps.sosfiltfilt(sos, noise)

    analytic = sps.hilbert(noise)
    carrier = analytic.real / np.maximum(np.abs(analytic), UNDERFLOW)

    return carrier[CARRIER_MARGIN:CARRIER_MARGIN + M]


def synth_murmur(spec, index, M=SEGMENT_LENGTH, sample_rate=SAMPLE_RATE):
    """Generate one synthetic murmur segment.

    The segment is the envelope of `spec.shape` times a noise carrier
    band-limited to `spec.carrier_band`, plus white noise at
    `spec.noise_snr_db`. The result is normalized.
    Output is a pure function of `(spec.seed, index)` and the shape.

    :param spec: a `SynthSpec`
    :param index: position of the segment in the batch
    :param M: segment length
    :param sample_rate: sampling rate in Hz

    :returns: a `Segment`

    :raises InvalidSpecError: when the spec is not valid
    """
    low, high = spec.carrier_band

    if not 0.0 <= low < high <= sample_rate / 2.0:
        cause = "carrier band (%s, %s) must satisfy 0 <= low < high <= %s" \
            % (low, high, sample_rate / 2.0)
        raise InvalidSpecError(cause=cause)
    if spec.count < 1:
        raise InvalidSpecError(cause="count must be at least 1; %s given" % spec.count)

    rng = np.random.default_rng([spec.seed, index])

    signal = murmur_envelope(spec.shape, M) * _carrier(rng, M, spec.carrier_band, sample_rate)

    if spec.noise_snr_db is not None:
        power = np.mean(signal ** 2)
        sigma = np.sqrt(power / 10.0 ** (spec.noise_snr_db / 10.0))
        signal = signal + rng.normal(0.0, sigma, size=M)

    recording_id = "synth-%s-%d-%d" % (spec.shape.label.lower(), spec.seed,
                                       index // spec.per_recording)
    ref = "%s/%d" % (recording_id, index)

    return Segment(normalize(signal), spec.shape, recording_id,
                   location=Location.UNKNOWN, sample_rate=sample_rate, ref=ref)


def make_synth_dataset(specs, M=SEGMENT_LENGTH, sample_rate=SAMPLE_RATE):
    """Generate the segments described by a list of specs.

    :param specs: list of `SynthSpec`
    :param M: segment length
    :param sample_rate: sampling rate in Hz

    :returns: a `SegmentSet` with the segments of every spec, in order

    :raises InvalidSpecError: when the list is empty or a spec is not valid
    """
    if not specs:
        raise InvalidSpecError(cause="no specs given")

    segments = []
    for spec in specs:
        if spec.count < 1:
            raise InvalidSpecError(cause="count must be at least 1; %s given" % spec.count)
        segments.extend(synth_murmur(spec, i, M=M, sample_rate=sample_rate)
                        for i in range(spec.count))

    segment_set = SegmentSet(segments)

    logger.info("%d synthetic segments generated", len(segment_set))

    return segment_set


def write_segment_set(segment_set, dirpath):
    """Write a segment set as CSV segment files plus a manifest.

    :param segment_set: `SegmentSet` to write
    :param dirpath: output directory

    :returns: path to the manifest
    """
    os.makedirs(dirpath, exist_ok=True)

    rows = []
    for i, segment in enumerate(segment_set):
        filename = "segment-%05d.csv" % i
        pd.DataFrame(segment.samples).to_csv(os.path.join(dirpath, filename),
                                             header=False, index=False,
                                             float_format='%.17g')
        rows.append((segment.recording_id, filename,
                     segment.label.label, segment.location.value))

    manifest_path = os.path.join(dirpath, 'manifest.csv')
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(manifest_path, index=False)

    logger.info("%d segments written to %s", len(segment_set), dirpath)

    return manifest_path
