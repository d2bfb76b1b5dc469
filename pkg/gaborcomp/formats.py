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

"""Readers and writers of the artifacts of the pipeline.

Binary artifacts are little-endian and carry no timestamps, so
identical inputs always give identical files:

- `.mrgd` dictionaries: magic 'MRGD', version u16, M u32, J u32,
  then the `J * M` columns as complex128 and the raw norms as f64.
- `.mrgc` sparse codes: one line of JSON header followed by the
  complex128 coefficients of the support, in support order.
- `.mrgf` feature bundles: magic 'MRGF', version u16, count u32,
  M u32, J u32, mode u8 and then, for every stack, its reference
  (u16 length and UTF-8 bytes), its label u8 (255 when unknown)
  and its `J` matrices, row-major, as f32.
- `.mrgm` models: magic 'MRGM', version u16, M, J, heads, d_head,
  channels and classes as u32, the `J` kernel sizes as pairs of
  u32 and every parameter as f64 in canonical order.
"""

import collections
import glob
import json
import logging
import os
import re
import struct

import numpy as np
import pandas as pd

from .classifier import N_CLASSES, Model, kernel_schedule, parameter_shapes
from .dictionary import Dictionary, check_resolution
from .errors import FormatError, InvalidResolutionError
from .features import MODES, FeatureStack, tf_shape
from .pursuit import SparseCode
from .signals import MurmurClass


logger = logging.getLogger(__name__)


VERSION = 1

DICTIONARY_MAGIC = b'MRGD'
FEATURES_MAGIC = b'MRGF'
MODEL_MAGIC = b'MRGM'

DICTIONARY_HEADER = struct.Struct('<4sHII')
FEATURES_HEADER = struct.Struct('<4sHIIIB')
MODEL_HEADER = struct.Struct('<4sHIIIIII')

CODE_EXT = '.mrgc'
NO_LABEL = 255

COMPLEX = np.dtype('<c16')
FLOAT64 = np.dtype('<f8')
FLOAT32 = np.dtype('<f4')

CURVES_COLUMNS = ['epoch', 'train_loss', 'train_acc', 'val_loss', 'val_acc']


class _Reader:
    """Sequential reader of a binary buffer."""

    def __init__(self, data, artifact):
        self.data = data
        self.offset = 0
        self.artifact = artifact

    def unpack(self, fmt):
        fmt = struct.Struct(fmt) if isinstance(fmt, str) else fmt
        if self.offset + fmt.size > len(self.data):
            raise FormatError(artifact=self.artifact, cause="unexpected end of file")
        values = fmt.unpack_from(self.data, self.offset)
        self.offset += fmt.size
        return values

    def array(self, dtype, count):
        size = dtype.itemsize * count
        if self.offset + size > len(self.data):
            raise FormatError(artifact=self.artifact, cause="unexpected end of file")
        values = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.offset)
        self.offset += size
        return values

    def bytes(self, size):
        if self.offset + size > len(self.data):
            raise FormatError(artifact=self.artifact, cause="unexpected end of file")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def text(self, size):
        chunk = self.bytes(size)
        try:
            return chunk.decode('utf-8')
        except UnicodeDecodeError:
            raise FormatError(artifact=self.artifact,
                              cause="invalid UTF-8 string at offset %d" % (self.offset - size))


    def finish(self):
        if self.offset != len(self.data):
            raise FormatError(artifact=self.artifact,
                              cause="%d trailing bytes" % (len(self.data) - self.offset))


def _read_file(filepath):
    try:
        with open(filepath, 'rb') as fd:
            return fd.read()
    except FileNotFoundError:
        raise FormatError(artifact=filepath, cause="file not found")


def _check_magic(magic, version, expected, artifact):
    if magic != expected:
        raise FormatError(artifact=artifact, cause="bad magic %r; %r expected" % (magic, expected))
    if version != VERSION:
        raise FormatError(artifact=artifact, cause="unsupported version %d" % version)


def _check_support(support, n_atoms, artifact):
    if not isinstance(support, list) or \
            not all(isinstance(c, int) and not isinstance(c, bool) for c in support):
        raise FormatError(artifact=artifact, cause="support must be a list of columns")

    for column in support:
        if not 0 <= column < n_atoms:
            cause = "support column %d out of range [0, %d)" % (column, n_atoms)
            raise FormatError(artifact=artifact, cause=cause)

    if len(set(support)) != len(support):
        raise FormatError(artifact=artifact, cause="repeated support columns")


def _check_size(M, J, artifact):

    try:
        L = check_resolution(M)
    except InvalidResolutionError as e:
        raise FormatError(artifact=artifact, cause=str(e))
    if J != L - 1:
        raise FormatError(artifact=artifact, cause="J=%d does not match M=%d" % (J, M))


def write_dictionary(dictionary, filepath):
    """Write a dictionary to a `.mrgd` file."""

    with open(filepath, 'wb') as fd:
        fd.write(DICTIONARY_HEADER.pack(DICTIONARY_MAGIC, VERSION, dictionary.M, dictionary.J))
        fd.write(dictionary.atoms.T.astype(COMPLEX).tobytes())
        fd.write(dictionary.raw_norms.astype(FLOAT64).tobytes())

    logger.debug("Dictionary written to %s", filepath)


def read_dictionary(filepath, M=None):
    """Read a dictionary from a `.mrgd` file.

    :param filepath: path to the file
    :param M: expected segment length, if any

    :raises FormatError: when the file is not valid or its length
        does not match `M`
    """
    reader = _Reader(_read_file(filepath), filepath)

    magic, version, size, J = reader.unpack(DICTIONARY_HEADER)
    _check_magic(magic, version, DICTIONARY_MAGIC, filepath)
    _check_size(size, J, filepath)

    if M is not None and size != M:
        raise FormatError(artifact=filepath, cause="dictionary M=%d does not match M=%d"
                          % (size, M))

    n_atoms = J * size
    columns = reader.array(COMPLEX, n_atoms * size).reshape(n_atoms, size)
    raw_norms = reader.array(FLOAT64, n_atoms)
    reader.finish()

    return Dictionary(columns.T.astype(np.complex128), raw_norms.astype(np.float64))


def code_filename(index):
    return "%05d%s" % (index, CODE_EXT)


def write_code(code, filepath, M, label=None, recording_id=None, group=None):
    """Write a sparse code to a `.mrgc` file.

    :param code: `SparseCode` to write
    :param filepath: path to the file
    :param M: segment length
    :param label: murmur class of the segment, if known
    :param recording_id: recording of the segment
    :param group: identifier of the joint pursuit the code comes from
    """
    support = [int(c) for c in code.support]

    header = {
        'segment_ref': code.segment_ref,
        'recording_id': recording_id,
        'label': label.label if label is not None else None,
        'group': group,
        'M': M,
        'J': check_resolution(M) - 1,
        'zeta': code.zeta,
        'support': support,
        'dependent': [int(c) for c in code.dependent],
        'residual_norms': [float(r) for r in code.residual_norms]
    }

    with open(filepath, 'wb') as fd:
        fd.write(json.dumps(header, sort_keys=True).encode('utf-8'))
        fd.write(b'\n')
        fd.write(code.coefficients[support].astype(COMPLEX).tobytes())


def read_code(filepath):
    """Read a sparse code from a `.mrgc` file.

    :returns: a tuple with the `SparseCode` and its header

    :raises FormatError: when the file is not valid
    """
    data = _read_file(filepath)

    end = data.find(b'\n')
    if end < 0:
        raise FormatError(artifact=filepath, cause="header not found")

    try:
        header = json.loads(data[:end].decode('utf-8'))
        M, J, support = header['M'], header['J'], header['support']
        residual_norms, segment_ref = header['residual_norms'], header['segment_ref']
    except (ValueError, KeyError, TypeError) as e:
        raise FormatError(artifact=filepath, cause="invalid header; %s" % str(e))

    _check_size(M, J, filepath)
    _check_support(support, J * M, filepath)


    reader = _Reader(data, filepath)
    reader.offset = end + 1
    values = reader.array(COMPLEX, len(support))
    reader.finish()

    coefficients = np.zeros(J * M, dtype=np.complex128)
    coefficients[support] = values

    code = SparseCode(coefficients, tuple(support), residual_norms,
                      segment_ref=segment_ref,
                      dependent=header.get('dependent', ()),
                      zeta=header.get('zeta'))
    return code, header


def _code_order(path):
    stem = os.path.splitext(os.path.basename(path))[0]
    return (0, int(stem), stem) if stem.isdigit() else (1, 0, stem)


def list_codes(dirpath):
    """Paths of the code files of a directory.

    Files named after a position come first, in numeric order;
    the rest follow sorted by name.

    :raises FormatError: when no code is found
    """
    paths = sorted(glob.glob(os.path.join(dirpath, '*' + CODE_EXT)), key=_code_order)

    if not paths:
        raise FormatError(artifact=dirpath, cause="no %s files found" % CODE_EXT)
    return paths


def write_features(stacks, filepath):
    """Write a list of feature stacks to a `.mrgf` bundle.

    :raises FormatError: when the stacks do not share shapes and mode
    """
    if not stacks:
        raise FormatError(artifact=filepath, cause="no stacks to write")

    M, J, mode = stacks[0].M, stacks[0].J, stacks[0].mode
    for stack in stacks:
        if stack.M != M or stack.J != J or stack.mode != mode:
            raise FormatError(artifact=filepath,
                              cause="stack %s does not match the bundle" % stack.segment_ref)

    with open(filepath, 'wb') as fd:
        fd.write(FEATURES_HEADER.pack(FEATURES_MAGIC, VERSION, len(stacks), M, J,
                                      MODES.index(mode)))
        for stack in stacks:
            ref = (stack.segment_ref or '').encode('utf-8')
            label = NO_LABEL if stack.label is None else int(stack.label)
            fd.write(struct.pack('<H', len(ref)))
            fd.write(ref)
            fd.write(struct.pack('<B', label))
            for A in stack.matrices:
                fd.write(A.astype(FLOAT32).tobytes())

    logger.debug("%d feature stacks written to %s", len(stacks), filepath)


def read_features(filepath):
    """Read the feature stacks of a `.mrgf` bundle.

    :raises FormatError: when the file is not valid
    """
    reader = _Reader(_read_file(filepath), filepath)

    magic, version, count, M, J, mode = reader.unpack(FEATURES_HEADER)
    _check_magic(magic, version, FEATURES_MAGIC, filepath)
    _check_size(M, J, filepath)

    if mode >= len(MODES):
        raise FormatError(artifact=filepath, cause="unknown mode %d" % mode)

    shapes = [tf_shape(M, j) for j in range(1, J + 1)]

    stacks = []
    for _ in range(count):
        size, = reader.unpack('<H')
        ref = reader.text(size)
        label, = reader.unpack('<B')

        if label == NO_LABEL:
            label = None
        elif label < N_CLASSES:
            label = MurmurClass(label)
        else:
            raise FormatError(artifact=filepath, cause="invalid label %d" % label)

        matrices = [reader.array(FLOAT32, rows * cols).reshape(rows, cols).astype(np.float64)
                    for rows, cols in shapes]
        stacks.append(FeatureStack(matrices, mode=MODES[mode], label=label, segment_ref=ref))

    reader.finish()

    return stacks


def write_model(model, filepath):
    """Write a model checkpoint to a `.mrgm` file."""

    with open(filepath, 'wb') as fd:
        fd.write(MODEL_HEADER.pack(MODEL_MAGIC, VERSION, model.M, model.J, model.heads,
                                   model.d_head, model.channels, N_CLASSES))
        for h, w in model.kernels:
            fd.write(struct.pack('<II', h, w))
        for value in model.params.values():
            fd.write(value.astype(FLOAT64).tobytes())

    logger.debug("Model written to %s", filepath)


def read_model(filepath):
    """Read a model checkpoint from a `.mrgm` file.

    :raises FormatError: when the file is not valid or its kernel
        schedule does not match the architecture
    """
    reader = _Reader(_read_file(filepath), filepath)

    magic, version, M, J, heads, d_head, channels, n_classes = reader.unpack(MODEL_HEADER)
    _check_magic(magic, version, MODEL_MAGIC, filepath)
    _check_size(M, J, filepath)

    if n_classes != N_CLASSES:
        raise FormatError(artifact=filepath, cause="%d classes; %d expected"
                          % (n_classes, N_CLASSES))
    if heads < 1 or d_head < 1 or channels < 1:
        raise FormatError(artifact=filepath, cause="invalid architecture")

    kernels = [reader.unpack('<II') for _ in range(J)]
    if kernels != kernel_schedule(M):
        raise FormatError(artifact=filepath, cause="kernel schedule does not match M=%d" % M)

    params = collections.OrderedDict()
    for name, shape in parameter_shapes(M, heads, d_head, channels).items():
        params[name] = reader.array(FLOAT64, int(np.prod(shape))).reshape(shape).astype(np.float64)
    reader.finish()

    return Model(params, M, heads=heads, d_head=d_head, channels=channels)


def write_curves(history, filepath):
    """Write per-epoch training metrics as CSV."""

    frame = pd.DataFrame([m._asdict() for m in history], columns=CURVES_COLUMNS)
    frame.to_csv(filepath, index=False, float_format='%.17g')


def write_predictions(stacks, classes, probs, filepath):
    """Write predicted classes and probabilities as CSV."""

    frame = pd.DataFrame({
        'segment_ref': [stack.segment_ref for stack in stacks],
        'predicted': [MurmurClass(int(c)).label for c in classes]
    })
    for i in range(probs.shape[1]):
        frame['prob%d' % i] = probs[:, i]
    frame.to_csv(filepath, index=False, float_format='%.17g')


def write_atom(atom, filepath_or_buffer):
    """Write the real and imaginary parts of an atom as CSV."""

    frame = pd.DataFrame({'re': atom.real, 'im': atom.imag})
    frame.to_csv(filepath_or_buffer, index=False, float_format='%.17g')


def write_stack_csv(stack, dirpath):
    """Write every matrix of a stack as a CSV file.

    :returns: list of written paths
    """
    os.makedirs(dirpath, exist_ok=True)
    name = re.sub(r'[^A-Za-z0-9_.-]+', '_', stack.segment_ref or 'stack')

    paths = []
    for j, A in enumerate(stack.matrices, start=1):
        path = os.path.join(dirpath, "%s_A%d.csv" % (name, j))
        pd.DataFrame(A).to_csv(path, header=False, index=False, float_format='%.9g')
        paths.append(path)
    return paths
