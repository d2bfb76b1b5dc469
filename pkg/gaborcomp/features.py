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

"""Time-frequency feature matrices built from sparse codes."""

import logging

import numpy as np

from .dictionary import check_resolution
from .errors import DimError, InvalidResolutionError


logger = logging.getLogger(__name__)


MAGNITUDE = 'mag'
SQUARED_MAGNITUDE = 'sq'

MODES = (MAGNITUDE, SQUARED_MAGNITUDE)


class FeatureStack:
    """Time-frequency matrices of the `J` resolutions of a code.

    Matrix `j` (1-based) has `2**j` rows, one per frequency, and
    `2**(L - j)` columns, one per translation step.

    :param matrices: list of non-negative real matrices
    :param mode: 'mag' or 'sq'
    :param label: murmur class or `None`
    :param segment_ref: reference of the segment
    """
    def __init__(self, matrices, mode=SQUARED_MAGNITUDE, label=None, segment_ref=None):
        if mode not in MODES:
            raise ValueError("unknown feature mode '%s'" % mode)

        self.matrices = [np.asarray(A, dtype=np.float64) for A in matrices]
        self.mode = mode
        self.label = label
        self.segment_ref = segment_ref

    @property
    def J(self):
        return len(self.matrices)

    @property
    def M(self):
        return self.matrices[0].size

    @property
    def shapes(self):
        return [A.shape for A in self.matrices]

    def total(self):
        """Sum of every entry of the stack."""

        return float(sum(A.sum() for A in self.matrices))

    def __repr__(self):
        return "FeatureStack(ref=%r, mode=%s, J=%d)" % (self.segment_ref, self.mode, self.J)


def tf_shape(M, j):
    """Shape (frequencies, translations) of the matrix of resolution `j`."""

    L = check_resolution(M)
    if not 1 <= j <= L - 1:
        raise InvalidResolutionError(cause="resolution must be in [1, %d]; %s given" % (L - 1, j))
    return 2 ** j, 2 ** (L - j)


def split_coeffs(a, M, J):
    """Split a coefficient vector in its `J` resolution blocks.

    :raises DimError: when the length of `a` is not `J * M`
    """
    a = np.asarray(a)
    if a.shape != (J * M,):
        raise DimError(cause="coefficient vector of shape %s; (%d,) expected" % (a.shape, J * M))
    return [a[(j - 1) * M:j * M] for j in range(1, J + 1)]


def reshape_to_tf(a_j, j, mode=SQUARED_MAGNITUDE):
    """Reshape the block `a_j` into its time-frequency matrix.

    Entry `[f, t]` holds the magnitude, or the squared magnitude,
    of `a_j[t * 2**j + f]`.

    :raises InvalidResolutionError: when `j` is not valid for the
        length of `a_j`
    """
    a_j = np.asarray(a_j)
    n_freqs, n_steps = tf_shape(a_j.shape[0], j)

    if mode == MAGNITUDE:
        values = np.abs(a_j)
    elif mode == SQUARED_MAGNITUDE:
        values = a_j.real ** 2 + a_j.imag ** 2
    else:
        raise ValueError("unknown feature mode '%s'" % mode)

    return values.reshape(n_steps, n_freqs).T.copy()


def segment_length_of(n_coefficients):
    """Segment length `M` of a code of `J * M` coefficients.

    :raises DimError: when no valid length matches
    """
    M = 8
    while (M.bit_length() - 2) * M < n_coefficients:
        M *= 2
    if (M.bit_length() - 2) * M != n_coefficients:
        raise DimError(cause="%d coefficients do not match any segment length" % n_coefficients)
    return M


def featurize(code, mode=SQUARED_MAGNITUDE, label=None, max_normalize=False, M=None):
    """Build the feature stack of a sparse code.

    :param code: `SparseCode` to featurize
    :param mode: 'mag' or 'sq'
    :param label: murmur class of the segment, if known
    :param max_normalize: divide the stack by its maximum entry
    :param M: segment length; guessed from the size of the code
        when `None`

    :returns: a `FeatureStack`
    """
    if M is None:
        M = segment_length_of(code.size)
    J = check_resolution(M) - 1

    blocks = split_coeffs(code.coefficients, M, J)
    matrices = [reshape_to_tf(a_j, j, mode=mode) for j, a_j in enumerate(blocks, start=1)]

    if max_normalize:
        peak = max(A.max() for A in matrices)
        if peak > 0.0:
            matrices = [A / peak for A in matrices]

    return FeatureStack(matrices, mode=mode, label=label, segment_ref=code.segment_ref)


def coefficient_magnitudes(stack):
    """Recover `|a|` from a stack that was not max-normalized."""

    blocks = [A.T.reshape(-1) for A in stack.matrices]
    magnitudes = np.concatenate(blocks)
    if stack.mode == SQUARED_MAGNITUDE:
        magnitudes = np.sqrt(magnitudes)
    return magnitudes
