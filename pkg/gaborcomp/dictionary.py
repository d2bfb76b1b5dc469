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

"""Multiresolution dictionaries of complex Gabor atoms.

The dictionary of a segment length `M = 2**L` is made of `J = L - 1`
single-resolution blocks. Block `j` has a scale `alpha = 2**j`,
`2**(L - j)` translation steps of `2**j` samples and `2**j`
frequencies in `[0, 2*pi)`, so every block has exactly `M` atoms.
Columns inside a block are sorted translation-major; the atom
`(j, t, f)` is found at column `(j - 1) * M + t * 2**j + f`.
"""

import dataclasses
import logging

import numpy as np

from .common import UNDERFLOW
from .errors import InvalidAtomParamsError, InvalidResolutionError


logger = logging.getLogger(__name__)


def check_resolution(M):
    """Check `M` is a valid segment length and return its log2.

    :raises InvalidResolutionError: when `M` is not a power of two
        greater or equal than 8
    """
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)):
        raise InvalidResolutionError(cause="M must be an integer; %r given" % (M,))
    M = int(M)
    if M < 1 or M & (M - 1):
        raise InvalidResolutionError(cause="M must be a power of two; %s given" % M)
    if M < 8:
        raise InvalidResolutionError(cause="M must be at least 8; %s given" % M)
    return M.bit_length() - 1


def n_resolutions(M):
    """Number of resolutions `J` of the dictionary of length `M`."""

    return check_resolution(M) - 1


@dataclasses.dataclass(frozen=True)
class AtomParams:
    """Parameters of a Gabor atom.

    :param j: resolution index
    :param t: translation index
    :param f: frequency index
    """
    j: int
    t: int
    f: int

    @property
    def alpha(self):
        """Scale of the Gaussian window."""

        return float(2 ** self.j)

    @property
    def m0(self):
        """Center of the atom, in samples."""

        return 2 ** self.j * self.t

    @property
    def omega(self):
        """Angular frequency, in radians per sample."""

        return 2 * np.pi * self.f / 2 ** self.j

    def validate(self, M):
        """Check the parameters are in range for the length `M`.

        :raises InvalidAtomParamsError: when any index is out of range
        """
        try:
            L = check_resolution(M)
        except InvalidResolutionError as e:
            raise InvalidAtomParamsError(cause=str(e))

        if not 1 <= self.j <= L - 1:
            cause = "j must be in [1, %d]; %s given" % (L - 1, self.j)
            raise InvalidAtomParamsError(cause=cause)
        if not 0 <= self.t < 2 ** (L - self.j):
            cause = "t must be in [0, %d]; %s given" % (2 ** (L - self.j) - 1, self.t)
            raise InvalidAtomParamsError(cause=cause)
        if not 0 <= self.f < 2 ** self.j:
            cause = "f must be in [0, %d]; %s given" % (2 ** self.j - 1, self.f)
            raise InvalidAtomParamsError(cause=cause)
        return self

    @classmethod
    def parse(cls, value):
        """Parse a 'j,t,f' string."""

        try:
            j, t, f = (int(v) for v in value.split(','))
        except ValueError:
            raise InvalidAtomParamsError(cause="'%s' is not a 'j,t,f' triple" % value)
        return cls(j, t, f)


def _gabor(m, m0, j, f):
    """Evaluate Gabor atoms of resolution `j` on integer grids.

    `m`, `m0` and `f` are integer arrays that broadcast against each
    other. The phase is reduced as `(f * (m - m0)) mod 2**j` before
    scaling to radians, so it never grows with the shift.
    """
    n_freqs = 2 ** j
    shift = m - m0

    envelope = np.exp(-np.pi * (shift / float(n_freqs)) ** 2)
    envelope[envelope < UNDERFLOW] = 0.0

    angle = 2 * np.pi * ((f * shift) % n_freqs) / n_freqs
    return envelope * (np.cos(angle) - 1j * np.sin(angle))


def gabor_atom(params, M):
    """Build the raw (non normalized) Gabor atom `params` of length `M`.

    Entry `m` equals `exp(-pi * ((m - m0) / alpha)**2) *
    exp(-i * omega * (m - m0))`. Gaussian values below 1e-300 are
    clamped to zero.

    :raises InvalidAtomParamsError: when the parameters are out of range
    """
    params.validate(M)

    m = np.arange(M, dtype=np.int64)
    atom = _gabor(m, params.m0, params.j, params.f)

    # omega is 0 or pi
    if params.f % (2 ** (params.j - 1)) == 0:
        atom.imag = 0.0
    return atom


def build_single_res(j, M):
    """Build the single-resolution dictionary `D_j`.

    :returns: a tuple with the `M x M` matrix of unit-norm atoms and
        the raw norms of the atoms

    :raises InvalidResolutionError: when `j` or `M` are not valid
    """
    L = check_resolution(M)
    if isinstance(j, bool) or not 1 <= j <= L - 1:
        cause = "resolution must be in [1, %d]; %s given" % (L - 1, j)
        raise InvalidResolutionError(cause=cause)

    n_freqs = 2 ** j
    n_steps = 2 ** (L - j)

    m = np.arange(M, dtype=np.int64)[:, None, None]
    m0 = (n_freqs * np.arange(n_steps, dtype=np.int64))[None, :, None]
    f = np.arange(n_freqs, dtype=np.int64)[None, None, :]

    block = _gabor(m, m0, j, f)
    real = np.arange(n_freqs) % (n_freqs // 2) == 0
    block[:, :, real] = block[:, :, real].real
    block = block.reshape(M, n_steps * n_freqs)

    raw_norms = np.linalg.norm(block, axis=0)
    block /= raw_norms

    return block, raw_norms


def atom_index(params, M):
    """Column of the atom `params` in the dictionary of length `M`.

    :raises InvalidAtomParamsError: when the parameters are out of range
    """
    params.validate(M)
    return (params.j - 1) * M + params.t * 2 ** params.j + params.f


def params_of(column, M):
    """Parameters of the atom stored at `column`.

    :raises InvalidAtomParamsError: when the column is out of range
    """
    J = n_resolutions(M)
    if not 0 <= column < J * M:
        cause = "column must be in [0, %d]; %s given" % (J * M - 1, column)
        raise InvalidAtomParamsError(cause=cause)

    j = column // M + 1
    t, f = divmod(column % M, 2 ** j)
    return AtomParams(int(j), int(t), int(f))


class Dictionary:
    """Multiresolution dictionary of unit-norm complex Gabor atoms.

    The atoms matrix and the raw norms are read-only, so a dictionary
    can be shared by any number of pursuit workers.

    :param atoms: complex matrix of `M x (J * M)` unit-norm columns
    :param raw_norms: norms of the atoms before normalization

    :raises InvalidResolutionError: when the arrays do not have the
        expected shapes
    """
    def __init__(self, atoms, raw_norms):
        M = atoms.shape[0]
        J = n_resolutions(M)

        if atoms.shape != (M, J * M) or raw_norms.shape != (J * M,):
            raise InvalidResolutionError(cause="dictionary of shape %s does not match M=%d"
                                         % (atoms.shape, M))

        self.atoms = np.ascontiguousarray(atoms, dtype=np.complex128)
        self.atoms.setflags(write=False)
        self.raw_norms = np.ascontiguousarray(raw_norms, dtype=np.float64)
        self.raw_norms.setflags(write=False)
        self.M = M
        self.J = J
        self._adjoint = None

    @property
    def n_atoms(self):
        return self.J * self.M

    @property
    def adjoint(self):
        """Conjugate transpose of the atoms, C-contiguous."""

        if self._adjoint is None:
            adjoint = np.ascontiguousarray(self.atoms.conj().T)
            adjoint.setflags(write=False)
            self._adjoint = adjoint
        return self._adjoint

    def block(self, j):
        """Columns of the resolution `j` as a slice."""

        if not 1 <= j <= self.J:
            raise InvalidResolutionError(cause="resolution must be in [1, %d]; %s given"
                                         % (self.J, j))
        return slice((j - 1) * self.M, j * self.M)

    def index(self, params):
        return atom_index(params, self.M)

    def params(self, column):
        return params_of(column, self.M)

    def atom(self, params):
        """Unit-norm column of the atom `params`."""

        return self.atoms[:, self.index(params)]


def build_multires(M):
    """Build the multiresolution dictionary of length `M`.

    :raises InvalidResolutionError: when `M` is not a power of two
        greater or equal than 8
    """
    J = n_resolutions(M)

    blocks, norms = zip(*(build_single_res(j, M) for j in range(1, J + 1)))

    dictionary = Dictionary(np.hstack(blocks), np.concatenate(norms))

    logger.info("Dictionary built; M=%d, J=%d, %d atoms", M, J, dictionary.n_atoms)

    return dictionary
