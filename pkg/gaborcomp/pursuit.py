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

"""Complex orthogonal matching pursuit over Gabor dictionaries.

A single segment and a group of segments are decomposed by the same
greedy loop. On each iteration the atom maximizing the sum over
segments of `|d^H r^u|` joins the shared support, the least-squares
fit over the selected atoms is updated and residuals are recomputed.
"""

import logging

import numpy as np
import scipy.linalg

from .common import MIN_CORRELATION, RANK_TOL
from .config import PursuitConfig
from .errors import DimError, EmptyInputError


logger = logging.getLogger(__name__)

# Gram-Schmidt passes per new column
REORTHOGONALIZATION_PASSES = 2


class SparseCode:
    """Sparse decomposition of one segment.

    :param coefficients: complex vector of length `J * M`, zero off
        the support
    :param support: tuple of selected columns, in selection order
    :param residual_norms: residual norm before the first iteration
        and after every selected atom
    :param segment_ref: reference of the decomposed segment
    :param dependent: selected columns flagged as linearly dependent;
        their coefficients are zero
    :param zeta: sparsity level of the pursuit
    """
    def __init__(self, coefficients, support, residual_norms,
                 segment_ref=None, dependent=(), zeta=None):
        self.coefficients = coefficients
        self.support = support
        self.residual_norms = residual_norms
        self.segment_ref = segment_ref
        self.dependent = tuple(dependent)
        self.zeta = zeta

    @property
    def size(self):
        return len(self.coefficients)

    def __repr__(self):
        return "SparseCode(ref=%r, |support|=%d)" % (self.segment_ref, len(self.support))


class JointSparseCode:
    """Sparse decompositions of several segments sharing one support.

    Every member code holds the very same support object.
    """
    def __init__(self, codes, shared_support):
        self.codes = codes
        self.shared_support = shared_support

    def __len__(self):
        return len(self.codes)

    def __iter__(self):
        return iter(self.codes)


class IncrementalQR:
    """QR factorization of a matrix updated one column at a time.

    New columns are orthogonalized against the stored basis with
    modified Gram-Schmidt, repeated to keep the basis orthonormal
    to working precision. Columns whose remaining norm is lower
    than the given threshold are rejected.

    :param n_rows: number of rows of the columns
    :param capacity: maximum number of accepted columns
    """
    def __init__(self, n_rows, capacity):
        self.Q = np.zeros((n_rows, capacity), dtype=np.complex128)
        self.R = np.zeros((capacity, capacity), dtype=np.complex128)
        self.rank = 0

    def append(self, column, threshold=0.0):
        """Add a column to the factorization.

        :returns: whether the column was accepted
        """
        k = self.rank
        v = np.array(column, dtype=np.complex128)
        r = np.zeros(k, dtype=np.complex128)

        basis = self.Q[:, :k]
        for _ in range(REORTHOGONALIZATION_PASSES):
            h = basis.conj().T @ v
            v -= basis @ h
            r += h

        norm = np.linalg.norm(v)
        if norm <= threshold or norm == 0.0:
            return False

        self.Q[:, k] = v / norm
        self.R[:k, k] = r
        self.R[k, k] = norm
        self.rank += 1
        return True

    @property
    def last(self):
        """Last accepted basis vector."""

        return self.Q[:, self.rank - 1]

    def solve(self, X):
        """Least-squares coefficients of each row of `X`.

        :param X: matrix of `U x n_rows`

        :returns: complex matrix of `U x rank`
        """
        k = self.rank
        if k == 0:
            return np.zeros((X.shape[0], 0), dtype=np.complex128)

        Z = self.Q[:, :k].conj().T @ X.T
        return scipy.linalg.solve_triangular(self.R[:k, :k], Z, lower=False).T


def least_squares_complex(D_sub, x, rank_tol=RANK_TOL):
    """Minimize `||x - D_sub a||` over complex vectors `a`.

    The columns are factorized in order. A column whose projection
    onto the orthogonal complement of the previous ones has a norm
    lower than `rank_tol * ||x||` gets a zero coefficient.

    :param D_sub: complex matrix of `M x c`
    :param x: real vector of length `M`
    :param rank_tol: rank threshold, relative to the norm of `x`

    :returns: complex vector of length `c`

    :raises DimError: when shapes do not match
    """
    D_sub = np.asarray(D_sub)
    x = np.asarray(x, dtype=np.float64)

    if D_sub.ndim != 2 or x.ndim != 1 or D_sub.shape[0] != x.shape[0]:
        raise DimError(cause="cannot fit a vector of shape %s with a matrix of shape %s"
                       % (x.shape, D_sub.shape))

    M, c = D_sub.shape
    qr = IncrementalQR(M, c)
    threshold = rank_tol * np.linalg.norm(x)

    accepted = [i for i in range(c) if qr.append(D_sub[:, i], threshold)]

    coefficients = np.zeros(c, dtype=np.complex128)
    coefficients[accepted] = qr.solve(x[None, :])[0]
    return coefficients


def _pursue(X, dictionary, cfg):
    """Greedy loop shared by single and joint pursuits.

    :param X: real matrix of `U x M`

    :returns: a tuple with the support, the coefficients (`U x J*M`),
        the residual histories (one list per segment) and the
        dependent columns
    """
    U, M = X.shape
    energy0 = float(np.sum(X ** 2))

    histories = [[float(np.linalg.norm(x))] for x in X]
    coefficients = np.zeros((U, dictionary.n_atoms), dtype=np.complex128)
    support = []
    dependent = []

    if energy0 == 0.0:
        return support, coefficients, histories, dependent

    atoms = dictionary.atoms
    adjoint = dictionary.adjoint
    zeta = min(cfg.zeta, dictionary.n_atoms)
    threshold = cfg.rank_tol * max(h[0] for h in histories)

    qr = IncrementalQR(M, min(zeta, M))
    accepted = []
    residuals = X.astype(np.complex128)
    selected = np.zeros(dictionary.n_atoms, dtype=bool)

    while len(support) < zeta:
        scores = np.abs(adjoint @ residuals.T).sum(axis=1)
        scores[selected] = -np.inf

        best = int(np.argmax(scores))
        if scores[best] < MIN_CORRELATION:
            break

        support.append(best)
        selected[best] = True

        if qr.rank < qr.Q.shape[1] and qr.append(atoms[:, best], threshold):
            accepted.append(best)
            q = qr.last
            residuals -= np.outer(residuals @ q.conj(), q)
        else:
            dependent.append(best)

        norms = np.linalg.norm(residuals, axis=1)
        for history, norm in zip(histories, norms):
            history.append(float(norm))

        if cfg.residual_tol > 0.0:
            ratio = np.sqrt(np.sum(norms ** 2) / energy0)
            if ratio < cfg.residual_tol:
                break

    if accepted:
        coefficients[:, accepted] = qr.solve(X)

    return support, coefficients, histories, dependent


def _check_input(X, dictionary):
    for u, x in enumerate(X):
        if x.ndim != 1 or x.shape[0] != dictionary.M:
            raise DimError(cause="segment %d has shape %s; (%d,) expected"
                           % (u, x.shape, dictionary.M))


def comp_joint(X, dictionary, cfg=None, segment_refs=None):
    """Decompose several segments with a shared support.

    :param X: list of real vectors of length `dictionary.M`
    :param dictionary: `Dictionary` to project onto
    :param cfg: `PursuitConfig`; defaults are used when `None`
    :param segment_refs: references of the segments

    :returns: a `JointSparseCode`

    :raises EmptyInputError: when `X` is empty
    :raises DimError: when a segment does not match the dictionary
    """
    cfg = cfg or PursuitConfig()

    X = [np.asarray(x, dtype=np.float64) for x in X]
    if not X:
        raise EmptyInputError(cause="no segments to decompose")
    _check_input(X, dictionary)

    segment_refs = segment_refs or [None] * len(X)

    support, coefficients, histories, dependent = _pursue(np.vstack(X), dictionary, cfg)
    support = tuple(support)

    if dependent:
        logger.debug("%d dependent atoms flagged", len(dependent))

    codes = [
        SparseCode(coefficients[u], support, histories[u],
                   segment_ref=segment_refs[u], dependent=dependent, zeta=cfg.zeta)
        for u in range(len(X))
    ]
    return JointSparseCode(codes, support)


def comp_single(x, dictionary, cfg=None, segment_ref=None):
    """Decompose one segment.

    The pursuit stops once `cfg.zeta` atoms are selected, when the
    relative residual norm falls below `cfg.residual_tol` or when
    no remaining atom correlates with the residual.

    :param x: real vector of length `dictionary.M`
    :param dictionary: `Dictionary` to project onto
    :param cfg: `PursuitConfig`; defaults are used when `None`
    :param segment_ref: reference of the segment

    :returns: a `SparseCode`

    :raises DimError: when `x` does not match the dictionary
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimError(cause="segment has shape %s; (%d,) expected" % (x.shape, dictionary.M))

    joint = comp_joint([x], dictionary, cfg=cfg, segment_refs=[segment_ref])
    return joint.codes[0]


def reconstruct(dictionary, code):
    """Real part of the approximation `D a` given by `code`.

    :raises DimError: when the code does not match the dictionary
    """
    if code.size != dictionary.n_atoms:
        raise DimError(cause="code of %d coefficients for a dictionary of %d atoms"
                       % (code.size, dictionary.n_atoms))

    support = list(code.support)
    if not support:
        return np.zeros(dictionary.M, dtype=np.float64)

    approximation = dictionary.atoms[:, support] @ code.coefficients[support]

    logger.debug("Imaginary part of the approximation of %s: %g",
                 code.segment_ref, float(np.max(np.abs(approximation.imag))))

    return approximation.real.copy()
