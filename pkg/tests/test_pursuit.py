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

import itertools
import unittest

import numpy as np

from gaborcomp.config import PursuitConfig, SynthSpec
from gaborcomp.dictionary import AtomParams, build_multires, gabor_atom
from gaborcomp.errors import DimError, EmptyInputError
from gaborcomp.pursuit import (IncrementalQR,
                               SparseCode,
                               comp_joint,
                               comp_single,
                               least_squares_complex,
                               reconstruct)
from gaborcomp.signals import synth_murmur


def random_real_atom(rng, dictionary):
    """Column of a random atom modulated at 0 or pi"""

    L = dictionary.M.bit_length() - 1
    j = int(rng.integers(1, dictionary.J + 1))
    t = int(rng.integers(2 ** (L - j)))
    f = int(rng.choice([0, 2 ** (j - 1)]))
    return dictionary.index(AtomParams(j, t, f))


def incoherent_atoms(rng, dictionary, count, max_coherence=0.05):
    """Columns of `count` real atoms with small pairwise coherence"""

    columns = []
    while len(columns) < count:
        column = random_real_atom(rng, dictionary)
        atom = dictionary.atoms[:, column]
        if all(abs(np.vdot(dictionary.atoms[:, c], atom)) < max_coherence for c in columns):
            columns.append(column)
    return columns


class TestLeastSquaresComplex(unittest.TestCase):
    """Unit tests for least_squares_complex"""

    def test_single_column(self):
        """Projection onto one real atom"""

        d = build_multires(64).atom(AtomParams(3, 4, 0))
        x = 3 * d.real

        a = least_squares_complex(d[:, None], x)
        self.assertEqual(a.shape, (1,))
        self.assertAlmostEqual(abs(a[0] - 3.0), 0.0, places=12)

    def test_orthonormal_columns(self):
        """Coefficients of an orthonormal expansion"""

        D_sub = np.zeros((8, 2), dtype=np.complex128)
        D_sub[0, 0] = 1.0
        D_sub[3, 1] = 1.0
        x = 2 * D_sub[:, 0].real - D_sub[:, 1].real

        a = least_squares_complex(D_sub, x)
        np.testing.assert_allclose(a, [2.0, -1.0], rtol=0, atol=1e-14)

    def test_residual_orthogonality(self):
        """Residuals are orthogonal to every column"""

        rng = np.random.default_rng(3)
        D_sub = rng.normal(size=(32, 5)) + 1j * rng.normal(size=(32, 5))
        x = rng.normal(size=32)

        a = least_squares_complex(D_sub, x)
        residual = x - D_sub @ a

        self.assertLess(np.max(np.abs(D_sub.conj().T @ residual)), 1e-10)

        expected = np.linalg.lstsq(D_sub, x.astype(np.complex128), rcond=None)[0]
        np.testing.assert_allclose(a, expected, rtol=0, atol=1e-10)

    def test_dependent_column(self):
        """Linearly dependent columns get a zero coefficient"""

        rng = np.random.default_rng(4)
        D_sub = rng.normal(size=(16, 3)).astype(np.complex128)
        D_sub[:, 2] = D_sub[:, 0] - 2 * D_sub[:, 1]
        x = rng.normal(size=16)

        a = least_squares_complex(D_sub, x)

        self.assertEqual(a[2], 0.0)
        expected = np.linalg.lstsq(D_sub[:, :2], x.astype(np.complex128), rcond=None)[0]
        np.testing.assert_allclose(a[:2], expected, rtol=0, atol=1e-10)

    def test_dim_error(self):
        """Check if an exception is raised when shapes do not match"""

        with self.assertRaises(DimError):
            least_squares_complex(np.ones((8, 2)), np.ones(7))

        with self.assertRaises(DimError):
            least_squares_complex(np.ones(8), np.ones(8))


class TestIncrementalQR(unittest.TestCase):
    """Unit tests for IncrementalQR"""

    def test_factorization(self):
        """Q R reproduces the appended columns"""

        rng = np.random.default_rng(5)
        A = rng.normal(size=(20, 6)) + 1j * rng.normal(size=(20, 6))

        qr = IncrementalQR(20, 6)
        for i in range(6):
            self.assertTrue(qr.append(A[:, i]))

        Q = qr.Q[:, :qr.rank]
        np.testing.assert_allclose(Q.conj().T @ Q, np.eye(6), rtol=0, atol=1e-13)
        np.testing.assert_allclose(Q @ qr.R, A, rtol=0, atol=1e-12)

    def test_reject(self):
        """Columns in the span of the basis are rejected"""

        qr = IncrementalQR(4, 3)
        self.assertTrue(qr.append(np.array([1.0, 0.0, 0.0, 0.0])))
        self.assertFalse(qr.append(np.array([2.0, 0.0, 0.0, 0.0]), threshold=1e-10))
        self.assertEqual(qr.rank, 1)


class TestCompSingle(unittest.TestCase):
    """Unit tests for comp_single"""

    @classmethod
    def setUpClass(cls):
        cls.dictionary = build_multires(64)

    def test_single_real_atom(self):
        """A raw real atom is recovered in one iteration"""

        d = self.dictionary
        params = AtomParams(3, 4, 0)
        x = gabor_atom(params, 64).real
        column = d.index(params)

        code = comp_single(x, d, PursuitConfig(zeta=1), segment_ref='rec/1')

        self.assertEqual(code.support, (column,))
        self.assertAlmostEqual(code.coefficients[column].real, d.raw_norms[column], places=10)
        self.assertAlmostEqual(code.coefficients[column].imag, 0.0, places=10)
        self.assertLess(code.residual_norms[-1], 1e-10)
        self.assertEqual(code.residual_norms[0], np.linalg.norm(x))
        self.assertEqual(code.segment_ref, 'rec/1')
        self.assertEqual(code.size, d.n_atoms)

        off_support = np.delete(code.coefficients, column)
        np.testing.assert_array_equal(off_support, np.zeros(d.n_atoms - 1))

        np.testing.assert_allclose(reconstruct(d, code), x, rtol=0, atol=1e-10)

    def test_complex_atom(self):
        """The real part of a complex atom needs the atom and its conjugate"""

        d = self.dictionary
        params = AtomParams(3, 4, 1)
        partner = AtomParams(3, 4, 7)
        c = 1.5 * np.exp(0.3j)
        x = (c * d.atom(params)).real

        code = comp_single(x, d, PursuitConfig(zeta=2))

        self.assertEqual(set(code.support), {d.index(params), d.index(partner)})
        self.assertLess(code.residual_norms[-1], 1e-10)
        self.assertAlmostEqual(abs(code.coefficients[d.index(params)] - c / 2), 0.0, places=8)

    def test_three_atoms(self):
        """Sums of separated real atoms are recovered"""

        d = self.dictionary
        params = [AtomParams(2, 2, 0), AtomParams(3, 4, 0), AtomParams(2, 13, 0)]
        amplitudes = [1.0, 0.9, 0.8]
        columns = [d.index(p) for p in params]

        atoms = [d.atoms[:, c].real for c in columns]
        for a, b in itertools.combinations(atoms, 2):
            self.assertLess(abs(np.dot(a, b)), 0.05)

        x = sum(amp * atom for amp, atom in zip(amplitudes, atoms))

        code = comp_single(x, d, PursuitConfig(zeta=5))
        self.assertTrue(set(columns) <= set(code.support))

        code = comp_single(x, d, PursuitConfig(zeta=3))
        self.assertEqual(set(code.support), set(columns))

        error = np.linalg.norm(x - reconstruct(d, code)) / np.linalg.norm(x)
        self.assertLess(error, 1e-8)
        np.testing.assert_allclose(code.coefficients[columns].real, amplitudes, rtol=0, atol=1e-8)

    def test_zeros(self):
        """All-zero segments give empty codes"""

        code = comp_single(np.zeros(64), self.dictionary)

        self.assertEqual(code.support, ())
        self.assertEqual(code.residual_norms, [0.0])
        np.testing.assert_array_equal(code.coefficients, np.zeros(self.dictionary.n_atoms))
        np.testing.assert_array_equal(reconstruct(self.dictionary, code), np.zeros(64))

    def test_residual_monotonic(self):
        """Residual norms never increase"""

        rng = np.random.default_rng(6)
        x = rng.normal(size=64)

        code = comp_single(x, self.dictionary, PursuitConfig(zeta=40))

        self.assertEqual(len(code.support), 40)
        self.assertEqual(len(set(code.support)), 40)
        self.assertEqual(len(code.residual_norms), 41)
        self.assertTrue(np.all(np.diff(code.residual_norms) <= 1e-12))

    def test_residual_orthogonality(self):
        """Residuals are orthogonal to the selected atoms"""

        d = self.dictionary
        rng = np.random.default_rng(7)
        x = rng.normal(size=64)

        code = comp_single(x, d, PursuitConfig(zeta=20))

        support = list(code.support)
        residual = x - d.atoms[:, support] @ code.coefficients[support]
        self.assertLess(np.max(np.abs(d.atoms[:, support].conj().T @ residual)), 1e-9)
        self.assertAlmostEqual(np.linalg.norm(residual), code.residual_norms[-1], places=10)

    def test_residual_tol(self):
        """The pursuit stops once the relative residual is small enough"""

        rng = np.random.default_rng(8)
        x = rng.normal(size=64)

        code = comp_single(x, self.dictionary, PursuitConfig(zeta=64, residual_tol=0.5))

        norms = np.array(code.residual_norms)
        self.assertLess(norms[-1] / norms[0], 0.5)
        self.assertTrue(np.all(norms[:-1] / norms[0] >= 0.5))
        self.assertLess(len(code.support), 64)

    def test_vanishing_correlation(self):
        """The pursuit stops when nothing correlates with the residual"""

        d = self.dictionary
        x = d.atom(AtomParams(2, 5, 0)).real

        code = comp_single(x, d, PursuitConfig(zeta=10))

        self.assertEqual(len(code.support), 1)

    def test_synthetic_murmur(self):
        """Full-length pursuits approximate synthetic murmurs"""

        d = build_multires(512)
        segment = synth_murmur(SynthSpec('Diamond', seed=11), 0, M=512)

        code = comp_single(segment.samples, d, PursuitConfig(zeta=511))

        x = segment.samples
        error = np.linalg.norm(x - reconstruct(d, code)) / np.linalg.norm(x)
        self.assertLess(error, 0.05)

    def test_dim_error(self):
        """Check if an exception is raised when lengths do not match"""

        with self.assertRaises(DimError):
            comp_single(np.ones(32), self.dictionary)

        with self.assertRaises(DimError):
            comp_single(np.ones((2, 64)), self.dictionary)

    def test_reconstruct_dim_error(self):
        """Check if an exception is raised when the code does not match"""

        code = SparseCode(np.zeros(10, dtype=np.complex128), (), [0.0])

        with self.assertRaises(DimError):
            reconstruct(self.dictionary, code)


class TestCompJoint(unittest.TestCase):
    """Unit tests for comp_joint"""

    @classmethod
    def setUpClass(cls):
        cls.dictionary = build_multires(64)

    def test_single_segment(self):
        """One segment gives the same code as the single pursuit"""

        rng = np.random.default_rng(9)
        x = rng.normal(size=64)
        cfg = PursuitConfig(zeta=15)

        single = comp_single(x, self.dictionary, cfg)
        joint = comp_joint([x], self.dictionary, cfg)

        self.assertEqual(len(joint), 1)
        self.assertEqual(joint.shared_support, single.support)
        np.testing.assert_array_equal(joint.codes[0].coefficients, single.coefficients)
        self.assertEqual(joint.codes[0].residual_norms, single.residual_norms)

    def test_linearity(self):
        """Scaled segments share the support and scale their coefficients"""

        rng = np.random.default_rng(10)
        x = rng.normal(size=64)
        cfg = PursuitConfig(zeta=10)

        single = comp_single(x, self.dictionary, cfg)
        joint = comp_joint([x, 2 * x], self.dictionary, cfg, segment_refs=['r/1', 'r/2'])

        self.assertEqual(joint.shared_support, single.support)
        np.testing.assert_allclose(joint.codes[1].coefficients,
                                   2 * joint.codes[0].coefficients,
                                   rtol=0, atol=1e-10)
        self.assertEqual([c.segment_ref for c in joint], ['r/1', 'r/2'])

    def test_shared_support(self):
        """Every member code holds the same support"""

        rng = np.random.default_rng(11)
        X = [rng.normal(size=64) for _ in range(3)]

        joint = comp_joint(X, self.dictionary, PursuitConfig(zeta=12))

        for code in joint:
            self.assertIs(code.support, joint.shared_support)
            nonzero = set(np.flatnonzero(code.coefficients))
            self.assertTrue(nonzero <= set(joint.shared_support))

    def test_disjoint_atoms(self):
        """Atoms of every segment join the shared support"""

        d = self.dictionary
        a = d.index(AtomParams(2, 2, 0))
        b = d.index(AtomParams(2, 13, 0))

        joint = comp_joint([d.atoms[:, a].real, d.atoms[:, b].real], d, PursuitConfig(zeta=2))

        self.assertEqual(set(joint.shared_support), {a, b})
        for code in joint:
            self.assertLess(code.residual_norms[-1], 1e-10)

    def test_scaling_one_segment(self):
        """Scaling the only nonzero segment scales its coefficients"""

        rng = np.random.default_rng(12)
        x = rng.normal(size=64)
        zeros = np.zeros(64)
        cfg = PursuitConfig(zeta=8)

        joint = comp_joint([x, zeros], self.dictionary, cfg)
        scaled = comp_joint([-3 * x, zeros], self.dictionary, cfg)

        self.assertEqual(joint.shared_support, scaled.shared_support)
        np.testing.assert_allclose(scaled.codes[0].coefficients,
                                   -3 * joint.codes[0].coefficients,
                                   rtol=0, atol=1e-10)
        np.testing.assert_array_equal(scaled.codes[1].coefficients,
                                      np.zeros(self.dictionary.n_atoms))

    def test_residual_monotonic(self):
        """Residual norms of every segment never increase"""

        rng = np.random.default_rng(13)
        X = [rng.normal(size=64) for _ in range(3)]

        joint = comp_joint(X, self.dictionary, PursuitConfig(zeta=30))

        for code in joint:
            self.assertTrue(np.all(np.diff(code.residual_norms) <= 1e-12))

    def test_joint_residual_tol(self):
        """The summed residual energy stops the joint pursuit"""

        rng = np.random.default_rng(14)
        X = [rng.normal(size=64) for _ in range(2)]

        joint = comp_joint(X, self.dictionary, PursuitConfig(zeta=64, residual_tol=0.6))

        energy0 = sum(c.residual_norms[0] ** 2 for c in joint)
        energy = sum(c.residual_norms[-1] ** 2 for c in joint)
        self.assertLess(np.sqrt(energy / energy0), 0.6)

    def test_errors(self):
        """Check if an exception is raised for invalid inputs"""

        with self.assertRaises(EmptyInputError):
            comp_joint([], self.dictionary)

        with self.assertRaises(DimError):
            comp_joint([np.ones(64), np.ones(32)], self.dictionary)


class TestRecovery(unittest.TestCase):
    """Recovery of synthetic sparse signals at full length"""

    @classmethod
    def setUpClass(cls):
        cls.dictionary = build_multires(512)

    def test_real_atoms(self):
        """Sums of one to three incoherent real atoms are recovered"""

        d = self.dictionary
        trials = 200
        recovered = 0

        for seed in range(trials):
            rng = np.random.default_rng([17, seed])
            k = int(rng.integers(1, 4))
            columns = incoherent_atoms(rng, d, k)
            amplitudes = rng.uniform(0.5, 2.0, size=k) * rng.choice([-1.0, 1.0], size=k)

            x = d.atoms[:, columns].real @ amplitudes

            code = comp_single(x, d, PursuitConfig(zeta=k))

            if set(code.support) != set(columns):
                continue
            recovered += 1

            error = np.linalg.norm(code.coefficients[columns] - amplitudes) / np.linalg.norm(amplitudes)
            self.assertLess(error, 1e-8)

        self.assertGreaterEqual(recovered, 0.95 * trials)

    def test_conjugate_pairs(self):
        """Real parts of complex atoms select the atom and its conjugate"""

        d = self.dictionary
        L = d.M.bit_length() - 1

        for seed in range(50):
            rng = np.random.default_rng([19, seed])
            j = int(rng.integers(2, d.J + 1))
            t = int(rng.integers(2 ** (L - j)))
            f = int(rng.choice([f for f in range(1, 2 ** j) if f != 2 ** (j - 1)]))
            c = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))

            column = d.index(AtomParams(j, t, f))
            partner = d.index(AtomParams(j, t, 2 ** j - f))
            x = (c * d.atoms[:, column]).real

            code = comp_single(x, d, PursuitConfig(zeta=2))

            self.assertEqual(set(code.support), {column, partner})
            self.assertLess(code.residual_norms[-1], 1e-9)

    def test_residual_properties(self):
        """Residuals shrink and stay orthogonal to the support after every step"""

        d = build_multires(64)

        for seed in range(20):
            x = np.random.default_rng([23, seed]).normal(size=64)

            code = comp_single(x, d, PursuitConfig(zeta=63))

            norms = np.array(code.residual_norms)
            self.assertTrue(np.all(np.diff(norms) <= 1e-12 * norms[0]))

            for zeta in range(1, len(code.support) + 1, 3):
                step = comp_single(x, d, PursuitConfig(zeta=zeta))
                self.assertEqual(step.support, code.support[:zeta])

                support = list(step.support)
                residual = x - d.atoms[:, support] @ step.coefficients[support]
                self.assertLess(np.max(np.abs(d.atoms[:, support].conj().T @ residual)), 1e-9)


class TestSmallInstance(unittest.TestCase):

    """Greedy supports against an exhaustive search"""

    def test_exhaustive_search(self):
        """Greedy supports match the best 2-subset on most inputs"""

        M = 16
        d = build_multires(M)
        rng = np.random.default_rng(15)

        # Real atoms of the two finest resolutions
        candidates = [d.index(AtomParams(1, t, 0)) for t in range(8)]
        candidates += [d.index(AtomParams(2, t, 0)) for t in range(4)]

        # Well separated pairs
        pairs = [(a, b) for a, b in itertools.combinations(candidates, 2)
                 if abs(np.vdot(d.atoms[:, a], d.atoms[:, b])) < 1e-3]
        self.assertGreater(len(pairs), 10)

        all_pairs = list(itertools.combinations(range(d.n_atoms), 2))

        matches = 0
        trials = 100
        for _ in range(trials):
            a, b = pairs[rng.integers(len(pairs))]
            amplitudes = rng.uniform(1.0, 1.5, size=2) * rng.choice([-1.0, 1.0], size=2)
            x = amplitudes[0] * d.atoms[:, a].real + amplitudes[1] * d.atoms[:, b].real

            code = comp_single(x, d, PursuitConfig(zeta=2))

            best = None
            best_error = np.inf
            for pair in all_pairs:
                D_sub = d.atoms[:, pair]
                coefficients = np.linalg.lstsq(D_sub, x.astype(np.complex128), rcond=None)[0]
                error = np.linalg.norm(x - D_sub @ coefficients)
                if error < best_error:
                    best, best_error = pair, error

            if set(code.support) == set(best):
                matches += 1

        self.assertGreaterEqual(matches, 90)


if __name__ == "__main__":
    unittest.main()
