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

import datetime
import os
import shutil
import tempfile
import unittest

import numpy as np
import rq

from gaborcomp.config import PursuitConfig
from gaborcomp.dictionary import build_multires
from gaborcomp.errors import FormatError
from gaborcomp.formats import write_dictionary
from gaborcomp.jobs import (PursuitJobResult,
                            execute_pursuit_job,
                            generate_job_id,
                            load_dictionary)
from gaborcomp.pursuit import SparseCode, comp_joint, comp_single

from base import TestBaseRQ


class TestPursuitJobResult(unittest.TestCase):
    """Unit tests for PursuitJobResult class"""

    def test_to_dict(self):
        """Check the dict of a result"""

        result = PursuitJobResult('job-1', 'rec1', ['rec1/1', 'rec1/2'], True)

        self.assertDictEqual(result.to_dict(), {
            'job_id': 'job-1',
            'group_id': 'rec1',
            'joint': True,
            'refs': ['rec1/1', 'rec1/2']
        })

    def test_to_dict_codes(self):
        """Sizes of the supports and elapsed time are added when available"""

        result = PursuitJobResult('job-1', 'rec1', ['rec1/1'], False)
        result.codes = [SparseCode(np.zeros(48, dtype=np.complex128), (3, 7), [1.0, 0.5, 0.25])]
        result.started_at = datetime.datetime(2020, 1, 1, 0, 0, 0)
        result.finished_at = datetime.datetime(2020, 1, 1, 0, 0, 2)

        data = result.to_dict()

        self.assertEqual(data['atoms'], [2])
        self.assertEqual(data['residual_norms'], [0.25])
        self.assertEqual(data['elapsed'], 2.0)


class TestLoadDictionary(unittest.TestCase):
    """Unit tests for load_dictionary"""

    def setUp(self):
        self.tmp_path = tempfile.mkdtemp(prefix='gaborcomp_')
        self.dict_path = os.path.join(self.tmp_path, 'dict.mrgd')
        write_dictionary(build_multires(16), self.dict_path)

    def tearDown(self):
        shutil.rmtree(self.tmp_path)

    def test_cached(self):
        """The same file is read only once"""

        a = load_dictionary(self.dict_path)
        b = load_dictionary(self.dict_path)

        self.assertIs(a, b)
        self.assertEqual(a.M, 16)

    def test_not_found(self):
        """Check if an exception is raised when the file does not exist"""

        with self.assertRaisesRegex(FormatError, "file not found"):
            load_dictionary(os.path.join(self.tmp_path, 'missing.mrgd'))


class TestExecutePursuitJob(TestBaseRQ):
    """Unit tests for execute_pursuit_job"""

    def setUp(self):
        super().setUp()
        self.tmp_path = tempfile.mkdtemp(prefix='gaborcomp_')
        self.dict_path = os.path.join(self.tmp_path, 'dict.mrgd')
        self.dictionary = build_multires(16)
        write_dictionary(self.dictionary, self.dict_path)

        rng = np.random.default_rng(0)
        self.samples = [rng.normal(size=16) for _ in range(3)]
        self.refs = ['rec1/1', 'rec1/2', 'rec1/3']
        self.cfg = PursuitConfig(zeta=4)

    def tearDown(self):
        shutil.rmtree(self.tmp_path)
        super().tearDown()

    def test_job_id(self):
        """Job identifiers carry the group"""

        job_id = generate_job_id('rec1')
        self.assertTrue(job_id.startswith('gaborcomp-rec1-'))
        self.assertNotEqual(job_id, generate_job_id('rec1'))

    def test_single(self):
        """Segments are decomposed on their own"""

        result = execute_pursuit_job(self.dict_path, 'rec1', self.refs, self.samples,
                                     self.cfg.to_dict(), False)

        self.assertTrue(result.job_id.startswith('gaborcomp-rec1-'))
        self.assertFalse(result.joint)
        self.assertEqual(len(result.codes), 3)
        self.assertLessEqual(result.started_at, result.finished_at)

        for ref, x, code in zip(self.refs, self.samples, result.codes):
            expected = comp_single(x, self.dictionary, self.cfg, segment_ref=ref)
            self.assertEqual(code.segment_ref, ref)
            self.assertEqual(code.support, expected.support)
            np.testing.assert_array_equal(code.coefficients, expected.coefficients)

    def test_joint(self):
        """Segments of a joint job share their support"""

        result = execute_pursuit_job(self.dict_path, 'rec1', self.refs, self.samples,
                                     self.cfg.to_dict(), True)

        expected = comp_joint(self.samples, self.dictionary, self.cfg, segment_refs=self.refs)

        self.assertTrue(result.joint)
        for code, other in zip(result.codes, expected):
            self.assertIs(code.support, result.codes[0].support)
            self.assertEqual(code.support, other.support)
            np.testing.assert_array_equal(code.coefficients, other.coefficients)

    def test_rq_job(self):
        """Results of queued jobs take the id of the job"""

        q = rq.Queue('pursuit', connection=self.conn, is_async=False)
        job = q.enqueue(execute_pursuit_job, job_id='job-1',
                        dict_path=self.dict_path, group_id='rec1', refs=self.refs[:1],
                        samples=self.samples[:1], pursuit_cfg=self.cfg.to_dict(), joint=False)

        result = job.result

        self.assertEqual(result.job_id, 'job-1')
        self.assertEqual(result.codes[0].segment_ref, 'rec1/1')

    def test_invalid_dictionary(self):
        """Check if an exception is raised when the dictionary cannot be read"""

        with self.assertRaises(FormatError):
            execute_pursuit_job(os.path.join(self.tmp_path, 'missing.mrgd'), 'rec1',
                                self.refs, self.samples, self.cfg.to_dict(), False)


if __name__ == "__main__":
    unittest.main()
