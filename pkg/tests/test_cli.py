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

import io
import json
import os
import shutil
import tempfile
import unittest
import unittest.mock

import pandas as pd

from gaborcomp.cli import (EXIT_ERROR,
                           EXIT_OK,
                           EXIT_USAGE,
                           EXIT_VALIDATION,
                           create_parser,
                           main,
                           read_synth_specs)
from gaborcomp.formats import list_codes, read_dictionary, read_features, read_model
from gaborcomp.signals import MurmurClass

from base import data_path


SYNTH_SPECS = [
    {'shape': label.label, 'seed': 3, 'count': 6, 'per_recording': 2}
    for label in MurmurClass
]


def pipeline_config(workdir):
    return {
        'segment_length': 16,
        'synth': SYNTH_SPECS,
        'zeta': 4,
        'joint_by': 'recording_id',
        'group_by': 'recording_id',
        'heads': 1,
        'd_head': 2,
        'epochs': 3,
        'batch_size': 8,
        'val_split': 0.25,
        'k': 3,
        'seed': 5,
        'workdir': workdir
    }


def read_tree(dirpath):
    """Contents of every file under `dirpath`, keyed by relative path"""

    tree = {}
    for root, _, names in os.walk(dirpath):
        for name in names:
            filepath = os.path.join(root, name)
            with open(filepath, 'rb') as fd:
                tree[os.path.relpath(filepath, dirpath)] = fd.read()
    return tree



class TestCLIBase(unittest.TestCase):

    def setUp(self):
        self.tmp_path = tempfile.mkdtemp(prefix='gaborcomp_')

    def tearDown(self):
        shutil.rmtree(self.tmp_path)

    def path(self, *names):
        return os.path.join(self.tmp_path, *names)

    def run_cli(self, *argv):
        """Run the command returning its exit code and its stderr"""

        with unittest.mock.patch('sys.stderr', new_callable=io.StringIO) as stderr:
            code = main(list(argv))
        return code, stderr.getvalue()


class TestParser(unittest.TestCase):
    """Unit tests for the command line parser"""

    def test_defaults(self):
        """Check the defaults of the subcommands"""

        parser = create_parser()

        args = parser.parse_args(['build-dict'])
        self.assertEqual(args.M, 512)
        self.assertEqual(args.out, 'dict.mrgd')

        args = parser.parse_args(['decompose', '--dict', 'd.mrgd', '--manifest', 'm.csv',
                                  '--out', 'codes'])
        self.assertEqual(args.zeta, 511)
        self.assertEqual(args.residual_tol, 0.0)
        self.assertEqual(args.fit, 'interpolate')
        self.assertIsNone(args.joint_by)
        self.assertFalse(args.sync)

        args = parser.parse_args(['eval', '--feats', 'f.mrgf', '--out', 'r.json'])
        self.assertEqual(args.k, 5)
        self.assertEqual(args.heads, 4)
        self.assertEqual(args.d_head, 32)
        self.assertEqual(args.learning_rate, 0.01)
        self.assertEqual(args.momentum, 0.9)
        self.assertEqual(args.batch_size, 150)
        self.assertEqual(args.epochs, 500)

        args = parser.parse_args(['sweep', '--feats', 'f.mrgf', '--out', 'r.json',
                                  '--heads-grid', '1,2', '--dhead-grid', '4'])
        self.assertEqual(args.heads_grid, [1, 2])
        self.assertEqual(args.d_head_grid, [4])


class TestMain(TestCLIBase):
    """Unit tests for main"""

    def test_usage_errors(self):
        """Argument errors exit with code 2"""

        code, _ = self.run_cli()
        self.assertEqual(code, EXIT_USAGE)

        code, _ = self.run_cli('build-dict', '--m', 'many')
        self.assertEqual(code, EXIT_USAGE)

        code, _ = self.run_cli('decompose', '--dict', 'd.mrgd')
        self.assertEqual(code, EXIT_USAGE)

        code, _ = self.run_cli('sweep', '--feats', 'f', '--out', 'o', '--heads-grid', 'a,b')
        self.assertEqual(code, EXIT_USAGE)

    def test_invalid_length(self):
        """Non power of two lengths exit with code 3"""

        code, stderr = self.run_cli('build-dict', '--m', '511', '--out', self.path('d.mrgd'))

        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("gaborcomp: error: stage=build-dict code=3 "
                      "message=M must be a power of two; 511 given", stderr)
        self.assertFalse(os.path.exists(self.path('d.mrgd')))

    def test_build_dict(self):
        """Dictionaries and atoms are written"""

        code, _ = self.run_cli('build-dict', '--m', '16', '--out', self.path('d.mrgd'),
                               '--dump-atom', '2,1,1', '--dump-out', self.path('atom.csv'))

        self.assertEqual(code, EXIT_OK)
        self.assertEqual(read_dictionary(self.path('d.mrgd')).M, 16)

        atom = pd.read_csv(self.path('atom.csv'))
        self.assertEqual(list(atom.columns), ['re', 'im'])
        self.assertEqual(len(atom), 16)
        self.assertAlmostEqual(float((atom['re'] ** 2 + atom['im'] ** 2).sum()), 1.0)

        code, stderr = self.run_cli('build-dict', '--m', '16', '--out', self.path('d.mrgd'),
                                    '--dump-atom', '4,0,0')
        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("stage=build-dict code=1", stderr)

    def test_mismatched_dictionary(self):
        """A dictionary of another length exits with code 3"""

        self.run_cli('build-dict', '--m', '16', '--out', self.path('d.mrgd'))

        code, stderr = self.run_cli('decompose', '--dict', self.path('d.mrgd'),
                                    '--manifest', data_path('manifest.csv'),
                                    '--m', '64', '--out', self.path('codes'))

        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("stage=decompose code=3", stderr)
        self.assertIn("does not match M=64", stderr)

    def test_missing_segment(self):
        """Missing segment files exit with code 1"""

        self.run_cli('build-dict', '--m', '16', '--out', self.path('d.mrgd'))

        code, stderr = self.run_cli('decompose', '--dict', self.path('d.mrgd'),
                                    '--manifest', data_path('manifest_missing.csv'),
                                    '--out', self.path('codes'))

        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("stage=decompose code=1 message=row 2: cannot read", stderr)

    def test_stages(self):
        """Run every stage on the manifest of the tests"""

        dict_path = self.path('d.mrgd')
        codes = self.path('codes')
        feats = self.path('feats.mrgf')
        model = self.path('model.mrgm')

        self.assertEqual(self.run_cli('build-dict', '--m', '16', '--out', dict_path)[0],
                         EXIT_OK)

        code, _ = self.run_cli('decompose', '--dict', dict_path,
                               '--manifest', data_path('manifest.csv'),
                               '--zeta', '4', '--joint-by', 'recording_id', '--out', codes)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(list_codes(codes)), 4)

        code, _ = self.run_cli('featurize', '--codes', codes, '--out', feats,
                               '--dump-csv', 'rec1/2', '--dump-dir', self.path('csv'))
        self.assertEqual(code, EXIT_OK)

        stacks = read_features(feats)
        self.assertEqual([s.segment_ref for s in stacks], ['rec1/1', 'rec1/2', 'rec2/3', 'rec3/4'])
        self.assertEqual([s.label for s in stacks],
                         [MurmurClass.DIAMOND, MurmurClass.DIAMOND,
                          MurmurClass.CRESCENDO, MurmurClass.PLATEAU])
        self.assertEqual(sorted(os.listdir(self.path('csv'))),
                         ['rec1_2_A1.csv', 'rec1_2_A2.csv', 'rec1_2_A3.csv'])

        code, _ = self.run_cli('train', '--feats', feats, '--out', model,
                               '--heads', '1', '--dhead', '2', '--epochs', '3', '--batch', '2',
                               '--log', self.path('curves.csv'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(read_model(model).heads, 1)
        self.assertEqual(len(pd.read_csv(self.path('curves.csv'))), 3)

        code, _ = self.run_cli('predict', '--model', model, '--feats', feats,
                               '--out', self.path('predictions.csv'))
        self.assertEqual(code, EXIT_OK)

        predictions = pd.read_csv(self.path('predictions.csv'))
        self.assertEqual(predictions['segment_ref'].tolist(),
                         ['rec1/1', 'rec1/2', 'rec2/3', 'rec3/4'])
        self.assertTrue(set(predictions['predicted']) <= {c.label for c in MurmurClass})

        code, stderr = self.run_cli('featurize', '--codes', codes, '--out', feats,
                                    '--dump-csv', 'rec9/9')
        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("message=stack rec9/9 not found", stderr)

    def test_synth(self):
        """Synthetic datasets are written with their manifest"""

        specs = self.path('specs.json')
        with open(specs, 'w') as fd:
            json.dump(SYNTH_SPECS[:2], fd)

        code, _ = self.run_cli('synth', '-c', specs, '--m', '16', '--out', self.path('data'))

        self.assertEqual(code, EXIT_OK)
        manifest = pd.read_csv(self.path('data', 'manifest.csv'))
        self.assertEqual(len(manifest), 12)
        self.assertEqual(manifest['label'].tolist(), ['Diamond'] * 6 + ['Plateau'] * 6)

    def test_pipeline(self):
        """Run the whole pipeline from a configuration file"""

        workdir = self.path('run')
        config_path = self.path('config.json')
        with open(config_path, 'w') as fd:
            json.dump(pipeline_config(workdir), fd)

        code, stderr = self.run_cli('pipeline', '-c', config_path)
        self.assertEqual(code, EXIT_OK, stderr)

        for name in ['config.json', 'dict.mrgd', 'feats.mrgf', 'report.json',
                     'model.mrgm', 'curves.csv']:
            self.assertTrue(os.path.exists(os.path.join(workdir, name)), name)
        self.assertEqual(len(list_codes(os.path.join(workdir, 'codes'))), 24)

        with open(os.path.join(workdir, 'report.json')) as fd:
            report = json.load(fd)

        self.assertEqual(report['k'], 3)
        self.assertEqual(len(report['folds']), 3)
        self.assertEqual(report['group_by'], 'recording_id')
        for fold in report['folds']:
            self.assertEqual(sum(sum(row) for row in fold['confusion']), 8)

    def test_pipeline_deterministic(self):
        """Two runs with the same configuration write identical artifacts"""

        workdir = self.path('run')
        config_path = self.path('config.json')
        with open(config_path, 'w') as fd:
            json.dump(pipeline_config(workdir), fd)

        code, stderr = self.run_cli('pipeline', '-c', config_path)
        self.assertEqual(code, EXIT_OK, stderr)
        first = read_tree(workdir)
        shutil.rmtree(workdir)

        code, stderr = self.run_cli('pipeline', '-c', config_path)
        self.assertEqual(code, EXIT_OK, stderr)
        second = read_tree(workdir)

        self.assertIn('model.mrgm', first)
        self.assertIn(os.path.join('codes', '00023.mrgc'), first)
        self.assertEqual(sorted(first), sorted(second))
        for name in first:
            self.assertEqual(first[name], second[name], name)

    def test_invalid_config(self):
        """Invalid configuration files exit with code 1"""

        config_path = self.path('config.json')
        with open(config_path, 'w') as fd:
            json.dump({'segment_length': 16}, fd)

        code, stderr = self.run_cli('pipeline', '-c', config_path)

        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("stage=pipeline code=1 message=either 'manifest' or 'synth' must be set",
                      stderr)


class TestReadSynthSpecs(TestCLIBase):
    """Unit tests for read_synth_specs"""

    def test_formats(self):
        """Lists, single specs and run configurations are accepted"""

        filepath = self.path('specs.json')

        with open(filepath, 'w') as fd:
            json.dump(SYNTH_SPECS, fd)
        specs, M, rate = read_synth_specs(filepath)
        self.assertEqual(len(specs), 4)
        self.assertIsNone(M)

        with open(filepath, 'w') as fd:
            json.dump(SYNTH_SPECS[0], fd)
        specs, _, _ = read_synth_specs(filepath)
        self.assertEqual(specs[0].shape, MurmurClass.DIAMOND)

        with open(filepath, 'w') as fd:
            json.dump({'synth': SYNTH_SPECS, 'segment_length': 64, 'sample_rate': 2000}, fd)
        specs, M, rate = read_synth_specs(filepath)
        self.assertEqual((len(specs), M, rate), (4, 64, 2000))

        with open(filepath, 'w') as fd:
            fd.write('[')
        with self.assertRaises(ValueError):
            read_synth_specs(filepath)


if __name__ == "__main__":
    unittest.main()
