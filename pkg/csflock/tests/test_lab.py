import json
import os
import tempfile
from time import time
import unittest
from unittest.mock import patch

import numpy as np

from .. import experiments, lab
from ..exceptions import NumericalError, OutputError, UnsupportedError
from ..types import ScenarioConfig


def small_config(**overrides):
    values = dict(L=10.0, M=32, N=30, t_end=0.2, samples=3, x_range=(-5.0, 5.0),
                  v_range=(0.0, 2.0), lam=1.0, realizations=2)
    values.update(overrides)
    return ScenarioConfig(**values)


class LaboratoryTests(unittest.TestCase):

    """ Laboratory """

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.out_dir = os.path.join(self.directory.name, 'results')
        self.config = small_config(out_dir=self.out_dir)
        self.lab = lab.Laboratory(self.config)

    def read_metadata(self):
        with open(os.path.join(self.out_dir, 'metadata.json')) as f:
            return json.load(f)

    def test_starts_closed(self):
        self.assertFalse(self.lab.opened)

    def test_out_dir_defaults_to_configured_directory(self):
        self.assertEqual(self.lab.out_dir, self.out_dir)
        self.assertEqual(lab.Laboratory(self.config, out_dir='elsewhere').out_dir, 'elsewhere')

    @patch.object(lab, 'time')
    def test_opened_property_returns_time_of_opening(self, mtime):
        mtime.return_value = opening_time = time()
        self.lab.open()
        self.assertEqual(self.lab.opened, opening_time)
        self.assertTrue(os.path.isdir(self.out_dir))

    def test_opened_property_returns_false_after_close(self):
        self.lab.open()
        self.lab.close()
        self.assertFalse(self.lab.opened)

    @patch.object(lab.output, 'ensure_directory')
    def test_open_raises_OutputError_when_directory_cannot_be_created(self, ensure_directory):
        ensure_directory.side_effect = PermissionError('denied')
        self.assertRaises(OutputError, self.lab.open)

    def test_context_manager_writes_metadata_on_exit(self):
        with self.lab:
            pass
        metadata = self.read_metadata()
        self.assertEqual(metadata['config']['N'], 30)
        self.assertEqual(metadata['dt'], 'derived')
        self.assertEqual(metadata['outputs'], [])

    def test_close_logs_metadata_failures(self):
        self.lab.open()
        with patch.object(lab.output, 'write_json', side_effect=OSError('full')):
            with self.assertLogs('csflock.lab', 'WARNING'):
                self.assertTrue(self.lab.close())

    @patch.object(lab.Laboratory, 'kernel')
    def test_call_method_calls_named_method_with_passed_arguments(self, kernel):
        self.lab.call('kernel', 'arg')
        kernel.assert_called_with('arg')

    @patch.object(lab.Laboratory, 'kernel')
    def test_call_method_returns_method_return_value(self, kernel):
        kernel.return_value = 1
        self.assertEqual(self.lab.call('kernel'), 1)

    @patch.object(lab.Laboratory, 'compare')
    def test_call_method_raises_NumericalError_for_floating_point_errors(self, compare):
        compare.side_effect = FloatingPointError('overflow')
        self.assertRaises(NumericalError, self.lab.call, 'compare')

    @patch.object(lab.Laboratory, 'compare')
    def test_call_method_raises_OutputError_for_os_errors(self, compare):
        compare.side_effect = OSError('disk full')
        self.assertRaises(OutputError, self.lab.call, 'compare')

    @patch.object(lab.Laboratory, 'compare')
    def test_call_method_passes_other_errors_through(self, compare):
        compare.side_effect = UnsupportedError('no')
        self.assertRaises(UnsupportedError, self.lab.call, 'compare')

    def test_call_method_traps_overflow(self):
        with patch.object(lab.Laboratory, 'kernel', lambda self: np.exp(np.array([1e4]))):
            self.assertRaises(NumericalError, self.lab.call, 'kernel')

    def test_call_method_traps_overflow_in_worker_threads(self):
        def kernel(laboratory):
            return experiments._map(laboratory.config, lambda _: np.exp(np.array([1e4])), range(2))
        laboratory = lab.Laboratory(self.config.replace(threads=2))
        with patch.object(lab.Laboratory, 'kernel', kernel):
            self.assertRaises(NumericalError, laboratory.call, 'kernel')


class LaboratoryRunTests(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.config = small_config(out_dir=self.directory.name)

    def run_lab(self, config, method, *args):
        with lab.Laboratory(config) as laboratory:
            result = laboratory.call(method, *args)
        return laboratory, result

    def exists(self, name):
        return os.path.exists(os.path.join(self.directory.name, name))

    def test_kernel_writes_kernel_table(self):
        laboratory, frame = self.run_lab(self.config, 'kernel')
        self.assertEqual(len(frame), 32)
        self.assertTrue(self.exists('kernel.csv'))
        self.assertEqual(laboratory.outputs, ['kernel.csv'])

    def test_particles_writes_trajectory(self):
        _, trajectory = self.run_lab(self.config, 'particles')
        self.assertEqual(len(trajectory.snapshots), 3)
        self.assertTrue(self.exists('particles.csv'))

    def test_pde1d_records_summary(self):
        laboratory, trajectory = self.run_lab(self.config, 'pde1d')
        self.assertTrue(self.exists('pde1d.csv'))
        self.assertLess(laboratory.summary['pde1d']['mass_drift'], 1e-10)

    def test_pde1d_rejects_multidimensional_scenarios(self):
        config = self.config.replace(d=2, M=16)
        self.assertRaises(UnsupportedError, self.run_lab, config, 'pde1d')

    def test_pdend_writes_activation_map(self):
        config = self.config.replace(d=2, M=16, N=20, v_range=(0.5, 2.0))
        self.run_lab(config, 'pdend')
        self.assertTrue(self.exists('pdend.csv'))
        self.assertTrue(self.exists('activation.csv'))

    def test_pdend_rejects_one_dimensional_scenarios(self):
        self.assertRaises(UnsupportedError, self.run_lab, self.config, 'pdend')

    def test_spde_writes_realization(self):
        self.run_lab(self.config.replace(sigma=0.5), 'spde')
        self.assertTrue(self.exists('spde.csv'))

    def test_compare_writes_report_and_metadata(self):
        laboratory, report = self.run_lab(self.config, 'compare')
        self.assertTrue(self.exists('compare.csv'))
        with open(os.path.join(self.directory.name, 'metadata.json')) as f:
            metadata = json.load(f)
        self.assertEqual(metadata['outputs'], ['compare.csv'])
        self.assertIn('compare', metadata['summary'])

    def test_sweep_names_file_after_axis(self):
        self.run_lab(self.config.replace(realizations=1), 'sweep', 'epsilon', [1.0])
        self.assertTrue(self.exists('sweep_epsilon.csv'))

    def test_flocking_writes_gap_series(self):
        self.run_lab(self.config, 'flocking')
        self.assertTrue(self.exists('flocking.csv'))

    def test_discrepancy_writes_series_and_summary(self):
        self.run_lab(self.config, 'discrepancy', (0.0, 0.5))
        self.assertTrue(self.exists('discrepancy.csv'))
        self.assertTrue(self.exists('discrepancy_summary.csv'))

    def test_particles_of_hydrodynamic_scenarios(self):
        _, trajectory = self.run_lab(self.config.replace(model='hydro'), 'particles')
        self.assertEqual(len(trajectory.snapshots), 3)
        self.assertTrue(self.exists('particles.csv'))

    def test_unstable_threaded_comparison_raises_NumericalError(self):
        config = self.config.replace(lam=1e4, r=0.0, dt=0.004, threads=2)
        self.assertRaises(NumericalError, self.run_lab, config, 'compare')

    def test_flocking_writes_particle_series(self):
        laboratory, report = self.run_lab(self.config, 'flocking')
        with open(os.path.join(self.directory.name, 'flocking.csv')) as f:
            header = f.readline().strip().split(',')
        self.assertEqual(header, ['t', 'gap', 'particle_spread', 'particle_bound'])
        self.assertTrue(report.particle_bound_holds)
        self.assertGreater(report.fourier_constant, 0.0)

    def test_spectrum_writes_coefficients_and_tail_share(self):
        laboratory, frame = self.run_lab(self.config, 'spectrum')
        self.assertTrue(self.exists('spectrum.csv'))
        self.assertEqual(len(frame), 3 * 32)
        share = laboratory.summary['spectrum']['tail_share']
        self.assertGreaterEqual(share, 0.0)
        self.assertLessEqual(share, 1.0)
