import os
import tempfile
import unittest
from unittest.mock import MagicMock, patch

from .. import cli
from ..exceptions import CFLError, ConfigError, NumericalError, OutputError, VacuumError


class MainTests(unittest.TestCase):

    """ csflock command line """

    def setUp(self):
        patcher = patch.object(cli, 'Laboratory')
        self.Laboratory = patcher.start()
        self.addCleanup(patcher.stop)
        self.lab = MagicMock()
        self.Laboratory.return_value.__enter__.return_value = self.lab

    def config(self):
        (config,), _ = self.Laboratory.call_args
        return config

    def test_successful_run_exits_with_zero(self):
        self.assertEqual(cli.main(['compare']), cli.EXIT_OK)
        self.lab.call.assert_called_with('compare')

    def test_sweep_passes_axis_and_values(self):
        cli.main(['sweep', '--axis', 'epsilon', '--values', '0.5', '1.0'])
        self.lab.call.assert_called_with('sweep', 'epsilon', [0.5, 1.0])

    def test_closing_passes_norm(self):
        cli.main(['closing', '--axis', 'N', '--values', '10', '--norm', 'Hm2'])
        self.lab.call.assert_called_with('closing', 'N', [10.0], 'Hm2')

    def test_bench_passes_particle_counts_and_repetitions(self):
        cli.main(['bench', '--N', '10', '100', '--repetitions', '12'])
        self.lab.call.assert_called_with('bench', [10, 100], 12)

    def test_discrepancy_passes_amplitudes(self):
        cli.main(['discrepancy', '--amplitudes', '0', '0.5'])
        self.lab.call.assert_called_with('discrepancy', (0.0, 0.5))

    def test_global_flags_override_the_configuration(self):
        cli.main(['--seed', '7', '--out', 'elsewhere', '--threads', '3', 'stats'])
        config = self.config()
        self.assertEqual((config.seed, config.out_dir, config.threads), (7, 'elsewhere', 3))

    def test_configuration_file_is_read(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'scenario.json')
            with open(path, 'w') as f:
                f.write('{"N": 12, "seed": 3}')
            cli.main(['--config', path, '--seed', '4', 'particles'])
        self.assertEqual((self.config().N, self.config().seed), (12, 4))

    def test_missing_configuration_file_exits_with_two(self):
        self.assertEqual(cli.main(['--config', '/nonexistent/scenario.json', 'compare']),
                         cli.EXIT_CONFIG)

    def test_invalid_configuration_exits_with_two(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'scenario.json')
            with open(path, 'w') as f:
                f.write('{"bananas": 1}')
            self.assertEqual(cli.main(['--config', path, 'compare']), cli.EXIT_CONFIG)
        self.assertFalse(self.Laboratory.called)

    def test_wrongly_typed_configuration_value_exits_with_two(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'scenario.json')
            with open(path, 'w') as f:
                f.write('{"x_range": 5}')
            self.assertEqual(cli.main(['--config', path, 'kernel']), cli.EXIT_CONFIG)
        self.assertFalse(self.Laboratory.called)

    def test_spectrum_command(self):
        self.assertEqual(cli.main(['spectrum']), cli.EXIT_OK)
        self.lab.call.assert_called_with('spectrum')

    def test_configuration_errors_exit_with_two(self):
        self.lab.call.side_effect = ConfigError('bad')
        self.assertEqual(cli.main(['pde1d']), cli.EXIT_CONFIG)

    def test_numerical_errors_exit_with_three(self):
        for error in (NumericalError('nan'), CFLError('dt'), VacuumError('empty')):
            self.lab.call.side_effect = error
            self.assertEqual(cli.main(['hydro']), cli.EXIT_NUMERICAL)

    def test_output_errors_exit_with_four(self):
        self.lab.call.side_effect = OutputError('disk full')
        self.assertEqual(cli.main(['kernel']), cli.EXIT_OUTPUT)

    def test_failure_to_open_output_directory_exits_with_four(self):
        self.Laboratory.return_value.__enter__.side_effect = OutputError('denied')
        self.assertEqual(cli.main(['kernel']), cli.EXIT_OUTPUT)

    def test_unknown_command_is_a_usage_error(self):
        with patch('sys.stderr'):
            with self.assertRaises(SystemExit) as raised:
                cli.main(['dance'])
        self.assertEqual(raised.exception.code, 2)

    def test_unknown_sweep_axis_is_a_usage_error(self):
        with patch('sys.stderr'):
            with self.assertRaises(SystemExit):
                cli.main(['sweep', '--axis', 'temperature', '--values', '1'])
