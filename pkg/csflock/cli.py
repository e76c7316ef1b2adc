""" csflock command line

    csflock [--config PATH] [--out DIR] [--seed N] [--threads K] [-v] COMMAND [options]

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 output error.
"""
import argparse
import logging
import sys

from .exceptions import ConfigError, GridMismatchError, NumericalError, OutputError
from .experiments import SWEEP_AXES
from .lab import Laboratory
from .types import ScenarioConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OUTPUT = 4

COMMANDS = {
    'particles': 'integrate the particle system',
    'pde1d': 'integrate the one dimensional reduced model',
    'pdend': 'integrate the regularized reduced model for d > 1',
    'spde': 'integrate one realization of the reduced SPDE',
    'hydro': 'integrate the hydrodynamic model',
    'compare': 'field model against smoothed particles',
    'sweep': 'compare along one parameter axis',
    'closing': 'closing residual along one parameter axis',
    'bench': 'per-step cost of particles and fields',
    'stats': 'stochastic ensemble statistics',
    'flocking': 'kernel split, flocking condition and gap decay',
    'discrepancy': 'reduced against hydrodynamic model',
    'kernel': 'export the kernel table',
    'spectrum': 'density coefficient magnitudes for tail monitoring',
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog='csflock', description='Cucker-Smale particles and their reduced field models')
    parser.add_argument('--config', metavar='PATH', help='flat json scenario file')
    parser.add_argument('--out', metavar='DIR', help='output directory')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--threads', type=int, help='worker threads for realizations')
    parser.add_argument('-v', '--verbose', action='count', default=0)

    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True
    subparsers = {name: commands.add_parser(name, help=text) for name, text in COMMANDS.items()}

    for name in ('sweep', 'closing'):
        subparsers[name].add_argument('--axis', required=True, choices=SWEEP_AXES)
        subparsers[name].add_argument('--values', required=True, type=float, nargs='*')
    subparsers['closing'].add_argument('--norm', default='L2', choices=('L2', 'Hm2'))
    subparsers['bench'].add_argument(
        '--N', dest='N_values', type=int, nargs='+', default=[100, 300, 1000, 3000, 10000])
    subparsers['bench'].add_argument('--repetitions', type=int, default=10)
    subparsers['discrepancy'].add_argument(
        '--amplitudes', type=float, nargs='+', default=[0.0, 0.25, 0.5, 0.75, 1.0])
    return parser


def load_config(args):
    """ Scenario from --config, with --seed, --out and --threads taking precedence """
    try:
        config = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    except OSError as e:
        raise ConfigError('cannot read configuration %s: %s' % (args.config, e))
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['out_dir'] = args.out
    if args.threads is not None:
        overrides['threads'] = args.threads
    return config.replace(**overrides) if overrides else config


def command_arguments(args):
    if args.command in ('sweep', 'closing'):
        extra = (args.axis, args.values)
        return extra + (args.norm,) if args.command == 'closing' else extra
    if args.command == 'bench':
        return (args.N_values, args.repetitions)
    if args.command == 'discrepancy':
        return (tuple(args.amplitudes),)
    return ()


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s %(message)s')

    try:
        config = load_config(args)
        with Laboratory(config) as lab:
            lab.call(args.command, *command_arguments(args))
    except (ConfigError, GridMismatchError) as e:
        log.error('%s', e)
        return EXIT_CONFIG
    except NumericalError as e:
        log.error('%s', e)
        return EXIT_NUMERICAL
    except (OutputError, OSError) as e:
        log.error('%s', e)
        return EXIT_OUTPUT
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
