import logging
import os
from time import time

import numpy as np

from . import experiments, fields1d, fieldsnd, output
from .exceptions import NumericalError, OutputError, UnsupportedError
from .kernels import empirical_density
from .particles import derive_rng, integrate_particles, sample_ensemble
from .torus import mean_velocity

log = logging.getLogger(__name__)


class Laboratory(object):

    """ Laboratory Class

    Runs the experiments of one scenario and writes their results below an output directory.
    Example setup:

        >>> lab = Laboratory(ScenarioConfig(N=500, t_end=1.0), out_dir='results')
        >>> lab.open()
        >>> lab.compare()
        >>> lab.close()

    Using the laboratory as a context manager creates the output directory on entry and writes
    metadata.json, the scenario echo together with every output produced, on exit:

        >>> with Laboratory(config) as lab:
        ...     lab.call('pde1d')

    call() is the checked entry point: floating point overflow or invalid operations surface as
    NumericalError and filesystem failures as OutputError.
    """

    METADATA = 'metadata.json'

    @property
    def opened(self):
        return getattr(self, '_opened', False)

    @opened.setter
    def opened(self, value):
        self._opened = value

    def __init__(self, config, out_dir=None):
        self.config = config
        self.out_dir = out_dir if out_dir is not None else config.out_dir
        self.outputs = []
        self.summary = {}

    def __enter__(self):
        self.open()
        return self

    def __exit__(self, type_, value, traceback):
        self.close()

    def call(self, method, *args):
        """ Runs the laboratory method named with the arguments provided """
        try:
            with np.errstate(over='raise', invalid='raise'):
                return getattr(self, method)(*args)
        except FloatingPointError as e:
            log.exception('Numerical failure in %s', method)
            raise NumericalError('%s failed: %s' % (method, e))
        except OSError as e:
            log.exception('Failed to write results of %s', method)
            raise OutputError('%s could not write its results: %s' % (method, e))

    def open(self):
        """ Creates the output directory; returns the time of opening """
        try:
            output.ensure_directory(self.out_dir)
        except OSError as e:
            raise OutputError('cannot create output directory %s: %s' % (self.out_dir, e))
        self.opened = time()
        return self.opened

    def close(self):
        """ Writes metadata.json next to the results """
        if self.opened:
            try:
                self.write_metadata()
            except OSError:
                log.warning('Metadata could not be written to %s', self.out_dir, exc_info=True)
        self.opened = False
        return True

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def write_metadata(self):
        record = {
            'config': self.config,
            'outputs': self.outputs,
            'summary': self.summary,
            'dt': 'derived' if self.config.dt is None else self.config.dt,
        }
        return output.write_json(record, self.path(self.METADATA))

    def _emit(self, frame, name):
        output.write_csv(frame, self.path(name))
        self.outputs.append(name)
        return name

    def _initial(self):
        config = self.config
        ensemble = sample_ensemble(config, derive_rng(config.seed, 0))
        fields = empirical_density(ensemble, config.epsilon, config.grid)
        return ensemble, fields

    # Single runs
    def particles(self):
        """ Particle trajectory of the scenario, stochastic when sigma > 0

        Writes particles.csv, returns the ParticleTrajectory
        """
        config = self.config
        ensemble, fields = self._initial()
        state = fields1d.initial_state(fields, config.kernel, mean_velocity(ensemble))
        trajectory = integrate_particles(
            ensemble, config.kernel, config.sample_times, experiments.step_size(config, state),
            sigma=config.sigma, rng=derive_rng(config.seed, 0, 0, experiments.NOISE_KEY),
            seed=config.seed)
        self._emit(output.trajectory_frame(trajectory), 'particles.csv')
        return trajectory

    def _run(self, **overrides):
        """ The scenario's field model from the sampled ensemble; returns (state, dt, trajectory) """
        config = self.config.replace(**overrides)
        ensemble, fields = self._initial()
        state = experiments.field_state(config, fields, mean_velocity(ensemble), ensemble)
        dt = experiments.step_size(config, state)
        trajectory = experiments.field_trajectory(
            config, state, dt, derive_rng(config.seed, 0, 0, experiments.NOISE_KEY))
        return state, dt, trajectory

    def _fields(self, name, momentum='j', **overrides):
        state, dt, trajectory = self._run(**overrides)
        first, last = trajectory.fields[0], trajectory.fields[-1]
        gap = [fields1d.field_gap(f, state.vbar) for f in trajectory.fields]
        self.summary[name] = {
            'dt': dt,
            'mass_drift': abs(last.mass() - first.mass()) / first.mass(),
            'gap': gap,
        }
        self._emit(output.snapshot_frame(trajectory, momentum), '%s.csv' % name)
        return trajectory

    def pde1d(self):
        """ Reduced 1D model (weighted when weight_mode is set); writes pde1d.csv """
        if self.config.d != 1:
            raise UnsupportedError('pde1d runs one dimensional scenarios, use pdend')
        return self._fields('pde1d', model='reduced', sigma=0.0)

    def pdend(self):
        """ Regularized d > 1 model; writes pdend.csv and the activation map activation.csv """
        if self.config.d < 2:
            raise UnsupportedError('pdend runs scenarios with d > 1, use pde1d')
        trajectory = self._fields('pdend', model='reduced', sigma=0.0)
        config = self.config
        initial = fields1d.initial_state(trajectory.fields[0], config.kernel)
        final = fields1d.initial_state(trajectory.fields[-1], config.kernel, initial.vbar)
        phi = fieldsnd.activation(final, experiments.regularization(config, initial))
        self._emit(output.activation_frame(phi), 'activation.csv')
        return trajectory

    def spde(self):
        """ One reduced SPDE realization; writes spde.csv """
        if self.config.sigma <= 0:
            log.warning('sigma is zero, the SPDE run is deterministic')
        return self._fields('spde', model='reduced')

    def hydro(self):
        """ Hydrodynamic model; writes hydro.csv with momentum columns ru_1..ru_d """
        return self._fields('hydro', momentum='ru', model='hydro', sigma=0.0)

    # Experiments
    def compare(self):
        """ run_compare; writes compare.csv, returns the ErrorReport """
        report = experiments.run_compare(self.config)
        self.summary['compare'] = report
        self._emit(output.report_frame(report), 'compare.csv')
        return report

    def sweep(self, axis, values):
        """ sweep over one axis; writes sweep_<axis>.csv, returns the table """
        table = experiments.sweep(self.config, axis, values)
        self._emit(table, 'sweep_%s.csv' % axis)
        return table

    def closing(self, axis, values, norm='L2'):
        """ closing_sweep over one axis; writes closing_<axis>.csv """
        table = experiments.closing_sweep(self.config, axis, values, norm)
        self._emit(table, 'closing_%s.csv' % axis)
        return table

    def bench(self, N_values, repetitions=10):
        """ run_benchmark; writes bench.csv, returns the BenchRecords """
        records = experiments.run_benchmark(self.config, N_values, repetitions)
        self.summary['bench'] = experiments.benchmark_summary(records)
        self._emit(output.bench_frame(records), 'bench.csv')
        return records

    def stats(self):
        """ Stochastic particle and SPDE ensemble statistics; writes stats.csv """
        particle_stats, field_stats = experiments.stochastic_ensembles(self.config)
        self._emit(output.stats_frame(particle_stats, field_stats, self.config.sample_times),
                   'stats.csv')
        return particle_stats, field_stats

    def flocking(self):
        """ flocking_report; writes flocking.csv with the gap, particle spread and particle bound """
        report = experiments.flocking_report(self.config)
        self.summary['flocking'] = report
        self._emit(output.flocking_frame(report), 'flocking.csv')
        return report

    def spectrum(self):
        """ Density coefficient magnitudes of the scenario's field model at every sample time

        Writes spectrum.csv for tail monitoring; the summary keeps the final share of
        magnitude above two thirds of the resolved wavenumbers.
        """
        state, _, trajectory = self._run()
        frame = output.coefficient_frame(state.plan, trajectory)
        final = frame[frame['t'] == trajectory.times[-1]]
        tail = final['xi'] > 2.0 / 3.0 * final['xi'].max()
        self.summary['spectrum'] = {
            'tail_share': float(final['magnitude'][tail].sum() / final['magnitude'].sum()),
        }
        self._emit(frame, 'spectrum.csv')
        return frame

    def discrepancy(self, amplitudes=(0.0, 0.25, 0.5, 0.75, 1.0)):
        """ hydro_discrepancy_study; writes discrepancy.csv and discrepancy_summary.csv """
        series, summary = experiments.hydro_discrepancy_study(self.config, amplitudes)
        self._emit(series, 'discrepancy.csv')
        self._emit(summary, 'discrepancy_summary.csv')
        return series, summary

    def kernel(self):
        """ Kernel table export; writes kernel.csv """
        frame = output.kernel_frame(self.config.kernel, self.config.grid)
        self._emit(frame, 'kernel.csv')
        return frame
