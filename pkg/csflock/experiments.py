""" Experiments comparing the particle system with its field models

Every experiment is a pure function of a ScenarioConfig. Randomness comes from derive_rng with
keys (row, realization) for initial data and (row, realization, NOISE_KEY) for Brownian
increments, so a stochastic particle run and an SPDE run of the same realization see the same
increment sequence.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from time import perf_counter

import numpy as np
import pandas as pd
from scipy import stats

from . import fields1d, fieldsnd, hydro
from .exceptions import ConfigError, GridMismatchError, UnsupportedError
from .kernels import Smoother, check_flocking_condition, empirical_density, exact_weight, split_kernel
from .particles import (
    derive_rng, fit_decay_rate, integrate_particles, particle_flocking_bound, sample_ensemble, step_cs,
    velocity_spread)
from .spectral import SpectralPlan, kernel_fourier_check, norm_pair_Hm2
from .torus import galilean_shift, galilean_unshift, mean_velocity
from .types import (
    BenchRecord, EnsembleStats, ErrorReport, FieldPair, FieldTrajectory, FlockingReport,
    HydroState, RegularizationConfig, WeightField)

log = logging.getLogger(__name__)

NOISE_KEY = 1
SWEEP_AXES = ('velocity_spread', 'epsilon', 'von_mises_k', 'sigma', 'N')
SWEEP_COLUMNS = ['axis', 'value', 'row', 't', 'l2_error', 'hm2_error', 'closing_residual']
NORMS = ('L2', 'Hm2')


def check_axis(axis):
    if axis not in SWEEP_AXES:
        raise ConfigError('unknown sweep axis %r, expected one of %s' % (axis, ', '.join(SWEEP_AXES)))


def axis_override(axis, value):
    """ Configuration overrides for one point of a sweep axis

    A velocity spread w draws velocities uniformly from (-w/2, w/2).
    """
    check_axis(axis)
    if axis == 'velocity_spread':
        return {'v_range': (-value / 2.0, value / 2.0)}
    if axis == 'N':
        return {'N': int(value)}
    return {axis: float(value)}


def _map(config, function, items):
    """ Ordered map, on a thread pool when the scenario asks for more than one thread

    Workers run under the floating point error handling of the caller.
    """
    if config.threads == 1:
        return [function(item) for item in items]
    settings = np.geterr()

    def guarded(item):
        with np.errstate(**settings):
            return function(item)

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(guarded, items))


def _relative(value, reference):
    change = float(np.linalg.norm(np.atleast_1d(value - reference)))
    scale = float(np.linalg.norm(np.atleast_1d(reference)))
    return change / scale if scale > 0 else change


def make_weight(config, ensemble, vbar):
    """ Weight field of the kinetic term, None for the unweighted model """
    if config.weight_mode == 'none':
        return None
    if config.d != 1:
        raise UnsupportedError('the weighted model is one dimensional')
    grid = config.grid
    w0 = exact_weight(ensemble, config.epsilon, vbar, grid, config.rho_floor,
                      config.w_min, config.w_max)
    return WeightField(grid=grid, w0=w0, rate=config.weight_decay_rate, mode=config.weight_mode,
                       w_min=config.w_min, w_max=config.w_max)


def regularization(config, state):
    """ Configured regularization; without reg_v the threshold sits above the initial data """
    if config.reg_v is None:
        return fieldsnd.default_regularization(state, W=config.reg_w, radius=config.reg_radius)
    return RegularizationConfig(V=config.reg_v, W=config.reg_w, radius=config.reg_radius)


def field_state(config, fields, vbar, ensemble=None, workers=None):
    """ Initial solver state for the scenario's field model """
    kernel = config.kernel
    if config.model == 'hydro':
        if config.sigma > 0:
            raise UnsupportedError('the hydrodynamic model has no stochastic variant')
        return hydro.initial_hydro_state(
            fields, kernel, vbar, dealias=config.dealias, workers=workers)
    if config.sigma > 0 and config.d != 1:
        raise UnsupportedError('the reduced SPDE is one dimensional')
    weight = make_weight(config, ensemble, vbar) if ensemble is not None else None
    return fields1d.initial_state(
        fields, kernel, vbar, weight=weight, dealias=config.dealias, workers=workers)


def step_size(config, state):
    """ Configured dt, or the largest step every solver of the scenario accepts """
    if config.dt is not None:
        return config.dt
    dt = fields1d.stable_dt(
        state.grid, state.vbar, state.table, config.cfl, config.sigma, config.c_a)
    if isinstance(state, HydroState):
        dt = min(dt, hydro.hydro_dt(state, config.cfl))
    return dt


def field_trajectory(config, state, dt, noise=None):
    """ Run the scenario's field model from state through the sample times """
    times = config.sample_times
    if config.model == 'hydro':
        return hydro.integrate_hydro(state, times, dt, config.cfl)[0]
    if state.grid.d > 1:
        regcfg = regularization(config, state)
        return fieldsnd.integrate_pde_nd(state, regcfg, times, dt, config.cfl)[0]
    if config.sigma > 0:
        return fields1d.integrate_spde_1d(state, config.sigma, times, dt, noise, config.cfl)[0]
    return fields1d.integrate_pde_1d(state, times, dt, config.cfl)[0]


def _unshift_fields(plan, fields, c, t):
    """ Fields of the co-moving run seen from the original frame """
    rho = plan.translate(fields.rho, -c * t)
    j = np.stack([plan.translate(component, -c * t) for component in fields.j]) - c * rho
    return FieldPair(grid=fields.grid, rho=rho, j=j)


def closing_residual(ensemble, eps, grid, norm='L2', vbar=None, plan=None):
    """ Size of the closing error N^-1 sum_i (v_i^2 - vbar^2) delta_eps'(x - x_i)

    norm is 'L2' or 'Hm2'; the derivative is taken spectrally.
    """
    if grid.d != 1:
        raise UnsupportedError('the closing residual is defined for one dimensional ensembles')
    if norm not in NORMS:
        raise ConfigError('unknown norm %r, expected one of %s' % (norm, ', '.join(NORMS)))
    if plan is None:
        plan = SpectralPlan(grid)
    vbar = float(np.ravel(mean_velocity(ensemble) if vbar is None else vbar)[0])

    coefficients = ensemble.velocities[:, 0] ** 2 - vbar ** 2
    residual = plan.derivative(Smoother(ensemble, eps, grid).smooth(coefficients), 0)
    return plan.norm_L2(residual) if norm == 'L2' else plan.norm_Hm2(residual)


def _realization(config, row, index):
    rng = derive_rng(config.seed, row, index)
    ensemble = sample_ensemble(config, rng)
    grid, eps, times = config.grid, config.epsilon, config.sample_times

    c = config.galilean_shift
    run = ensemble if c is None else galilean_shift(ensemble, np.full(config.d, c))
    vbar = mean_velocity(run)
    state = field_state(config, empirical_density(run, eps, grid), vbar, run)
    dt = step_size(config, state)
    plan = state.plan

    pde = field_trajectory(config, state, dt, derive_rng(config.seed, row, index, NOISE_KEY))
    particles = integrate_particles(
        run, config.kernel, times, dt, sigma=config.sigma,
        rng=derive_rng(config.seed, row, index, NOISE_KEY), vbar=vbar)

    l2, hm2, closing, gap = [], [], [], []
    for t, fields, snapshot in zip(times, pde.fields, particles.snapshots):
        if c is not None:
            fields = _unshift_fields(plan, fields, c, t)
            snapshot = galilean_unshift(snapshot, np.full(config.d, c), t)
        smoother = Smoother(snapshot, eps, grid)
        drho = fields.rho - smoother.density()
        dj = fields.j - smoother.momentum()
        l2.append(np.sqrt(grid.cell_volume * (np.sum(drho ** 2) + np.sum(dj ** 2))))
        gap.append(fields1d.field_gap(fields, mean_velocity(ensemble)))
        if grid.d == 1:
            hm2.append(norm_pair_Hm2(plan, drho, dj[0], mean_velocity(ensemble)))
            closing.append(closing_residual(snapshot, eps, grid, plan=plan))

    first, last = pde.fields[0], pde.fields[-1]
    return {
        'l2': np.array(l2),
        'hm2': np.array(hm2) if hm2 else None,
        'closing': np.array(closing) if closing else None,
        'gap': np.array(gap),
        'spread': np.array([velocity_spread(s) for s in particles.snapshots]),
        'mass_drift': _relative(last.mass(), first.mass()),
        'momentum_drift': _relative(last.momentum(), first.momentum()),
        'particle_drift': _relative(
            mean_velocity(particles.snapshots[-1]), mean_velocity(particles.snapshots[0])),
    }


def _mean(results, key):
    if results[0][key] is None:
        return None
    return np.mean(np.stack([result[key] for result in results]), axis=0)


def run_compare(config, row=0):
    """ Field model against smoothed particles, averaged over config.realizations

    The H-2 pair norm and the closing residual are reported for one dimensional scenarios only.
    """
    results = _map(config, lambda index: _realization(config, row, index),
                   range(config.realizations))
    times = config.sample_times
    report = ErrorReport(
        times=times,
        l2_error=_mean(results, 'l2'),
        hm2_error=_mean(results, 'hm2'),
        closing_residual=_mean(results, 'closing'),
        mass_drift=max(result['mass_drift'] for result in results),
        momentum_drift=max(result['momentum_drift'] for result in results),
        particle_drift=max(result['particle_drift'] for result in results),
        particle_rate=fit_decay_rate(times, _mean(results, 'spread')),
        pde_rate=fit_decay_rate(times, _mean(results, 'gap')),
        config=config)
    log.info('compare row %d: %d realizations, final L2 error %.4e',
             row, config.realizations, report.l2_error[-1])
    return report


def sweep(config, axis, values):
    """ run_compare at every value of one axis; tidy table with one row per sample time

    Row i of the sweep seeds its realizations with keys (i, realization), so repeated values
    give distinct rows.
    """
    check_axis(axis)
    rows = []
    for row, value in enumerate(values):
        report = run_compare(config.replace(**axis_override(axis, value)), row=row)
        for k, t in enumerate(report.times):
            rows.append({
                'axis': axis,
                'value': value,
                'row': row,
                't': t,
                'l2_error': report.l2_error[k],
                'hm2_error': np.nan if report.hm2_error is None else report.hm2_error[k],
                'closing_residual': (
                    np.nan if report.closing_residual is None else report.closing_residual[k]),
            })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def closing_sweep(config, axis, values, norm='L2'):
    """ Mean squared closing residual of freshly sampled ensembles at every value of one axis """
    check_axis(axis)
    rows = []
    for row, value in enumerate(values):
        point = config.replace(**axis_override(axis, value))
        grid = point.grid

        def squared(index):
            ensemble = sample_ensemble(point, derive_rng(point.seed, row, index))
            return closing_residual(ensemble, point.epsilon, grid, norm) ** 2

        samples = np.array(_map(point, squared, range(point.realizations)))
        error = samples.std(ddof=1) / np.sqrt(len(samples)) if len(samples) > 1 else np.nan
        rows.append({'axis': axis, 'value': value, 'row': row,
                     'residual_squared': samples.mean(), 'standard_error': error})
    return pd.DataFrame(
        rows, columns=['axis', 'value', 'row', 'residual_squared', 'standard_error'])


def ensemble_stats(realizations):
    """ Pointwise mean and unbiased variance of rho and j over FieldPair realizations """
    realizations = list(realizations)
    if len(realizations) < 2:
        raise ConfigError('ensemble statistics need at least two realizations')
    grid = realizations[0].grid
    if any(fields.grid != grid for fields in realizations):
        raise GridMismatchError('realizations live on different grids')

    rho = np.stack([fields.rho for fields in realizations])
    j = np.stack([fields.j for fields in realizations])
    return EnsembleStats(
        grid=grid,
        rho_mean=rho.mean(axis=0), rho_var=rho.var(axis=0, ddof=1),
        j_mean=j.mean(axis=0), j_var=j.var(axis=0, ddof=1),
        realizations=len(realizations))


def trajectory_stats(trajectories):
    """ ensemble_stats at every shared sample time """
    trajectories = list(trajectories)
    times = trajectories[0].times
    if any(not np.array_equal(trajectory.times, times) for trajectory in trajectories):
        raise GridMismatchError('realizations are sampled at different times')
    return [ensemble_stats(trajectory.fields[k] for trajectory in trajectories)
            for k in range(len(times))]


def smoothed_trajectory(trajectory, eps, grid):
    return FieldTrajectory(
        times=trajectory.times,
        fields=[empirical_density(snapshot, eps, grid) for snapshot in trajectory.snapshots])


def stochastic_ensembles(config):
    """ Statistics of stochastic particle and SPDE realizations from one initial ensemble

    Returns (particle statistics, SPDE statistics), one EnsembleStats per sample time. Both runs
    of a realization share their Brownian increments.
    """
    if config.d != 1:
        raise UnsupportedError('the stochastic models are one dimensional')
    grid, eps, times = config.grid, config.epsilon, config.sample_times
    ensemble = sample_ensemble(config, derive_rng(config.seed, 0))
    vbar = mean_velocity(ensemble)
    initial = empirical_density(ensemble, eps, grid)

    def realization(index):
        state = fields1d.initial_state(initial, config.kernel, vbar, dealias=config.dealias)
        dt = step_size(config, state)
        spde = field_trajectory(config, state, dt, derive_rng(config.seed, 0, index, NOISE_KEY))
        particles = integrate_particles(
            ensemble, config.kernel, times, dt, sigma=config.sigma,
            rng=derive_rng(config.seed, 0, index, NOISE_KEY), vbar=vbar)
        return smoothed_trajectory(particles, eps, grid), spde

    results = _map(config, realization, range(config.realizations))
    return (trajectory_stats(particles for particles, _ in results),
            trajectory_stats(spde for _, spde in results))


def _median_time(function, repetitions):
    elapsed = []
    for _ in range(repetitions):
        start = perf_counter()
        function()
        elapsed.append(perf_counter() - start)
    return float(np.median(elapsed))


def run_benchmark(config, N_values, repetitions=10):
    """ Median wall time of one particle step and one field step for every N

    Both steps are deterministic. Field data are smoothed once outside the timed region and
    transforms run on one thread.
    """
    if repetitions < 10:
        raise ConfigError('benchmarks need at least 10 repetitions, got %d' % repetitions)
    records = []
    for index, N in enumerate(N_values):
        point = config.replace(N=int(N), sigma=0.0)
        ensemble = sample_ensemble(point, derive_rng(point.seed, index))
        kernel = point.kernel
        fields = empirical_density(ensemble, point.epsilon, point.grid)
        state = field_state(point, fields, mean_velocity(ensemble), workers=1)
        dt = step_size(point, state)

        def pde_step():
            if point.model == 'hydro':
                return hydro.step_hydro(state, dt, point.cfl)
            if point.d == 1:
                return fields1d.step_pde_1d(state, dt, point.cfl)
            return fieldsnd.step_pde_nd(state, None, dt, point.cfl)

        records.append(BenchRecord(
            N=N,
            particle_time=_median_time(lambda: step_cs(ensemble, kernel, dt), repetitions),
            pde_time=_median_time(pde_step, repetitions),
            repetitions=repetitions))
        log.debug('bench N=%d: particles %.3es, fields %.3es',
                  N, records[-1].particle_time, records[-1].pde_time)
    return records


def benchmark_summary(records):
    """ Crossover N and log-log slopes of the per-step times """
    crossover = next((r.N for r in records if r.particle_time > r.pde_time), None)
    if crossover is None:
        log.warning('particle steps stay cheaper than field steps over the whole sweep')

    def slope(attribute):
        if len(records) < 2:
            return np.nan
        N = np.log([r.N for r in records])
        return float(stats.linregress(N, np.log([getattr(r, attribute) for r in records])).slope)

    return {
        'crossover': crossover,
        'particle_slope': slope('particle_time'),
        'pde_slope': slope('pde_time'),
    }


def flocking_report(config, fields=None, tolerance=0.05):
    """ Split the kernel, test the smallness condition and watch the gap of one reduced run

    The sampled ensemble also runs the deterministic particle system, whose velocity spread is
    held against particle_flocking_bound. One dimensional scenarios report the kernel Fourier
    constant.
    """
    grid = config.grid
    split = split_kernel(config.kernel, grid)
    ensemble = sample_ensemble(config, derive_rng(config.seed, 0))
    if fields is None:
        fields = empirical_density(ensemble, config.epsilon, grid)
    vbar = fields.momentum() / fields.mass()
    condition = check_flocking_condition(split, fields.rho, fields.j, vbar)

    reduced = config.replace(model='reduced', sigma=0.0, weight_mode='none')
    state = field_state(reduced, fields, vbar)
    dt = step_size(reduced, state)
    trajectory = field_trajectory(reduced, state, dt)

    times = trajectory.times
    gap = np.array([fields1d.field_gap(f, vbar) for f in trajectory.fields])
    bound = np.exp(-split.c_a * times) * gap[0] ** 2 * (1 + tolerance)

    particles = integrate_particles(ensemble, config.kernel, times, dt)
    spread = np.array([velocity_spread(snapshot) for snapshot in particles.snapshots])
    particle_bound = particle_flocking_bound(particles, config.kernel)
    fourier = kernel_fourier_check(state.plan, state.table) if grid.d == 1 else None
    return FlockingReport(
        split=split, condition=condition, times=times, gap=gap,
        bound_holds=bool(np.all(gap ** 2 <= bound)), fit=fit_decay_rate(times, gap),
        particle_spread=spread, particle_bound=particle_bound,
        particle_bound_holds=bool(np.all(spread <= particle_bound * (1 + tolerance))),
        fourier_constant=fourier)


def discrepancy_profile(grid, amplitude, vbar):
    """ rho0 = (1 + cos(2 pi x_1 / L) / 2) / L^d, j0 = vbar rho0 plus a zero-mean sine of the
    given amplitude in the first momentum component
    """
    x = grid.mesh()[0]
    volume = grid.L ** grid.d
    phase = 2 * np.pi * x / grid.L
    rho = (1.0 + 0.5 * np.cos(phase)) / volume
    j = np.stack([v * rho for v in np.broadcast_to(vbar, (grid.d,))])
    j[0] += amplitude * np.sin(phase) / volume
    return FieldPair(grid=grid, rho=rho, j=j)


def hydro_discrepancy_study(config, amplitudes=(0.0, 0.25, 0.5, 0.75, 1.0), vbar=1.0):
    """ Reduced against hydrodynamic model from initial data of growing flocking gap

    Returns (series, summary): the discrepancy at every sample time, and per amplitude the
    final value with the peak and final slopes. A series counts as flattened when its final
    slope is at most a tenth of its peak slope.
    """
    grid, times = config.grid, config.sample_times
    vbar = np.broadcast_to(np.asarray(vbar, dtype=float), (grid.d,))
    series, summary = [], []
    for amplitude in amplitudes:
        fields = discrepancy_profile(grid, amplitude, vbar)
        reduced_config = config.replace(model='reduced', sigma=0.0, weight_mode='none')
        hydro_config = config.replace(model='hydro', sigma=0.0)
        reduced_state = field_state(reduced_config, fields, vbar)
        hydro_state = field_state(hydro_config, fields, vbar)
        dt = min(step_size(reduced_config, reduced_state), step_size(hydro_config, hydro_state))

        if grid.d == 1:
            reduced = fields1d.integrate_pde_1d(reduced_state, times, dt, config.cfl)[0]
        else:
            reduced = fieldsnd.integrate_pde_nd(reduced_state, None, times, dt, config.cfl)[0]
        monokinetic = hydro.integrate_hydro(hydro_state, times, dt, config.cfl)[0]
        discrepancy = hydro.model_discrepancy(monokinetic, reduced)

        gap = fields1d.field_gap(fields, vbar)
        for t, value in zip(times, discrepancy):
            series.append({'amplitude': amplitude, 'initial_gap': gap, 't': t,
                           'discrepancy': value})
        slopes = np.abs(np.gradient(discrepancy, times))
        peak = float(slopes.max())
        summary.append({
            'amplitude': amplitude,
            'initial_gap': gap,
            'final_discrepancy': discrepancy[-1],
            'peak_slope': peak,
            'final_slope': slopes[-1],
            'flattened': bool(slopes[-1] <= 0.1 * peak) if peak > 0 else True,
        })
    return pd.DataFrame(series), pd.DataFrame(summary)
