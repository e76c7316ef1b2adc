""" Tabular views of results and the writers that put them on disk

Tables are pandas DataFrames with one header row, written comma separated without an index.
Metadata is json with sorted keys.
"""
import json
import logging
import os

import numpy as np
import pandas as pd

from .kernels import kernel_table
from .types import plain

log = logging.getLogger(__name__)


def _axis_names(prefix, d, single=None):
    if d == 1 and single is not None:
        return [single]
    return ['%s_%d' % (prefix, m + 1) for m in range(d)]


def trajectory_frame(trajectory):
    """ Columns t, particle_id, x_1..x_d, v_1..v_d """
    frames = []
    for t, snapshot in zip(trajectory.times, trajectory.snapshots):
        frame = pd.DataFrame(snapshot.positions, columns=_axis_names('x', snapshot.d))
        for m, name in enumerate(_axis_names('v', snapshot.d)):
            frame[name] = snapshot.velocities[:, m]
        frame.insert(0, 'particle_id', np.arange(snapshot.N))
        frame.insert(0, 't', t)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def snapshot_frame(trajectory, momentum='j'):
    """ Columns t, x (x_1..x_d), rho, j (j_1..j_d); hydrodynamic runs pass momentum='ru'

    One dimensional reduced runs keep the bare names x and j, hydrodynamic momenta are always
    numbered.
    """
    grid = trajectory.grid
    coordinates = [axis.ravel() for axis in grid.mesh()]
    single = 'j' if momentum == 'j' else None
    frames = []
    for t, fields in zip(trajectory.times, trajectory.fields):
        frame = pd.DataFrame({'t': t}, index=range(len(coordinates[0])))
        for name, values in zip(_axis_names('x', grid.d, 'x'), coordinates):
            frame[name] = values
        frame['rho'] = fields.rho.ravel()
        for name, component in zip(_axis_names(momentum, grid.d, single), fields.j):
            frame[name] = component.ravel()
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def kernel_frame(kernel, grid):
    """ Columns x, a: the kernel at the minimal image coordinate of every node """
    if grid.d != 1:
        table = kernel_table(kernel, grid).ravel()
        coordinates = {name: axis.ravel() for name, axis in zip(
            _axis_names('x', grid.d), grid.mesh())}
        return pd.DataFrame(dict(coordinates, a=table))
    coordinates = np.where(grid.nodes >= grid.L / 2, grid.nodes - grid.L, grid.nodes)
    return pd.DataFrame({'x': coordinates, 'a': kernel_table(kernel, grid)})


def activation_frame(phi):
    """ Columns cell_1..cell_d, phi """
    index = np.indices(phi.shape).reshape(phi.ndim, -1)
    frame = pd.DataFrame({name: row for name, row in zip(_axis_names('cell', phi.ndim), index)})
    frame['phi'] = phi.ravel()
    return frame


def coefficient_frame(plan, trajectory):
    """ Columns t, xi, magnitude: density coefficients at every sample for tail monitoring """
    frames = []
    for t, fields in zip(trajectory.times, trajectory.fields):
        xi, magnitude = plan.coefficient_magnitudes(fields.rho)
        frames.append(pd.DataFrame({'t': t, 'xi': xi, 'magnitude': magnitude.reshape(-1)}))
    return pd.concat(frames, ignore_index=True)


def report_frame(report):
    """ Columns t, l2_error, hm2_error, closing_residual (empty for d > 1) """
    missing = np.full(len(report.times), np.nan)
    return pd.DataFrame({
        't': report.times,
        'l2_error': report.l2_error,
        'hm2_error': missing if report.hm2_error is None else report.hm2_error,
        'closing_residual': missing if report.closing_residual is None else report.closing_residual,
    })


def flocking_frame(report):
    """ Columns t, gap, particle_spread, particle_bound """
    missing = np.full(len(report.times), np.nan)
    return pd.DataFrame({
        't': report.times,
        'gap': report.gap,
        'particle_spread': missing if report.particle_spread is None else report.particle_spread,
        'particle_bound': missing if report.particle_bound is None else report.particle_bound,
    })


def bench_frame(records):
    columns = ['N', 'particle_time', 'pde_time', 'repetitions']
    return pd.DataFrame([record.as_record() for record in records], columns=columns)


def stats_frame(particle_stats, field_stats, times):
    """ Columns t, x, particle/field means and variances of rho and j, one dimensional grids """
    frames = []
    for t, particles, fields in zip(times, particle_stats, field_stats):
        frames.append(pd.DataFrame({
            't': t,
            'x': particles.grid.nodes,
            'particle_rho_mean': particles.rho_mean,
            'particle_rho_var': particles.rho_var,
            'particle_j_mean': particles.j_mean[0],
            'particle_j_var': particles.j_var[0],
            'field_rho_mean': fields.rho_mean,
            'field_rho_var': fields.rho_var,
            'field_j_mean': fields.j_mean[0],
            'field_j_var': fields.j_var[0],
            'realizations': particles.realizations,
        }))
    return pd.concat(frames, ignore_index=True)


def write_csv(frame, path):
    frame.to_csv(path, index=False)
    log.debug('wrote %d rows to %s', len(frame), path)
    return path


def write_json(record, path):
    with open(path, 'w') as f:
        json.dump(plain(record), f, indent=2, sort_keys=True, allow_nan=True)
    log.debug('wrote %s', path)
    return path


def ensure_directory(path):
    os.makedirs(path, exist_ok=True)
    return path
