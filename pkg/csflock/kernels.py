import logging

import numpy as np

from .exceptions import ConfigError, MeanVelocityError
from .torus import node_displacements
from .types import FieldPair, FlockingCondition, KernelSplit

log = logging.getLogger(__name__)

_EINSUM_AXES = 'abc'


def _vectors(displacement, torus):
    displacement = np.asarray(displacement, dtype=float)
    if torus.d == 1 and displacement.shape[-1:] != (1,):
        displacement = displacement[..., np.newaxis]
    return displacement


def _profile(kernel, displacement, torus):
    if kernel.profile == 'cosine':
        return np.prod((1.0 + np.cos(2 * np.pi * displacement / torus.L)) / 2.0, axis=-1)
    return np.zeros(displacement.shape[:-1])


def eval_kernel(kernel, displacement, torus):
    """ Communication rate at minimal image displacements

    Accepts an array of shape (..., d); one dimensional tori also accept plain scalars.
    """
    displacement = _vectors(displacement, torus)

    if kernel.form == 'table':
        M = len(kernel.table)
        nodes = np.arange(M) * torus.L / M
        return np.interp(displacement[..., 0], nodes, kernel.table, period=torus.L)[()]
    if kernel.form == 'split':
        return (kernel.c_a + kernel.theta * _profile(kernel, displacement, torus))[()]

    distance_squared = np.sum(displacement ** 2, axis=-1)
    return (kernel.lam / (1.0 + distance_squared) ** kernel.r)[()]


def kernel_table(kernel, grid):
    """ The kernel evaluated at the minimal image coordinate of every node, a[k] == a[M - k] """
    if kernel.form == 'table' and len(kernel.table) == grid.M and grid.d == 1:
        return np.array(kernel.table)
    displacement = np.moveaxis(node_displacements(grid), 0, -1)
    return eval_kernel(kernel, displacement, grid.torus)


def split_kernel(kernel, grid):
    """ Split a = c_a + theta * g on the grid with c_a = min a and max |g| = 1 """
    table = kernel_table(kernel, grid)
    if np.any(table <= 0):
        raise ConfigError('kernel must be strictly positive on the grid')

    c_a = table.min()
    theta = table.max() - c_a
    g = (table - c_a) / theta if theta > 0 else np.zeros_like(table)
    return KernelSplit(grid=grid, c_a=c_a, theta=theta, g=g)


def check_flocking_condition(split, rho0, j0, vbar):
    """ Smallness condition under which the reduced model provably flocks

    Computes K = (2 (|vbar|^2 |rho0|^2 + |j0|^2) / |vbar|^2
                  + 2 * 9 * |j0 - vbar rho0|^2 / |vbar|^2)^(1/2)
    and compares it with c_a / (4 theta |g|), all norms on the grid.
    """
    grid = split.grid
    vbar = np.asarray(vbar, dtype=float).reshape(grid.d)
    speed_squared = float(np.sum(vbar ** 2))
    if speed_squared == 0:
        raise MeanVelocityError('the flocking condition is undefined for zero mean velocity')

    j0 = np.asarray(j0, dtype=float).reshape((grid.d,) + grid.shape)
    gap = j0 - vbar.reshape((grid.d,) + (1,) * grid.d) * rho0

    def squared(field):
        return float(np.sum(np.square(field)) * grid.cell_volume)

    K = np.sqrt(2 * (speed_squared * squared(rho0) + squared(j0)) / speed_squared
                + 2 * 3 ** 2 * squared(gap) / speed_squared)

    oscillation = split.theta * split.g_norm
    if oscillation == 0:
        return FlockingCondition(holds=True, margin=np.inf, K=K, threshold=np.inf)
    threshold = split.c_a / (4 * oscillation)
    return FlockingCondition(holds=K < threshold, margin=threshold - K, K=K, threshold=threshold)


def _vm_exponent(eps, u, L):
    eps_scaled = 2 * np.pi * eps / L
    return -np.sin(np.pi * u / L) ** 2 / (eps_scaled ** 2 / 2.0)


def _axis_normalization(eps, grid):
    return grid.h * np.exp(_vm_exponent(eps, grid.nodes, grid.L)).sum()


def von_mises_delta(eps, x, grid):
    """ Periodic von Mises mollifier with variance eps^2 at torus coordinates x

    The normalization is the grid quadrature of the unnormalized profile, one factor per axis, so
    the kernel centred on a node integrates to exactly one on the grid.
    """
    if not eps > 0:
        raise ConfigError('mollifier scale must be positive, got %r' % (eps,))
    x = _vectors(x, grid.torus)
    values = np.exp(_vm_exponent(eps, x, grid.L)) / _axis_normalization(eps, grid)
    return np.prod(values, axis=-1)[()]


def _bumps(eps, coordinates, grid):
    """ Per-particle mollifier rows on one axis, each with grid mass exactly one """
    rows = np.exp(_vm_exponent(eps, grid.nodes[np.newaxis, :] - coordinates[:, np.newaxis], grid.L))
    mass = rows.sum(axis=1, keepdims=True) * grid.h
    if np.any(mass == 0):
        raise ConfigError('mollifier scale %g is too small for grid spacing %g' % (eps, grid.h))
    return rows / mass


class Smoother(object):

    """ Smoothed empirical fields of one ensemble on one grid

    Builds the mollifier rows once; smooth(weights) returns N^-1 sum_i weights_i delta(x - x_i).
    """

    def __init__(self, ensemble, eps, grid):
        if not eps > 0:
            raise ConfigError('mollifier scale must be positive, got %r' % (eps,))
        self.ensemble = ensemble
        self.grid = grid
        self.bumps = [_bumps(eps, ensemble.positions[:, m], grid) for m in range(grid.d)]
        axes = _EINSUM_AXES[:grid.d]
        self._subscripts = 'i,' + ','.join('i' + a for a in axes) + '->' + axes

    def smooth(self, weights):
        weights = np.asarray(weights, dtype=float) / self.ensemble.N
        return np.einsum(self._subscripts, weights, *self.bumps, optimize=True)

    def density(self):
        return self.smooth(np.ones(self.ensemble.N))

    def momentum(self):
        return np.stack([self.smooth(self.ensemble.velocities[:, m]) for m in range(self.grid.d)])


def empirical_density(ensemble, eps, grid):
    """ Smoothed empirical density and momentum density of an ensemble """
    smoother = Smoother(ensemble, eps, grid)
    return FieldPair(grid=grid, rho=smoother.density(), j=smoother.momentum())


def exact_weight(ensemble, eps, vbar, grid, rho_min=None, w_min=0.1, w_max=10.0):
    """ Initial weight of the kinetic term

    w0 = [N^-1 sum |v_i|^2 delta(x - x_i)] / [|vbar|^2 max(rho_eps, rho_min)], clamped to
    [w_min, w_max]. rho_min defaults to 1e-6 / L.
    """
    speed_squared = float(np.sum(np.asarray(vbar, dtype=float) ** 2))
    if speed_squared == 0:
        raise MeanVelocityError('the exact weight is undefined for zero mean velocity')
    if rho_min is None:
        rho_min = 1e-6 / grid.L

    smoother = Smoother(ensemble, eps, grid)
    energy = smoother.smooth(np.sum(ensemble.velocities ** 2, axis=1))
    w0 = energy / (speed_squared * np.maximum(smoother.density(), rho_min))

    clamped = np.clip(w0, w_min, w_max)
    if np.any(clamped != w0):
        log.debug('exact weight clamped at %d of %d nodes', np.sum(clamped != w0), w0.size)
    return clamped


def weight_at(weight, t):
    """ The weight field at time t

    exponential:  1 - exp(-rate t) + exp(-rate t) w0
    none:         1
    exact-frozen: w0
    """
    if weight is None or weight.mode == 'none':
        shape = weight.grid.shape if weight is not None else ()
        return np.ones(shape)
    if weight.mode == 'exact-frozen':
        return np.array(weight.w0)
    decay = np.exp(-weight.rate * t)
    return 1.0 - decay + decay * weight.w0
