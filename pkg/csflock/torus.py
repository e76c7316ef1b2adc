import logging

import numpy as np

from .types import ParticleEnsemble

log = logging.getLogger(__name__)


def wrap(x, torus):
    """ Map real coordinates into the canonical box [0, L)^d """
    L = torus.L
    wrapped = np.mod(np.asarray(x, dtype=float), L)
    # mod rounds tiny negative inputs up to exactly L
    wrapped = np.where(wrapped >= L, wrapped - L, wrapped)
    return wrapped[()]


def geodesic_displacement(x, y, torus):
    """ Per-axis minimal image of x - y, in [-L/2, L/2)

    Antisymmetric except on the half-distance, which always maps to -L/2.
    """
    L = torus.L
    difference = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return (difference - L * np.floor((difference + L / 2) / L))[()]


def node_displacements(grid):
    """ Minimal image coordinates of every grid node, seen from the origin node

    Returns a (d,) + grid.shape array; kernel tables are evaluated on its norm.
    """
    return np.stack([geodesic_displacement(axis, 0.0, grid.torus) for axis in grid.mesh()])


def mean_velocity(ensemble):
    """ Arithmetic mean of the velocity rows, a d-vector """
    return ensemble.velocities.mean(axis=0)


def from_user_coordinates(x, torus):
    """ Shift origin-centred user coordinates onto the torus chart """
    return wrap(np.asarray(x, dtype=float) + torus.L / 2, torus)


def zero_components(vbar, tolerance=1e-12):
    """ Indices of mean-velocity components that vanish, warning about each """
    vbar = np.atleast_1d(vbar)
    zero = [m for m, v in enumerate(vbar) if abs(v) <= tolerance]
    for m in zero:
        log.warning('mean velocity component %d is zero; reduced models assume it is not', m)
    return zero


def galilean_shift(ensemble, c):
    """ The same ensemble observed from a frame moving at velocity -c """
    return ParticleEnsemble(
        torus=ensemble.torus,
        positions=ensemble.positions,
        velocities=ensemble.velocities + np.asarray(c, dtype=float))


def galilean_unshift(ensemble, c, t):
    """ Undo galilean_shift on a snapshot taken at time t of the shifted run """
    c = np.asarray(c, dtype=float)
    return ParticleEnsemble(
        torus=ensemble.torus,
        positions=wrap(ensemble.positions - c * t, ensemble.torus),
        velocities=ensemble.velocities - c)
