import logging

import numpy as np
from scipy import ndimage

from .exceptions import MeanVelocityError, UnsupportedError
from .fields1d import CFL, alignment_term, advance, advective_dt, check_step, integrate_fields
from .integrate import RK4
from .torus import zero_components
from .types import RegularizationConfig

log = logging.getLogger(__name__)


def _check_multidimensional(state):
    if state.grid.d < 2:
        raise UnsupportedError('the d > 1 model needs at least two dimensions, use fields1d')


def _rhs(state, rho, j):
    plan, vbar = state.plan, state.vbar
    divergence = plan.divergence(j)
    dj = alignment_term(plan, state.table, rho, j)
    dj -= vbar.reshape((-1,) + (1,) * state.grid.d) * divergence
    return -divergence, dj


def rhs_nd(state):
    """ Reduced model right-hand side for d > 1

        drho/dt   = -div j
        dj_m / dt = rho (a * j_m) - j_m (a * rho) - vbar_m div j
    """
    _check_multidimensional(state)
    return _rhs(state, state.fields.rho, state.fields.j)


def _cell_norms(state, rho, j):
    plan, grid = state.plan, state.grid
    speed_squared = float(np.sum(state.vbar ** 2))
    squared = speed_squared * np.sum(plan.gradient(rho) ** 2, axis=0)
    for component in j:
        squared += np.sum(plan.gradient(component) ** 2, axis=0)
    return np.sqrt(grid.cell_volume * squared)


def cell_gradient_norms(state):
    """ Local gradient size of (rho, j) on every cell; cells are identified with grid nodes

        (|vbar|^2 |grad rho|^2 h^d + sum_m |grad j_m|^2 h^d)^(1/2)
    """
    return _cell_norms(state, state.fields.rho, state.fields.j)


def cell_gradient_norm(state, cell):
    return float(cell_gradient_norms(state)[tuple(cell)])


def cutoff_phi(y, V, W, h, d):
    """ 0 below V h^d, W from (V + 1) h^d, a C1 smoothstep in between """
    volume = h ** d
    u = np.clip((np.asarray(y, dtype=float) - V * volume) / volume, 0.0, 1.0)
    return (W * u ** 2 * (3.0 - 2.0 * u))[()]


def hat_stencil(radius, h, d):
    """ Tensor product piecewise linear bump with unit discrete mass, h^d * sum == 1 """
    offsets = np.arange(-radius, radius + 1)
    line = (radius + 1.0 - np.abs(offsets))
    line /= line.sum() * h
    stencil = line
    for _ in range(d - 1):
        stencil = np.multiply.outer(stencil, line)
    return stencil


def envelope(phi, regcfg, grid):
    """ sum_c phi_c e_c: activation levels spread by the hat bump of each cell """
    stencil = hat_stencil(regcfg.radius, grid.h, grid.d)
    return ndimage.convolve(phi, stencil, mode='wrap')


def diffuse(coefficient, f, h):
    """ Divergence form centred differences for div(coefficient grad f); sums to zero exactly """
    term = np.zeros_like(f)
    for axis in range(f.ndim):
        face = (coefficient + np.roll(coefficient, -1, axis=axis)) / 2.0
        flux = face * (np.roll(f, -1, axis=axis) - f) / h
        term += (flux - np.roll(flux, 1, axis=axis)) / h
    return term


def activation(state, regcfg, rho=None, j=None):
    """ Cutoff level phi of every cell """
    rho = state.fields.rho if rho is None else rho
    j = state.fields.j if j is None else j
    grid = state.grid
    return cutoff_phi(_cell_norms(state, rho, j), regcfg.V, regcfg.W, grid.h, grid.d)


def _envelope_of(state, regcfg, rho, j):
    return envelope(activation(state, regcfg, rho, j), regcfg, state.grid)


def regularization_term(state, regcfg, f, coefficient=None):
    """ sum_c phi(|(rho, j)|_c) div(e_c grad f) for one field f sampled on the grid """
    if coefficient is None:
        coefficient = _envelope_of(state, regcfg, state.fields.rho, state.fields.j)
    return diffuse(coefficient, f, state.grid.h)


def diffusive_dt(state, regcfg):
    """ h^2 / (2 d max E) for the current envelope E, infinite when nothing is active """
    if regcfg is None or regcfg.W == 0:
        return np.inf
    largest = float(np.max(_envelope_of(state, regcfg, state.fields.rho, state.fields.j)))
    if largest <= 0:
        return np.inf
    return state.grid.h ** 2 / (2 * state.grid.d * largest)


def default_regularization(state, W=1.0, radius=1):
    """ Threshold with V h^d at twice the largest cell norm of state, inactive on it """
    largest = float(np.max(cell_gradient_norms(state)))
    return RegularizationConfig(V=2.0 * largest / state.grid.cell_volume, W=W, radius=radius)


def step_pde_nd(state, regcfg, dt, cfl=CFL):
    """ One Runge-Kutta step of the regularized d > 1 model; regcfg None or W == 0 disables
    the diffusion """
    _check_multidimensional(state)
    if not np.any(state.vbar != 0):
        raise MeanVelocityError('reduced models need a nonzero mean velocity')
    check_step(dt, advective_dt(state.grid, state.vbar, cfl))
    check_step(dt, diffusive_dt(state, regcfg), 'diffusive')
    active = regcfg is not None and regcfg.W > 0
    h = state.grid.h

    def rhs(t, fields):
        rho, j = fields
        drho, dj = _rhs(state, rho, j)
        if active:
            coefficient = _envelope_of(state, regcfg, rho, j)
            drho = drho + diffuse(coefficient, rho, h)
            dj = dj + np.stack([diffuse(coefficient, component, h) for component in j])
        return drho, dj

    rho, j = RK4.step(rhs, state.t, (state.fields.rho, state.fields.j), dt)
    return advance(state, rho, j, dt)


# margin below the diffusive bound when subcycling, the envelope moves within a step
SUBCYCLE_SAFETY = 0.8


def integrate_pde_nd(state, regcfg, times, dt, cfl=CFL):
    """ Trajectory of the d > 1 model; steps over the diffusive bound are subcycled """
    _check_multidimensional(state)
    zero_components(state.vbar)

    def step(current, h):
        remaining = h
        while remaining > 0:
            piece = min(remaining, SUBCYCLE_SAFETY * diffusive_dt(current, regcfg))
            if remaining - piece <= 1e-12 * h:
                piece = remaining
            else:
                log.debug('subcycling at t=%g: %g of %g', current.t, piece, h)
            current = step_pde_nd(current, regcfg, piece, cfl)
            remaining -= piece
        return current

    return integrate_fields(state, times, dt, step)
