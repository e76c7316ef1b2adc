import logging

import numpy as np

from .exceptions import CFLError, ConfigError, MeanVelocityError, UnsupportedError
from .integrate import EULER, RK4, schedule
from .kernels import kernel_table, weight_at
from .spectral import SpectralPlan
from .types import FieldPair, FieldTrajectory, SolverState

log = logging.getLogger(__name__)

CFL = 0.4
# relative slack when comparing a step against its stability bound
CFL_SLACK = 1e-9


def initial_state(fields, kernel, vbar=None, weight=None, dealias=False, workers=None):
    """ Solver state at t = 0; vbar defaults to the conserved ratio of momentum to mass """
    if vbar is None:
        vbar = fields.momentum() / fields.mass()
    plan = SpectralPlan(fields.grid, dealias=dealias, workers=workers)
    return SolverState(
        fields=fields, t=0.0, vbar=vbar, table=kernel_table(kernel, fields.grid), plan=plan,
        weight=weight)


def advective_dt(grid, vbar, cfl=CFL):
    """ cfl h / (|vbar| + 1) """
    return cfl * grid.h / (float(np.sqrt(np.sum(np.square(vbar)))) + 1.0)


def stable_dt(grid, vbar, table, cfl=CFL, sigma=0.0, c_a=None):
    """ Derived step min(cfl h / (|vbar| + 1), 1 / max a), at most 1 / (10 c_a) with noise """
    dt = min(advective_dt(grid, vbar, cfl), 1.0 / float(np.max(table)))
    if sigma > 0:
        c_a = float(np.min(table)) if c_a is None else c_a
        dt = min(dt, 1.0 / (10 * c_a))
    return dt


def check_mean_velocity(vbar):
    if np.any(np.asarray(vbar) == 0):
        raise MeanVelocityError('reduced models need a nonzero mean velocity, got %s' % (vbar,))


def check_step(dt, bound, what='advective'):
    if not dt > 0:
        raise ConfigError('time step must be positive, got %r' % (dt,))
    if dt > bound * (1 + CFL_SLACK):
        raise CFLError('time step %g exceeds the %s stability bound %g' % (dt, what, bound))


def alignment_term(plan, table, rho, j):
    """ rho (a * j) - j (a * rho), componentwise in j """
    smoothed_rho = plan.convolve(table, rho)
    return np.stack([
        plan.product(rho, plan.convolve(table, component)) - plan.product(component, smoothed_rho)
        for component in j])


def _rhs(state, t, rho, j):
    plan, vbar = state.plan, state.vbar[0]
    drho = -plan.derivative(j[0], 0)
    if state.weight is None:
        kinetic = rho
    else:
        kinetic = plan.product(weight_at(state.weight, t), rho)
    dj = alignment_term(plan, state.table, rho, j) - vbar ** 2 * plan.derivative(kinetic, 0)
    return drho, dj


def _check_one_dimensional(state):
    if state.grid.d != 1:
        raise UnsupportedError('the closed 1D model needs a one dimensional grid')


def rhs_1d(state):
    """ Reduced model right-hand side

        drho/dt = -d/dx j
        dj/dt   = rho (a * j) - j (a * rho) - vbar^2 d/dx rho
    """
    _check_one_dimensional(state)
    fields = state.fields
    return _rhs(state.replace(weight=None), state.t, fields.rho, fields.j)


def rhs_1d_weighted(state):
    """ As rhs_1d with the kinetic term -vbar^2 d/dx (w(., t) rho) """
    _check_one_dimensional(state)
    if state.weight is None:
        raise ConfigError('the weighted model needs a weight field')
    return _rhs(state, state.t, state.fields.rho, state.fields.j)


def advance(state, rho, j, dt):
    return state.replace(fields=FieldPair(grid=state.grid, rho=rho, j=j), t=state.t + dt)


def step_pde_1d(state, dt, cfl=CFL):
    """ One Runge-Kutta step of the (weighted, when the state carries a weight) 1D model """
    _check_one_dimensional(state)
    check_mean_velocity(state.vbar)
    check_step(dt, advective_dt(state.grid, state.vbar, cfl))

    def rhs(t, fields):
        return _rhs(state, t, *fields)

    rho, j = RK4.step(rhs, state.t, (state.fields.rho, state.fields.j), dt)
    return advance(state, rho, j, dt)


def step_spde_1d(state, sigma, dt, dB, cfl=CFL):
    """ Euler-Maruyama step; the noise sigma (j - vbar rho) dB enters the momentum only """
    _check_one_dimensional(state)
    check_mean_velocity(state.vbar)
    if sigma < 0:
        raise ConfigError('noise intensity must be nonnegative')
    check_step(dt, advective_dt(state.grid, state.vbar, cfl))

    def rhs(t, fields):
        return _rhs(state, t, *fields)

    rho, j = state.fields.rho, state.fields.j
    gap = j - state.vbar[0] * rho
    rho_next, j_next = EULER.step(rhs, state.t, (rho, j), dt)
    return advance(state, rho_next, j_next + sigma * gap * dB, dt)


def field_gap(fields, vbar):
    """ L2 norm of j - vbar rho, summed over momentum components """
    grid = fields.grid
    vbar = np.asarray(vbar, dtype=float).reshape((grid.d,) + (1,) * grid.d)
    return float(np.sqrt(grid.cell_volume * np.sum((fields.j - vbar * fields.rho) ** 2)))


def flocking_gap(state):
    return field_gap(state.fields, state.vbar)


def integrate_fields(state, times, dt, step):
    """ Drive step(state, dt) through every sample time; returns the trajectory and final state

    Negative density values are reported but never corrected.
    """
    times = np.asarray(times, dtype=float)
    if state.t != times[0]:
        raise ConfigError('trajectory must start at the state time %g' % state.t)
    initial = state.fields
    snapshots = [initial]
    negative_reported = False
    for index, steps, step_size in schedule(times, dt):
        for _ in range(steps):
            state = step(state, step_size)
        state = state.replace(t=times[index])
        if not negative_reported and state.fields.rho.min() < 0:
            log.warning('negative density %.3e at t=%g', state.fields.rho.min(), state.t)
            negative_reported = True
        snapshots.append(state.fields)

    mass_drift = abs(state.fields.mass() - initial.mass()) / abs(initial.mass())
    log.info('field run to t=%g on M=%d: relative mass drift %.3e',
             times[-1], state.grid.M, mass_drift)
    return FieldTrajectory(times=times, fields=snapshots), state


def integrate_pde_1d(state, times, dt, cfl=CFL):
    return integrate_fields(state, times, dt, lambda s, h: step_pde_1d(s, h, cfl))


def integrate_spde_1d(state, sigma, times, dt, rng, cfl=CFL):
    """ SPDE realization; draws one N(0, step) increment per step from rng """
    def step(s, h):
        return step_spde_1d(s, sigma, h, rng.normal(0.0, np.sqrt(h)), cfl)
    return integrate_fields(state, times, dt, step)
