import logging

import numpy as np

from .exceptions import GridMismatchError, VacuumError
from .fields1d import CFL, alignment_term, advance, check_step, integrate_fields
from .integrate import RK4
from .kernels import kernel_table
from .spectral import SpectralPlan
from .types import HydroState

log = logging.getLogger(__name__)


def initial_hydro_state(fields, kernel, vbar=None, rho_floor=None, dealias=False, workers=None):
    """ Hydrodynamic state at t = 0, fields.j is the momentum rho u """
    if vbar is None:
        vbar = fields.momentum() / fields.mass()
    plan = SpectralPlan(fields.grid, dealias=dealias, workers=workers)
    return HydroState(
        fields=fields, t=0.0, vbar=vbar, table=kernel_table(kernel, fields.grid), plan=plan,
        rho_floor=rho_floor)


def check_vacuum(rho, rho_floor):
    below = rho < rho_floor
    if np.any(below):
        node = np.unravel_index(np.argmax(below), rho.shape)
        raise VacuumError('density %.3e below floor %.3e at node %s' % (
            rho[node], rho_floor, tuple(int(k) for k in node)))


def velocity(state, rho=None, momentum=None):
    """ u = (rho u) / max(rho, rho_floor) """
    rho = state.fields.rho if rho is None else rho
    momentum = state.fields.j if momentum is None else momentum
    return momentum / np.maximum(rho, state.rho_floor)


def _rhs(state, rho, momentum):
    check_vacuum(rho, state.rho_floor)
    plan = state.plan
    u = velocity(state, rho, momentum)
    dmomentum = alignment_term(plan, state.table, rho, momentum)
    for i in range(state.grid.d):
        flux = np.stack([plan.product(momentum[k], u[i]) for k in range(state.grid.d)])
        dmomentum[i] -= plan.divergence(flux)
    return -plan.divergence(momentum), dmomentum


def rhs_hydro(state):
    """ Monokinetic closure

        drho/dt      = -div(rho u)
        d(rho u_i)/dt = rho (a * rho u_i) - rho u_i (a * rho) - div(rho u u_i)

    Raises VacuumError when rho drops below the floor anywhere.
    """
    return _rhs(state, state.fields.rho, state.fields.j)


def advective_speed(state):
    return float(np.max(np.abs(velocity(state)))) + float(np.sqrt(np.sum(state.vbar ** 2)))


# the flow speed moves during a run, derived steps keep this share of the bound
STEP_SAFETY = 0.8


def hydro_dt(state, cfl=CFL):
    """ Derived step STEP_SAFETY cfl h / (max |u| + |vbar| + 1) """
    return STEP_SAFETY * cfl * state.grid.h / (advective_speed(state) + 1.0)


def step_hydro(state, dt, cfl=CFL):
    check_vacuum(state.fields.rho, state.rho_floor)
    check_step(dt, cfl * state.grid.h / (advective_speed(state) + 1.0))

    def rhs(t, fields):
        return _rhs(state, *fields)

    rho, momentum = RK4.step(rhs, state.t, (state.fields.rho, state.fields.j), dt)
    return advance(state, rho, momentum, dt)


def integrate_hydro(state, times, dt, cfl=CFL):
    return integrate_fields(state, times, dt, lambda s, h: step_hydro(s, h, cfl))


def model_discrepancy(hydro_trajectory, reduced_trajectory):
    """ L2 distance sqrt(|rho_h - rho_r|^2 + sum_i |(rho u_i)_h - j_i,r|^2) at every sample time """
    if hydro_trajectory.grid != reduced_trajectory.grid:
        raise GridMismatchError('trajectories live on different grids')
    if not np.array_equal(hydro_trajectory.times, reduced_trajectory.times):
        raise GridMismatchError('trajectories are sampled at different times')

    volume = hydro_trajectory.grid.cell_volume
    distances = []
    for hydro, reduced in zip(hydro_trajectory.fields, reduced_trajectory.fields):
        squared = np.sum((hydro.rho - reduced.rho) ** 2) + np.sum((hydro.j - reduced.j) ** 2)
        distances.append(np.sqrt(volume * squared))
    return np.array(distances)
