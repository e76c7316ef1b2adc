import logging

import numpy as np
from scipy import integrate, stats

from .exceptions import ConfigError, UnsupportedError
from .integrate import RK4, schedule
from .kernels import eval_kernel
from .torus import from_user_coordinates, geodesic_displacement, mean_velocity, wrap
from .types import FlockingFit, ParticleEnsemble, ParticleTrajectory

log = logging.getLogger(__name__)

# pairwise blocks are evaluated a few rows at a time to bound memory at large N
BLOCK_ELEMENTS = 2 ** 22
SPREAD_FLOOR = 1e-12
VON_MISES_TABLE_SIZE = 4097


def derive_rng(seed, *keys):
    """ Independent generator for one realization

    The child stream is numpy.random.SeedSequence(seed, spawn_key=keys): sweep rows use the key
    (row,), realizations of a row use (row, realization). The rule is stable across releases.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def sample_von_mises(rng, size, concentration, torus):
    """ Origin-centred von Mises coordinates with density ~ exp(k cos(2 pi x / L)) on [-L/2, L/2)

    Drawn by inverse transform on a fine cumulative table.
    """
    x = np.linspace(-torus.L / 2, torus.L / 2, VON_MISES_TABLE_SIZE)
    density = np.exp(concentration * (np.cos(2 * np.pi * x / torus.L) - 1.0))
    cdf = integrate.cumulative_trapezoid(density, x, initial=0.0)
    cdf /= cdf[-1]
    return np.interp(rng.uniform(size=size), cdf, x)


def sample_ensemble(config, rng):
    """ Random initial ensemble for a scenario

    Positions are uniform on x_range, or von Mises with concentration von_mises_k when it is
    positive. Every velocity component is uniform on v_range.
    """
    torus = config.torus
    shape = (config.N, config.d)
    if config.von_mises_k > 0:
        user = sample_von_mises(rng, shape, config.von_mises_k, torus)
    else:
        user = rng.uniform(config.x_range[0], config.x_range[1], size=shape)
    velocities = rng.uniform(config.v_range[0], config.v_range[1], size=shape)
    return ParticleEnsemble(
        torus=torus, positions=from_user_coordinates(user, torus), velocities=velocities)


def _acceleration(positions, velocities, kernel, torus):
    N = positions.shape[0]
    block = max(1, BLOCK_ELEMENTS // max(1, N * torus.d))
    acceleration = np.empty_like(velocities)
    for start in range(0, N, block):
        stop = min(N, start + block)
        displacement = geodesic_displacement(
            positions[start:stop, np.newaxis, :], positions[np.newaxis, :, :], torus)
        rates = eval_kernel(kernel, displacement, torus)
        acceleration[start:stop] = (
            rates @ velocities - rates.sum(axis=1)[:, np.newaxis] * velocities[start:stop]) / N
    return acceleration


def cs_rhs(ensemble, kernel):
    """ Alignment acceleration N^-1 sum_j a(x_i - x_j) (v_j - v_i) of every particle """
    return _acceleration(ensemble.positions, ensemble.velocities, kernel, ensemble.torus)


def step_cs(ensemble, kernel, dt):
    """ One classical Runge-Kutta step of the deterministic system, positions wrapped """
    if not dt > 0:
        raise ConfigError('time step must be positive, got %r' % (dt,))
    torus = ensemble.torus

    def rhs(t, state):
        positions, velocities = state
        return velocities, _acceleration(positions, velocities, kernel, torus)

    positions, velocities = RK4.step(rhs, 0.0, (ensemble.positions, ensemble.velocities), dt)
    return ParticleEnsemble(torus=torus, positions=wrap(positions, torus), velocities=velocities)


def step_cs_stochastic(ensemble, kernel, sigma, dt, dB, vbar=None):
    """ Euler-Maruyama step with one Brownian increment dB shared by every particle

        v_i <- v_i + drift_i dt + sigma (v_i - vbar) dB
        x_i <- x_i + v_i dt        (pre-step velocity)

    vbar is the conserved initial mean velocity, the current mean when omitted.
    """
    if ensemble.d != 1:
        raise UnsupportedError('the shared-noise particle system is one dimensional')
    if sigma < 0:
        raise ConfigError('noise intensity must be nonnegative')
    if not dt > 0:
        raise ConfigError('time step must be positive, got %r' % (dt,))
    if vbar is None:
        vbar = mean_velocity(ensemble)

    velocities = ensemble.velocities
    drift = cs_rhs(ensemble, kernel)
    updated = velocities + drift * dt + sigma * (velocities - vbar) * dB
    return ParticleEnsemble(
        torus=ensemble.torus,
        positions=wrap(ensemble.positions + velocities * dt, ensemble.torus),
        velocities=updated)


def velocity_spread(ensemble):
    """ (sum_i |v_i - vbar|^2)^(1/2) """
    deviation = ensemble.velocities - mean_velocity(ensemble)
    return float(np.sqrt(np.sum(deviation ** 2)))


def max_pairwise_distance(ensemble):
    """ Largest geodesic distance between two particles """
    positions, torus = ensemble.positions, ensemble.torus
    N = ensemble.N
    block = max(1, BLOCK_ELEMENTS // max(1, N * torus.d))
    largest = 0.0
    for start in range(0, N, block):
        displacement = geodesic_displacement(
            positions[start:start + block, np.newaxis, :], positions[np.newaxis, :, :], torus)
        largest = max(largest, float(np.sqrt(np.sum(displacement ** 2, axis=-1)).max()))
    return largest


def integrate_particles(ensemble, kernel, times, dt, sigma=0.0, rng=None, vbar=None, seed=None):
    """ Particle trajectory sampled at times, starting from ensemble at times[0]

    With sigma > 0 the stochastic system is stepped and rng supplies one N(0, step) increment per
    step. A solver drawing from a generator with the same seed on the same schedule sees the
    identical increment sequence.
    """
    times = np.asarray(times, dtype=float)
    stochastic = sigma > 0
    if stochastic and rng is None:
        raise ConfigError('stochastic runs need a random generator')
    if stochastic and vbar is None:
        vbar = mean_velocity(ensemble)

    snapshots = [ensemble]
    current = ensemble
    for index, steps, step in schedule(times, dt):
        for _ in range(steps):
            if stochastic:
                dB = rng.normal(0.0, np.sqrt(step))
                current = step_cs_stochastic(current, kernel, sigma, step, dB, vbar=vbar)
            else:
                current = step_cs(current, kernel, step)
        snapshots.append(current)

    drift = np.abs(mean_velocity(current) - mean_velocity(ensemble)).max()
    log.debug('particle run to t=%g: N=%d, mean velocity drift %.3e', times[-1], ensemble.N, drift)
    return ParticleTrajectory(times=times, snapshots=snapshots, seed=seed)


def fit_decay_rate(times, series, floor=SPREAD_FLOOR):
    """ Least-squares slope of log(series) against t on the latter half of the samples

    Samples from the first one below floor onwards are dropped. Fewer than two usable samples
    give a degenerate fit with exponent 0.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    start = len(times) // 2
    window_t, window_s = times[start:], series[start:]

    below = np.flatnonzero(window_s < floor)
    if len(below):
        window_t, window_s = window_t[:below[0]], window_s[:below[0]]

    if len(window_t) < 2:
        log.warning('decay fit is degenerate: %d usable samples above %g', len(window_t), floor)
        return FlockingFit(exponent=0.0, intercept=0.0, samples=len(window_t), degenerate=True)

    fit = stats.linregress(window_t, np.log(window_s))
    return FlockingFit(exponent=fit.slope, intercept=fit.intercept, samples=len(window_t))


def flocking_rate_fit(trajectory):
    """ Fitted exponent of velocity_spread against t """
    spreads = [velocity_spread(snapshot) for snapshot in trajectory.snapshots]
    return fit_decay_rate(trajectory.times, spreads)


def particle_flocking_bound(trajectory, kernel):
    """ N^(1/2) R_v exp(-a(d_max) t), R_v the largest initial deviation from the mean velocity
    and d_max the largest geodesic distance seen along the trajectory
    """
    initial = trajectory.snapshots[0]
    deviation = initial.velocities - mean_velocity(initial)
    speed_bound = float(np.sqrt(np.sum(deviation ** 2, axis=1)).max())
    d_max = max(max_pairwise_distance(snapshot) for snapshot in trajectory.snapshots)
    displacement = np.zeros(initial.d)
    displacement[0] = d_max
    rate = float(eval_kernel(kernel, displacement, initial.torus))
    return np.sqrt(initial.N) * speed_bound * np.exp(-rate * trajectory.times)
