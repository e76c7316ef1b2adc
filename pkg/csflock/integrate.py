"""Explicit one-step integrators over tuples of arrays

A right-hand side is a callable rhs(t, state) -> derivatives, where state and derivatives are
tuples of numpy arrays of matching shapes.
"""
import math


def _combine(state, increments, scale):
    return tuple(y + scale * k for y, k in zip(state, increments))


class RungeKutta(object):

    NUM_STAGES = None
    NODES = ()
    WEIGHTS = ()

    def step(self, rhs, t, state, dt):
        raise NotImplementedError


class ClassicalRungeKutta(RungeKutta):

    """ Classical four stage, fourth order Runge-Kutta """

    NUM_STAGES = 4
    NODES = (0.0, 0.5, 0.5, 1.0)
    WEIGHTS = (1 / 6.0, 1 / 3.0, 1 / 3.0, 1 / 6.0)

    def step(self, rhs, t, state, dt):
        k1 = rhs(t, state)
        k2 = rhs(t + self.NODES[1] * dt, _combine(state, k1, self.NODES[1] * dt))
        k3 = rhs(t + self.NODES[2] * dt, _combine(state, k2, self.NODES[2] * dt))
        k4 = rhs(t + self.NODES[3] * dt, _combine(state, k3, self.NODES[3] * dt))

        w1, w2, w3, w4 = self.WEIGHTS
        return tuple(
            y + dt * (w1 * a + w2 * b + w3 * c + w4 * d)
            for y, a, b, c, d in zip(state, k1, k2, k3, k4))


class ForwardEuler(RungeKutta):

    """ Single stage Euler step, the drift part of Euler-Maruyama """

    NUM_STAGES = 1
    NODES = (0.0,)
    WEIGHTS = (1.0,)

    def step(self, rhs, t, state, dt):
        return _combine(state, rhs(t, state), dt)


RK4 = ClassicalRungeKutta()
EULER = ForwardEuler()


def schedule(times, dt):
    """ Split each interval between consecutive sample times into equal steps no longer than dt

    Yields (index, steps, step_size) for every sample time after the first.
    """
    for index in range(1, len(times)):
        span = times[index] - times[index - 1]
        steps = max(1, int(math.ceil(span / dt - 1e-9)))
        yield index, steps, span / steps
