import json
from numbers import Integral, Real

import numpy as np

from .exceptions import ConfigError, NumericalError


def plain(value):
    """ Convert a registered attribute into something json can serialize """
    if isinstance(value, LabType):
        return value.as_record()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, dict):
        return {k: plain(v) for k, v in value.items()}
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    return repr(value)


def _equal(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_equal(x, y) for x, y in zip(a, b))
    return a == b


def _frozen_array(value, dtype=float):
    if isinstance(value, np.ndarray) and not value.flags.writeable and value.dtype == dtype:
        return value
    array = np.array(value, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


def _is_int(value):
    return isinstance(value, Integral) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, Real) and not isinstance(value, bool)


def _is_pair(value):
    return isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_real(v) for v in value)


class LabType(object):

    """ LabType class

    Provides base lab type functionality. Lab types register their defining attributes via the
    lab_attribute method. This lets every type echo itself as a flat record for the metadata
    written next to each result, and be rebuilt with some attributes replaced.

    Lab type attributes can be accessed via dictionary lookup, for example:

        >>> torus = Torus(d=1, L=40.0)
        >>> torus['L'] == torus.L
        ... True

    Instances are frozen once constructed and the arrays they hold are read-only.
    """

    def __init__(self, *args, **kwargs):
        object.__setattr__(self, '_attributes', [])
        object.__setattr__(self, '_frozen', False)
        self.set_attributes(*args, **kwargs)
        object.__setattr__(self, '_frozen', True)

    def __setattr__(self, name, value):
        if self._frozen:
            raise AttributeError('%s is immutable, use replace()' % self.record_name)
        object.__setattr__(self, name, value)

    def __getitem__(self, name):
        return getattr(self, name)

    @property
    def record_name(self):
        """ Name used when this type is echoed into run metadata """
        return self.__class__.__name__

    def lab_attribute(self, name, value):
        """ Marks an attribute as being a part of the data defining this type """
        if isinstance(value, np.ndarray):
            value = _frozen_array(value, dtype=value.dtype)
        setattr(self, name, value)
        if name not in self._attributes:
            self._attributes.append(name)

    def as_record(self):
        """ Flat, json friendly mapping of the registered attributes """
        return {attr: plain(getattr(self, attr)) for attr in self._attributes}

    def replace(self, **changes):
        """ New instance of the same type with some attributes replaced """
        values = {attr: getattr(self, attr) for attr in self._attributes}
        values.update(changes)
        return type(self)(**values)

    def set_attributes(self, *args, **kwargs):
        for name, value in list(kwargs.items()):
            self.lab_attribute(name, value)

    def __eq__(self, other):
        if type(other) is not type(self):
            return False
        return all(_equal(getattr(self, attr), getattr(other, attr)) for attr in self._attributes)

    def __repr__(self):
        scalars = ', '.join(
            '%s=%r' % (attr, getattr(self, attr)) for attr in self._attributes
            if isinstance(getattr(self, attr), (Real, str)))
        return '%s(%s)' % (self.record_name, scalars)


class Torus(LabType):

    """ The box [0, L)^d with opposite faces identified, same circumference on every axis """

    def set_attributes(self, d, L):
        if not _is_int(d) or d < 1:
            raise ConfigError('torus dimension must be a positive integer, got %r' % (d,))
        if not _is_real(L) or not L > 0:
            raise ConfigError('torus length must be positive, got %r' % (L,))
        self.lab_attribute('d', int(d))
        self.lab_attribute('L', float(L))


class GridSpec(LabType):

    """ Uniform periodic grid with M nodes per axis, node k at coordinate k*h """

    def set_attributes(self, torus, M):
        if not _is_int(M) or M < 4:
            raise ConfigError('grid needs at least 4 points per axis, got %r' % (M,))
        self.lab_attribute('torus', torus)
        self.lab_attribute('M', int(M))

    @property
    def d(self):
        return self.torus.d

    @property
    def L(self):
        return self.torus.L

    @property
    def h(self):
        return self.torus.L / self.M

    @property
    def cell_volume(self):
        return self.h ** self.d

    @property
    def shape(self):
        return (self.M,) * self.d

    @property
    def nodes(self):
        """ Node coordinates along one axis """
        return np.arange(self.M) * self.h

    def mesh(self):
        """ Node coordinates of every axis broadcast over the full grid """
        return np.meshgrid(*([self.nodes] * self.d), indexing='ij')


class ParticleEnsemble(LabType):

    """ ParticleEnsemble

    N particles on a torus: positions is an (N, d) array of canonical torus coordinates and
    velocities an (N, d) array. One dimensional data may be passed as flat arrays.
    """

    def set_attributes(self, torus, positions, velocities):
        positions = np.asarray(positions, dtype=float).reshape(-1, torus.d)
        velocities = np.asarray(velocities, dtype=float).reshape(-1, torus.d)
        if len(positions) < 1:
            raise ConfigError('an ensemble needs at least one particle')
        if positions.shape != velocities.shape:
            raise ConfigError('positions %s and velocities %s disagree' % (
                positions.shape, velocities.shape))
        if np.any(positions < 0) or np.any(positions >= torus.L):
            raise ConfigError('positions must lie in [0, L), wrap them first')

        self.lab_attribute('torus', torus)
        self.lab_attribute('positions', positions)
        self.lab_attribute('velocities', velocities)

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.torus.d


class FieldPair(LabType):

    """ FieldPair

    A density rho sampled at the nodes of a grid together with a d-component field j, stored with
    the component axis first: rho.shape == grid.shape and j.shape == (d,) + grid.shape.
    """

    def set_attributes(self, grid, rho, j):
        rho = np.asarray(rho, dtype=float)
        j = np.asarray(j, dtype=float).reshape((grid.d,) + grid.shape)
        if rho.shape != grid.shape:
            raise ConfigError('rho has shape %s, grid needs %s' % (rho.shape, grid.shape))

        self.lab_attribute('grid', grid)
        self.lab_attribute('rho', rho)
        self.lab_attribute('j', j)

    def mass(self):
        """ Rectangle-rule integral of rho """
        return float(self.rho.sum() * self.grid.cell_volume)

    def momentum(self):
        """ Rectangle-rule integral of each component of j """
        axes = tuple(range(1, self.grid.d + 1))
        return self.j.sum(axis=axes) * self.grid.cell_volume


class _Series(LabType):

    """ Shared validation for time indexed sequences of snapshots """

    def check_times(self, times, snapshots):
        times = np.asarray(times, dtype=float)
        if len(times) != len(snapshots):
            raise ConfigError('%d sample times for %d snapshots' % (len(times), len(snapshots)))
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise ConfigError('sample times must be strictly increasing')
        return times


class ParticleTrajectory(_Series):

    """ Particle snapshots at strictly increasing sample times """

    def set_attributes(self, times, snapshots, seed=None):
        times = self.check_times(times, snapshots)
        if len({(s.N, s.d) for s in snapshots}) > 1:
            raise ConfigError('particle count and dimension must be constant along a trajectory')
        self.lab_attribute('times', times)
        self.lab_attribute('snapshots', tuple(snapshots))
        self.lab_attribute('seed', seed)

    def velocity_series(self):
        return [snapshot.velocities for snapshot in self.snapshots]


class FieldTrajectory(_Series):

    """ FieldPair snapshots at strictly increasing sample times, all on one grid """

    def set_attributes(self, times, fields):
        times = self.check_times(times, fields)
        if len({f.grid.M for f in fields}) > 1:
            raise ConfigError('field snapshots must share one grid')
        self.lab_attribute('times', times)
        self.lab_attribute('fields', tuple(fields))

    @property
    def grid(self):
        return self.fields[0].grid


class InteractionKernel(LabType):

    """ InteractionKernel

    The communication rate a. Three forms are understood:

        parametric   a(x) = lam / (1 + |x|^2)^r
        split        a(x) = c_a + theta * g(x), g one of PROFILES
        table        a tabulated on a one dimensional grid, periodically interpolated

    The parametric form is used unless c_a or table is given.
    """

    PROFILES = ('none', 'cosine')

    def set_attributes(self, lam=50.0, r=0.5, c_a=None, theta=0.0, profile='none', table=None):
        if table is not None:
            table = np.asarray(table, dtype=float)
            if table.ndim != 1 or len(table) < 4:
                raise ConfigError('kernel tables are one dimensional with at least 4 entries')
            if np.any(table <= 0):
                raise ConfigError('kernel table must be strictly positive')
            if not np.allclose(table[1:], table[1:][::-1]):
                raise ConfigError('kernel table must be even: a[k] == a[M - k]')
        elif c_a is not None:
            if not c_a > 0 or theta < 0:
                raise ConfigError('split kernels need c_a > 0 and theta >= 0')
            if profile not in self.PROFILES:
                raise ConfigError('unknown kernel profile %r' % (profile,))
        elif not lam > 0 or r < 0:
            raise ConfigError('parametric kernels need lam > 0 and r >= 0')

        self.lab_attribute('lam', float(lam))
        self.lab_attribute('r', float(r))
        self.lab_attribute('c_a', None if c_a is None else float(c_a))
        self.lab_attribute('theta', float(theta))
        self.lab_attribute('profile', profile)
        self.lab_attribute('table', table)

    @property
    def form(self):
        if self.table is not None:
            return 'table'
        if self.c_a is not None:
            return 'split'
        return 'parametric'


class KernelSplit(LabType):

    """ a = c_a + theta * g on the nodes of a grid, with max |g| = 1 (or g == 0) """

    def set_attributes(self, grid, c_a, theta, g):
        if not c_a > 0:
            raise ConfigError('the constant part of a kernel split must be positive')
        self.lab_attribute('grid', grid)
        self.lab_attribute('c_a', float(c_a))
        self.lab_attribute('theta', float(theta))
        self.lab_attribute('g', np.asarray(g, dtype=float).reshape(grid.shape))

    @property
    def g_norm(self):
        """ L2 grid norm of g """
        return float(np.sqrt((self.g ** 2).sum() * self.grid.cell_volume))


class FlockingCondition(LabType):

    """ Outcome of the smallness condition K < c_a / (4 theta |g|) """

    def set_attributes(self, holds, margin, K, threshold):
        self.lab_attribute('holds', bool(holds))
        self.lab_attribute('margin', float(margin))
        self.lab_attribute('K', float(K))
        self.lab_attribute('threshold', float(threshold))

    def __bool__(self):
        return self.holds


class WeightField(LabType):

    """ Space-time weight of the kinetic term in the weighted one dimensional model """

    MODES = ('none', 'exponential', 'exact-frozen')

    def set_attributes(self, grid, w0, rate, mode='exponential', w_min=0.1, w_max=10.0):
        if mode not in self.MODES:
            raise ConfigError('unknown weight mode %r' % (mode,))
        if not 0 < w_min <= w_max:
            raise ConfigError('weight bounds need 0 < w_min <= w_max')
        if not rate >= 0:
            raise ConfigError('weight decay rate must be nonnegative')
        self.lab_attribute('grid', grid)
        self.lab_attribute('w0', np.asarray(w0, dtype=float).reshape(grid.shape))
        self.lab_attribute('rate', float(rate))
        self.lab_attribute('mode', mode)
        self.lab_attribute('w_min', float(w_min))
        self.lab_attribute('w_max', float(w_max))


class SolverState(LabType):

    """ SolverState

    State of a method-of-lines field solver: the fields at time t, the conserved mean velocity
    vbar (a d-vector), the kernel table on the grid, an optional weight field and the spectral
    plan used to evaluate the right-hand side. The same type serves the one dimensional and
    the d > 1 reduced models.
    """

    def set_attributes(self, fields, t, vbar, table, plan, weight=None):
        vbar = np.asarray(vbar, dtype=float).reshape(fields.grid.d)
        self.lab_attribute('fields', fields)
        self.lab_attribute('t', float(t))
        self.lab_attribute('vbar', vbar)
        self.lab_attribute('table', np.asarray(table, dtype=float))
        self.lab_attribute('plan', plan)
        self.lab_attribute('weight', weight)

    @property
    def grid(self):
        return self.fields.grid


class HydroState(SolverState):

    """ Hydrodynamic state: fields.j holds the momentum rho*u """

    def set_attributes(self, fields, t, vbar, table, plan, weight=None, rho_floor=None):
        super().set_attributes(fields, t, vbar, table, plan)
        if rho_floor is None:
            rho_floor = 1e-8 / fields.grid.L ** fields.grid.d
        self.lab_attribute('rho_floor', float(rho_floor))


class RegularizationConfig(LabType):

    """ Cell activated diffusion: threshold V, ceiling W and hat support radius in cells """

    def set_attributes(self, V, W=1.0, radius=1):
        if V < 0 or W < 0:
            raise ConfigError('regularization needs V >= 0 and W >= 0')
        if not _is_int(radius) or radius < 1:
            raise ConfigError('hat support radius must be a positive integer')
        self.lab_attribute('V', float(V))
        self.lab_attribute('W', float(W))
        self.lab_attribute('radius', int(radius))


class FlockingFit(LabType):

    """ Least squares fit of log(series) against t """

    def set_attributes(self, exponent, intercept, samples, degenerate=False):
        self.lab_attribute('exponent', float(exponent))
        self.lab_attribute('intercept', float(intercept))
        self.lab_attribute('samples', int(samples))
        self.lab_attribute('degenerate', bool(degenerate))


class EnsembleStats(LabType):

    """ Pointwise mean and unbiased variance of rho and j over realizations """

    def set_attributes(self, grid, rho_mean, rho_var, j_mean, j_var, realizations):
        self.lab_attribute('grid', grid)
        self.lab_attribute('rho_mean', rho_mean)
        self.lab_attribute('rho_var', rho_var)
        self.lab_attribute('j_mean', j_mean)
        self.lab_attribute('j_var', j_var)
        self.lab_attribute('realizations', int(realizations))


class ErrorReport(LabType):

    """ ErrorReport

    PDE versus smoothed particle errors at shared sample times. hm2_error and
    closing_residual are None when the grid is not one dimensional.
    """

    def set_attributes(self, times, l2_error, hm2_error, closing_residual, mass_drift,
                       momentum_drift, particle_drift, particle_rate, pde_rate, config):
        times = np.asarray(times, dtype=float)
        for name, series in (('l2_error', l2_error), ('hm2_error', hm2_error),
                             ('closing_residual', closing_residual)):
            if series is None:
                continue
            series = np.asarray(series, dtype=float)
            if series.shape != times.shape:
                raise ConfigError('%s does not share the sample time axis' % name)
            if not np.all(np.isfinite(series)):
                raise NumericalError('%s is not finite' % name)
            if np.any(series < 0):
                raise ConfigError('%s must be nonnegative' % name)

        self.lab_attribute('times', times)
        self.lab_attribute('l2_error', np.asarray(l2_error, dtype=float))
        self.lab_attribute(
            'hm2_error', None if hm2_error is None else np.asarray(hm2_error, dtype=float))
        self.lab_attribute(
            'closing_residual',
            None if closing_residual is None else np.asarray(closing_residual, dtype=float))
        self.lab_attribute('mass_drift', float(mass_drift))
        self.lab_attribute('momentum_drift', float(momentum_drift))
        self.lab_attribute('particle_drift', float(particle_drift))
        self.lab_attribute('particle_rate', particle_rate)
        self.lab_attribute('pde_rate', pde_rate)
        self.lab_attribute('config', config)


class FlockingReport(LabType):

    """ Kernel split, smallness condition and the observed flocking gap of one PDE run

    bound_holds tells whether gap(t)^2 <= exp(-c_a t) gap(0)^2 (1 + tolerance) at every sample.
    The particle side carries the velocity spread of the deterministic particle run next to
    its flocking bound. fourier_constant is None for d > 1.
    """

    def set_attributes(self, split, condition, times, gap, bound_holds, fit,
                       particle_spread=None, particle_bound=None, particle_bound_holds=None,
                       fourier_constant=None):
        self.lab_attribute('c_a', split.c_a)
        self.lab_attribute('theta', split.theta)
        self.lab_attribute('g_norm', split.g_norm)
        self.lab_attribute('condition', condition)
        self.lab_attribute('times', np.asarray(times, dtype=float))
        self.lab_attribute('gap', np.asarray(gap, dtype=float))
        self.lab_attribute('bound_holds', bool(bound_holds))
        self.lab_attribute('fit', fit)
        self.lab_attribute(
            'particle_spread',
            None if particle_spread is None else np.asarray(particle_spread, dtype=float))
        self.lab_attribute(
            'particle_bound',
            None if particle_bound is None else np.asarray(particle_bound, dtype=float))
        self.lab_attribute(
            'particle_bound_holds',
            None if particle_bound_holds is None else bool(particle_bound_holds))
        self.lab_attribute(
            'fourier_constant', None if fourier_constant is None else float(fourier_constant))


class BenchRecord(LabType):

    """ Median wall time of one step of each model at a particle count N """

    def set_attributes(self, N, particle_time, pde_time, repetitions):
        if repetitions < 10:
            raise ConfigError('benchmarks need at least 10 repetitions')
        self.lab_attribute('N', int(N))
        self.lab_attribute('particle_time', float(particle_time))
        self.lab_attribute('pde_time', float(pde_time))
        self.lab_attribute('repetitions', int(repetitions))


class ScenarioConfig(LabType):

    """ ScenarioConfig

    Full description of an experiment. Constructor accepts overrides for the following defaults:

        'd': 1, 'L': 40.0, 'M': 256, 'N': 1000, 't_end': 2.0, 'dt': None, 'cfl': 0.4,
        'samples': 21, 'lam': 50.0, 'r': 0.5, 'c_a': None, 'theta': 0.0, 'g_profile': 'none',
        'epsilon': 1.0, 'x_range': [-20, 20], 'v_range': [-10, 10], 'von_mises_k': 0.0,
        'weight_mode': 'none', 'weight_rate': None, 'w_min': 0.1, 'w_max': 10.0,
        'rho_min': None, 'sigma': 0.0, 'seed': 0, 'realizations': 100, 'model': 'reduced',
        'reg_v': None, 'reg_w': 1.0, 'reg_radius': 1, 'dealias': False,
        'galilean_shift': None, 'threads': 1, 'out_dir': 'results'

    Positions in x_range are user coordinates centred at the origin; they are shifted by L/2 onto
    the torus. dt None derives the step from the CFL factor. Unknown keys raise ConfigError.
    """

    DEFAULTS = {
        'd': 1,
        'L': 40.0,
        'M': 256,
        'N': 1000,
        't_end': 2.0,
        'dt': None,
        'cfl': 0.4,
        'samples': 21,
        'lam': 50.0,
        'r': 0.5,
        'c_a': None,
        'theta': 0.0,
        'g_profile': 'none',
        'epsilon': 1.0,
        'x_range': (-20.0, 20.0),
        'v_range': (-10.0, 10.0),
        'von_mises_k': 0.0,
        'weight_mode': 'none',
        'weight_rate': None,
        'w_min': 0.1,
        'w_max': 10.0,
        'rho_min': None,
        'sigma': 0.0,
        'seed': 0,
        'realizations': 100,
        'model': 'reduced',
        'reg_v': None,
        'reg_w': 1.0,
        'reg_radius': 1,
        'dealias': False,
        'galilean_shift': None,
        'threads': 1,
        'out_dir': 'results',
    }

    MODELS = ('reduced', 'hydro')

    @classmethod
    def from_json(cls, text):
        try:
            values = json.loads(text)
        except ValueError as e:
            raise ConfigError('configuration is not valid json: %s' % e)
        if not isinstance(values, dict):
            raise ConfigError('configuration must be a flat json object')
        return cls(**values)

    @classmethod
    def from_file(cls, path):
        with open(path) as f:
            return cls.from_json(f.read())

    def to_json(self):
        return json.dumps(self.as_record(), sort_keys=True)

    def set_attributes(self, **overrides):
        unknown = sorted(set(overrides) - set(self.DEFAULTS))
        if unknown:
            raise ConfigError('unknown configuration keys: %s' % ', '.join(unknown))

        options = self.DEFAULTS.copy()
        options.update(overrides)
        self._validate(options)

        for name in sorted(options):
            value = options[name]
            if name in ('x_range', 'v_range'):
                value = tuple(float(v) for v in value)
            self.lab_attribute(name, value)

    def _validate(self, o):
        def require(condition, message):
            if not condition:
                raise ConfigError(message)

        require(_is_int(o['d']) and 1 <= o['d'] <= 3, 'd must be 1, 2 or 3')
        require(_is_int(o['M']) and o['M'] >= 4, 'M must be an integer >= 4')
        require(_is_int(o['N']) and o['N'] >= 1, 'N must be a positive integer')
        for name in ('L', 't_end', 'cfl', 'epsilon'):
            require(_is_real(o[name]) and o[name] > 0, '%s must be positive' % name)
        for name in ('dt', 'rho_min'):
            require(o[name] is None or (_is_real(o[name]) and o[name] > 0),
                    '%s must be positive when given' % name)
        require(_is_int(o['samples']) and o['samples'] >= 2, 'samples must be an integer >= 2')
        for name in ('x_range', 'v_range'):
            require(_is_pair(o[name]) and o[name][0] <= o[name][1],
                    '%s must be a [low, high] pair' % name)
        require(o['x_range'][1] - o['x_range'][0] <= o['L'], 'x_range is wider than the torus')
        require(_is_real(o['von_mises_k']) and o['von_mises_k'] >= 0, 'von_mises_k must be >= 0')
        require(o['weight_mode'] in WeightField.MODES, 'unknown weight_mode %r' % o['weight_mode'])
        require(o['weight_rate'] is None or (_is_real(o['weight_rate']) and o['weight_rate'] >= 0),
                'weight_rate must be >= 0')
        require(_is_real(o['w_min']) and _is_real(o['w_max']) and 0 < o['w_min'] <= o['w_max'],
                'need 0 < w_min <= w_max')
        require(_is_real(o['sigma']) and o['sigma'] >= 0, 'sigma must be >= 0')
        require(_is_int(o['seed']) and o['seed'] >= 0, 'seed must be a nonnegative integer')
        require(_is_int(o['realizations']) and o['realizations'] >= 1,
                'realizations must be a positive integer')
        require(o['model'] in self.MODELS, 'unknown model %r' % o['model'])
        require(o['reg_v'] is None or (_is_real(o['reg_v']) and o['reg_v'] >= 0),
                'reg_v must be >= 0')
        require(_is_real(o['reg_w']) and o['reg_w'] >= 0, 'reg_w must be >= 0')
        require(_is_int(o['reg_radius']) and o['reg_radius'] >= 1, 'reg_radius must be >= 1')
        require(_is_int(o['threads']) and o['threads'] >= 1, 'threads must be >= 1')
        require(o['galilean_shift'] is None or _is_real(o['galilean_shift']),
                'galilean_shift must be a number')
        require(isinstance(o['dealias'], bool), 'dealias must be true or false')

        for name in ('lam', 'r', 'theta'):
            require(_is_real(o[name]), '%s must be a number' % name)
        require(o['c_a'] is None or _is_real(o['c_a']), 'c_a must be a number when given')
        require(isinstance(o['g_profile'], str), 'g_profile must be a name')

        InteractionKernel(lam=o['lam'], r=o['r'], c_a=o['c_a'], theta=o['theta'],
                          profile=o['g_profile'])

    @property
    def torus(self):
        return Torus(d=self.d, L=self.L)

    @property
    def grid(self):
        return GridSpec(torus=self.torus, M=self.M)

    @property
    def kernel(self):
        return InteractionKernel(
            lam=self.lam, r=self.r, c_a=self.c_a, theta=self.theta, profile=self.g_profile)

    @property
    def rho_floor(self):
        return self.rho_min if self.rho_min is not None else 1e-6 / self.L

    @property
    def weight_decay_rate(self):
        if self.weight_rate is not None:
            return self.weight_rate
        if self.c_a is not None:
            return self.c_a
        return self.lam / 2.0

    @property
    def sample_times(self):
        return np.linspace(0.0, self.t_end, self.samples)
