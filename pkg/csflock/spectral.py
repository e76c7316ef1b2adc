import logging

import numpy as np
from scipy import fft

from .exceptions import GridMismatchError, UnsupportedError

log = logging.getLogger(__name__)


class SpectralPlan(object):

    """ SpectralPlan

    Periodic discrete Fourier machinery for one grid. Coefficients use the unnormalized forward
    transform F, so that

        h^d * sum(f^2) == h^d / M^d * sum(|F|^2)

    and every norm below is normalized to agree with the grid L2 norm when its Fourier weights
    are one. Wavenumbers are xi_k = 2*pi*k/L for k in {-M/2, ..., M/2 - 1} on every axis.

    A plan caches wavenumber tables and kernel transforms. It is used by one solver at a time;
    copy() returns an independent plan for another thread.

        >>> plan = SpectralPlan(grid)
        >>> smoothed = plan.convolve(kernel_table, rho)
        >>> drho = plan.gradient(rho)
    """

    KERNEL_CACHE_SIZE = 8

    def __init__(self, grid, dealias=False, workers=None):
        self.grid = grid
        self.dealias = dealias
        self.workers = workers
        self._kernel_transforms = {}

        d, M = grid.d, grid.M
        self.wavenumbers = 2 * np.pi * fft.fftfreq(M, d=grid.h)
        self.axes = tuple(range(-d, 0))

        self._xi = []
        self._ddx = []
        for axis in range(d):
            shape = [1] * d
            shape[axis] = M
            xi = self.wavenumbers.reshape(shape)
            ddx = 1j * self.wavenumbers
            if M % 2 == 0:
                ddx[M // 2] = 0.0
            self._xi.append(xi)
            self._ddx.append(ddx.reshape(shape))
        self._xi_squared = sum(xi ** 2 for xi in self._xi)

        index = np.abs(fft.fftfreq(M, d=1.0 / M))
        keep = index <= M / 3.0
        self._dealias_mask = np.ones(grid.shape, dtype=bool)
        for axis in range(d):
            shape = [1] * d
            shape[axis] = M
            self._dealias_mask = self._dealias_mask & keep.reshape(shape)

    def copy(self):
        return SpectralPlan(self.grid, dealias=self.dealias, workers=self.workers)

    def check(self, field):
        """ Raise GridMismatchError unless the trailing axes of field match the grid """
        shape = np.shape(field)
        if shape[len(shape) - self.grid.d:] != self.grid.shape or len(shape) < self.grid.d:
            raise GridMismatchError(
                'field of shape %s is not sampled on grid %s' % (shape, self.grid.shape))

    def forward(self, field):
        return fft.fftn(field, axes=self.axes, workers=self.workers)

    def inverse(self, coefficients):
        return fft.ifftn(coefficients, axes=self.axes, workers=self.workers).real

    def kernel_transform(self, table):
        """ Forward transform of a kernel table, cached for the lifetime of the table """
        key = id(table)
        cached = self._kernel_transforms.get(key)
        if cached is None or cached[0] is not table:
            self.check(table)
            if len(self._kernel_transforms) >= self.KERNEL_CACHE_SIZE:
                self._kernel_transforms.clear()
            cached = (table, self.forward(table))
            self._kernel_transforms[key] = cached
        return cached[1]

    def convolve(self, table, field):
        """ Periodic convolution (a * f)(x) = integral of a(x - y) f(y) dy on the grid """
        self.check(table)
        self.check(field)
        if np.shape(table) != self.grid.shape:
            raise GridMismatchError('kernel tables are scalar fields on the grid')
        product = self.kernel_transform(table) * self.forward(field)
        return self.grid.cell_volume * self.inverse(product)

    def product(self, f, g):
        """ Pointwise product, truncated by the 2/3 rule when the plan dealiases """
        if not self.dealias:
            return f * g
        f = self.inverse(self.forward(f) * self._dealias_mask)
        g = self.inverse(self.forward(g) * self._dealias_mask)
        return self.inverse(self.forward(f * g) * self._dealias_mask)

    def derivative(self, field, axis):
        self.check(field)
        return self.inverse(self._ddx[axis] * self.forward(field))

    def gradient(self, field):
        """ Spectral gradient of a scalar field, shape (d,) + grid.shape """
        self.check(field)
        coefficients = self.forward(field)
        return np.stack([self.inverse(ddx * coefficients) for ddx in self._ddx])

    def divergence(self, vector_field):
        """ Spectral divergence of a (d,) + grid.shape field """
        self.check(vector_field)
        coefficients = self.forward(vector_field)
        return sum(self.inverse(self._ddx[m] * coefficients[m]) for m in range(self.grid.d))

    def translate(self, field, shift):
        """ Band-limited translate: returns g with g(x) = f(x - shift) """
        self.check(field)
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (self.grid.d,))
        phase = sum(xi * s for xi, s in zip(self._xi, shift))
        return self.inverse(np.exp(-1j * phase) * self.forward(field))

    def norm_L2(self, field):
        self.check(field)
        return float(np.sqrt(self.grid.cell_volume * np.sum(np.square(field))))

    def norm_Hm2(self, field):
        self.check(field)
        coefficients = self.forward(field)
        weights = (1.0 + self._xi_squared) ** -2
        scale = self.grid.cell_volume / self.grid.M ** self.grid.d
        return float(np.sqrt(scale * np.sum(np.abs(coefficients) ** 2 * weights)))

    def coefficient_magnitudes(self, field):
        """ (|xi|, |F|/M^d) pairs for tail monitoring """
        self.check(field)
        magnitude = np.abs(self.forward(field)) / self.grid.M ** self.grid.d
        return np.sqrt(self._xi_squared).ravel(), magnitude.reshape(-1, self._xi_squared.size)


def convolve(plan, table, field):
    return plan.convolve(table, field)


def spectral_gradient(plan, field):
    return plan.gradient(field)


def norm_L2(plan, field):
    return plan.norm_L2(field)


def norm_Hm2(plan, field):
    return plan.norm_Hm2(field)


def norm_pair_Hm2(plan, u, v, vbar):
    """ sqrt(vbar^2 |u|_{H-2}^2 + |v|_{H-2}^2) for one dimensional fields """
    if plan.grid.d != 1:
        raise UnsupportedError('the H-2 pair norm is defined for one dimensional fields')
    vbar = float(np.ravel(vbar)[0])
    return float(np.sqrt(vbar ** 2 * plan.norm_Hm2(u) ** 2 + plan.norm_Hm2(v) ** 2))


def kernel_fourier_check(plan, table):
    """ Empirical constant of the kernel Fourier decay bound

    Returns the max over xi and r in {0, 1, 2} of |F[a^(r)](xi)| (1 + xi^2), where the unitary
    coefficient of the r-th spectral derivative of the table is used.
    """
    grid = plan.grid
    if grid.d != 1:
        raise UnsupportedError('the kernel Fourier check is one dimensional')
    plan.check(table)

    xi = plan.wavenumbers
    coefficients = np.abs(plan.forward(table)) * grid.h / np.sqrt(grid.L)
    weight = 1.0 + xi ** 2
    resolved = np.ones(grid.M, dtype=bool)
    if grid.M % 2 == 0:
        resolved[grid.M // 2] = False

    constant = np.max(coefficients * weight)
    for r in (1, 2):
        derived = np.abs(xi) ** r * coefficients * weight
        constant = max(constant, np.max(derived[resolved]))
    return float(constant)
