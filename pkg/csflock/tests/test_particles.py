import math
import unittest
from unittest.mock import patch

import numpy as np

from .. import particles
from ..exceptions import ConfigError, UnsupportedError
from ..types import InteractionKernel, ParticleEnsemble, ParticleTrajectory, ScenarioConfig, Torus


class RandomStreamTests(unittest.TestCase):

    def test_same_keys_give_same_stream(self):
        first = particles.derive_rng(7, 1, 2).normal(size=5)
        second = particles.derive_rng(7, 1, 2).normal(size=5)
        np.testing.assert_array_equal(first, second)

    def test_different_keys_give_different_streams(self):
        first = particles.derive_rng(7, 1, 2).normal(size=5)
        second = particles.derive_rng(7, 2, 1).normal(size=5)
        self.assertFalse(np.array_equal(first, second))


class SamplingTests(unittest.TestCase):

    def setUp(self):
        self.config = ScenarioConfig(L=10.0, x_range=(-5, 5), v_range=(0.0, 2.0), N=200)

    def test_sample_ensemble_respects_ranges(self):
        ensemble = particles.sample_ensemble(self.config, particles.derive_rng(0, 0))
        self.assertEqual(ensemble.positions.shape, (200, 1))
        self.assertTrue(np.all((ensemble.positions >= 0) & (ensemble.positions < 10.0)))
        self.assertTrue(np.all((ensemble.velocities >= 0) & (ensemble.velocities <= 2.0)))

    def test_sample_ensemble_is_reproducible(self):
        first = particles.sample_ensemble(self.config, particles.derive_rng(0, 0))
        second = particles.sample_ensemble(self.config, particles.derive_rng(0, 0))
        self.assertEqual(first, second)

    def test_sample_ensemble_fills_every_dimension(self):
        config = self.config.replace(d=2, M=16)
        ensemble = particles.sample_ensemble(config, particles.derive_rng(0, 0))
        self.assertEqual(ensemble.velocities.shape, (200, 2))

    def test_concentrated_von_mises_positions_cluster_at_the_centre(self):
        config = self.config.replace(von_mises_k=50.0)
        ensemble = particles.sample_ensemble(config, particles.derive_rng(0, 0))
        self.assertLess(np.abs(ensemble.positions - 5.0).mean(), 1.0)

    def test_von_mises_samples_stay_in_the_half_open_box(self):
        torus = Torus(d=1, L=10.0)
        samples = particles.sample_von_mises(particles.derive_rng(0), 1000, 0.0, torus)
        self.assertTrue(np.all(np.abs(samples) <= 5.0))
        self.assertLess(abs(samples.mean()), 0.5)


class DeterministicDynamicsTests(unittest.TestCase):

    def setUp(self):
        self.torus = Torus(d=1, L=10.0)
        self.constant = InteractionKernel(lam=1.0, r=0.0)
        self.pair = ParticleEnsemble(torus=self.torus, positions=[2.0, 6.0], velocities=[0.0, 2.0])

    def test_alignment_acceleration_of_a_pair(self):
        np.testing.assert_allclose(particles.cs_rhs(self.pair, self.constant)[:, 0], [1.0, -1.0])

    def test_velocity_spread_of_a_pair(self):
        self.assertAlmostEqual(particles.velocity_spread(self.pair), math.sqrt(2))

    def test_pair_spread_decays_exponentially(self):
        times = np.array([0.0, 0.5, 1.0])
        trajectory = particles.integrate_particles(self.pair, self.constant, times, 0.01)
        spreads = [particles.velocity_spread(s) for s in trajectory.snapshots]
        np.testing.assert_allclose(spreads, math.sqrt(2) * np.exp(-times), rtol=1e-8)

    def test_fitted_rate_of_a_pair_is_the_kernel_constant(self):
        times = np.linspace(0.0, 1.0, 11)
        trajectory = particles.integrate_particles(self.pair, self.constant, times, 0.01)
        self.assertAlmostEqual(particles.flocking_rate_fit(trajectory).exponent, -1.0, places=6)

    def test_step_conserves_mean_velocity(self):
        rng = np.random.default_rng(1)
        ensemble = ParticleEnsemble(torus=self.torus, positions=rng.uniform(0, 10, 30),
                                    velocities=rng.normal(size=30))
        stepped = particles.step_cs(ensemble, InteractionKernel(lam=2.0), 0.05)
        self.assertAlmostEqual(stepped.velocities.mean(), ensemble.velocities.mean(), places=12)

    def test_step_wraps_positions(self):
        ensemble = ParticleEnsemble(torus=self.torus, positions=[9.9], velocities=[1.0])
        stepped = particles.step_cs(ensemble, self.constant, 0.2)
        self.assertAlmostEqual(stepped.positions[0, 0], 0.1)

    def test_nonpositive_step_raises_ConfigError(self):
        self.assertRaises(ConfigError, particles.step_cs, self.pair, self.constant, 0.0)

    def test_blocked_evaluation_matches_single_block(self):
        rng = np.random.default_rng(2)
        ensemble = ParticleEnsemble(torus=self.torus, positions=rng.uniform(0, 10, 40),
                                    velocities=rng.normal(size=40))
        kernel = InteractionKernel()
        expected = particles.cs_rhs(ensemble, kernel)
        with patch.object(particles, 'BLOCK_ELEMENTS', 100):
            np.testing.assert_allclose(particles.cs_rhs(ensemble, kernel), expected)

    def test_max_pairwise_distance_wraps_around(self):
        ensemble = ParticleEnsemble(torus=self.torus, positions=[1.0, 9.0, 2.0],
                                    velocities=[0.0, 0.0, 0.0])
        self.assertAlmostEqual(particles.max_pairwise_distance(ensemble), 3.0)

    def test_step_commutes_with_relabelling(self):
        rng = np.random.default_rng(3)
        ensemble = ParticleEnsemble(torus=self.torus, positions=rng.uniform(0, 10, 25),
                                    velocities=rng.normal(size=25))
        order = rng.permutation(25)
        relabelled = ParticleEnsemble(torus=self.torus, positions=ensemble.positions[order],
                                      velocities=ensemble.velocities[order])
        kernel = InteractionKernel(lam=2.0)
        stepped = particles.step_cs(ensemble, kernel, 0.05)
        stepped_relabelled = particles.step_cs(relabelled, kernel, 0.05)
        np.testing.assert_allclose(stepped_relabelled.positions, stepped.positions[order],
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(stepped_relabelled.velocities, stepped.velocities[order],
                                   rtol=1e-12, atol=1e-12)

    def test_halving_the_step_divides_the_error_by_sixteen(self):
        rng = np.random.default_rng(4)
        ensemble = ParticleEnsemble(torus=self.torus, positions=rng.uniform(0, 10, 5),
                                    velocities=rng.uniform(-1, 1, 5))
        kernel = InteractionKernel(c_a=1.0, theta=0.5, profile='cosine')
        final = [particles.integrate_particles(ensemble, kernel, [0.0, 1.0], dt).snapshots[-1]
                 for dt in (1 / 8, 1 / 16, 1 / 32)]
        coarse = np.linalg.norm(final[0].velocities - final[1].velocities)
        fine = np.linalg.norm(final[1].velocities - final[2].velocities)
        self.assertTrue(10 < coarse / fine < 24)


class StochasticDynamicsTests(unittest.TestCase):

    def setUp(self):
        self.torus = Torus(d=1, L=10.0)
        self.constant = InteractionKernel(lam=1.0, r=0.0)
        self.pair = ParticleEnsemble(torus=self.torus, positions=[2.0, 6.0], velocities=[0.0, 2.0])

    def test_euler_maruyama_step_of_a_pair(self):
        stepped = particles.step_cs_stochastic(self.pair, self.constant, 1.0, 0.1, 0.5)
        np.testing.assert_allclose(stepped.velocities[:, 0], [-0.4, 2.4])
        np.testing.assert_allclose(stepped.positions[:, 0], [2.0, 6.2])

    def test_flocked_ensemble_ignores_noise(self):
        flocked = ParticleEnsemble(torus=self.torus, positions=[2.0, 6.0], velocities=[1.0, 1.0])
        stepped = particles.step_cs_stochastic(flocked, self.constant, 1.0, 0.1, 3.0)
        np.testing.assert_allclose(stepped.velocities, flocked.velocities)

    def test_noise_is_one_dimensional(self):
        plane = Torus(d=2, L=10.0)
        ensemble = ParticleEnsemble(torus=plane, positions=[[1.0, 1.0]], velocities=[[1.0, 0.0]])
        self.assertRaises(UnsupportedError, particles.step_cs_stochastic, ensemble,
                          self.constant, 1.0, 0.1, 0.0)

    def test_negative_noise_raises_ConfigError(self):
        self.assertRaises(ConfigError, particles.step_cs_stochastic, self.pair, self.constant,
                          -1.0, 0.1, 0.0)

    def test_stochastic_run_needs_a_generator(self):
        self.assertRaises(ConfigError, particles.integrate_particles, self.pair, self.constant,
                          [0.0, 1.0], 0.1, sigma=0.5)

    def test_same_seed_reproduces_the_realization(self):
        runs = [particles.integrate_particles(
            self.pair, self.constant, [0.0, 0.5], 0.05, sigma=0.5,
            rng=particles.derive_rng(3, 0, 0, 1), seed=3) for _ in range(2)]
        self.assertEqual(runs[0], runs[1])

    def test_noise_conserves_the_given_mean_velocity(self):
        trajectory = particles.integrate_particles(
            self.pair, self.constant, [0.0, 0.5], 0.05, sigma=0.5,
            rng=particles.derive_rng(3, 0, 0, 1))
        self.assertAlmostEqual(trajectory.snapshots[-1].velocities.mean(), 1.0, places=12)


class DecayFitTests(unittest.TestCase):

    def test_fit_recovers_exponent(self):
        times = np.linspace(0.0, 2.0, 21)
        fit = particles.fit_decay_rate(times, 3.0 * np.exp(-2.0 * times))
        self.assertAlmostEqual(fit.exponent, -2.0)
        self.assertFalse(fit.degenerate)

    def test_fit_uses_the_latter_half(self):
        times = np.linspace(0.0, 2.0, 21)
        series = np.where(times < 1.0, 1.0, np.exp(-(times - 1.0)))
        self.assertAlmostEqual(particles.fit_decay_rate(times, series).exponent, -1.0)

    def test_series_below_floor_give_degenerate_fit(self):
        times = np.linspace(0.0, 1.0, 10)
        with self.assertLogs('csflock.particles', 'WARNING'):
            fit = particles.fit_decay_rate(times, np.zeros(10))
        self.assertTrue(fit.degenerate)
        self.assertEqual(fit.exponent, 0.0)

    def test_bound_starts_at_largest_deviation_from_mean_velocity(self):
        torus = Torus(d=1, L=10.0)
        ensemble = ParticleEnsemble(torus=torus, positions=[1.0, 2.0], velocities=[-3.0, 1.0])
        trajectory = ParticleTrajectory(times=[0.0, 1.0], snapshots=[ensemble, ensemble])
        bound = particles.particle_flocking_bound(trajectory, InteractionKernel(lam=1.0, r=0.0))
        np.testing.assert_allclose(bound, [math.sqrt(2) * 2.0, math.sqrt(2) * 2.0 * math.exp(-1)])
