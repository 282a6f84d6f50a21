import numpy as np
from django.test import SimpleTestCase

from gaze2afc.sampler import (
    NoUTurnSampler,
    _DualAveraging,
    _regularized_variance,
    sample,
)


def gaussian(sd):
    sd = np.asarray(sd, dtype=float)

    def log_density(theta):
        return float(-0.5 * np.sum((theta / sd) ** 2)), -theta / sd**2

    return log_density


def standard_normal(theta):
    return float(-0.5 * np.sum(theta**2)), -theta


class TestSample(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.chains = sample(gaussian([1.0, 1.0, 1.0]), 3, chains=2, draws=1000, warmup=500, seed=4)

    def test_chain_shapes(self):
        self.assertEqual(len(self.chains), 2)
        for chain in self.chains:
            self.assertEqual(chain.draws.shape, (1000, 3))
            self.assertEqual(chain.log_density.shape, (1000,))
            self.assertGreater(chain.step_size, 0)

    def test_standard_normal_moments(self):
        draws = np.concatenate([chain.draws for chain in self.chains])
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.15)
        np.testing.assert_allclose(draws.std(axis=0), 1.0, atol=0.15)

    def test_log_density_matches_draws(self):
        chain = self.chains[0]
        np.testing.assert_allclose(chain.log_density, -0.5 * (chain.draws**2).sum(axis=1))

    def test_acceptance_near_target(self):
        accept = np.concatenate([chain.accept_stat for chain in self.chains])
        self.assertTrue(0.6 < float(accept.mean()) < 0.97)

    def test_no_divergences_on_a_gaussian(self):
        self.assertEqual(sum(int(chain.divergent.sum()) for chain in self.chains), 0)

    def test_same_seed_same_draws(self):
        first = sample(gaussian([1.0]), 1, chains=2, draws=50, warmup=50, seed=9)
        second = sample(gaussian([1.0]), 1, chains=2, draws=50, warmup=50, seed=9)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.draws, b.draws)

    def test_pooled_chains_match_serial_chains(self):
        serial = sample(standard_normal, 2, chains=3, draws=50, warmup=50, seed=9)
        pooled = sample(standard_normal, 2, chains=3, draws=50, warmup=50, seed=9, workers=2)
        self.assertEqual(len(pooled), 3)
        for a, b in zip(serial, pooled):
            np.testing.assert_array_equal(a.draws, b.draws)
            self.assertEqual(a.step_size, b.step_size)

    def test_different_seeds_differ(self):
        first = sample(gaussian([1.0]), 1, chains=1, draws=50, warmup=50, seed=1)
        second = sample(gaussian([1.0]), 1, chains=1, draws=50, warmup=50, seed=2)
        self.assertFalse(np.array_equal(first[0].draws, second[0].draws))

    def test_initial_points(self):
        chains = sample(
            gaussian([1.0, 1.0]), 2, chains=2, draws=1, warmup=0, seed=0, initial=np.zeros((2, 2))
        )
        self.assertEqual(len(chains), 2)


class TestAdaptation(SimpleTestCase):
    def test_mass_matrix_learns_the_scales(self):
        chains = sample(gaussian([1.0, 10.0]), 2, chains=1, draws=500, warmup=600, seed=3)
        inv_metric = chains[0].inv_metric
        self.assertTrue(0.4 < inv_metric[0] < 2.5)
        self.assertTrue(40 < inv_metric[1] < 250)
        self.assertAlmostEqual(float(chains[0].draws[:, 1].std()), 10.0, delta=2.0)

    def test_short_warmup_keeps_the_unit_metric(self):
        chains = sample(gaussian([1.0, 10.0]), 2, chains=1, draws=10, warmup=100, seed=3)
        np.testing.assert_array_equal(chains[0].inv_metric, [1.0, 1.0])

    def test_dual_averaging_shrinks_step_when_acceptance_is_low(self):
        adaptation = _DualAveraging(1.0, 0.8)
        steps = [adaptation.update(0.1) for _ in range(20)]
        self.assertLess(steps[-1], 1.0)

    def test_dual_averaging_grows_step_when_acceptance_is_high(self):
        adaptation = _DualAveraging(0.01, 0.8)
        steps = [adaptation.update(1.0) for _ in range(20)]
        self.assertGreater(steps[-1], 0.01)

    def test_regularized_variance_shrinks_towards_a_small_value(self):
        window = np.random.default_rng(0).normal(0.0, 2.0, size=(1000, 1))
        variance = _regularized_variance(window)
        self.assertAlmostEqual(float(variance[0]), 4.0, delta=0.5)
        self.assertLess(float(_regularized_variance(np.zeros((5, 1)))[0]), 1e-3)

    def test_non_finite_start_raises(self):
        def log_density(theta):
            return -np.inf, np.zeros_like(theta)

        sampler = NoUTurnSampler(log_density, 1, rng=np.random.default_rng(0))
        with self.assertRaises(FloatingPointError):
            sampler.run(np.zeros(1), 1, 0)
