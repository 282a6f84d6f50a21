import functools
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import special, stats

from gaze2afc.conf import EvidenceSettings, SamplerSettings
from gaze2afc import evidence
from gaze2afc.evidence import (
    FeatureImportance,
    bridge_evidence,
    loo_importance,
    model_evidence,
)
from gaze2afc.exceptions import BridgeNotConverged, InsufficientData, ProposalMismatch
from gaze2afc.inference import LogisticModel, PosteriorSamples, log_posterior, sample_posterior
from gaze2afc.synth import gen_logistic_data

FAST = SamplerSettings(chains=2, draws=1000, warmup=500, seed=3, check_convergence=False)

BETA_BERNOULLI_LOG_EVIDENCE = -7.18539

# Monte Carlo slack on a log odds that should not be positive.
MC_TOLERANCE = 0.25


def exact_posterior(draws: np.ndarray, chains: int = 4) -> PosteriorSamples:
    draws = np.asarray(draws, dtype=float).reshape(len(draws), -1)
    per_chain = len(draws) // chains
    return PosteriorSamples(
        draws,
        np.repeat(np.arange(chains), per_chain),
        np.zeros(len(draws)),
        tuple(f"theta_{j}" for j in range(draws.shape[1])),
    )


def bernoulli_logit_density(phi):
    """3 ones and 7 zeros under a uniform prior on the rate, on the logit scale."""

    phi = float(np.asarray(phi).reshape(-1)[0])
    return -4 * np.logaddexp(0, -phi) - 8 * np.logaddexp(0, phi)


def bernoulli_posterior(seed: int, n: int = 4000) -> PosteriorSamples:
    rate = stats.beta(4, 8).rvs(size=n, random_state=np.random.default_rng(seed))
    return exact_posterior(special.logit(rate))


def gaussian_problem(seed: int, n_obs: int = 10):
    rng = np.random.default_rng(seed)
    y = rng.normal(0.7, 1.0, size=n_obs)

    def log_density(theta):
        theta = float(np.asarray(theta).reshape(-1)[0])
        return float(stats.norm.logpdf(y, theta, 1.0).sum() + stats.norm.logpdf(theta))

    mean, sd = y.sum() / (n_obs + 1), np.sqrt(1 / (n_obs + 1))
    posterior = exact_posterior(rng.normal(mean, sd, size=4000))
    exact = stats.multivariate_normal(np.zeros(n_obs), np.eye(n_obs) + 1).logpdf(y)
    return posterior, log_density, float(exact)


def quadrature_log_evidence(model: LogisticModel, half_width: float = 6.0, n: int = 241) -> float:
    grid = np.linspace(-half_width, half_width, n)
    step = grid[1] - grid[0]
    alpha, beta = np.meshgrid(grid, grid, indexing="ij")
    eta = alpha[..., None] + beta[..., None] * model.features[:, 0]
    x = model.outcomes
    log_p = -np.sum(x * np.logaddexp(0, -eta) + (1 - x) * np.logaddexp(0, eta), axis=-1)
    log_p += stats.norm.logpdf(alpha) + stats.norm.logpdf(beta)
    return float(special.logsumexp(log_p) + 2 * np.log(step))


class TestBridgeEvidence(SimpleTestCase):
    def test_beta_bernoulli_evidence(self):
        for seed in range(3):
            estimate = bridge_evidence(bernoulli_posterior(seed), bernoulli_logit_density, seed=seed)
            self.assertAlmostEqual(estimate.log_evidence, BETA_BERNOULLI_LOG_EVIDENCE, delta=0.05)

    def test_analytic_value(self):
        self.assertAlmostEqual(float(special.betaln(4, 8)), BETA_BERNOULLI_LOG_EVIDENCE, places=5)

    def test_conjugate_gaussian_evidence(self):
        for seed in range(3):
            posterior, log_density, exact = gaussian_problem(seed)
            estimate = bridge_evidence(posterior, log_density, seed=seed)
            self.assertAlmostEqual(estimate.log_evidence, exact, delta=0.05)

    def test_diagnostics(self):
        posterior, log_density, _ = gaussian_problem(0)
        estimate = bridge_evidence(posterior, log_density, model_tag=("theta",))
        self.assertGreater(estimate.n_iterations, 0)
        self.assertTrue(np.isfinite(estimate.rel_mse_proxy))
        self.assertGreater(estimate.n_eff, 1000)
        self.assertTrue(0 < estimate.overlap <= 1)
        self.assertEqual(estimate.model_tag, ("theta",))

    def test_same_seed_same_estimate(self):
        posterior, log_density, _ = gaussian_problem(1)
        first = bridge_evidence(posterior, log_density, seed=4)
        second = bridge_evidence(posterior, log_density, seed=4)
        self.assertEqual(first.log_evidence, second.log_evidence)

    def test_density_with_gradient_is_accepted(self):
        model = LogisticModel([0, 1, 1], [[-1.0], [0.5], [1.0]])
        draws = np.random.default_rng(0).normal(0.0, 0.8, size=(4000, 2))
        estimate = bridge_evidence(exact_posterior(draws), functools.partial(log_posterior, model=model))
        self.assertTrue(np.isfinite(estimate.log_evidence))

    def test_too_few_draws_raise(self):
        with self.assertRaises(InsufficientData):
            bridge_evidence(exact_posterior(np.zeros(12)), bernoulli_logit_density)

    def test_poor_overlap_raises(self):
        with self.assertRaises(ProposalMismatch):
            bridge_evidence(
                bernoulli_posterior(0), bernoulli_logit_density, EvidenceSettings(overlap_floor=1.1)
            )

    def test_iteration_limit_raises(self):
        with self.assertRaises(BridgeNotConverged):
            bridge_evidence(
                bernoulli_posterior(0),
                bernoulli_logit_density,
                EvidenceSettings(tolerance=0.0, max_iterations=1),
            )


class TestModelEvidence(SimpleTestCase):
    def test_prior_only_model_has_unit_evidence(self):
        model = LogisticModel(np.zeros(0), np.zeros((0, 1)))
        self.assertAlmostEqual(model_evidence(model, FAST).log_evidence, 0.0, delta=0.05)

    def test_logistic_evidence_matches_quadrature(self):
        model, _ = gen_logistic_data(30, 0.2, [1.0], seed=2)
        estimate = model_evidence(model, FAST)
        self.assertAlmostEqual(estimate.log_evidence, quadrature_log_evidence(model), delta=0.05)

    @tag("slow")
    def test_extra_noise_feature_lowers_the_expected_evidence(self):
        small, big = [], []
        for seed in range(20):
            model, _ = gen_logistic_data(
                100, 0.0, [1.0, 0.0], seed=seed, feature_names=("last_side", "noise")
            )
            settings = SamplerSettings(
                chains=2, draws=500, warmup=300, seed=seed, check_convergence=False
            )
            big.append(model_evidence(model, settings).log_evidence)
            small.append(model_evidence(model.without("noise"), settings).log_evidence)
        self.assertGreaterEqual(np.mean(small), np.mean(big))

    @tag("slow")
    def test_swapping_the_halves_barely_moves_the_estimate(self):
        model, _ = gen_logistic_data(100, 0.2, [1.0], seed=2)
        posterior = sample_posterior(model, FAST)
        density = functools.partial(log_posterior, model=model)
        forward = bridge_evidence(posterior, density, seed=1)
        swapped = bridge_evidence(posterior, density, seed=1, swap_halves=True)
        self.assertLess(abs(forward.log_evidence - swapped.log_evidence), 0.1)

    @tag("slow")
    def test_doubling_the_draws_stays_within_the_error(self):
        for seed in range(5):
            single = bridge_evidence(bernoulli_posterior(seed, 4000), bernoulli_logit_density, seed=seed)
            double = bridge_evidence(bernoulli_posterior(seed, 8000), bernoulli_logit_density, seed=seed)
            error = np.sqrt(single.rel_mse_proxy + double.rel_mse_proxy)
            self.assertLessEqual(abs(single.log_evidence - double.log_evidence), 3 * error)


class TestLooImportance(SimpleTestCase):
    def test_single_feature_model_raises(self):
        model, _ = gen_logistic_data(30, 0.0, [1.0], seed=0)
        with self.assertRaises(InsufficientData):
            loo_importance(model, FAST)

    def test_failing_full_model_raises(self):
        model, _ = gen_logistic_data(30, 0.0, [1.0, 0.0], seed=0)
        settings = SamplerSettings(chains=1, draws=100, warmup=100, check_convergence=False)
        with self.assertRaises(ProposalMismatch) as context:
            loo_importance(model, settings, EvidenceSettings(overlap_floor=1.1))
        self.assertIn("While estimating the evidence of the full model", context.exception.__notes__)

    def test_numeric_failure_in_a_reduced_model_is_flagged(self):
        model, _ = gen_logistic_data(40, 0.0, [1.0, 0.0], seed=1, feature_names=("last_side", "noise"))
        settings = SamplerSettings(chains=2, draws=400, warmup=200, seed=1, check_convergence=False)
        fit = evidence.model_evidence

        def overflow_without_noise(m, *args):
            if m.feature_names == ("last_side",):
                raise FloatingPointError("overflow encountered in exp")
            return fit(m, *args)

        with mock.patch.object(evidence, "model_evidence", side_effect=overflow_without_noise):
            importance = {item.feature_name: item for item in loo_importance(model, settings)}
        self.assertTrue(np.isnan(importance["noise"].log_odds))
        self.assertEqual(importance["noise"].error, "FloatingPointError: overflow encountered in exp")
        self.assertIsNone(importance["last_side"].error)
        self.assertTrue(np.isfinite(importance["last_side"].log_odds))

    def test_singular_full_model_raises(self):
        model, _ = gen_logistic_data(40, 0.0, [1.0, 0.0], seed=1, feature_names=("last_side", "noise"))
        singular = np.linalg.LinAlgError("singular matrix")
        with mock.patch.object(evidence, "model_evidence", side_effect=singular):
            with self.assertRaises(np.linalg.LinAlgError) as context:
                loo_importance(model, FAST)
        self.assertIn("While estimating the evidence of the full model", context.exception.__notes__)

    @tag("slow")
    def test_pure_noise_features_are_never_favoured(self):
        model, _ = gen_logistic_data(
            1000, 0.0, [0.0, 0.0, 0.0], seed=7, feature_names=("noise_a", "noise_b", "noise_c")
        )
        for item in loo_importance(model, FAST):
            self.assertIsNone(item.error)
            self.assertLessEqual(item.log_odds, MC_TOLERANCE, item.feature_name)

    def test_log10_odds(self):
        item = FeatureImportance("last_side", np.log(100.0))
        self.assertAlmostEqual(item.log10_odds, 2.0)
        self.assertEqual(item.to_row()["error"], "")

    @tag("slow")
    def test_last_fixation_is_the_most_important_feature(self):
        model, _ = gen_logistic_data(
            300,
            0.0,
            [2.2, 0.0, 0.0],
            features="binary",
            seed=5,
            feature_names=("last_side", "noise_a", "noise_b"),
        )
        importance = {item.feature_name: item.log_odds for item in loo_importance(model, FAST)}
        self.assertEqual(max(importance, key=importance.get), "last_side")
        self.assertGreater(importance["last_side"], 10.0)
        self.assertLessEqual(importance["noise_a"], MC_TOLERANCE)
        self.assertLessEqual(importance["noise_b"], MC_TOLERANCE)

    @tag("slow")
    def test_duplicated_feature_is_redundant(self):
        base, _ = gen_logistic_data(200, 0.0, [1.5], seed=6)
        features = np.column_stack([base.features[:, 0], base.features[:, 0]])
        model = LogisticModel(base.outcomes, features, ("copy_a", "copy_b"))
        for item in loo_importance(model, FAST):
            self.assertLess(abs(item.log_odds), 1.5)
            self.assertIsNone(item.error)

    @tag("slow")
    def test_bridge_is_accurate_across_seeds(self):
        for seed in range(20):
            estimate = bridge_evidence(bernoulli_posterior(seed), bernoulli_logit_density, seed=seed)
            self.assertAlmostEqual(estimate.log_evidence, BETA_BERNOULLI_LOG_EVIDENCE, delta=0.05)
            posterior, log_density, exact = gaussian_problem(seed)
            self.assertAlmostEqual(bridge_evidence(posterior, log_density, seed=seed).log_evidence, exact, delta=0.05)
