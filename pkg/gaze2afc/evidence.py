"""
evidence.py

Marginal likelihood of a fitted model by bridge sampling with a
moment-matched normal proposal, and the leave-one-feature-out importance
of every gaze feature as a log odds of model evidences.

The estimator follows the iterative optimal-bridge scheme: the first half
of every chain fits the proposal, the second half enters the iteration.
"""

import dataclasses
import functools
import logging
import typing

import arviz as az
import numpy as np
from scipy import stats
from scipy.special import logsumexp

from gaze2afc.conf import EvidenceSettings, SamplerSettings
from gaze2afc.exceptions import (
    BridgeNotConverged,
    Gaze2afcError,
    InsufficientData,
    ProposalMismatch,
)
from gaze2afc.inference import LogisticModel, PosteriorSamples, log_posterior, sample_posterior
from gaze2afc.parallel import parallel_map

logger = logging.getLogger(__name__)

LogDensity = typing.Callable[[np.ndarray], "float | tuple[float, np.ndarray]"]


@dataclasses.dataclass(frozen=True)
class EvidenceEstimate:
    log_evidence: float
    rel_mse_proxy: float
    n_iterations: int
    model_tag: tuple[str, ...] = ()
    n_eff: float = float("nan")
    overlap: float = float("nan")


@dataclasses.dataclass(frozen=True)
class FeatureImportance:
    """Log odds, full model against the model without `feature_name`.

    Positive values mean the data favour keeping the feature. `error`
    holds the reason when the reduced model could not be evaluated.
    """

    feature_name: str
    log_odds: float
    error: str | None = None

    @property
    def log10_odds(self) -> float:
        return self.log_odds / np.log(10)

    def to_row(self) -> dict:
        return {
            "feature": self.feature_name,
            "log_odds": self.log_odds,
            "log10_odds": self.log10_odds,
            "error": self.error or "",
        }


def _evaluate(log_density: LogDensity, points: np.ndarray) -> np.ndarray:
    values = []
    for point in points:
        value = log_density(point)
        values.append(value[0] if isinstance(value, tuple) else value)
    values = np.asarray(values, dtype=float)
    return np.where(np.isnan(values), -np.inf, values)


def _split_halves(
    posterior: PosteriorSamples, swap: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    by_chain = posterior.by_chain()
    half = by_chain.shape[1] // 2
    if half < 2:
        raise InsufficientData("bridge sampling needs at least 4 draws per chain")
    first, second = by_chain[:, :half], by_chain[:, half:]
    if swap:
        first, second = second[:, :half], first
    fit = first.reshape(-1, by_chain.shape[2])
    iterate = second
    return fit, iterate.reshape(-1, by_chain.shape[2]), iterate


def _median_ess(iterate: np.ndarray) -> float:
    values = [float(az.ess(np.ascontiguousarray(iterate[:, :, j]))) for j in range(iterate.shape[2])]
    return float(np.median(values))


def _effective_fraction(log_weights: np.ndarray) -> float:
    log_weights = log_weights[np.isfinite(log_weights)]
    if log_weights.size == 0:
        return 0.0
    log_ess = 2 * logsumexp(log_weights) - logsumexp(2 * log_weights)
    return float(np.exp(log_ess) / len(log_weights))


def bridge_evidence(
    posterior: PosteriorSamples,
    log_density: LogDensity,
    settings: EvidenceSettings | None = None,
    *,
    seed: int = 0,
    model_tag: typing.Sequence[str] = (),
    swap_halves: bool = False,
) -> EvidenceEstimate:
    """Estimate the log marginal likelihood from posterior draws.

    Args:
        posterior (PosteriorSamples): Converged draws; at least 4 per chain.
        log_density (LogDensity): The normalised log joint density of data and
            parameters. May also return a (value, gradient) pair.
        settings (EvidenceSettings | None): Tolerance on the change of the log
            evidence, iteration limit and proposal overlap floor.
        seed (int): Seed of the proposal draws.
        swap_halves (bool): Fit the proposal on the second half of every
            chain and iterate on the first.

    Returns:
        EvidenceEstimate: The log evidence in nats and its diagnostics.

    Raises:
        ProposalMismatch: The proposal barely overlaps the posterior.
        BridgeNotConverged: No fixed point within the iteration limit.
    """

    settings = settings or EvidenceSettings()
    fit, draws, iterate = _split_halves(posterior, swap_halves)
    n_eff = _median_ess(iterate)

    mean = fit.mean(axis=0)
    cov = np.atleast_2d(np.cov(fit, rowvar=False))
    proposal = stats.multivariate_normal(mean, cov, allow_singular=False)
    rng = np.random.default_rng(seed)
    generated = proposal.rvs(size=len(draws), random_state=rng).reshape(len(draws), -1)

    q11 = _evaluate(log_density, draws)
    q12 = proposal.logpdf(draws).reshape(-1)
    q21 = _evaluate(log_density, generated)
    q22 = proposal.logpdf(generated).reshape(-1)

    l1 = q11 - q12
    l2 = q21 - q22
    overlap = _effective_fraction(l2)
    if overlap < settings.overlap_floor:
        error = ProposalMismatch(
            f"proposal effective sample fraction {overlap:.4f} below {settings.overlap_floor}"
        )
        error.add_note(f"Model {', '.join(model_tag) or '?'}")
        raise error

    n1, n2 = len(l1), len(l2)
    s1 = n_eff / (n_eff + n2)
    s2 = n2 / (n_eff + n2)
    l_star = float(np.median(l1))
    e1 = np.exp(l1 - l_star)
    e2 = np.exp(l2 - l_star)

    # Importance sampling estimate under the proposal as the starting value.
    log_evidence = float(logsumexp(l2) - np.log(n2))
    r = np.exp(log_evidence - l_star)
    for iteration in range(1, settings.max_iterations + 1):
        numerator = np.mean(e2 / (s1 * e2 + s2 * r))
        denominator = np.mean(1 / (s1 * e1 + s2 * r))
        r = numerator / denominator
        previous, log_evidence = log_evidence, float(np.log(r) + l_star)
        if abs(log_evidence - previous) < settings.tolerance:
            break
    else:
        error = BridgeNotConverged(
            f"no fixed point after {settings.max_iterations} iterations"
        )
        error.add_note(f"Last change {abs(log_evidence - previous):.3g} nats")
        raise error

    estimate = EvidenceEstimate(
        log_evidence=log_evidence,
        rel_mse_proxy=_relative_mse(q11, q12, q21, q22, log_evidence, n_eff),
        n_iterations=iteration,
        model_tag=tuple(model_tag),
        n_eff=n_eff,
        overlap=overlap,
    )
    logger.debug(
        "Log evidence %.4f after %d iterations (%d + %d draws)",
        log_evidence,
        iteration,
        n1,
        n2,
    )
    return estimate


def _relative_mse(q11, q12, q21, q22, log_evidence: float, n_eff: float) -> float:
    """First-order relative mean squared error of the bridge estimate.

    The posterior-side term uses the effective number of posterior draws.
    """

    n1, n2 = len(q11), len(q21)
    s1 = n1 / (n1 + n2)
    s2 = n2 / (n1 + n2)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        p_post, g_post = np.exp(q11 - log_evidence), np.exp(q12)
        p_prop, g_prop = np.exp(q21 - log_evidence), np.exp(q22)
        f1 = p_prop / (s1 * p_prop + s2 * g_prop)
        f2 = g_post / (s1 * p_post + s2 * g_post)
        value = np.var(f1) / (n2 * np.mean(f1) ** 2) + np.var(f2) / (
            max(n_eff, 1.0) * np.mean(f2) ** 2
        )
    return float(value)


def model_evidence(
    model: LogisticModel,
    sampler_settings: SamplerSettings | None = None,
    settings: EvidenceSettings | None = None,
) -> EvidenceEstimate:
    """Fit a logistic model and bridge-estimate its evidence."""

    sampler_settings = sampler_settings or SamplerSettings()
    posterior = sample_posterior(model, sampler_settings)
    return bridge_evidence(
        posterior,
        functools.partial(log_posterior, model=model),
        settings,
        seed=sampler_settings.seed,
        model_tag=model.feature_names,
    )


JOB_ERRORS = (Gaze2afcError, FloatingPointError, np.linalg.LinAlgError)


def _evidence_job(job) -> EvidenceEstimate | Exception:
    model, sampler_settings, settings = job
    try:
        return model_evidence(model, sampler_settings, settings)
    except JOB_ERRORS as e:
        return e


def loo_importance(
    model: LogisticModel,
    sampler_settings: SamplerSettings | None = None,
    settings: EvidenceSettings | None = None,
    workers: int = 1,
) -> list[FeatureImportance]:
    """Leave-one-feature-out log odds for every feature of the full model.

    The full model and each reduced model are fitted independently. A
    failing reduced model yields a flagged entry with NaN log odds; a
    failing full model is raised.

    Raises:
        InsufficientData: The full model has fewer than two features.
    """

    if model.n_features < 2:
        raise InsufficientData("leave-one-out importance needs at least 2 features")
    models = [model, *(model.without(name) for name in model.feature_names)]
    results = parallel_map(
        _evidence_job, [(m, sampler_settings, settings) for m in models], workers
    )

    full, *reduced = results
    if isinstance(full, Exception):
        full.add_note("While estimating the evidence of the full model")
        raise full

    importances = []
    for name, result in zip(model.feature_names, reduced):
        if isinstance(result, Exception):
            logger.warning("Model without %s failed: %s", name, result)
            importances.append(
                FeatureImportance(name, float("nan"), f"{type(result).__name__}: {result}")
            )
            continue
        importances.append(FeatureImportance(name, full.log_evidence - result.log_evidence))
    return importances
