"""
inference.py

Bayesian logistic regression of a binary outcome on gaze features with
standard normal priors on the intercept and every slope.
"""

import dataclasses
import functools
import logging
from collections.abc import Mapping, Sequence

import arviz as az
import numpy as np
from scipy import optimize, special, stats

from gaze2afc import sampler
from gaze2afc.conf import SamplerSettings
from gaze2afc.exceptions import (
    DivergenceRateTooHigh,
    InsufficientData,
    NonFiniteInput,
    NotConverged,
)

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2 * np.pi)


@dataclasses.dataclass(frozen=True, eq=False)
class LogisticModel:
    """Outcomes x (N,) in {0, 1} regressed on features y (N, J)."""

    outcomes: np.ndarray
    features: np.ndarray
    feature_names: tuple[str, ...] = ()
    prior_sd: float = 1.0

    def __post_init__(self):
        outcomes = np.asarray(self.outcomes, dtype=float).reshape(-1)
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.shape[0] != outcomes.shape[0]:
            raise ValueError(
                f"{outcomes.shape[0]} outcomes but {features.shape[0]} feature rows"
            )
        if not np.isin(outcomes, (0.0, 1.0)).all():
            raise ValueError("outcomes must be 0 or 1")
        if not np.isfinite(features).all():
            raise NonFiniteInput("features contain missing or infinite values")
        names = tuple(self.feature_names) or tuple(
            f"feature_{j}" for j in range(features.shape[1])
        )
        if len(names) != features.shape[1]:
            raise ValueError(f"{len(names)} names for {features.shape[1]} features")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_trials(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def param_names(self) -> tuple[str, ...]:
        return ("alpha", *self.feature_names)

    def without(self, name: str) -> "LogisticModel":
        """The same data with one feature left out."""

        keep = [j for j, feature in enumerate(self.feature_names) if feature != name]
        if len(keep) == self.n_features:
            raise KeyError(f"no feature {name!r}")
        return LogisticModel(
            self.outcomes,
            self.features[:, keep],
            tuple(self.feature_names[j] for j in keep),
            self.prior_sd,
        )

    def flipped(self) -> "LogisticModel":
        return LogisticModel(1 - self.outcomes, -self.features, self.feature_names, self.prior_sd)

    def linear_predictor(self, params: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        return params[..., :1] + params[..., 1:] @ self.features.T


def log_posterior(params, model: LogisticModel) -> tuple[float, np.ndarray]:
    """Log joint density of data and parameters, with its gradient.

    The normal prior is normalised, so the value integrates to the model
    evidence; this is what bridge sampling needs.

    Args:
        params: (alpha, beta_1, ..., beta_J).
        model (LogisticModel): The data.

    Returns:
        tuple[float, np.ndarray]: The log density and its gradient.

    Raises:
        NonFiniteInput: Parameters are not all finite.
    """

    params = np.asarray(params, dtype=float)
    if params.shape != (model.n_features + 1,):
        raise ValueError(f"expected {model.n_features + 1} parameters, got {params.shape}")
    if not np.isfinite(params).all():
        raise NonFiniteInput(f"non-finite parameters {params}")

    eta = model.linear_predictor(params)
    x = model.outcomes
    # log σ(η) = -softplus(-η), log(1 - σ(η)) = -softplus(η)
    loglik = -np.sum(x * np.logaddexp(0, -eta) + (1 - x) * np.logaddexp(0, eta))
    variance = model.prior_sd**2
    logprior = -0.5 * np.sum(params**2) / variance - 0.5 * len(params) * (
        _LOG_2PI + np.log(variance)
    )

    residual = x - special.expit(eta)
    grad = np.empty_like(params)
    grad[0] = residual.sum()
    grad[1:] = model.features.T @ residual
    grad -= params / variance
    return float(loglik + logprior), grad


def _guarded_log_posterior(params, model: LogisticModel) -> tuple[float, np.ndarray]:
    try:
        return log_posterior(params, model)
    except NonFiniteInput:
        return -np.inf, np.zeros(model.n_features + 1)


def _density(model: LogisticModel):
    return functools.partial(_guarded_log_posterior, model=model)


@dataclasses.dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Post-warm-up draws of (alpha, beta), chains stacked in order.

    Attributes:
        - draws (np.ndarray): (S, J+1) draws.
        - chain (np.ndarray): (S,) chain index of every draw.
        - log_posterior (np.ndarray): (S,) log joint density at every draw.
        - param_names (tuple[str, ...]): "alpha" then the feature names.
        - rhat, ess (Mapping[str, float]): Rank-normalised split R-hat and bulk ESS.
    """

    draws: np.ndarray
    chain: np.ndarray
    log_posterior: np.ndarray
    param_names: tuple[str, ...]
    rhat: Mapping[str, float] = dataclasses.field(default_factory=dict)
    ess: Mapping[str, float] = dataclasses.field(default_factory=dict)
    n_divergent: int = 0
    step_size: tuple[float, ...] = ()

    @property
    def n_chains(self) -> int:
        return int(self.chain.max()) + 1 if len(self.chain) else 0

    @property
    def alpha(self) -> np.ndarray:
        return self.draws[:, 0]

    @property
    def beta(self) -> np.ndarray:
        return self.draws[:, 1:]

    def by_chain(self, values: np.ndarray | None = None) -> np.ndarray:
        """Reshape draws (or any per-draw values) to (chain, draw, ...)."""

        values = self.draws if values is None else np.asarray(values)
        return values.reshape(self.n_chains, -1, *values.shape[1:])

    def param(self, name: str) -> np.ndarray:
        return self.draws[:, self.param_names.index(name)]

    def to_dict(self) -> dict:
        return {
            "param_names": list(self.param_names),
            "draws": self.draws.tolist(),
            "chain": self.chain.tolist(),
            "log_posterior": self.log_posterior.tolist(),
            "rhat": dict(self.rhat),
            "ess": dict(self.ess),
            "n_divergent": self.n_divergent,
            "step_size": list(self.step_size),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PosteriorSamples":
        return cls(
            draws=np.asarray(data["draws"], dtype=float),
            chain=np.asarray(data["chain"], dtype=int),
            log_posterior=np.asarray(data["log_posterior"], dtype=float),
            param_names=tuple(data["param_names"]),
            rhat=dict(data.get("rhat", {})),
            ess=dict(data.get("ess", {})),
            n_divergent=int(data.get("n_divergent", 0)),
            step_size=tuple(data.get("step_size", ())),
        )


def diagnostics(by_chain: np.ndarray, names: Sequence[str]) -> tuple[dict, dict]:
    """Rank split R-hat and bulk ESS per parameter of (chain, draw, param) draws."""

    rhat, ess = {}, {}
    for j, name in enumerate(names):
        values = np.ascontiguousarray(by_chain[:, :, j])
        rhat[name] = float(az.rhat(values))
        ess[name] = float(az.ess(values))
    return rhat, ess


def check_convergence(samples: PosteriorSamples, settings: SamplerSettings) -> None:
    """Raise when the draws fail the divergence or R-hat/ESS gates."""

    n_draws = len(samples.draws)
    if n_draws and samples.n_divergent / n_draws > settings.max_divergence_rate:
        raise DivergenceRateTooHigh(
            f"{samples.n_divergent} of {n_draws} transitions diverged"
        )
    if not settings.check_convergence:
        return
    failing = [
        name
        for name in samples.param_names
        if not samples.rhat[name] < settings.max_rhat or not samples.ess[name] > settings.min_ess
    ]
    if failing:
        error = NotConverged(f"parameters {', '.join(failing)} failed the R-hat/ESS gate")
        for name in failing:
            error.add_note(f"{name}: R-hat {samples.rhat[name]:.4f}, ESS {samples.ess[name]:.0f}")
        raise error


def sample_posterior(
    model: LogisticModel, settings: SamplerSettings | None = None
) -> PosteriorSamples:
    """Draw from the posterior of (alpha, beta) with the No-U-Turn sampler.

    Args:
        model (LogisticModel): The data. With no trials the posterior is the prior.
        settings (SamplerSettings | None): Chains, draws, warm-up, seed and gates.

    Returns:
        PosteriorSamples: The merged post-warm-up draws of every chain.

    Raises:
        InsufficientData: Fewer trials than parameters (but more than none).
        DivergenceRateTooHigh: Too many divergent transitions.
        NotConverged: R-hat or ESS outside the configured gates.
    """

    settings = settings or SamplerSettings()
    dim = model.n_features + 1
    if 0 < model.n_trials < dim:
        raise InsufficientData(f"{model.n_trials} trials for {dim} parameters")

    chains = sampler.sample(
        _density(model),
        dim,
        chains=settings.chains,
        draws=settings.draws,
        warmup=settings.warmup,
        seed=settings.seed,
        target_accept=settings.target_accept,
        max_tree_depth=settings.max_tree_depth,
        workers=settings.chain_workers,
    )
    draws = np.concatenate([chain.draws for chain in chains])
    rhat, ess = diagnostics(np.stack([chain.draws for chain in chains]), model.param_names)
    samples = PosteriorSamples(
        draws=draws,
        chain=np.repeat(np.arange(len(chains)), settings.draws),
        log_posterior=np.concatenate([chain.log_density for chain in chains]),
        param_names=model.param_names,
        rhat=rhat,
        ess=ess,
        n_divergent=int(sum(chain.divergent.sum() for chain in chains)),
        step_size=tuple(chain.step_size for chain in chains),
    )
    logger.info(
        "Sampled %d draws of %s (max R-hat %.4f, min ESS %.0f)",
        len(draws),
        ", ".join(model.param_names),
        max(rhat.values()),
        min(ess.values()),
    )
    check_convergence(samples, settings)
    return samples


def predictive_probs(samples: PosteriorSamples | np.ndarray, features) -> np.ndarray:
    """Posterior mean of the logistic success probability for every feature row."""

    draws = samples.draws if isinstance(samples, PosteriorSamples) else np.atleast_2d(samples)
    features = np.atleast_2d(np.asarray(features, dtype=float))
    eta = draws[:, :1] + draws[:, 1:] @ features.T
    return special.expit(eta).mean(axis=0)


def predictive_prob(samples: PosteriorSamples | np.ndarray, row) -> float:
    return float(predictive_probs(samples, np.asarray(row, dtype=float).reshape(1, -1))[0])


@dataclasses.dataclass(frozen=True)
class NormalFit:
    name: str
    mean: float
    sd: float
    grid: np.ndarray = dataclasses.field(repr=False, default_factory=lambda: np.empty(0))
    density: np.ndarray = dataclasses.field(repr=False, default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        return {"name": self.name, "mean": self.mean, "sd": self.sd}


def posterior_normal_fit(samples: PosteriorSamples, n_grid: int = 200) -> list[NormalFit]:
    """Moment-matched normal per marginal, with its density on a plotting grid."""

    fits = []
    for j, name in enumerate(samples.param_names):
        values = samples.draws[:, j]
        mean, sd = float(values.mean()), float(values.std(ddof=1))
        grid = np.linspace(
            min(values.min(), mean - 4 * sd), max(values.max(), mean + 4 * sd), n_grid
        )
        fits.append(NormalFit(name, mean, sd, grid, stats.norm.pdf(grid, mean, sd)))
    return fits


def prior_posterior_kl(fit: NormalFit, prior_sd: float = 1.0) -> float:
    """KL divergence in bits of the fitted normal from the N(0, prior_sd²) prior."""

    ratio = (fit.sd / prior_sd) ** 2
    nats = 0.5 * (ratio + (fit.mean / prior_sd) ** 2 - 1 - np.log(ratio))
    return float(nats / np.log(2))


def find_map(model: LogisticModel, include_prior: bool = True) -> np.ndarray:
    """Posterior mode, or the maximum likelihood estimate without the prior."""

    def objective(params):
        value, grad = log_posterior(params, model)
        if not include_prior:
            value += 0.5 * np.sum(params**2) / model.prior_sd**2
            grad = grad + params / model.prior_sd**2
        return -value, -grad

    result = optimize.minimize(
        objective, np.zeros(model.n_features + 1), jac=True, method="L-BFGS-B"
    )
    if not result.success:
        logger.warning("MAP optimisation stopped early: %s", result.message)
    return result.x
