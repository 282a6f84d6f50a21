"""
information.py

Mutual information, in bits, between a binary outcome and the gaze
features (through the fitted logistic regression) or between two binary
variables (through their contingency table).
"""

import dataclasses
import enum
import logging
from collections.abc import Mapping, Sequence

import numpy as np
from scipy import special
from sklearn.metrics import mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from gaze2afc.conf import InformationSettings, SamplerSettings
from gaze2afc.exceptions import InsufficientData, OutOfRange
from gaze2afc.inference import LogisticModel, PosteriorSamples, predictive_probs, sample_posterior

logger = logging.getLogger(__name__)

_LN2 = np.log(2)


class MiMethod(enum.StrEnum):
    MODEL_PLUG_IN = "model_plug_in"
    CONTINGENCY = "contingency"


@dataclasses.dataclass(frozen=True)
class MiEstimate:
    value_bits: float
    outcome_name: str
    feature_set: tuple[str, ...]
    method: MiMethod
    n_trials: int


def binary_entropy(p):
    """Entropy in bits of a Bernoulli(p) variable, with 0·log 0 = 0.

    Raises:
        OutOfRange: p outside [0, 1].
    """

    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or not np.isfinite(p).all():
        raise OutOfRange(f"probability outside [0, 1]: {p}")
    bits = (special.entr(p) + special.entr(1 - p)) / _LN2
    return float(bits) if bits.ndim == 0 else bits


def mi_from_table(table) -> float:
    """Plug-in mutual information in bits of a joint count table."""

    table = np.asarray(table)
    if table.sum() <= 0:
        raise InsufficientData("empty contingency table")
    return float(mutual_info_score(None, None, contingency=table) / _LN2)


def mi_contingency(x, z, outcome_name: str = "x", feature_name: str = "z") -> MiEstimate:
    """Plug-in mutual information between two binary vectors."""

    x, z = np.asarray(x), np.asarray(z)
    if x.shape != z.shape:
        raise ValueError(f"length mismatch: {x.shape} and {z.shape}")
    if x.size == 0:
        raise InsufficientData("mutual information needs at least one trial")
    value = min(mi_from_table(contingency_matrix(x, z)), 1.0)
    return MiEstimate(value, outcome_name, (feature_name,), MiMethod.CONTINGENCY, int(x.size))


def _clamped(value: float, outcome_name: str) -> float:
    if value < 0:
        logger.warning("Clamped negative MI estimate %.3g for %s to 0", value, outcome_name)
        return 0.0
    return min(value, 1.0)


def mi_model(
    posterior: PosteriorSamples,
    model: LogisticModel,
    settings: InformationSettings | None = None,
    outcome_name: str = "x",
) -> MiEstimate:
    """H(x) minus the mean conditional entropy H(x | y_i) under the regression.

    In `posterior_mean` mode the per-trial probabilities are posterior
    predictive means. In `draws` mode the estimate is computed per draw
    and averaged.
    """

    settings = settings or InformationSettings()
    if model.n_trials == 0:
        raise InsufficientData("mutual information needs at least one trial")

    if settings.mode == "posterior_mean":
        theta = predictive_probs(posterior, model.features)
        value = binary_entropy(theta.mean()) - float(np.mean(binary_entropy(theta)))
    elif settings.mode == "draws":
        theta = special.expit(model.linear_predictor(posterior.draws))
        values = binary_entropy(theta.mean(axis=1)) - binary_entropy(theta).mean(axis=1)
        value = float(np.mean(values))
    else:
        raise ValueError(f"unknown MI mode {settings.mode!r}")

    return MiEstimate(
        _clamped(float(value), outcome_name),
        outcome_name,
        model.feature_names,
        MiMethod.MODEL_PLUG_IN,
        model.n_trials,
    )


@dataclasses.dataclass(frozen=True)
class MiReport:
    """The information a participant's gaze shares with each outcome."""

    participant_id: str
    gaze_decision: float
    gaze_task: float
    gaze_correct: float
    decision_task: float
    mean_correct: float
    n_trials: int

    def to_row(self) -> dict:
        return dataclasses.asdict(self)


def mi_report(
    participant_id: str,
    table,
    fits: Mapping[str, tuple[LogisticModel, PosteriorSamples]],
    settings: InformationSettings | None = None,
) -> MiReport:
    """Collect the model-based and contingency MI values of one participant.

    Args:
        participant_id (str): Participant the values belong to.
        table: The participant's feature table (decision, task and correct columns).
        fits: Model and posterior for each of "decision", "task" and "correct".
    """

    gaze = {
        outcome: mi_model(posterior, model, settings, outcome).value_bits
        for outcome, (model, posterior) in fits.items()
    }
    decision_task = mi_contingency(table["decision"], table["task"], "decision", "task")
    return MiReport(
        participant_id=participant_id,
        gaze_decision=gaze["decision"],
        gaze_task=gaze["task"],
        gaze_correct=gaze["correct"],
        decision_task=decision_task.value_bits,
        mean_correct=float(np.mean(table["correct"])),
        n_trials=len(table),
    )


def mi_permutation_null(
    model: LogisticModel,
    sampler_settings: SamplerSettings | None = None,
    settings: InformationSettings | None = None,
    n_shuffles: int = 100,
    seed: int = 0,
) -> Sequence[float]:
    """Model MI after refitting on randomly permuted outcomes."""

    sampler_settings = sampler_settings or SamplerSettings()
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(n_shuffles):
        shuffled = LogisticModel(
            rng.permutation(model.outcomes), model.features, model.feature_names, model.prior_sd
        )
        posterior = sample_posterior(shuffled, sampler_settings)
        values.append(mi_model(posterior, shuffled, settings, "shuffled").value_bits)
    return values
