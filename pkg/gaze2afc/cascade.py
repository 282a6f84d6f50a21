"""
cascade.py

Gaze cascade test: does the last fixation agree with the decision more
often on easy trials than on hard ones? Congruence is regressed on the
standardised MSE difficulty covariate and the posterior mass of a negative
slope is reported per participant.
"""

import dataclasses
import enum
from collections.abc import Sequence

import numpy as np
import pandas as pd

from gaze2afc.conf import CascadeSettings, SamplerSettings
from gaze2afc.exceptions import InsufficientData
from gaze2afc.features import standardize
from gaze2afc.inference import LogisticModel, sample_posterior


class CascadeClass(enum.StrEnum):
    PRESENT = "effect present"
    ABSENT = "effect absent"
    INCONCLUSIVE = "inconclusive"


@dataclasses.dataclass(frozen=True)
class CascadeResult:
    participant_id: str
    p_cascade: float
    alpha_mean: float = float("nan")
    alpha_sd: float = float("nan")
    beta_mse_mean: float = float("nan")
    beta_mse_sd: float = float("nan")
    n_trials: int = 0

    def __post_init__(self):
        if not 0 <= self.p_cascade <= 1:
            raise ValueError(f"p_cascade {self.p_cascade} outside [0, 1]")

    @classmethod
    def from_draws(cls, participant_id: str, draws: np.ndarray, n_trials: int = 0):
        """Summarise (alpha, beta_mse) draws of shape (S, 2)."""

        draws = np.asarray(draws, dtype=float)
        return cls(
            participant_id=participant_id,
            p_cascade=float(np.mean(draws[:, 1] < 0)),
            alpha_mean=float(draws[:, 0].mean()),
            alpha_sd=float(draws[:, 0].std(ddof=1)) if len(draws) > 1 else 0.0,
            beta_mse_mean=float(draws[:, 1].mean()),
            beta_mse_sd=float(draws[:, 1].std(ddof=1)) if len(draws) > 1 else 0.0,
            n_trials=n_trials,
        )


def cascade_test(
    congruence,
    mse,
    sampler_settings: SamplerSettings | None = None,
    participant_id: str = "",
) -> CascadeResult:
    """Fit congruence ~ standardised MSE and report p(beta_MSE < 0).

    Raises:
        InsufficientData: No trials, or too few to standardise the covariate.
    """

    congruence = np.asarray(congruence, dtype=int)
    mse = np.asarray(mse, dtype=float)
    if congruence.size == 0:
        raise InsufficientData("the cascade test needs at least one trial")
    if congruence.shape != mse.shape:
        raise ValueError(f"length mismatch: {congruence.shape} and {mse.shape}")

    z, _ = standardize(pd.DataFrame({"mse": mse}), strict=True)
    model = LogisticModel(congruence, z.to_numpy(), ("mse",))
    posterior = sample_posterior(model, sampler_settings)
    return CascadeResult.from_draws(participant_id, posterior.draws, model.n_trials)


def classify(p_cascade: float, settings: CascadeSettings | None = None) -> CascadeClass:
    settings = settings or CascadeSettings()
    if p_cascade > settings.effect_threshold:
        return CascadeClass.PRESENT
    if p_cascade < settings.absent_threshold:
        return CascadeClass.ABSENT
    return CascadeClass.INCONCLUSIVE


def cascade_report(
    results: Sequence[CascadeResult], settings: CascadeSettings | None = None
) -> pd.DataFrame:
    """One row per participant: p(gaze cascade) to 4 decimals and its class."""

    if not results:
        raise InsufficientData("no cascade results to report")
    return pd.DataFrame(
        [
            {
                "participant": result.participant_id,
                "p_gaze_cascade": round(result.p_cascade, 4),
                "classification": str(classify(result.p_cascade, settings)),
            }
            for result in results
        ],
        columns=["participant", "p_gaze_cascade", "classification"],
    )
