"""
features.py

Reduction of a trial's gaze segments to the six gaze features, the
binary outcome variables, and the standardised design matrices the
regressions are fitted on.
"""

import dataclasses
import logging
from collections.abc import Mapping, Sequence

import numpy as np
import pandas as pd

from gaze2afc.conf import FeatureSettings
from gaze2afc.exceptions import InsufficientData, NoSegments, ZeroVariance
from gaze2afc.inference import LogisticModel
from gaze2afc.ingest import Side, TrialRecord
from gaze2afc.kinematics import AvatarTracks, GazeSegment, TrialSegmentation

logger = logging.getLogger(__name__)

FEATURE_NAMES = (
    "duration_left",
    "duration_right",
    "n_saccades",
    "first_side",
    "last_side",
    "upper_lower_ratio",
)
BINARY_FEATURES = ("first_side", "last_side")
OUTCOMES = ("decision", "task", "correct")


@dataclasses.dataclass(frozen=True)
class TrialFeatures:
    trial_id: int
    duration_left: float
    duration_right: float
    n_saccades: int
    first_side: Side
    last_side: Side
    upper_lower_ratio: float
    ratio_capped: bool = False

    def as_row(self) -> dict:
        return dataclasses.asdict(self) | {
            "first_side": int(self.first_side),
            "last_side": int(self.last_side),
        }

    def mirrored(self) -> "TrialFeatures":
        return dataclasses.replace(
            self,
            duration_left=self.duration_right,
            duration_right=self.duration_left,
            first_side=self.first_side.mirrored(),
            last_side=self.last_side.mirrored(),
        )


@dataclasses.dataclass(frozen=True)
class OutcomeVector:
    decision: int
    task: int
    correct: int

    @classmethod
    def from_trial(cls, trial: TrialRecord) -> "OutcomeVector":
        return cls(
            decision=trial.response_side.binary,
            task=trial.natural_side.binary,
            correct=int(trial.correct),
        )


def congruence(last_side: Side | int, decision: Side | int) -> int:
    """1 when the last fixated side is the chosen side.

    `decision` may be a Side or the binary outcome coding (Right=1).
    """

    last = Side.parse(last_side)
    if not isinstance(decision, Side):
        decision = Side.RIGHT if int(decision) == 1 else Side.LEFT
    return int(last is decision)


def _interpolate(values: np.ndarray) -> np.ndarray:
    present = np.isfinite(values)
    if present.all() or not present.any():
        return values
    index = np.arange(len(values))
    return np.interp(index, index[present], values[present])


def _body_boundary(tracks: AvatarTracks | None, side: Side, n_frames: int) -> np.ndarray:
    """Per-frame pelvis height of one avatar, interpolated over missing frames."""

    if tracks is None:
        return np.zeros(n_frames)
    boundary = _interpolate(np.asarray(tracks.pelvis_y[side], dtype=float))
    if not np.isfinite(boundary).any():
        boundary = _interpolate(np.asarray(tracks.centroid_y[side], dtype=float))
    if not np.isfinite(boundary).any():
        boundary = np.zeros(n_frames)
    return boundary


def extract_features(
    segments: Sequence[GazeSegment],
    trial: TrialRecord,
    tracks: AvatarTracks | None = None,
    *,
    first_frame: int = 0,
    ratio_cap: float | None = None,
) -> TrialFeatures:
    """Compute the six gaze features of one trial.

    Args:
        segments: The trial's gaze segments in time order.
        trial (TrialRecord): The trial the segments belong to.
        tracks (AvatarTracks | None): Avatar tracks over the trial window,
            indexed from `first_frame`. Gaze above the gazed avatar's pelvis
            counts as upper body.
        ratio_cap (float | None): Replacement for an infinite upper/lower
            ratio. Without one the ratio stays infinite and is flagged, to
            be capped across the session by `cap_ratios`.

    Raises:
        NoSegments: The trial has no gaze segment.
    """

    if not segments:
        error = NoSegments(f"trial {trial.trial_id} has no gaze segments")
        error.add_note(f"Participant {trial.participant_id or '?'}")
        raise error

    durations = {Side.LEFT: 0.0, Side.RIGHT: 0.0}
    upper = lower = 0
    n_frames = max(segment.end_frame for segment in segments) - first_frame + 1
    if tracks is not None:
        n_frames = max(n_frames, len(tracks.midline_x))
    for segment in segments:
        durations[segment.side] += segment.duration
        rows = np.arange(segment.start_frame, segment.end_frame + 1) - first_frame
        boundary = _body_boundary(tracks, segment.side, n_frames)[rows]
        gaze_y = segment.trajectory[:, 2]
        above = gaze_y < boundary
        upper += int(above.sum())
        lower += int((~above).sum())

    n_saccades = sum(
        1 for before, after in zip(segments, segments[1:]) if before.side != after.side
    )
    if lower == 0:
        ratio, capped = (np.inf if ratio_cap is None else ratio_cap), True
    else:
        ratio, capped = upper / lower, False

    return TrialFeatures(
        trial_id=trial.trial_id,
        duration_left=durations[Side.LEFT],
        duration_right=durations[Side.RIGHT],
        n_saccades=n_saccades,
        first_side=segments[0].side,
        last_side=segments[-1].side,
        upper_lower_ratio=float(ratio),
        ratio_capped=capped,
    )


def feature_table(
    features: Sequence[TrialFeatures], trials: Sequence[TrialRecord]
) -> pd.DataFrame:
    """One row per trial: the six features, the outcomes, congruence and MSE."""

    by_id = {trial.trial_id: trial for trial in trials}
    rows = []
    for trial_features in features:
        trial = by_id[trial_features.trial_id]
        outcomes = OutcomeVector.from_trial(trial)
        rows.append(
            {"participant_id": trial.participant_id}
            | trial_features.as_row()
            | dataclasses.asdict(outcomes)
            | {
                "congruence": congruence(trial_features.last_side, trial.response_side),
                "mse": trial.mse,
            }
        )
    columns = [
        "participant_id",
        "trial_id",
        *FEATURE_NAMES,
        "ratio_capped",
        *OUTCOMES,
        "congruence",
        "mse",
    ]
    return pd.DataFrame(rows, columns=columns)


def cap_ratios(table: pd.DataFrame, percentile: float = 99.0) -> pd.DataFrame:
    """Replace infinite upper/lower ratios by a percentile of the finite ones."""

    table = table.copy()
    ratios = table["upper_lower_ratio"].to_numpy(dtype=float)
    infinite = np.isinf(ratios)
    if not infinite.any():
        return table
    finite = ratios[np.isfinite(ratios)]
    cap = float(np.percentile(finite, percentile)) if finite.size else 1.0
    table.loc[infinite, "upper_lower_ratio"] = cap
    table.loc[infinite, "ratio_capped"] = True
    logger.info("Capped %d upper/lower ratios at %.4g", int(infinite.sum()), cap)
    return table


def session_features(
    segmentations: Sequence[TrialSegmentation],
    trials: Sequence[TrialRecord],
    settings: FeatureSettings | None = None,
) -> tuple[pd.DataFrame, list[int]]:
    """Feature table of a whole session.

    Trials without segments (total tracking loss) are excluded listwise.

    Returns:
        tuple[pd.DataFrame, list[int]]: The table and the excluded trial ids.
    """

    settings = settings or FeatureSettings()
    by_id = {trial.trial_id: trial for trial in trials}
    features, excluded = [], []
    for segmentation in segmentations:
        trial = by_id[segmentation.trial_id]
        try:
            features.append(
                extract_features(
                    segmentation.segments,
                    trial,
                    segmentation.tracks,
                    first_frame=segmentation.first_frame,
                )
            )
        except NoSegments:
            excluded.append(trial.trial_id)
    if excluded:
        logger.warning(
            "Excluded %d trial(s) without gaze segments: %s",
            len(excluded),
            ", ".join(map(str, excluded)),
        )
    table = cap_ratios(feature_table(features, trials), settings.ratio_cap_percentile)
    return table, excluded


@dataclasses.dataclass(frozen=True)
class ScalingRecord:
    """How a design matrix was standardised, for back-transformation."""

    columns: tuple[str, ...]
    center: Mapping[str, float]
    scale: Mapping[str, float]
    binary: tuple[str, ...] = ()
    dropped: tuple[str, ...] = ()

    def apply(self, table: pd.DataFrame) -> pd.DataFrame:
        return pd.DataFrame(
            {
                column: (table[column].to_numpy(dtype=float) - self.center[column])
                / self.scale[column]
                for column in self.columns
            },
            index=table.index,
        )

    def back_transform(self, alpha, beta) -> tuple[np.ndarray, np.ndarray]:
        """Map intercept and slopes fitted on standardised columns to original units.

        Accepts single parameter vectors or stacks of draws (beta shaped (..., J)).
        """

        beta = np.asarray(beta, dtype=float)
        center = np.array([self.center[column] for column in self.columns])
        scale = np.array([self.scale[column] for column in self.columns])
        original_beta = beta / scale
        original_alpha = np.asarray(alpha, dtype=float) - (original_beta * center).sum(
            axis=-1
        )
        return original_alpha, original_beta

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _is_binary(values: np.ndarray) -> bool:
    return bool(np.isin(values, (-1.0, 1.0)).all())


def standardize(
    matrix: pd.DataFrame, *, strict: bool = False
) -> tuple[pd.DataFrame, ScalingRecord]:
    """Scale continuous columns to zero mean and unit variance.

    Binary ±1 columns are left as they are. A constant column is dropped
    with a warning, or raises when `strict`.

    Raises:
        InsufficientData: Fewer than two rows.
        ZeroVariance: A constant column, in strict mode.
    """

    if len(matrix) < 2:
        raise InsufficientData(f"need at least 2 trials to standardize, got {len(matrix)}")
    values = matrix.to_numpy(dtype=float)
    if not np.isfinite(values).all():
        raise ValueError("standardize needs finite values")

    columns, center, scale, binary, dropped = [], {}, {}, [], []
    for column in matrix.columns:
        data = matrix[column].to_numpy(dtype=float)
        sd = float(data.std())
        if sd == 0 or np.isclose(sd, 0, atol=1e-12):
            if strict:
                raise ZeroVariance(f"feature {column!r} is constant")
            logger.warning("Dropping constant feature %r", column)
            dropped.append(column)
            continue
        columns.append(column)
        if _is_binary(data):
            binary.append(column)
            center[column], scale[column] = 0.0, 1.0
        else:
            center[column], scale[column] = float(data.mean()), sd

    record = ScalingRecord(tuple(columns), center, scale, tuple(binary), tuple(dropped))
    return record.apply(matrix), record


def design_matrix(
    table: pd.DataFrame,
    feature_names: Sequence[str] = FEATURE_NAMES,
    settings: FeatureSettings | None = None,
) -> tuple[pd.DataFrame, ScalingRecord]:
    """Select, transform and standardise the gaze features of a feature table."""

    settings = settings or FeatureSettings()
    matrix = table[list(feature_names)].astype(float)
    if settings.log_ratio and "upper_lower_ratio" in matrix:
        matrix["upper_lower_ratio"] = np.log1p(matrix["upper_lower_ratio"])
    return standardize(matrix)


def build_model(
    table: pd.DataFrame,
    outcome: str,
    feature_names: Sequence[str] = FEATURE_NAMES,
    settings: FeatureSettings | None = None,
) -> tuple[LogisticModel, ScalingRecord]:
    """Logistic regression data for one outcome of one participant."""

    if outcome not in table:
        raise KeyError(f"no outcome column {outcome!r}")
    matrix, record = design_matrix(table, feature_names, settings)
    model = LogisticModel(
        outcomes=table[outcome].to_numpy(dtype=int),
        features=matrix.to_numpy(dtype=float),
        feature_names=record.columns,
    )
    return model, record
