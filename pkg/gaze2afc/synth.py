"""
synth.py

Fully synthetic sessions with known ground truth.

A session is a sequence of trials, each a fixation period at the cross
followed by a presentation of two swaying avatars and a short response
gap. During presentation the gaze leaves the cross, then rests on one
avatar after the other, jumping between them with one-frame saccades and
drifting with a speed drawn from the configured band in between. The
decision is generated from the gaze (or the gaze from the decision) by
the configured decision model. Everything is written in the exact
formats the ingest stage reads.
"""

import dataclasses
import io
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import special

from gaze2afc.conf import IngestSettings
from gaze2afc.exceptions import InvalidConfig
from gaze2afc.factories import ParticipantFactory, Participant, TrialPlan, TrialPlanFactory
from gaze2afc.features import FEATURE_NAMES
from gaze2afc.inference import LogisticModel
from gaze2afc.ingest import CORNER_LABELS, LABELS, Session, Side, load_session
from gaze2afc.kinematics import CameraGeometry, deg_to_px
from gaze2afc.parallel import parallel_map
from gaze2afc.serializers import csv_header, write_json

logger = logging.getLogger(__name__)

DECISION_MODELS = ("logistic", "last_fixation", "cascade")

# Body keypoint offsets (deg) from the pelvis; y grows downwards.
BODY_OFFSETS = {
    "head": (0.0, -5.5),
    "neck": (0.0, -4.5),
    "manubrium": (0.0, -4.0),
    "torso": (0.0, -2.0),
    "pelvis": (0.0, 0.0),
    "l_shoulder": (-1.2, -4.0),
    "r_shoulder": (1.2, -4.0),
    "l_elbow": (-1.5, -2.0),
    "r_elbow": (1.5, -2.0),
    "l_hand": (-1.6, -0.3),
    "r_hand": (1.6, -0.3),
    "l_knee": (-0.6, 3.0),
    "r_knee": (0.6, 3.0),
    "l_foot": (-0.6, 6.0),
    "r_foot": (0.6, 6.0),
}
# Height above/below the pelvis the gaze rests at on upper/lower body segments.
LOOK_HEIGHT_DEG = 2.5
# Eye tracker clock phase relative to the scene camera; keeps frame/sample pairing unambiguous.
GAZE_CLOCK_OFFSET_S = 1 / 240


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    n_trials: int = 643
    n_blocks: int = 4
    n_participants: int = 1
    trial_s: float = 3.5
    fixation_s: float = 0.75
    response_s: float = 0.5
    gaze_rate: float = 60.0
    frame_rate: float = 24.0
    avatar_separation_deg: float = 16.0
    avatar_speed_deg_s: float = 3.0
    sway_amplitude_deg: float = 1.5
    jitter_speed_deg_s: tuple[float, float] = (6.0, 8.0)
    direction_noise_rad: float = 0.8
    isi_jitter_deg: float = 0.1
    saccades: tuple[int, int] = (0, 3)
    latency_frames: tuple[int, int] = (4, 6)
    min_segment_frames: int = 6
    min_saccade_speed_deg_s: float = 100.0
    upper_probability: float = 0.6
    max_offset_px: float = 30.0
    keypoint_noise_deg: float = 0.05
    occlusion_rate: float = 0.02
    onset_lead_s: float = 0.01
    decision_model: str = "logistic"
    alpha: float = 0.0
    betas: Mapping[str, float] = dataclasses.field(default_factory=lambda: {"last_side": 2.2})
    accuracy: float = 0.75
    cascade_intercept: float = 1.5
    beta_mse: float = -1.0
    mse_log_sd: float = 0.5
    keypoint_layout: str = "long"
    seed: int = 0

    def __post_init__(self):
        positive = {
            "n_trials": self.n_trials,
            "n_blocks": self.n_blocks,
            "n_participants": self.n_participants,
            "trial_s": self.trial_s,
            "fixation_s": self.fixation_s,
            "gaze_rate": self.gaze_rate,
            "frame_rate": self.frame_rate,
            "avatar_separation_deg": self.avatar_separation_deg,
            "min_segment_frames": self.min_segment_frames,
        }
        for name, value in positive.items():
            if not value > 0:
                raise InvalidConfig(f"synth.{name} must be positive, got {value}")
        if self.response_s < 0 or self.avatar_speed_deg_s < 0:
            raise InvalidConfig("synth durations and speeds must not be negative")
        low, high = self.jitter_speed_deg_s
        if not 0 < low <= high:
            raise InvalidConfig(f"synth.jitter_speed_deg_s {self.jitter_speed_deg_s} is not a band")
        if not 0 <= self.saccades[0] <= self.saccades[1]:
            raise InvalidConfig(f"synth.saccades {self.saccades} is not a range")
        if self.decision_model not in DECISION_MODELS:
            error = InvalidConfig(f"unknown decision model {self.decision_model!r}")
            error.add_note(f"Choose one of {', '.join(DECISION_MODELS)}")
            raise error
        unknown = set(self.betas) - set(FEATURE_NAMES)
        if unknown:
            raise InvalidConfig(f"synth.betas name unknown feature(s) {', '.join(sorted(unknown))}")
        if self.gaze_rate <= self.frame_rate:
            raise InvalidConfig("the gaze rate must exceed the scene frame rate")
        if self.keypoint_layout not in ("long", "wide"):
            raise InvalidConfig(f"unknown keypoint layout {self.keypoint_layout!r}")
        for name in ("upper_probability", "accuracy", "occlusion_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidConfig(f"synth.{name} must lie in [0, 1]")
        for frames in ("trial_frames", "fixation_frames", "response_frames"):
            value = getattr(self, frames)
            if abs(value - round(value)) > 1e-9:
                raise InvalidConfig(f"synth {frames} {value} is not a whole number of frames")
        needed = self.latency_frames[1] + (self.saccades[1] + 1) * self.min_segment_frames
        if needed > self.trial_frames:
            raise InvalidConfig(
                f"{self.saccades[1]} saccades need {needed} frames, a trial has {self.trial_frames}"
            )
        # The closest the gaze comes to the cross on an avatar, moved in one frame.
        nearest = self.avatar_separation_deg / 2 - self.sway_amplitude_deg - 1.0
        if nearest * self.frame_rate <= self.min_saccade_speed_deg_s:
            raise InvalidConfig("avatars are too close for saccades above the speed threshold")
        if high >= self.min_saccade_speed_deg_s:
            raise InvalidConfig("within-segment speed must stay below the saccade threshold")

    @property
    def trial_frames(self) -> float:
        return self.trial_s * self.frame_rate

    @property
    def fixation_frames(self) -> float:
        return self.fixation_s * self.frame_rate

    @property
    def response_frames(self) -> float:
        return self.response_s * self.frame_rate

    @property
    def cycle_frames(self) -> int:
        return round(self.fixation_frames + self.trial_frames + self.response_frames)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthConfig":
        known = {field.name for field in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            error = InvalidConfig(f"unknown synth key(s) {', '.join(sorted(unknown))}")
            error.add_note(f"Known keys: {', '.join(sorted(known))}")
            raise error
        values = {
            key: tuple(value) if isinstance(value, list) else value for key, value in data.items()
        }
        return cls(**values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def ingest_settings(self) -> IngestSettings:
        return IngestSettings(
            keypoint_layout=self.keypoint_layout,
            frame_rate=self.frame_rate,
            gaze_rate=self.gaze_rate,
            trial_duration_s=self.trial_s,
            fixation_s=self.fixation_s,
        )


@dataclasses.dataclass(frozen=True)
class TrialTruth:
    trial_id: int
    block: int
    sides: tuple[int, ...]
    segment_frames: tuple[tuple[int, int], ...]
    durations: tuple[float, ...]
    n_saccades: int
    first_side: int
    last_side: int
    upper_frames: int
    lower_frames: int
    decision: int
    task: int
    p_decision: float
    mse: float

    @property
    def upper_lower_ratio(self) -> float:
        return self.upper_frames / self.lower_frames if self.lower_frames else float("inf")

    @property
    def duration_left(self) -> float:
        return sum(d for d, side in zip(self.durations, self.sides) if side == Side.LEFT)

    @property
    def duration_right(self) -> float:
        return sum(d for d, side in zip(self.durations, self.sides) if side == Side.RIGHT)

    def features(self) -> dict[str, float]:
        return {
            "duration_left": self.duration_left,
            "duration_right": self.duration_right,
            "n_saccades": self.n_saccades,
            "first_side": self.first_side,
            "last_side": self.last_side,
            "upper_lower_ratio": self.upper_lower_ratio,
        }

    def to_dict(self) -> dict:
        return dataclasses.asdict(self) | {
            "features": self.features(),
            "decision": Side(self.decision).label,
            "task": Side(self.task).label,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class SynthSession:
    """A generated participant: the three ingest tables and the ground truth."""

    participant: Participant
    config: SynthConfig
    gaze: pd.DataFrame
    keypoints: pd.DataFrame
    trials: pd.DataFrame
    truth: tuple[TrialTruth, ...]

    @property
    def participant_id(self) -> str:
        return self.participant.participant_id

    def csv_texts(self) -> dict[str, str]:
        header = csv_header(synth_seed=self.config.seed, participant=self.participant_id)
        texts = {}
        for name, table, float_format in (
            ("gaze.csv", self.gaze, "%.6f"),
            ("keypoints.csv", self.keypoints, "%.4f"),
            ("trials.csv", self.trials, "%.6f"),
        ):
            buffer = io.StringIO()
            buffer.write(header + "\n")
            table.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
            texts[name] = buffer.getvalue()
        return texts

    def truth_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "block_offsets_px": self.participant.block_offsets_px,
            "synth": self.config.to_dict(),
            "trials": [trial.to_dict() for trial in self.truth],
        }

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write gaze.csv, keypoints.csv, trials.csv and truth.json into `out_dir`."""

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.csv_texts().items():
            path = out_dir / name
            with open(path, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            paths.append(path)
        paths.append(write_json(out_dir / "truth.json", self.truth_dict()))
        return paths

    def load(self, settings: IngestSettings | None = None) -> Session:
        """Parse the generated tables through the ingest stage."""

        texts = self.csv_texts()
        return load_session(
            io.StringIO(texts["gaze.csv"]),
            io.StringIO(texts["keypoints.csv"]),
            io.StringIO(texts["trials.csv"]),
            self.participant_id,
            settings or self.config.ingest_settings(),
        )


def _sample_of_frame(frames: np.ndarray, frame_rate: float, gaze_rate: float) -> np.ndarray:
    """The gaze sample closest in time to every scene frame."""

    t = frames / frame_rate - GAZE_CLOCK_OFFSET_S
    return np.floor(t * gaze_rate + 0.5).astype(int).clip(0, None)


class _SessionBuilder:
    def __init__(self, config: SynthConfig, participant: Participant, rng: np.random.Generator):
        self.config = config
        self.participant = participant
        self.rng = rng
        self.geom = CameraGeometry()
        n_frames = config.cycle_frames * config.n_trials
        self.positions = np.zeros((n_frames, 2))
        self.keypoint_rows = []

    def _cross(self, n: int) -> np.ndarray:
        return self.rng.normal(0.0, self.config.isi_jitter_deg, size=(n, 2))

    def _segment(self, start: np.ndarray, target, n: int) -> np.ndarray:
        low, high = self.config.jitter_speed_deg_s
        points = np.empty((n, 2))
        points[0] = start
        for i in range(1, n):
            dx, dy = target[i] - points[i - 1]
            angle = np.arctan2(dy, dx) + self.rng.normal(0.0, self.config.direction_noise_rad)
            step = self.rng.uniform(low, high) / self.config.frame_rate
            points[i] = points[i - 1] + step * np.array([np.cos(angle), np.sin(angle)])
        return points

    def _keypoints(self, plan: TrialPlan, frames: np.ndarray, t: np.ndarray) -> None:
        config = self.config
        layout = plan.layout
        values = np.full((len(frames), len(LABELS), 3), np.nan)
        for slot, label in enumerate(LABELS):
            if label in CORNER_LABELS:
                x = -1 if label.endswith(("tl", "bl")) else 1
                y = -1 if label.endswith(("tl", "tr")) else 1
                point = np.array([x * 20.0, y * 12.0])
                values[:, slot, :2] = point
            else:
                side = -1 if label.startswith("L_") else 1
                dx, dy = BODY_OFFSETS[label[2:]]
                values[:, slot, 0] = layout.center_x(side, t) + dx
                values[:, slot, 1] = layout.pelvis_y_deg + dy
        values[..., :2] += self.rng.normal(0.0, config.keypoint_noise_deg, size=values[..., :2].shape)
        values[..., :2] = deg_to_px(values[..., :2], self.geom)
        likelihood = self.rng.uniform(0.95, 1.0, size=values.shape[:2])
        occluded = self.rng.uniform(size=values.shape[:2]) < config.occlusion_rate
        likelihood[occluded] = self.rng.uniform(0.1, 0.8, size=int(occluded.sum()))
        values[..., 2] = likelihood
        self.keypoint_rows.append((frames, values))

    def _decide(self, plan: TrialPlan, features: Mapping[str, float]) -> tuple[int, float]:
        config = self.config
        if config.decision_model == "last_fixation":
            return plan.last_side, 1.0
        eta = config.alpha + sum(
            beta * features[name] for name, beta in config.betas.items()
        )
        p_right = float(special.expit(eta))
        decision = 1 if self.rng.uniform() < p_right else -1
        return decision, p_right if decision == 1 else 1 - p_right

    def _cascade_plan(self, plan: TrialPlan, z_mse: float) -> tuple[TrialPlan, int, float]:
        """Choose the decision first, then make the last fixation agree with it or not."""

        config = self.config
        decision = plan.natural_side if self.rng.uniform() < config.accuracy else -plan.natural_side
        p_congruent = float(special.expit(config.cascade_intercept + config.beta_mse * z_mse))
        congruent = self.rng.uniform() < p_congruent
        last = decision if congruent else -decision
        first = last if plan.n_saccades % 2 == 0 else -last
        return dataclasses.replace(plan, first_side=first), decision, p_congruent

    def trial(self, index: int, plan: TrialPlan, z_mse: float) -> TrialTruth:
        config = self.config
        block = index * config.n_blocks // config.n_trials
        cycle_start = index * config.cycle_frames
        onset_frame = cycle_start + round(config.fixation_frames)
        n_trial = round(config.trial_frames)

        if config.decision_model == "cascade":
            plan, decision, p_decision = self._cascade_plan(plan, z_mse)

        frames = np.arange(onset_frame, onset_frame + n_trial)
        t_local = (frames - onset_frame) / config.frame_rate
        self.positions[cycle_start:onset_frame] = self._cross(onset_frame - cycle_start)
        self.positions[onset_frame + n_trial : cycle_start + config.cycle_frames] = self._cross(
            cycle_start + config.cycle_frames - onset_frame - n_trial
        )

        trial_positions = np.empty((n_trial, 2))
        trial_positions[: plan.latency_frames] = self._cross(plan.latency_frames)
        lengths = plan.segment_frames(n_trial, config.min_segment_frames)
        layout = plan.layout
        start = plan.latency_frames
        segment_frames, upper_frames, lower_frames = [], 0, 0
        for s, (side, length) in enumerate(zip(plan.sides, lengths)):
            rows = np.arange(start, start + length)
            height = -LOOK_HEIGHT_DEG if plan.upper[s] else LOOK_HEIGHT_DEG
            target = np.column_stack(
                [
                    layout.center_x(side, t_local[rows]) + plan.look_dx[s],
                    np.full(length, layout.pelvis_y_deg + height),
                ]
            )
            landing = target[0] + self.rng.normal(0.0, 0.2, size=2)
            points = self._segment(landing, target, length)
            trial_positions[rows] = points
            above = points[:, 1] < layout.pelvis_y_deg
            upper_frames += int(above.sum())
            lower_frames += int((~above).sum())
            segment_frames.append((onset_frame + start, onset_frame + start + length - 1))
            start += length
        self.positions[onset_frame : onset_frame + n_trial] = trial_positions
        self._keypoints(plan, frames, t_local)

        durations = tuple(length / config.frame_rate for length in lengths)
        truth = TrialTruth(
            trial_id=index + 1,
            block=block + 1,
            sides=plan.sides,
            segment_frames=tuple(segment_frames),
            durations=durations,
            n_saccades=plan.n_saccades,
            first_side=plan.first_side,
            last_side=plan.last_side,
            upper_frames=upper_frames,
            lower_frames=lower_frames,
            decision=0,
            task=plan.natural_side,
            p_decision=float("nan"),
            mse=plan.mse,
        )
        if config.decision_model != "cascade":
            decision, p_decision = self._decide(plan, truth.features())
        return dataclasses.replace(truth, decision=decision, p_decision=p_decision)

    def gaze_table(self, onsets_s: np.ndarray) -> pd.DataFrame:
        config = self.config
        n_frames = len(self.positions)
        frames = np.arange(n_frames)
        anchors = _sample_of_frame(frames, config.frame_rate, config.gaze_rate)
        n_samples = int(anchors[-1]) + 2
        sample_t = np.arange(n_samples) / config.gaze_rate + GAZE_CLOCK_OFFSET_S
        anchor_t = sample_t[anchors]
        x = np.interp(sample_t, anchor_t, self.positions[:, 0])
        y = np.interp(sample_t, anchor_t, self.positions[:, 1])
        pixels = deg_to_px(np.column_stack([x, y]), self.geom)

        # Block offsets apply from the start of a block's first fixation period.
        block_starts = np.array(
            [
                onsets_s[b * config.n_trials // config.n_blocks] - config.fixation_s
                for b in range(config.n_blocks)
            ]
        )
        which = (np.searchsorted(block_starts, sample_t, side="right") - 1).clip(0, None)
        offsets = np.asarray(self.participant.block_offsets_px, dtype=float)
        pixels += offsets[which]
        return pd.DataFrame(
            {
                "timestamp_s": sample_t,
                "x_px": pixels[:, 0],
                "y_px": pixels[:, 1],
                "valid": np.ones(n_samples, dtype=int),
            }
        )

    def keypoint_table(self) -> pd.DataFrame:
        frames = np.concatenate([frames for frames, _ in self.keypoint_rows])
        values = np.concatenate([values for _, values in self.keypoint_rows])
        if self.config.keypoint_layout == "wide":
            columns = {"frame": frames}
            for slot, label in enumerate(LABELS):
                columns[f"{label}_x"] = values[:, slot, 0]
                columns[f"{label}_y"] = values[:, slot, 1]
                columns[f"{label}_likelihood"] = values[:, slot, 2]
            return pd.DataFrame(columns)
        return pd.DataFrame(
            {
                "frame": np.repeat(frames, len(LABELS)),
                "label": np.tile(np.array(LABELS), len(frames)),
                "x_px": values[..., 0].reshape(-1),
                "y_px": values[..., 1].reshape(-1),
                "likelihood": values[..., 2].reshape(-1),
            }
        )


def gen_session(
    config: SynthConfig | None = None,
    participant: Participant | None = None,
    seed: int | np.random.SeedSequence | None = None,
    plan_overrides: Sequence[dict] | None = None,
) -> SynthSession:
    """Generate one participant's session and its ground truth.

    Args:
        config (SynthConfig | None): Generator settings.
        participant (Participant | None): Id and block offsets; drawn when omitted.
        seed: Overrides `config.seed` (used to give participants distinct streams).
        plan_overrides (Sequence[dict] | None): Per-trial `TrialPlanFactory.make`
            overrides, cycled over the trials (e.g. `[{"n_saccades": 2}]`).

    Raises:
        InvalidConfig: Inconsistent settings.
    """

    config = config or SynthConfig()
    seed = config.seed if seed is None else seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    streams = [
        np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, i)) for i in range(3)
    ]
    participant = participant or ParticipantFactory(
        streams[0], n_blocks=config.n_blocks, max_offset_px=config.max_offset_px
    ).make()
    if len(participant.block_offsets_px) != config.n_blocks:
        raise InvalidConfig(
            f"{len(participant.block_offsets_px)} block offsets for {config.n_blocks} blocks"
        )

    plans = TrialPlanFactory(
        streams[1],
        saccades=config.saccades,
        latency_frames=config.latency_frames,
        upper_probability=config.upper_probability,
        mse_log_sd=config.mse_log_sd,
        separation_deg=config.avatar_separation_deg,
        sway_amplitude_deg=config.sway_amplitude_deg,
        speed_deg_s=config.avatar_speed_deg_s,
    ).make_batch(config.n_trials, sequence=list(plan_overrides or []) or None)
    mse = np.array([plan.mse for plan in plans])
    z_mse = (mse - mse.mean()) / mse.std() if mse.std() > 0 else np.zeros_like(mse)

    builder = _SessionBuilder(config, participant, np.random.default_rng(streams[2]))
    truth = tuple(builder.trial(i, plan, z_mse[i]) for i, plan in enumerate(plans))

    cycle = config.cycle_frames
    onset_frames = np.arange(config.n_trials) * cycle + round(config.fixation_frames)
    onsets = onset_frames / config.frame_rate - config.onset_lead_s
    trials = pd.DataFrame(
        {
            "trial_id": [trial.trial_id for trial in truth],
            "block": [trial.block for trial in truth],
            "natural_side": [Side(trial.task).label for trial in truth],
            "response_side": [Side(trial.decision).label for trial in truth],
            "mse": mse,
            "onset_s": onsets,
            "offset_s": onsets + config.trial_s,
        }
    )
    session = SynthSession(
        participant=participant,
        config=config,
        gaze=builder.gaze_table(onsets),
        keypoints=builder.keypoint_table(),
        trials=trials,
        truth=truth,
    )
    logger.info(
        "Generated participant %s: %d trials, %s decisions",
        participant.participant_id,
        config.n_trials,
        config.decision_model,
    )
    return session


def _write_participant(job) -> list[Path]:
    config, participant, seed, out_dir = job
    session = gen_session(config, participant, seed)
    return session.write(Path(out_dir) / participant.participant_id)


def gen_sessions(config: SynthConfig, out_dir: str | Path, workers: int = 1) -> list[Path]:
    """Generate `n_participants` sessions under `<out_dir>/<participant_id>/`."""

    streams = np.random.SeedSequence(config.seed).spawn(config.n_participants + 1)
    factory = ParticipantFactory(
        streams[0], n_blocks=config.n_blocks, max_offset_px=config.max_offset_px
    )
    participants, seen = [], set()
    while len(participants) < config.n_participants:
        participant = factory.make()
        if participant.participant_id not in seen:
            seen.add(participant.participant_id)
            participants.append(participant)
    jobs = [
        (config, participant, streams[i + 1], str(out_dir))
        for i, participant in enumerate(participants)
    ]
    return [path for paths in parallel_map(_write_participant, jobs, workers) for path in paths]


@dataclasses.dataclass(frozen=True)
class LogisticTruth:
    alpha: float
    beta: np.ndarray
    probabilities: np.ndarray


def gen_logistic_data(
    n: int,
    alpha: float,
    beta: Sequence[float] | float,
    features: str = "normal",
    seed: int = 0,
    feature_names: Sequence[str] = (),
) -> tuple[LogisticModel, LogisticTruth]:
    """Draw features i.i.d. and outcomes from the logistic model at (alpha, beta).

    Args:
        features (str): "normal" (standard normal), "binary" (±1 with equal
            probability) or "uniform" (on [-1, 1]).
    """

    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    rng = np.random.default_rng(seed)
    shape = (n, len(beta))
    match features:
        case "normal":
            y = rng.standard_normal(shape)
        case "binary":
            y = rng.choice((-1.0, 1.0), size=shape)
        case "uniform":
            y = rng.uniform(-1.0, 1.0, size=shape)
        case _:
            raise ValueError(f"unknown feature distribution {features!r}")
    p = special.expit(alpha + y @ beta)
    x = (rng.uniform(size=n) < p).astype(int)
    model = LogisticModel(x, y, tuple(feature_names))
    return model, LogisticTruth(float(alpha), beta, p)
