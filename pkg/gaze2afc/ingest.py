"""
ingest.py

Parsing and validation of the three input streams (gaze, keypoints,
trials), likelihood filtering of keypoints, and alignment of the 60 Hz
gaze stream to the 24 Hz scene camera frames.

All produced structures are frozen and backed by read-only arrays, so a
session can be handed between workers without copying.
"""

import dataclasses
import enum
import logging
import typing
from collections.abc import Iterator, Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from gaze2afc.conf import IngestSettings
from gaze2afc.exceptions import (
    DuplicateLabelInFrame,
    MalformedHeader,
    MalformedRow,
    NonMonotonicTimestamp,
    NoTemporalOverlap,
    OutOfRange,
    UnknownLabel,
)
from gaze2afc.serializers import read_json, write_json

logger = logging.getLogger(__name__)

CSVSource = str | Path | typing.IO[str]

CORNER_LABELS = ("corner_tl", "corner_tr", "corner_bl", "corner_br")
BODY_LABELS = (
    "head",
    "neck",
    "manubrium",
    "torso",
    "pelvis",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_hand",
    "r_hand",
    "l_knee",
    "r_knee",
    "l_foot",
    "r_foot",
)
LABELS = CORNER_LABELS + tuple(
    f"{prefix}_{label}" for prefix in ("L", "R") for label in BODY_LABELS
)
LABEL_INDEX = {label: index for index, label in enumerate(LABELS)}

_TRUE = frozenset({"1", "true", "t", "yes", "y"})
_FALSE = frozenset({"0", "false", "f", "no", "n", ""})


class Side(enum.IntEnum):
    """A display side, encoded as -1 (left) and +1 (right)."""

    LEFT = -1
    RIGHT = 1

    @classmethod
    def parse(cls, value: "str | int | Side") -> "Side":
        if isinstance(value, Side):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        text = str(value).strip().lower()
        if text in ("left", "l", "-1"):
            return cls.LEFT
        if text in ("right", "r", "1", "+1"):
            return cls.RIGHT
        raise ValueError(f"{value!r} is not a side")

    @property
    def binary(self) -> int:
        """Right=1, Left=0, the coding of the binary outcomes."""

        return int(self is Side.RIGHT)

    @property
    def label(self) -> str:
        return "Left" if self is Side.LEFT else "Right"

    @property
    def prefix(self) -> str:
        return "L" if self is Side.LEFT else "R"

    def mirrored(self) -> "Side":
        return Side(-self.value)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True)
class GazeSample:
    timestamp: float
    x_px: float
    y_px: float
    valid: bool


@dataclasses.dataclass(frozen=True, eq=False)
class GazeStream(Sequence[GazeSample]):
    """Gaze samples of one session, column-wise.

    Invalid samples keep their row; their coordinates are NaN when the
    export left them empty. Off-screen coordinates are kept unclamped.
    """

    timestamp: np.ndarray
    x_px: np.ndarray
    y_px: np.ndarray
    valid: np.ndarray
    width_px: int = 1280
    height_px: int = 960

    def __post_init__(self):
        for field in ("timestamp", "x_px", "y_px"):
            object.__setattr__(
                self, field, _frozen(np.asarray(getattr(self, field), dtype=float))
            )
        object.__setattr__(self, "valid", _frozen(np.asarray(self.valid, dtype=bool)))

    def __len__(self) -> int:
        return len(self.timestamp)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        return GazeSample(
            float(self.timestamp[index]),
            float(self.x_px[index]),
            float(self.y_px[index]),
            bool(self.valid[index]),
        )

    @property
    def on_screen(self) -> np.ndarray:
        return (
            self.valid
            & (self.x_px >= 0)
            & (self.x_px < self.width_px)
            & (self.y_px >= 0)
            & (self.y_px < self.height_px)
        )

    def shifted(self, dx: np.ndarray, dy: np.ndarray) -> "GazeStream":
        """Return a copy with per-sample offsets subtracted from the coordinates."""

        return dataclasses.replace(self, x_px=self.x_px - dx, y_px=self.y_px - dy)


@dataclasses.dataclass(frozen=True)
class Keypoint:
    x_px: float
    y_px: float
    likelihood: float


@dataclasses.dataclass(frozen=True)
class KeypointFrame:
    frame_index: int
    timestamp: float
    keypoints: Mapping[str, Keypoint | None]

    @property
    def present(self) -> list[str]:
        return [label for label, point in self.keypoints.items() if point is not None]


@dataclasses.dataclass(frozen=True, eq=False)
class KeypointTrack(Sequence[KeypointFrame]):
    """Dense per-frame keypoints: `values[frame, label] = (x, y, likelihood)`.

    Every frame has all 34 label slots; a missing detection is a row of NaN.
    """

    frame_index: np.ndarray
    timestamp: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "frame_index", _frozen(np.asarray(self.frame_index, dtype=int))
        )
        object.__setattr__(
            self, "timestamp", _frozen(np.asarray(self.timestamp, dtype=float))
        )
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))

    def __len__(self) -> int:
        return len(self.frame_index)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        row = self.values[index]
        return KeypointFrame(
            int(self.frame_index[index]),
            float(self.timestamp[index]),
            {
                label: None
                if np.isnan(row[slot, 2])
                else Keypoint(*(float(v) for v in row[slot]))
                for slot, label in enumerate(LABELS)
            },
        )

    def coordinates(self, label: str) -> np.ndarray:
        """The (n_frames, 2) pixel coordinates of one label, NaN where missing."""

        return self.values[:, LABEL_INDEX[label], :2]


@dataclasses.dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    block: int
    natural_side: Side
    response_side: Side
    mse: float
    onset: float
    offset: float
    participant_id: str = ""

    @property
    def correct(self) -> bool:
        return self.response_side == self.natural_side

    @property
    def duration(self) -> float:
        return self.offset - self.onset


@dataclasses.dataclass(frozen=True, eq=False)
class Alignment:
    """For every scene frame, the index of the chosen gaze sample or -1 for a gap."""

    gaze_index: np.ndarray
    delta_t: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "gaze_index", _frozen(np.asarray(self.gaze_index, dtype=int))
        )
        object.__setattr__(self, "delta_t", _frozen(np.asarray(self.delta_t, dtype=float)))

    @property
    def gaps(self) -> np.ndarray:
        return self.gaze_index < 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Alignment)
            and np.array_equal(self.gaze_index, other.gaze_index)
            and np.allclose(self.delta_t, other.delta_t, equal_nan=True)
        )


@dataclasses.dataclass(frozen=True, eq=False)
class Session:
    participant_id: str
    gaze: GazeStream
    frames: KeypointTrack
    trials: tuple[TrialRecord, ...]
    aligned: Alignment

    def aligned_gaze(self, gaze: GazeStream | None = None) -> tuple[np.ndarray, ...]:
        """Per-frame (x_px, y_px, valid) of the aligned gaze samples.

        Args:
            gaze (GazeStream | None): A replacement stream (e.g. calibrated)
                with the same sample order. Defaults to the session's own.
        """

        gaze = self.gaze if gaze is None else gaze
        index = self.aligned.gaze_index
        has_sample = index >= 0
        safe = np.where(has_sample, index, 0)
        x = np.where(has_sample, gaze.x_px[safe], np.nan)
        y = np.where(has_sample, gaze.y_px[safe], np.nan)
        valid = has_sample & gaze.valid[safe] & np.isfinite(x) & np.isfinite(y)
        return x, y, valid

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "gaze": {
                "timestamp": self.gaze.timestamp,
                "x_px": self.gaze.x_px,
                "y_px": self.gaze.y_px,
                "valid": self.gaze.valid,
            },
            "frames": {
                "frame_index": self.frames.frame_index,
                "timestamp": self.frames.timestamp,
                "labels": list(LABELS),
                "values": self.frames.values,
            },
            "trials": [
                dataclasses.asdict(trial)
                | {
                    "natural_side": trial.natural_side.label,
                    "response_side": trial.response_side.label,
                }
                for trial in self.trials
            ],
            "aligned": {
                "gaze_index": self.aligned.gaze_index,
                "delta_t": self.aligned.delta_t,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Session":
        def numbers(values):
            return np.array(values, dtype=float)

        frames = data["frames"]
        if list(frames.get("labels", LABELS)) != list(LABELS):
            raise UnknownLabel("session label set does not match the 34 known labels")
        return cls(
            participant_id=data["participant_id"],
            gaze=GazeStream(
                numbers(data["gaze"]["timestamp"]),
                numbers(data["gaze"]["x_px"]),
                numbers(data["gaze"]["y_px"]),
                np.array(data["gaze"]["valid"], dtype=bool),
            ),
            frames=KeypointTrack(
                np.array(frames["frame_index"], dtype=int),
                numbers(frames["timestamp"]),
                numbers(frames["values"]).reshape(-1, len(LABELS), 3),
            ),
            trials=tuple(
                TrialRecord(
                    **trial
                    | {
                        "natural_side": Side.parse(trial["natural_side"]),
                        "response_side": Side.parse(trial["response_side"]),
                    }
                )
                for trial in data["trials"]
            ),
            aligned=Alignment(
                np.array(data["aligned"]["gaze_index"], dtype=int),
                numbers(data["aligned"]["delta_t"]),
            ),
        )


def _read_table(source: CSVSource, columns: Mapping[str, str]) -> pd.DataFrame:
    """Read a CSV as strings and rename the configured columns to canonical names."""

    table = pd.read_csv(
        source, dtype=str, keep_default_na=False, skipinitialspace=True, comment="#"
    )
    table.columns = [column.strip() for column in table.columns]
    missing = [name for name in columns.values() if name not in table.columns]
    if missing:
        error = MalformedHeader(f"missing column(s): {', '.join(missing)}")
        error.add_note(f"Header was: {', '.join(table.columns)}")
        raise error
    return table.rename(columns={v: k for k, v in columns.items()})


def _line_numbers(table: pd.DataFrame) -> np.ndarray:
    # The header is line 1.
    return table.index.to_numpy() + 2


def _numeric(
    table: pd.DataFrame, column: str, *, required: bool, name: str | None = None
) -> np.ndarray:
    raw = table[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = np.isnan(values) & ((raw != "") | required)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise MalformedRow(
            int(_line_numbers(table)[row]),
            f"{name or column} {table[column].iloc[row]!r} is not a number",
        )
    return values


def _flags(table: pd.DataFrame, column: str) -> np.ndarray:
    raw = table[column].str.strip().str.lower()
    unknown = ~raw.isin(_TRUE | _FALSE)
    if unknown.any():
        row = int(np.flatnonzero(unknown.to_numpy())[0])
        raise MalformedRow(
            int(_line_numbers(table)[row]), f"{column} {raw.iloc[row]!r} is not a flag"
        )
    return raw.isin(_TRUE).to_numpy()


def _check_monotonic(timestamps: np.ndarray, lines: np.ndarray) -> None:
    steps = np.diff(timestamps)
    if (steps <= 0).any():
        row = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise NonMonotonicTimestamp(
            int(lines[row]), float(timestamps[row - 1]), float(timestamps[row])
        )


def gaze_from_table(table: pd.DataFrame, settings: IngestSettings) -> GazeStream:
    """Validate an already-read gaze table (canonical column names)."""

    timestamp = _numeric(table, "timestamp", required=True)
    x = _numeric(table, "x", required=False)
    y = _numeric(table, "y", required=False)
    valid = _flags(table, "valid") & np.isfinite(x) & np.isfinite(y)
    _check_monotonic(timestamp, _line_numbers(table))
    gaze = GazeStream(timestamp, x, y, valid)
    logger.debug(
        "Parsed %d gaze samples (%d invalid, %d off screen)",
        len(gaze),
        int((~valid).sum()),
        int((valid & ~gaze.on_screen).sum()),
    )
    return gaze


def parse_gaze(source: CSVSource, settings: IngestSettings | None = None) -> GazeStream:
    """Parse a gaze export.

    Rows with empty coordinates are kept and flagged invalid, never dropped.

    Args:
        source (CSVSource): Path or open text stream of `gaze.csv`.
        settings (IngestSettings | None): Column mapping and rates.

    Returns:
        GazeStream: The samples in file order, which must be time order.
    """

    settings = settings or IngestSettings()
    table = _read_table(source, settings.gaze_columns)
    return gaze_from_table(table, settings)


def _dense_track(
    frames: np.ndarray, slots: np.ndarray, points: np.ndarray, settings: IngestSettings
) -> KeypointTrack:
    if len(frames) == 0:
        values = np.full((0, len(LABELS), 3), np.nan)
        return KeypointTrack(np.zeros(0, dtype=int), np.zeros(0), values)

    first, last = int(frames.min()), int(frames.max())
    frame_index = np.arange(first, last + 1)
    values = np.full((len(frame_index), len(LABELS), 3), np.nan)
    values[frames - first, slots] = points
    timestamp = settings.scene_clock_offset_s + frame_index / settings.frame_rate
    return KeypointTrack(frame_index, timestamp, values)


def _check_likelihood(likelihood: np.ndarray, lines: np.ndarray) -> None:
    bad = (likelihood < 0) | (likelihood > 1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise MalformedRow(
            int(lines[row]), f"likelihood {likelihood[row]} outside [0, 1]"
        )


def keypoints_from_table(table: pd.DataFrame, settings: IngestSettings) -> KeypointTrack:
    """Validate an already-read long-layout keypoint table (canonical column names)."""

    lines = _line_numbers(table)
    frames = _numeric(table, "frame", required=True).astype(int)
    labels = table["label"].str.strip()
    unknown = ~labels.isin(LABELS)
    if unknown.any():
        row = int(np.flatnonzero(unknown.to_numpy())[0])
        error = UnknownLabel(f"unknown keypoint label {labels.iloc[row]!r}")
        error.add_note(f"At line {lines[row]}")
        raise error

    duplicated = pd.DataFrame({"frame": frames, "label": labels.to_numpy()}).duplicated()
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0])
        error = DuplicateLabelInFrame(
            f"label {labels.iloc[row]!r} appears twice in frame {frames[row]}"
        )
        error.add_note(f"At line {lines[row]}")
        raise error

    x = _numeric(table, "x", required=False)
    y = _numeric(table, "y", required=False)
    likelihood = _numeric(table, "likelihood", required=False)
    _check_likelihood(np.nan_to_num(likelihood, nan=0.0), lines)

    present = np.isfinite(x) & np.isfinite(y) & np.isfinite(likelihood)
    slots = labels.map(LABEL_INDEX).to_numpy(dtype=int)
    points = np.column_stack([x, y, likelihood])
    return _dense_track(frames[present], slots[present], points[present], settings)


def _wide_to_long(table: pd.DataFrame, settings: IngestSettings) -> pd.DataFrame:
    frame_column = settings.keypoint_columns["frame"]
    if frame_column not in table.columns:
        raise MalformedHeader(f"missing column: {frame_column}")
    unknown = sorted(
        {
            column.rsplit("_", 1)[0]
            for column in table.columns
            if column != frame_column
            and column.rsplit("_", 1)[0] not in LABEL_INDEX
        }
    )
    if unknown:
        raise UnknownLabel(f"unknown keypoint label(s) {', '.join(unknown)}")
    if table[frame_column].duplicated().any():
        frame = table[frame_column][table[frame_column].duplicated()].iloc[0]
        raise DuplicateLabelInFrame(f"frame {frame} appears on more than one row")

    rows = []
    for label in LABELS:
        columns = [f"{label}_{part}" for part in ("x", "y", "likelihood")]
        if not all(column in table.columns for column in columns):
            continue
        part = table[[frame_column, *columns]].copy()
        part.columns = ["frame", "x", "y", "likelihood"]
        part["label"] = label
        rows.append(part)
    if not rows:
        return pd.DataFrame(columns=["frame", "label", "x", "y", "likelihood"], dtype=str)
    return pd.concat(rows).sort_index(kind="stable")


def parse_keypoints(
    source: CSVSource, settings: IngestSettings | None = None
) -> KeypointTrack:
    """Parse per-frame keypoint detections.

    The long layout has one row per (frame, label); the wide layout one row
    per frame with `<label>_x`, `<label>_y`, `<label>_likelihood` columns.
    Frames are indexed densely between the first and last frame seen;
    labels without a detection are missing.

    Raises:
        UnknownLabel: A label outside the 34 known labels.
        DuplicateLabelInFrame: The same label twice in one frame.
    """

    settings = settings or IngestSettings()
    if settings.keypoint_layout == "wide":
        table = pd.read_csv(source, dtype=str, keep_default_na=False, comment="#")
        table = _wide_to_long(table, settings)
    else:
        table = _read_table(source, settings.keypoint_columns)
    return keypoints_from_table(table, settings)


def filter_keypoints(frames: KeypointTrack, p_cutoff: float = 0.9) -> KeypointTrack:
    """Mark keypoints with likelihood <= p_cutoff as missing."""

    if not 0 <= p_cutoff <= 1:
        raise OutOfRange(f"p_cutoff {p_cutoff} outside [0, 1]")
    values = np.array(frames.values)
    rejected = values[..., 2] <= p_cutoff
    values[rejected] = np.nan
    logger.debug("Rejected %d keypoints at p_cutoff=%s", int(rejected.sum()), p_cutoff)
    return dataclasses.replace(frames, values=values)


def trials_from_table(
    table: pd.DataFrame, participant_id: str, settings: IngestSettings
) -> tuple[TrialRecord, ...]:
    lines = _line_numbers(table)
    trial_ids = _numeric(table, "trial_id", required=True).astype(int)
    blocks = _numeric(table, "block", required=True).astype(int)
    mse = _numeric(table, "mse", required=True)
    onset = _numeric(table, "onset", required=True) + settings.trial_clock_offset_s
    offset = _numeric(table, "offset", required=True) + settings.trial_clock_offset_s

    trials = []
    for row, line in enumerate(lines):
        try:
            natural = Side.parse(table["natural_side"].iloc[row])
            response = Side.parse(table["response_side"].iloc[row])
        except ValueError as e:
            raise MalformedRow(int(line), str(e)) from e
        if mse[row] < 0:
            raise MalformedRow(int(line), f"mse {mse[row]} is negative")
        duration = offset[row] - onset[row]
        if abs(duration - settings.trial_duration_s) > settings.trial_duration_tolerance_s:
            raise MalformedRow(
                int(line),
                f"trial lasts {duration:.3f} s, expected "
                f"{settings.trial_duration_s} ± {settings.trial_duration_tolerance_s} s",
            )
        trials.append(
            TrialRecord(
                trial_id=int(trial_ids[row]),
                block=int(blocks[row]),
                natural_side=natural,
                response_side=response,
                mse=float(mse[row]),
                onset=float(onset[row]),
                offset=float(offset[row]),
                participant_id=participant_id,
            )
        )
    return tuple(sorted(trials, key=lambda trial: trial.onset))


def parse_trials(
    source: CSVSource, participant_id: str = "", settings: IngestSettings | None = None
) -> tuple[TrialRecord, ...]:
    """Parse the trial log, applying the configured trial clock offset."""

    settings = settings or IngestSettings()
    table = _read_table(source, settings.trial_columns)
    return trials_from_table(table, participant_id, settings)


def align_streams(
    gaze: GazeStream, frames: KeypointTrack, max_gap_s: float | None = None
) -> Alignment:
    """Pick, for every scene frame, the gaze sample closest in time.

    Ties go to the earlier sample. A frame whose closest sample is further
    away than `max_gap_s` (default: one 24 Hz frame period) gets a gap.

    Raises:
        NoTemporalOverlap: The two streams do not overlap in time.
    """

    if len(gaze) == 0 or len(frames) == 0:
        raise NoTemporalOverlap("both streams must be non-empty")
    if max_gap_s is None:
        max_gap_s = 1 / 24
    t_gaze, t_frame = gaze.timestamp, frames.timestamp
    if t_gaze[-1] < t_frame[0] - max_gap_s or t_frame[-1] < t_gaze[0] - max_gap_s:
        error = NoTemporalOverlap("gaze and scene frames do not overlap in time")
        error.add_note(
            f"gaze spans [{t_gaze[0]:.3f}, {t_gaze[-1]:.3f}] s, "
            f"frames span [{t_frame[0]:.3f}, {t_frame[-1]:.3f}] s"
        )
        raise error

    after = np.searchsorted(t_gaze, t_frame, side="left").clip(0, len(t_gaze) - 1)
    before = (after - 1).clip(0, None)
    d_before = np.abs(t_frame - t_gaze[before])
    d_after = np.abs(t_gaze[after] - t_frame)
    take_before = d_before <= d_after + 1e-9
    index = np.where(take_before, before, after)
    delta = t_frame - t_gaze[index]
    gap = np.abs(delta) > max_gap_s
    index = np.where(gap, -1, index)
    delta = np.where(gap, np.nan, delta)
    logger.debug("Aligned %d frames, %d gaps", len(index), int(gap.sum()))
    return Alignment(index, delta)


def load_session(
    gaze: CSVSource,
    keypoints: CSVSource,
    trials: CSVSource,
    participant_id: str,
    settings: IngestSettings | None = None,
) -> Session:
    """Parse, filter and align one participant's recordings."""

    settings = settings or IngestSettings()
    gaze_stream = parse_gaze(gaze, settings)
    frames = filter_keypoints(parse_keypoints(keypoints, settings), settings.p_cutoff)
    trial_records = parse_trials(trials, participant_id, settings)
    return assemble_session(participant_id, gaze_stream, frames, trial_records, settings)


def assemble_session(
    participant_id: str,
    gaze: GazeStream,
    frames: KeypointTrack,
    trials: Sequence[TrialRecord],
    settings: IngestSettings,
) -> Session:
    aligned = align_streams(gaze, frames, max_gap_s=1 / settings.frame_rate)
    logger.info(
        "Session %s: %d gaze samples, %d frames, %d trials",
        participant_id,
        len(gaze),
        len(frames),
        len(trials),
    )
    return Session(participant_id, gaze, frames, tuple(trials), aligned)


def iter_trial_frames(session: Session) -> Iterator[tuple[TrialRecord, np.ndarray]]:
    """Yield each trial with the indices of the frames inside its window."""

    times = session.frames.timestamp
    for trial in session.trials:
        start = np.searchsorted(times, trial.onset, side="left")
        stop = np.searchsorted(times, trial.offset, side="left")
        yield trial, np.arange(start, stop)


def session_to_json(session: Session, path: str | Path, provenance: dict | None = None) -> Path:
    """Write a session as JSON; arrays become lists and missing values null."""

    return write_json(path, session.to_dict(), provenance)


def session_from_json(path: str | Path) -> Session:
    """Read a session written by `session_to_json`; nulls become NaN."""

    return Session.from_dict(read_json(path))
