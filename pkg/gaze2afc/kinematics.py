"""
kinematics.py

Pixel to visual-angle conversion, block-wise post-calibration against the
fixation cross, angular gaze speed, velocity-threshold saccade detection
and segmentation of each trial's gaze into per-avatar episodes.
"""

import dataclasses
import logging
from collections.abc import Sequence

import numpy as np
from scipy.stats import gaussian_kde

from gaze2afc.conf import IngestSettings, KinematicsSettings
from gaze2afc.exceptions import EmptyTrialWindow, NoIsiData, TooFewSamples
from gaze2afc.ingest import (
    BODY_LABELS,
    CORNER_LABELS,
    LABEL_INDEX,
    GazeStream,
    KeypointTrack,
    Session,
    Side,
    iter_trial_frames,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class CameraGeometry:
    width_px: int = 1280
    height_px: int = 960
    fov_h_deg: float = 60.0
    fov_v_deg: float = 46.0

    def __post_init__(self):
        if min(self.width_px, self.height_px, self.fov_h_deg, self.fov_v_deg) <= 0:
            raise ValueError("camera geometry must be positive")

    @classmethod
    def from_settings(cls, settings: KinematicsSettings) -> "CameraGeometry":
        return cls(
            settings.width_px, settings.height_px, settings.fov_h_deg, settings.fov_v_deg
        )

    @property
    def center(self) -> tuple[float, float]:
        return self.width_px / 2, self.height_px / 2

    @property
    def deg_per_px(self) -> np.ndarray:
        return np.array([self.fov_h_deg / self.width_px, self.fov_v_deg / self.height_px])


def px_to_deg(point, geom: CameraGeometry = CameraGeometry()) -> np.ndarray:
    """Map pixel coordinates (..., 2) to degrees relative to the image center.

    The mapping is linear with one degrees-per-pixel scale per axis.
    """

    return (np.asarray(point, dtype=float) - geom.center) * geom.deg_per_px


def deg_to_px(point, geom: CameraGeometry = CameraGeometry()) -> np.ndarray:
    return np.asarray(point, dtype=float) / geom.deg_per_px + geom.center


@dataclasses.dataclass(frozen=True)
class CalibrationOffset:
    block: int
    dx_px: float
    dy_px: float
    n_samples: int = 0
    applied: bool = False

    def magnitude_deg(self, geom: CameraGeometry = CameraGeometry()) -> float:
        return float(np.hypot(*(np.array([self.dx_px, self.dy_px]) * geom.deg_per_px)))


def _isi_mask(session: Session, block: int, fixation_s: float) -> np.ndarray:
    t = session.gaze.timestamp
    mask = np.zeros(len(t), dtype=bool)
    for trial in session.trials:
        if trial.block == block:
            mask |= (t >= trial.onset - fixation_s) & (t < trial.onset)
    return mask & session.gaze.valid


def block_offset(
    session: Session, block: int, fixation_cross_px, fixation_s: float = 0.75
) -> CalibrationOffset:
    """The median inter-stimulus gaze of a block minus the fixation cross.

    Raises:
        NoIsiData: The block has no valid gaze during any fixation period.
    """

    mask = _isi_mask(session, block, fixation_s)
    if not mask.any():
        raise NoIsiData(f"block {block} has no valid gaze during fixation periods")
    cross_x, cross_y = fixation_cross_px
    return CalibrationOffset(
        block=block,
        dx_px=float(np.median(session.gaze.x_px[mask]) - cross_x),
        dy_px=float(np.median(session.gaze.y_px[mask]) - cross_y),
        n_samples=int(mask.sum()),
    )


def _block_of_samples(session: Session, fixation_s: float) -> tuple[list[int], np.ndarray]:
    """Assign every gaze sample to the block whose first fixation period precedes it."""

    starts: dict[int, float] = {}
    for trial in session.trials:
        starts[trial.block] = min(starts.get(trial.block, np.inf), trial.onset - fixation_s)
    blocks = sorted(starts, key=lambda block: starts[block])
    boundaries = np.array([starts[block] for block in blocks])
    which = np.searchsorted(boundaries, session.gaze.timestamp, side="right") - 1
    return blocks, which.clip(0, None)


def post_calibrate(
    session: Session,
    fixation_cross_px=(640.0, 480.0),
    settings: KinematicsSettings | None = None,
    fixation_s: float = 0.75,
) -> tuple[Session, list[CalibrationOffset]]:
    """Remove block-wise gaze offsets measured during fixation periods.

    An offset is only applied when its magnitude exceeds the calibration
    gate (degrees). Blocks without fixation data pass through uncalibrated.

    Returns:
        tuple[Session, list[CalibrationOffset]]: The calibrated session and one offset per block.
    """

    settings = settings or KinematicsSettings()
    geom = CameraGeometry.from_settings(settings)
    if not session.trials:
        return session, []

    blocks, which = _block_of_samples(session, fixation_s)
    dx = np.zeros(len(session.gaze))
    dy = np.zeros(len(session.gaze))
    offsets = []
    for position, block in enumerate(blocks):
        try:
            offset = block_offset(session, block, fixation_cross_px, fixation_s)
        except NoIsiData as e:
            logger.warning("Skipping calibration of block %s: %s", block, e)
            offsets.append(CalibrationOffset(block, np.nan, np.nan))
            continue

        if offset.magnitude_deg(geom) > settings.calibration_gate_deg:
            in_block = which == position
            dx[in_block] = offset.dx_px
            dy[in_block] = offset.dy_px
            offset = dataclasses.replace(offset, applied=True)
            logger.info(
                "Block %s: removed offset (%.2f, %.2f) px from %d samples",
                block,
                offset.dx_px,
                offset.dy_px,
                int(in_block.sum()),
            )
        offsets.append(offset)

    calibrated = dataclasses.replace(session, gaze=session.gaze.shifted(dx, dy))
    return calibrated, offsets


def gaze_speed(trajectory, frame_rate: float = 24.0) -> np.ndarray:
    """Angular speed (deg/s) between consecutive samples of a trajectory.

    Args:
        trajectory: An (n, 2) array of angular positions; missing samples are NaN.
        frame_rate (float): Samples per second.

    Returns:
        np.ndarray: n - 1 speeds; a speed touching a missing sample is NaN.
    """

    points = np.asarray(trajectory, dtype=float)
    if points.ndim != 2 or len(points) < 2:
        raise TooFewSamples(f"need at least 2 samples, got {len(points)}")
    return np.hypot(*np.diff(points[:, :2], axis=0).T) * frame_rate


@dataclasses.dataclass(frozen=True)
class SaccadeEvent:
    """A run of above-threshold speeds; `start` and `end` index the speed array."""

    start: int
    end: int
    peak_speed: float

    @property
    def interior_frames(self) -> range:
        return range(self.start + 1, self.end + 1)


def detect_saccades(speeds, threshold_deg_s: float = 100.0) -> list[SaccadeEvent]:
    """Turn maximal runs of speed above the threshold into saccade events."""

    speeds = np.asarray(speeds, dtype=float)
    above = np.nan_to_num(speeds, nan=-np.inf) > threshold_deg_s
    edges = np.diff(np.concatenate([[False], above, [False]]).astype(int))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return [
        SaccadeEvent(int(start), int(end), float(speeds[start : end + 1].max()))
        for start, end in zip(starts, ends)
    ]


@dataclasses.dataclass(frozen=True, eq=False)
class AvatarTracks:
    """Per-frame avatar position in degrees: body centroid and pelvis height.

    Arrays are indexed by frame; NaN marks frames without detections.
    """

    centroid_x: dict[Side, np.ndarray]
    centroid_y: dict[Side, np.ndarray]
    pelvis_y: dict[Side, np.ndarray]
    midline_x: np.ndarray

    def take(self, frames: np.ndarray) -> "AvatarTracks":
        return AvatarTracks(
            {side: values[frames] for side, values in self.centroid_x.items()},
            {side: values[frames] for side, values in self.centroid_y.items()},
            {side: values[frames] for side, values in self.pelvis_y.items()},
            self.midline_x[frames],
        )

    def to_dict(self) -> dict:
        return {
            side.label: {
                "centroid_x": self.centroid_x[side],
                "centroid_y": self.centroid_y[side],
                "pelvis_y": self.pelvis_y[side],
            }
            for side in Side
        } | {"midline_x": self.midline_x}

    @classmethod
    def from_dict(cls, data) -> "AvatarTracks":
        def numbers(values):
            return np.array(values, dtype=float)

        return cls(
            {side: numbers(data[side.label]["centroid_x"]) for side in Side},
            {side: numbers(data[side.label]["centroid_y"]) for side in Side},
            {side: numbers(data[side.label]["pelvis_y"]) for side in Side},
            numbers(data["midline_x"]),
        )


def _nanmean_rows(values: np.ndarray) -> np.ndarray:
    present = np.isfinite(values)
    counts = present.sum(axis=1)
    sums = np.where(present, values, 0.0).sum(axis=1)
    return np.divide(sums, counts, out=np.full(len(values), np.nan), where=counts > 0)


def avatar_tracks(frames: KeypointTrack, geom: CameraGeometry = CameraGeometry()) -> AvatarTracks:
    """Summarise the filtered keypoints of both avatars per frame, in degrees."""

    points = px_to_deg(frames.values[..., :2], geom)
    centroid_x, centroid_y, pelvis_y = {}, {}, {}
    for side in Side:
        slots = [LABEL_INDEX[f"{side.prefix}_{label}"] for label in BODY_LABELS]
        centroid_x[side] = _nanmean_rows(points[:, slots, 0])
        centroid_y[side] = _nanmean_rows(points[:, slots, 1])
        pelvis_y[side] = points[:, LABEL_INDEX[f"{side.prefix}_pelvis"], 1]
    corners = [LABEL_INDEX[label] for label in CORNER_LABELS]
    midline_x = _nanmean_rows(points[:, corners, 0])
    return AvatarTracks(centroid_x, centroid_y, pelvis_y, midline_x)


@dataclasses.dataclass(frozen=True, eq=False)
class GazeSegment:
    """Gaze resting on one avatar between two saccades (or trial edges).

    `start_frame` and `end_frame` are inclusive positions in the session's
    frame arrays; `trajectory` rows are (t, x_deg, y_deg).
    """

    start_frame: int
    end_frame: int
    side: Side
    trajectory: np.ndarray
    duration: float

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1

    def to_dict(self) -> dict:
        return {
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "side": self.side.label,
            "trajectory": self.trajectory,
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, data) -> "GazeSegment":
        return cls(
            int(data["start_frame"]),
            int(data["end_frame"]),
            Side.parse(data["side"]),
            np.array(data["trajectory"], dtype=float).reshape(-1, 3),
            float(data["duration"]),
        )


def _assign_side(
    median_x: float, rows: np.ndarray, tracks: AvatarTracks
) -> Side:
    with np.errstate(all="ignore"):
        left = np.nanmedian(tracks.centroid_x[Side.LEFT][rows]) if rows.size else np.nan
        right = np.nanmedian(tracks.centroid_x[Side.RIGHT][rows]) if rows.size else np.nan
    if np.isfinite(left) and np.isfinite(right):
        return Side.LEFT if abs(median_x - left) <= abs(median_x - right) else Side.RIGHT

    midline = tracks.midline_x[rows]
    midline = float(np.nanmedian(midline)) if np.isfinite(midline).any() else 0.0
    return Side.LEFT if median_x <= midline else Side.RIGHT


def split_trajectory(
    t: np.ndarray,
    points: np.ndarray,
    saccades: Sequence[SaccadeEvent],
    tracks: AvatarTracks,
    *,
    first_frame: int = 0,
    frame_rate: float = 24.0,
    cross_deg=(0.0, 0.0),
    cross_radius_deg: float = 2.0,
) -> tuple[list[GazeSegment], list[tuple[int, int]]]:
    """Split one trial's gaze at saccades and gaps and attach an avatar side.

    Runs that end before the first saccade and whose median gaze lies
    within `cross_radius_deg` of the fixation cross are the fixation the
    trial starts with; they are returned as spans instead of segments.
    Every other run is a segment, whatever its position.

    Args:
        t: Frame timestamps of the trial window.
        points: (n, 2) gaze in degrees; NaN rows are gaps.
        saccades: Events detected on the trial's speeds.
        tracks: Avatar tracks restricted to the trial window.
        first_frame: Session frame position of the first trial frame.

    Returns:
        tuple[list[GazeSegment], list[tuple[int, int]]]: The segments and the
            inclusive (start, end) session frames of the leading fixation runs.

    Raises:
        EmptyTrialWindow: The window holds no frames.
    """

    n = len(t)
    if n == 0:
        raise EmptyTrialWindow("no scene frames inside the trial window")

    kept = np.isfinite(points).all(axis=1)
    cut_after = np.zeros(n, dtype=bool)
    for saccade in saccades:
        kept[saccade.start + 1 : saccade.end + 1] = False
        cut_after[saccade.start] = True
    first_saccade = min((saccade.start for saccade in saccades), default=None)

    segments, fixations = [], []
    start = None
    for i in range(n + 1):
        continues = (
            i < n
            and kept[i]
            and start is not None
            and not cut_after[i - 1]
        )
        if continues:
            continue
        if start is not None:
            rows = np.arange(start, i)
            median = np.median(points[rows], axis=0)
            leading = first_saccade is not None and i - 1 <= first_saccade
            if leading and np.hypot(*(median - cross_deg)) < cross_radius_deg:
                fixations.append((first_frame + start, first_frame + i - 1))
            else:
                segments.append(
                    GazeSegment(
                        start_frame=first_frame + start,
                        end_frame=first_frame + i - 1,
                        side=_assign_side(float(median[0]), rows, tracks),
                        trajectory=np.column_stack([t[rows], points[rows]]),
                        duration=len(rows) / frame_rate,
                    )
                )
        start = i if i < n and kept[i] else None
    return segments, fixations


def segment_trajectory(
    t: np.ndarray,
    points: np.ndarray,
    saccades: Sequence[SaccadeEvent],
    tracks: AvatarTracks,
    **options,
) -> list[GazeSegment]:
    """The segments of `split_trajectory`, without the leading fixation spans."""

    return split_trajectory(t, points, saccades, tracks, **options)[0]


@dataclasses.dataclass(frozen=True, eq=False)
class TrialSegmentation:
    """Everything the feature stage needs about one trial's gaze."""

    trial_id: int
    first_frame: int
    t: np.ndarray
    points: np.ndarray
    speeds: np.ndarray
    saccades: list[SaccadeEvent]
    segments: list[GazeSegment]
    tracks: AvatarTracks
    frame_rate: float = 24.0
    error: str | None = None
    fixation_spans: list[tuple[int, int]] = dataclasses.field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return len(self.t)

    def frame_coverage(self) -> np.ndarray:
        """How many of segments, saccade interiors, gaps and fixation spans claim each frame.

        A complete segmentation claims every frame of the window exactly once.
        """

        counts = np.zeros(self.n_frames, dtype=int)
        spans = [(s.start_frame, s.end_frame) for s in self.segments] + list(self.fixation_spans)
        for start, end in spans:
            counts[start - self.first_frame : end - self.first_frame + 1] += 1
        for saccade in self.saccades:
            counts[list(saccade.interior_frames)] += 1
        counts[~np.isfinite(self.points).all(axis=1)] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "first_frame": self.first_frame,
            "t": self.t,
            "points": self.points,
            "speeds": self.speeds,
            "saccades": [dataclasses.asdict(saccade) for saccade in self.saccades],
            "segments": [segment.to_dict() for segment in self.segments],
            "tracks": self.tracks.to_dict(),
            "frame_rate": self.frame_rate,
            "error": self.error,
            "fixation_spans": self.fixation_spans,
        }

    @classmethod
    def from_dict(cls, data) -> "TrialSegmentation":
        return cls(
            trial_id=int(data["trial_id"]),
            first_frame=int(data["first_frame"]),
            t=np.array(data["t"], dtype=float),
            points=np.array(data["points"], dtype=float).reshape(-1, 2),
            speeds=np.array(data["speeds"], dtype=float),
            saccades=[SaccadeEvent(**saccade) for saccade in data["saccades"]],
            segments=[GazeSegment.from_dict(segment) for segment in data["segments"]],
            tracks=AvatarTracks.from_dict(data["tracks"]),
            frame_rate=float(data["frame_rate"]),
            error=data.get("error"),
            fixation_spans=[tuple(span) for span in data.get("fixation_spans", [])],
        )


def segment_session(
    session: Session,
    settings: KinematicsSettings | None = None,
    ingest_settings: IngestSettings | None = None,
) -> tuple[Session, list[CalibrationOffset], list[TrialSegmentation]]:
    """Calibrate a session and segment every trial.

    Trials whose window holds no frames are returned with `error` set
    and no segments.
    """

    settings = settings or KinematicsSettings()
    ingest_settings = ingest_settings or IngestSettings()
    geom = CameraGeometry.from_settings(settings)
    frame_rate = ingest_settings.frame_rate

    calibrated, offsets = post_calibrate(
        session, settings.fixation_cross_px, settings, ingest_settings.fixation_s
    )
    x, y, valid = calibrated.aligned_gaze()
    points = px_to_deg(np.column_stack([x, y]), geom)
    points[~valid] = np.nan
    cross_deg = px_to_deg(settings.fixation_cross_px, geom)
    tracks = avatar_tracks(calibrated.frames, geom)

    results = []
    for trial, frames in iter_trial_frames(calibrated):
        first = int(frames[0]) if len(frames) else 0
        trial_t = calibrated.frames.timestamp[frames]
        trial_points = points[frames]
        trial_tracks = tracks.take(frames)
        try:
            if len(frames) < 2:
                raise EmptyTrialWindow(
                    f"trial {trial.trial_id} window holds {len(frames)} frame(s)"
                )
            speeds = gaze_speed(trial_points, frame_rate)
            saccades = detect_saccades(speeds, settings.saccade_threshold_deg_s)
            segments, fixations = split_trajectory(
                trial_t,
                trial_points,
                saccades,
                trial_tracks,
                first_frame=first,
                frame_rate=frame_rate,
                cross_deg=cross_deg,
                cross_radius_deg=settings.cross_radius_deg,
            )
        except EmptyTrialWindow as e:
            logger.warning("Trial %s of %s: %s", trial.trial_id, session.participant_id, e)
            results.append(
                TrialSegmentation(
                    trial.trial_id,
                    first,
                    trial_t,
                    trial_points,
                    np.zeros(0),
                    [],
                    [],
                    trial_tracks,
                    frame_rate,
                    error=str(e),
                )
            )
            continue

        results.append(
            TrialSegmentation(
                trial.trial_id,
                first,
                trial_t,
                trial_points,
                speeds,
                saccades,
                segments,
                trial_tracks,
                frame_rate,
                fixation_spans=fixations,
            )
        )
    logger.info(
        "Segmented %d trials of %s into %d segments",
        len(results),
        session.participant_id,
        sum(len(result.segments) for result in results),
    )
    return calibrated, offsets, results


@dataclasses.dataclass(frozen=True, eq=False)
class SpeedHistogram:
    bin_edges: np.ndarray
    density: np.ndarray
    kde_grid: np.ndarray
    kde_density: np.ndarray
    n_speeds: int

    @property
    def bin_centers(self) -> np.ndarray:
        return (self.bin_edges[:-1] + self.bin_edges[1:]) / 2

    @property
    def mode(self) -> float:
        """Center of the fullest bin, NaN for an empty histogram."""

        if self.n_speeds == 0:
            return np.nan
        return float(self.bin_centers[np.argmax(self.density)])


def segment_speeds(
    segmentations: Sequence[TrialSegmentation], frame_rate: float | None = None
) -> np.ndarray:
    """Speeds between consecutive frames of the same segment (saccades excluded)."""

    speeds = []
    for result in segmentations:
        rate = frame_rate or result.frame_rate
        for segment in result.segments:
            if segment.n_frames >= 2:
                speeds.append(gaze_speed(segment.trajectory[:, 1:], rate))
    if not speeds:
        return np.zeros(0)
    speeds = np.concatenate(speeds)
    return speeds[np.isfinite(speeds)]


def speed_histogram(
    segmentations: Sequence[TrialSegmentation] | np.ndarray,
    settings: KinematicsSettings | None = None,
) -> SpeedHistogram:
    """Normalised histogram and Gaussian KDE of within-segment gaze speed.

    Args:
        segmentations: A session's trial segmentations, or speeds directly.
        settings (KinematicsSettings | None): Bin width, range and KDE bandwidth.
    """

    settings = settings or KinematicsSettings()
    if isinstance(segmentations, np.ndarray):
        speeds = segmentations[np.isfinite(segmentations)]
    else:
        speeds = segment_speeds(segmentations)
    edges = np.arange(
        0.0,
        settings.histogram_max_speed + settings.histogram_bin_width,
        settings.histogram_bin_width,
    )
    if speeds.size == 0:
        return SpeedHistogram(edges, np.zeros(len(edges) - 1), np.zeros(0), np.zeros(0), 0)

    density, _ = np.histogram(
        np.clip(speeds, 0.0, edges[-1]), bins=edges, density=True
    )
    grid = (edges[:-1] + edges[1:]) / 2
    try:
        kde = gaussian_kde(speeds, bw_method=settings.kde_bandwidth)(grid)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.debug("No kernel density estimate for %d speeds: %s", speeds.size, e)
        grid, kde = np.zeros(0), np.zeros(0)
    return SpeedHistogram(edges, density, grid, kde, int(speeds.size))
