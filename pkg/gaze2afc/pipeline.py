"""
pipeline.py

The end-to-end analysis: ingest, calibrate and segment every
participant's session, extract features, fit the decision, task and
correctness regressions, and report mutual information, feature
importance, the gaze cascade test and the gaze speed histogram.

Participants are independent and may be analysed in a process pool;
results are merged in participant order so reports never depend on
scheduling or on the order the filesystem lists directories in.
"""

import contextlib
import dataclasses
import logging
from collections.abc import Iterator, Sequence
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd

from gaze2afc import __version__, plots
from gaze2afc.cascade import CascadeResult, cascade_report, cascade_test
from gaze2afc.conf import PipelineConfig
from gaze2afc.evidence import FeatureImportance, loo_importance
from gaze2afc.exceptions import Gaze2afcError, StageError
from gaze2afc.features import OUTCOMES, ScalingRecord, build_model, session_features
from gaze2afc.inference import LogisticModel, PosteriorSamples, sample_posterior
from gaze2afc.information import MiReport, mi_report
from gaze2afc.ingest import Session, load_session
from gaze2afc.kinematics import CalibrationOffset, SpeedHistogram, segment_session, speed_histogram
from gaze2afc.parallel import parallel_map
from gaze2afc.serializers import csv_header, write_csv, write_json

logger = logging.getLogger(__name__)

INPUT_FILES = ("gaze.csv", "keypoints.csv", "trials.csv")
PACKAGES = ("django", "Faker", "numpy", "scipy", "pandas", "matplotlib", "arviz", "scikit-learn")


@contextlib.contextmanager
def stage(name: str, participant_id: str | None = None) -> Iterator[None]:
    """Tag any pipeline error escaping the block with the stage and participant."""

    try:
        yield
    except StageError:
        raise
    except (Gaze2afcError, OSError, LookupError, ValueError, ArithmeticError) as e:
        raise StageError(name, participant_id, e) from e


@dataclasses.dataclass(frozen=True, eq=False)
class OutcomeFit:
    outcome: str
    model: LogisticModel
    scaling: ScalingRecord
    posterior: PosteriorSamples


@dataclasses.dataclass(frozen=True, eq=False)
class ParticipantResult:
    participant_id: str
    features: pd.DataFrame
    excluded_trials: tuple[int, ...]
    offsets: tuple[CalibrationOffset, ...]
    mi: MiReport
    importance: dict[str, list[FeatureImportance]]
    cascade: CascadeResult
    histogram: SpeedHistogram


@dataclasses.dataclass(frozen=True, eq=False)
class AnalysisReport:
    output_dir: Path
    participants: tuple[str, ...]
    mi: pd.DataFrame
    importance: pd.DataFrame
    cascade: pd.DataFrame
    histogram: pd.DataFrame
    files: tuple[Path, ...]


def discover_participants(data_dir: str | Path) -> list[tuple[str, Path]]:
    """Every sub-directory holding the three input files, sorted by name.

    A data directory that holds the files itself is a single participant
    named after the directory.
    """

    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"data directory {data_dir} does not exist")

    def complete(directory: Path) -> bool:
        return all((directory / name).is_file() for name in INPUT_FILES)

    if complete(data_dir):
        return [(data_dir.resolve().name, data_dir)]
    found = sorted(
        (child.name, child)
        for child in data_dir.iterdir()
        if child.is_dir() and complete(child)
    )
    if not found:
        error = FileNotFoundError(f"no participant directories under {data_dir}")
        error.add_note(f"A participant directory holds {', '.join(INPUT_FILES)}")
        raise error
    return found


def ingest_participant(directory: str | Path, participant_id: str, config: PipelineConfig) -> Session:
    directory = Path(directory)
    with stage("ingest", participant_id):
        return load_session(
            directory / "gaze.csv",
            directory / "keypoints.csv",
            directory / "trials.csv",
            participant_id,
            config.ingest,
        )


def fit_outcome(table: pd.DataFrame, outcome: str, config: PipelineConfig) -> OutcomeFit:
    """Standardise the features and sample the posterior of one outcome's regression."""

    model, scaling = build_model(table, outcome, settings=config.features)
    posterior = sample_posterior(model, config.sampler)
    return OutcomeFit(outcome, model, scaling, posterior)


def analyse_participant(
    directory: str | Path, participant_id: str, config: PipelineConfig, workers: int = 1
) -> ParticipantResult:
    """Run every per-participant stage on one session directory.

    Raises:
        StageError: A stage failed; the error names the stage and participant.
    """

    session = ingest_participant(directory, participant_id, config)
    with stage("segment", participant_id):
        _, offsets, segmentations = segment_session(session, config.kinematics, config.ingest)
    with stage("speedhist", participant_id):
        histogram = speed_histogram(segmentations, config.kinematics)
    with stage("features", participant_id):
        table, excluded = session_features(segmentations, session.trials, config.features)

    fits = {}
    for outcome in OUTCOMES:
        with stage(f"fit {outcome}", participant_id):
            fits[outcome] = fit_outcome(table, outcome, config)
    with stage("mi", participant_id):
        report = mi_report(
            participant_id,
            table,
            {outcome: (fit.model, fit.posterior) for outcome, fit in fits.items()},
            config.information,
        )

    importance = {}
    for outcome in config.run.outcomes:
        with stage(f"importance {outcome}", participant_id):
            importance[outcome] = loo_importance(
                fits[outcome].model, config.sampler, config.evidence, workers
            )
    with stage("cascade", participant_id):
        cascade = cascade_test(
            table["congruence"].to_numpy(), table["mse"].to_numpy(), config.sampler, participant_id
        )

    logger.info(
        "Participant %s: %d trials analysed, %d excluded",
        participant_id,
        len(table),
        len(excluded),
    )
    return ParticipantResult(
        participant_id=participant_id,
        features=table,
        excluded_trials=tuple(excluded),
        offsets=tuple(offsets),
        mi=report,
        importance=importance,
        cascade=cascade,
        histogram=histogram,
    )


def _participant_job(job) -> ParticipantResult:
    directory, participant_id, config, workers = job
    return analyse_participant(directory, participant_id, config, workers)


def histogram_table(histograms: dict[str, SpeedHistogram]) -> pd.DataFrame:
    frames = []
    for participant_id, histogram in sorted(histograms.items()):
        kde = (
            histogram.kde_density
            if histogram.kde_density.size
            else np.full(len(histogram.density), np.nan)
        )
        frames.append(
            pd.DataFrame(
                {
                    "participant_id": participant_id,
                    "bin_left": histogram.bin_edges[:-1],
                    "bin_right": histogram.bin_edges[1:],
                    "density": histogram.density,
                    "kde": kde,
                }
            )
        )
    columns = ["participant_id", "bin_left", "bin_right", "density", "kde"]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)


def importance_table(results: Sequence[ParticipantResult]) -> pd.DataFrame:
    rows = [
        {"participant_id": result.participant_id, "outcome": outcome} | item.to_row()
        for result in results
        for outcome, items in result.importance.items()
        for item in items
    ]
    columns = ["participant_id", "outcome", "feature", "log_odds", "log10_odds", "error"]
    return pd.DataFrame(rows, columns=columns)


def package_versions() -> dict[str, str]:
    versions = {"gaze2afc": __version__}
    for package in PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def run_all(config: PipelineConfig) -> AnalysisReport:
    """Analyse every participant under `config.run.data_dir` and write the report.

    Writes mi.csv/svg, importance.csv/svg, cascade.csv, hist.csv/svg, one
    features_<participant>.csv per participant and manifest.json into
    `config.run.output_dir`.

    Raises:
        StageError: Any stage failed; the run is aborted.
    """

    with stage("discover"):
        participants = discover_participants(config.run.data_dir)
    workers = config.run.workers
    inner_workers = workers if len(participants) == 1 else 1
    logger.info(
        "Analysing %d participant(s) with %d worker(s)", len(participants), max(1, workers)
    )
    results = parallel_map(
        _participant_job,
        [(str(path), pid, config, inner_workers) for pid, path in participants],
        workers if len(participants) > 1 else 1,
    )

    out = Path(config.run.output_dir)
    header = csv_header(config.hash)
    files = []
    with stage("report"):
        for result in results:
            files.append(
                write_csv(out / f"features_{result.participant_id}.csv", result.features, header)
            )

        mi = pd.DataFrame([result.mi.to_row() for result in results])
        files.append(write_csv(out / "mi.csv", mi, header))
        files.append(plots.mi_svg(mi, out / "mi.svg"))

        importance = importance_table(results)
        files.append(write_csv(out / "importance.csv", importance, header))
        for outcome in config.run.outcomes:
            subset = importance[importance["outcome"] == outcome]
            if len(subset):
                name = "importance.svg" if outcome == "decision" else f"importance_{outcome}.svg"
                files.append(plots.importance_svg(subset, out / name))

        cascade = cascade_report([result.cascade for result in results], config.cascade)
        files.append(write_csv(out / "cascade.csv", cascade, header, float_format=None))

        histograms = {result.participant_id: result.histogram for result in results}
        histogram = histogram_table(histograms)
        files.append(write_csv(out / "hist.csv", histogram, header))
        files.append(plots.speed_histogram_svg(histograms, out / "hist.svg"))

        manifest = {
            "participants": [pid for pid, _ in participants],
            "excluded_trials": {r.participant_id: list(r.excluded_trials) for r in results},
            "calibration": {
                r.participant_id: [dataclasses.asdict(offset) for offset in r.offsets]
                for r in results
            },
            "versions": package_versions(),
            "files": sorted(path.name for path in files),
        }
        files.append(write_json(out / "manifest.json", manifest, config.provenance()))

    logger.info("Wrote %d report files to %s", len(files), out)
    return AnalysisReport(
        output_dir=out,
        participants=tuple(pid for pid, _ in participants),
        mi=mi,
        importance=importance,
        cascade=cascade,
        histogram=histogram,
        files=tuple(files),
    )
