"""
conf.py

Resolved pipeline configuration.

Values are layered: dataclass defaults, then the `GAZE2AFC` dictionary of
the Django settings, then an optional TOML file, then explicit overrides
(usually command line flags). The resolved tree is serialised into every
artifact so a result can always be traced back to the settings that made it.
"""

import dataclasses
import hashlib
import json
import tomllib
import typing
from pathlib import Path

from django.conf import settings

from gaze2afc import __version__
from gaze2afc.exceptions import InvalidConfig


@dataclasses.dataclass(frozen=True)
class IngestSettings:
    gaze_columns: dict[str, str] = dataclasses.field(
        default_factory=lambda: {
            "timestamp": "timestamp_s",
            "x": "x_px",
            "y": "y_px",
            "valid": "valid",
        }
    )
    keypoint_columns: dict[str, str] = dataclasses.field(
        default_factory=lambda: {
            "frame": "frame",
            "label": "label",
            "x": "x_px",
            "y": "y_px",
            "likelihood": "likelihood",
        }
    )
    trial_columns: dict[str, str] = dataclasses.field(
        default_factory=lambda: {
            "trial_id": "trial_id",
            "block": "block",
            "natural_side": "natural_side",
            "response_side": "response_side",
            "mse": "mse",
            "onset": "onset_s",
            "offset": "offset_s",
        }
    )
    keypoint_layout: str = "long"
    p_cutoff: float = 0.9
    frame_rate: float = 24.0
    gaze_rate: float = 60.0
    scene_clock_offset_s: float = 0.0
    trial_clock_offset_s: float = 0.0
    trial_duration_s: float = 3.5
    trial_duration_tolerance_s: float = 0.1
    fixation_s: float = 0.75


@dataclasses.dataclass(frozen=True)
class KinematicsSettings:
    width_px: int = 1280
    height_px: int = 960
    fov_h_deg: float = 60.0
    fov_v_deg: float = 46.0
    fixation_cross_px: tuple[float, float] = (640.0, 480.0)
    saccade_threshold_deg_s: float = 100.0
    calibration_gate_deg: float = 0.5
    cross_radius_deg: float = 2.0
    histogram_bin_width: float = 1.0
    histogram_max_speed: float = 40.0
    kde_bandwidth: float | str = "scott"


@dataclasses.dataclass(frozen=True)
class FeatureSettings:
    ratio_cap_percentile: float = 99.0
    log_ratio: bool = True


@dataclasses.dataclass(frozen=True)
class SamplerSettings:
    chains: int = 4
    draws: int = 1000
    warmup: int = 1000
    seed: int = 20230101
    target_accept: float = 0.8
    max_tree_depth: int = 10
    max_divergence_rate: float = 0.01
    max_rhat: float = 1.01
    min_ess: float = 400.0
    check_convergence: bool = True
    chain_workers: int = 1


@dataclasses.dataclass(frozen=True)
class EvidenceSettings:
    tolerance: float = 1e-10
    max_iterations: int = 1000
    overlap_floor: float = 0.01


@dataclasses.dataclass(frozen=True)
class InformationSettings:
    mode: str = "posterior_mean"


@dataclasses.dataclass(frozen=True)
class CascadeSettings:
    effect_threshold: float = 0.85
    absent_threshold: float = 0.15


@dataclasses.dataclass(frozen=True)
class RunSettings:
    data_dir: str = "data"
    output_dir: str = "report"
    workers: int = 1
    outcomes: tuple[str, ...] = ("decision", "task", "correct")


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    ingest: IngestSettings = dataclasses.field(default_factory=IngestSettings)
    kinematics: KinematicsSettings = dataclasses.field(
        default_factory=KinematicsSettings
    )
    features: FeatureSettings = dataclasses.field(default_factory=FeatureSettings)
    sampler: SamplerSettings = dataclasses.field(default_factory=SamplerSettings)
    evidence: EvidenceSettings = dataclasses.field(default_factory=EvidenceSettings)
    information: InformationSettings = dataclasses.field(
        default_factory=InformationSettings
    )
    cascade: CascadeSettings = dataclasses.field(default_factory=CascadeSettings)
    run: RunSettings = dataclasses.field(default_factory=RunSettings)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(canonical.encode()).hexdigest()

    def provenance(self) -> dict:
        return {
            "version": __version__,
            "config": self.to_dict(),
            "config_hash": self.hash,
        }

    def replace(self, **sections: dict) -> "PipelineConfig":
        """Return a copy with the given `section={key: value}` overrides applied.

        Overrides whose value is None are skipped so optional command
        line flags can be passed straight through.
        """

        return _merge(self, sections)


def _merge(config: PipelineConfig, tree: typing.Mapping) -> PipelineConfig:
    changes = {}
    for section_name, values in tree.items():
        try:
            section = getattr(config, section_name)
        except AttributeError as e:
            raise InvalidConfig(f"unknown config section {section_name!r}") from e
        if not isinstance(values, typing.Mapping):
            raise InvalidConfig(f"config section {section_name!r} must be a table")

        known = {field.name: field for field in dataclasses.fields(section)}
        section_changes = {}
        for key, value in values.items():
            if value is None:
                continue
            if key not in known:
                e = InvalidConfig(f"unknown config key {section_name}.{key}")
                e.add_note(f"Known keys: {', '.join(sorted(known))}")
                raise e
            current = getattr(section, key)
            if isinstance(current, dict):
                value = current | dict(value)
            elif isinstance(current, tuple):
                value = tuple(value)
            section_changes[key] = value
        changes[section_name] = dataclasses.replace(section, **section_changes)
    return dataclasses.replace(config, **changes)


def load_config(path: str | Path | None = None, **overrides: dict) -> PipelineConfig:
    """Resolve the configuration.

    Args:
        path (str | Path | None): An optional TOML file whose tables are config sections.
        **overrides: `section={key: value}` overrides applied last.

    Returns:
        PipelineConfig: The resolved configuration.
    """

    config = _merge(PipelineConfig(), getattr(settings, "GAZE2AFC", {}))
    if path is not None:
        try:
            with open(path, "rb") as handle:
                tree = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as e:
            error = InvalidConfig(f"cannot read config file {path}: {e}")
            raise error from e
        config = _merge(config, {k: v for k, v in tree.items() if k != "synth"})
    return config.replace(**overrides)


def load_synth_table(path: str | Path | None) -> dict:
    """Read the `[synth]` table of a TOML config file, if there is one."""

    if path is None:
        return {}
    with open(path, "rb") as handle:
        tree = tomllib.load(handle)
    return dict(tree.get("synth", tree))
