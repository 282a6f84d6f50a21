"""
serializers.py

JSON and CSV writers for pipeline artifacts. JSON artifacts carry the
resolved configuration under a "gaze2afc" key, CSV artifacts a single
leading comment line with the version and configuration hash.
"""

import dataclasses
import enum
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.serializers.json import DjangoJSONEncoder

from gaze2afc import __version__


class NumpyJSONEncoder(DjangoJSONEncoder):
    """Encodes numpy scalars and arrays, dataclasses and enums; NaN and inf become null."""

    def default(self, o):
        if isinstance(o, np.ndarray):
            return _finite(o.tolist())
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return _finite(float(o))
        if isinstance(o, enum.Enum):
            return o.name if isinstance(o.value, int) else o.value
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return _finite(o.to_dict() if hasattr(o, "to_dict") else dataclasses.asdict(o))
        if isinstance(o, Path):
            return str(o)
        return super().default(o)

    def iterencode(self, o, _one_shot=False):
        return super().iterencode(_finite(o), _one_shot)


def _finite(value):
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


def dumps(data) -> str:
    return json.dumps(data, cls=NumpyJSONEncoder, indent=2, sort_keys=True)


def write_json(path: str | Path, data: dict, provenance: dict | None = None) -> Path:
    """Write `data` as JSON, adding the provenance block when given."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if provenance is not None:
        data = {**data, "gaze2afc": provenance}
    path.write_text(dumps(data) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def csv_header(config_hash: str | None = None, **extra) -> str:
    fields = [f"gaze2afc {__version__}"]
    if config_hash is not None:
        fields.append(f"config_sha256={config_hash}")
    fields.extend(f"{key}={value}" for key, value in extra.items())
    return "# " + " ".join(fields)


def write_csv(
    path: str | Path,
    table: pd.DataFrame,
    header: str | None = None,
    float_format: str | None = "%.6g",
) -> Path:
    """Write a table with an optional leading comment line and LF line endings."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if header is not None:
            handle.write(header + "\n")
        table.to_csv(handle, index=False, float_format=float_format, lineterminator="\n")
    return path


def read_csv(path: str | Path) -> pd.DataFrame:
    """Read a table written by `write_csv`, skipping the comment line."""

    return pd.read_csv(path, comment="#")
