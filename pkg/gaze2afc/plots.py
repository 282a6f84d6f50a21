"""
plots.py

Static SVG figures of the analysis: the within-segment gaze speed
histogram, grouped bars of mutual information and of feature importance,
and the posterior overlay of one regression parameter.

Figures are drawn with the non-interactive Agg backend and saved with a
fixed hash salt and no date, so the same data always give the same file.
"""

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from scipy import stats  # noqa: E402

from gaze2afc.inference import NormalFit  # noqa: E402
from gaze2afc.kinematics import SpeedHistogram  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "gaze2afc"
plt.rcParams["font.size"] = 11

MI_BARS = (
    ("gaze_decision", "gaze / decision"),
    ("gaze_task", "gaze / task"),
    ("decision_task", "decision / task"),
)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug("Wrote %s", path)
    return path


def speed_histogram_svg(histograms: Mapping[str, SpeedHistogram], path: str | Path) -> Path:
    """One step histogram and KDE curve per participant."""

    fig, ax = plt.subplots(figsize=(7, 4), tight_layout=True)
    for index, (participant_id, histogram) in enumerate(sorted(histograms.items())):
        color = f"C{index % 10}"
        ax.stairs(histogram.density, histogram.bin_edges, color=color, alpha=0.6)
        if histogram.kde_grid.size:
            ax.plot(histogram.kde_grid, histogram.kde_density, color=color, label=participant_id)
    ax.set_xlabel("gaze speed (deg/s)")
    ax.set_ylabel("density")
    if histograms:
        ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def mi_svg(table: pd.DataFrame, path: str | Path) -> Path:
    """Grouped bars of the mutual information (bits) per participant."""

    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(table)), 4), tight_layout=True)
    x = np.arange(len(table))
    width = 0.8 / len(MI_BARS)
    for index, (column, label) in enumerate(MI_BARS):
        ax.bar(x + (index - 1) * width, table[column].to_numpy(dtype=float), width, label=label)
    ax.set_xticks(x, table["participant_id"].astype(str), rotation=45)
    ax.set_ylabel("mutual information (bits)")
    ax.set_ylim(0, 1)
    ax.legend(frameon=False)
    return _save(fig, path)


def importance_svg(table: pd.DataFrame, path: str | Path) -> Path:
    """Grouped bars of log10 odds, one group per feature and one bar per participant."""

    pivot = table.pivot(index="feature", columns="participant_id", values="log10_odds")
    pivot = pivot.reindex(list(dict.fromkeys(table["feature"])))
    fig, ax = plt.subplots(figsize=(max(6, 1.5 * len(pivot)), 4), tight_layout=True)
    x = np.arange(len(pivot))
    width = 0.8 / max(1, len(pivot.columns))
    for index, participant_id in enumerate(pivot.columns):
        offset = (index - (len(pivot.columns) - 1) / 2) * width
        ax.bar(x + offset, pivot[participant_id].to_numpy(dtype=float), width, label=participant_id)
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_xticks(x, pivot.index, rotation=30)
    ax.set_ylabel("log10 odds (full / without feature)")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def posterior_svg(
    draws: np.ndarray, fit: NormalFit, path: str | Path, prior_sd: float = 1.0
) -> Path:
    """Histogram and KDE of one parameter's draws with its normal fit and the prior."""

    draws = np.asarray(draws, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4), tight_layout=True)
    ax.hist(draws, bins=40, density=True, color="0.8", label="draws")
    grid = fit.grid if fit.grid.size else np.linspace(draws.min(), draws.max(), 200)
    if draws.std() > 0:
        ax.plot(grid, stats.gaussian_kde(draws)(grid), color="C0", label="KDE")
    ax.plot(grid, stats.norm.pdf(grid, fit.mean, fit.sd), color="C1", linestyle="--", label="normal fit")
    ax.plot(grid, stats.norm.pdf(grid, 0.0, prior_sd), color="C2", linestyle=":", label="prior")
    ax.set_xlabel(fit.name)
    ax.set_ylabel("density")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def posterior_svgs(
    draws: np.ndarray,
    fits: Sequence[NormalFit],
    out_dir: str | Path,
    stem: str = "posterior",
    prior_sd: float = 1.0,
) -> list[Path]:
    return [
        posterior_svg(draws[:, j], fit, Path(out_dir) / f"{stem}_{fit.name}.svg", prior_sd)
        for j, fit in enumerate(fits)
    ]
