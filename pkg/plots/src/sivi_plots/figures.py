"""Render benchmark CSVs into mean-curve figures with confidence bands.

Input files are the solver harness exports: either aggregated statistics with
header `k,cum_samples,metric,mean,ci_low,ci_high` (one row per recorded
iteration per metric) or single-run traces with header
`k,cum_samples,gap_norm,err`. This package does no numerical work beyond
reading columns; statistics belong to the producer.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

X_AXIS_CHOICES = ("iteration", "samples")


class PlotDataError(ValueError):
    """The CSV lacks a referenced column or holds no usable rows."""


@dataclass
class FigureSpec:
    """What to draw: input CSVs, the metric, axes, labels, and the output path.

    One series is drawn per input CSV; labels default to the file stems.
    The x axis shows iteration indices or cumulative sample counts; the y axis
    is log-scaled by default, the usual choice for convergence metrics.
    """

    csv_paths: list[str]
    output_path: str
    metric: str = "gap_norm"
    x_axis: str = "iteration"
    log_y: bool = True
    log_x: bool = False
    labels: list[str] | None = None
    title: str | None = None

    def __post_init__(self):
        if not self.csv_paths:
            raise PlotDataError("at least one input CSV is required")
        if self.x_axis not in X_AXIS_CHOICES:
            raise PlotDataError(f'x_axis must be one of {X_AXIS_CHOICES}, got "{self.x_axis}"')
        if self.labels is not None and len(self.labels) != len(self.csv_paths):
            raise PlotDataError("labels must match csv_paths in number")

    def series_labels(self) -> list[str]:
        if self.labels is not None:
            return list(self.labels)
        return [Path(p).stem for p in self.csv_paths]


@dataclass
class Series:
    label: str
    x: np.ndarray
    mean: np.ndarray
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None

    @property
    def has_band(self) -> bool:
        return self.ci_low is not None and self.ci_high is not None


def _read_table(path: str) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise PlotDataError(f"{path}: empty file")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def _require_columns(path: str, header: list[str], names: list[str]) -> None:
    for name in names:
        if name not in header:
            raise PlotDataError(f'{path}: missing column "{name}" (header has {header})')


def load_series(path: str, metric: str, x_axis: str, label: str) -> Series:
    """Read one CSV into a plottable series.

    Statistics exports yield a mean line plus a confidence band; trace exports
    yield the metric column as a bare line.
    """
    header, rows = _read_table(path)
    x_column = "k" if x_axis == "iteration" else "cum_samples"
    if "metric" in header:
        _require_columns(path, header, [x_column, "metric", "mean", "ci_low", "ci_high"])
        idx = {name: header.index(name) for name in header}
        picked = [row for row in rows if row[idx["metric"]] == metric]
        if not picked:
            available = sorted({row[idx["metric"]] for row in rows})
            raise PlotDataError(f'{path}: no rows for metric "{metric}" (file has {available})')
        x = np.array([float(row[idx[x_column]]) for row in picked])
        return Series(
            label=label,
            x=x,
            mean=np.array([float(row[idx["mean"]]) for row in picked]),
            ci_low=np.array([float(row[idx["ci_low"]]) for row in picked]),
            ci_high=np.array([float(row[idx["ci_high"]]) for row in picked]),
        )
    _require_columns(path, header, [x_column, metric])
    idx = {name: header.index(name) for name in header}
    picked = [row for row in rows if row[idx[metric]] != ""]
    if not picked:
        raise PlotDataError(f'{path}: column "{metric}" holds no values')
    x = np.array([float(row[idx[x_column]]) for row in picked])
    return Series(label=label, x=x, mean=np.array([float(row[idx[metric]]) for row in picked]))


def render_figure(spec: FigureSpec) -> plt.Figure:
    """Build the matplotlib figure for a spec without writing it."""
    series = [
        load_series(path, spec.metric, spec.x_axis, label)
        for path, label in zip(spec.csv_paths, spec.series_labels())
    ]
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=110)
    for entry in series:
        (line,) = ax.plot(entry.x, entry.mean, label=entry.label, linewidth=1.6)
        if entry.has_band:
            ax.fill_between(
                entry.x, entry.ci_low, entry.ci_high, color=line.get_color(), alpha=0.25, linewidth=0
            )
    ax.set_xlabel("iteration" if spec.x_axis == "iteration" else "cumulative samples")
    ax.set_ylabel(spec.metric)
    if spec.log_y:
        ax.set_yscale("log")
    if spec.log_x:
        ax.set_xscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    return fig


def plot_mean_ci(spec: FigureSpec) -> Path:
    """Render the spec and write the image file; returns the output path."""
    fig = render_figure(spec)
    output = Path(spec.output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(output)
    finally:
        plt.close(fig)
    return output
