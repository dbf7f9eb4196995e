"""Figure rendering for solver benchmark CSVs."""

__version__ = "0.1.0"

from .figures import FigureSpec, PlotDataError, load_series, plot_mean_ci, render_figure

__all__ = ["FigureSpec", "PlotDataError", "load_series", "plot_mean_ci", "render_figure"]
