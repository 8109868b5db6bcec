"""Convergence-figure rendering for dualtrack trace CSVs."""

from .render import (
    FigureSpec,
    PlotInputError,
    SeriesSpec,
    load_series,
    render,
    render_figure,
)

__version__ = "0.1.0"
