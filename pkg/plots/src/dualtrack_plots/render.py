"""Two-panel convergence figures from solver trace CSVs.

Input files follow the trace schema emitted by the dualtrack harness (header
``k,grad_steps,exact_solves,comm_rounds,gap,delta_k,zeta1..zeta4,
lmi_violation``); this package only needs the iteration counters and the gap
column and never writes to its inputs.  The default figure puts the
optimality gap against gradient steps on the left panel and against
communication rounds on the right, log-scaled, one line per input series.

Rendering is deterministic for fixed inputs: fixed geometry, a pinned SVG
hash salt, and no embedded timestamps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

X_AXES = ("grad_steps", "comm_rounds")
X_LABELS = {"grad_steps": "gradient steps", "comm_rounds": "communication rounds"}
NEEDED_COLUMNS = ("k", "grad_steps", "comm_rounds", "gap")

FIGSIZE_TWO_PANEL = (10.0, 4.0)
FIGSIZE_ONE_PANEL = (5.5, 4.0)
DPI = 130
SVG_HASH_SALT = "dualtrack-plots"


class PlotInputError(ValueError):
    """A trace CSV does not conform to the expected schema."""


@dataclass(frozen=True)
class SeriesSpec:
    path: str
    label: str


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input traces, x-axis selection, scaling, output path.

    ``x_axis`` is ``grad_steps``, ``comm_rounds``, or ``both`` (two panels).
    The output path may name either image type; both a ``.png`` and an
    ``.svg`` are always written next to each other.
    """

    series: tuple[SeriesSpec, ...]
    out: str
    x_axis: str = "both"
    log_y: bool = True

    def __post_init__(self):
        if len(self.series) < 1:
            raise ValueError("figure needs at least one input series")
        labels = [s.label for s in self.series]
        if len(set(labels)) != len(labels):
            raise ValueError(f"series labels must be unique, got {labels}")
        if self.x_axis not in X_AXES + ("both",):
            raise ValueError(
                f"x_axis must be one of {X_AXES + ('both',)}, got {self.x_axis!r}"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "FigureSpec":
        try:
            series = tuple(
                SeriesSpec(path=str(s["path"]), label=str(s["label"]))
                for s in data["series"]
            )
            return cls(
                series=series,
                out=str(data["out"]),
                x_axis=str(data.get("x_axis", "both")),
                log_y=bool(data.get("log_y", True)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad figure spec: {exc}") from exc


def load_series(path) -> dict[str, np.ndarray]:
    """Read the columns this package plots, validating as it goes.

    Raises :class:`PlotInputError` naming the offending column (and row) on
    any schema mismatch: missing column, missing value, or a value that does
    not parse as a float.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise PlotInputError(f"{path}: empty file, expected a trace header")
        for column in NEEDED_COLUMNS:
            if column not in header:
                raise PlotInputError(f"{path}: column {column!r} missing from header")
        data: dict[str, list[float]] = {c: [] for c in NEEDED_COLUMNS}
        for index, record in enumerate(reader, start=2):
            for column in NEEDED_COLUMNS:
                raw = record.get(column)
                if raw is None or raw == "":
                    raise PlotInputError(
                        f"{path}: column {column!r} has no value at line {index}"
                    )
                try:
                    data[column].append(float(raw))
                except ValueError:
                    raise PlotInputError(
                        f"{path}: column {column!r} value {raw!r} at line {index} "
                        "is not a number"
                    ) from None
    if not data["gap"]:
        raise PlotInputError(f"{path}: no data rows")
    return {c: np.asarray(v) for c, v in data.items()}


def render_figure(spec: FigureSpec):
    """Build the matplotlib figure (no file output); used by render and tests."""
    loaded = [(s.label, load_series(s.path)) for s in spec.series]
    axes_kinds = X_AXES if spec.x_axis == "both" else (spec.x_axis,)
    figsize = FIGSIZE_TWO_PANEL if len(axes_kinds) == 2 else FIGSIZE_ONE_PANEL
    fig, axes = plt.subplots(1, len(axes_kinds), figsize=figsize, squeeze=False)
    for ax, kind in zip(axes[0], axes_kinds):
        for label, cols in loaded:
            ax.plot(cols[kind], cols["gap"], label=label, linewidth=1.2)
        if spec.log_y:
            ax.set_yscale("log")
        ax.set_xlabel(X_LABELS[kind])
        ax.set_ylabel("optimality gap")
        ax.grid(True, which="both", alpha=0.25, linewidth=0.4)
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> tuple[Path, Path]:
    """Render the figure and write both PNG and SVG next to the output path."""
    fig = render_figure(spec)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    png = out.with_suffix(".png")
    svg = out.with_suffix(".svg")
    try:
        with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
            fig.savefig(png, dpi=DPI)
            fig.savefig(svg, metadata={"Date": None})
    finally:
        plt.close(fig)
    return png, svg
