"""Per-iteration metric records and their CSV serialization.

CSV schema (header mandatory, rows newline-terminated)::

    k,grad_steps,exact_solves,comm_rounds,gap,delta_k,zeta1,zeta2,zeta3,zeta4,lmi_violation

Floats are written with ``repr`` (shortest round-trip form), so a replay with
the same configuration produces byte-identical files.  ``delta_k`` is the
accuracy schedule value delta0 * gamma^k (0 for exact solves, ``nan`` for
fixed-budget runs, which carry no certified accuracy); ``lmi_violation`` is
the raw exceedance of the error-propagation bound on the transition into row
k (``nan`` when not applicable).  Exact subproblem solves are counted in
``exact_solves``, never in ``grad_steps``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

CSV_COLUMNS = (
    "k", "grad_steps", "exact_solves", "comm_rounds", "gap", "delta_k",
    "zeta1", "zeta2", "zeta3", "zeta4", "lmi_violation",
)
_INT_COLUMNS = ("k", "grad_steps", "exact_solves", "comm_rounds")


@dataclass(frozen=True)
class TraceRow:
    k: int
    grad_steps: int
    exact_solves: int
    comm_rounds: int
    gap: float
    delta_k: float
    zeta1: float
    zeta2: float
    zeta3: float
    zeta4: float
    lmi_violation: float


@dataclass(eq=False)
class Trace:
    """Sequence of per-iteration rows plus the final outer state."""

    rows: list[TraceRow]
    final_state: object = None

    def column(self, name: str) -> np.ndarray:
        if name not in CSV_COLUMNS:
            raise KeyError(f"unknown trace column {name!r}")
        dtype = int if name in _INT_COLUMNS else float
        return np.array([getattr(r, name) for r in self.rows], dtype=dtype)

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap

    @property
    def iterations(self) -> int:
        return self.rows[-1].k


def _fmt(value) -> str:
    return repr(float(value))


def write_trace_csv(trace: Trace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    for r in trace.rows:
        cells = [str(getattr(r, c)) for c in _INT_COLUMNS]
        cells += [_fmt(getattr(r, c)) for c in CSV_COLUMNS[len(_INT_COLUMNS):]]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> Trace:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(
                f"unexpected trace header in {path}: {reader.fieldnames}"
            )
        for record in reader:
            kwargs = {}
            for f in fields(TraceRow):
                raw = record[f.name]
                kwargs[f.name] = int(raw) if f.name in _INT_COLUMNS else float(raw)
            rows.append(TraceRow(**kwargs))
    return Trace(rows=rows)
