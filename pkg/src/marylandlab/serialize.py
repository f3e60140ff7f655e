"""CSV / JSON output for spectra, state tables, windings, reports and scans.

CSV layouts (header row first, one record per line):

==================  ==========================================================
spectrum / states   index, re_E, im_E, residual, ipr, ellipse_value, label
phase diagram       V, gamma, max_im, rho, min_ipr, w   (sorted by V, gamma)
winding             theta, phase
IPR summary         min, max, mean
Floquet report      index, re_E, im_E, eigen_residual, ratio_residual,
                    unverifiable_sites, min_quasienergy
==================  ==========================================================

Absent values are empty fields.  Floats are written with 17 significant
digits so they parse back to the same double.  JSON documents have the form
``{"metadata": {...}, "data": ...}`` with the same field names; only the
metadata block may differ between otherwise identical runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .floquet import FloquetReport
from .localization import IprSummary, StateDiagnostics, ipr_values
from .scan import PhaseDiagram
from .spectral import Spectrum
from .topology import WindingResult

__all__ = ["FORMATS", "OutputError", "emit", "render", "table"]

FORMATS = ("csv", "json")

STATE_COLUMNS = ["index", "re_E", "im_E", "residual", "ipr", "ellipse_value", "label"]
PHASE_COLUMNS = ["V", "gamma", "max_im", "rho", "min_ipr", "w"]
WINDING_COLUMNS = ["theta", "phase"]
SUMMARY_COLUMNS = ["min", "max", "mean"]
FLOQUET_COLUMNS = [
    "index", "re_E", "im_E", "eigen_residual", "ratio_residual",
    "unverifiable_sites", "min_quasienergy",
]


class OutputError(OSError):
    pass


def _num(x):
    """Plain Python scalar, None for missing or NaN."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return None if math.isnan(x) else x


def table(result) -> tuple[list[str], list[list]]:
    """Column names and rows for any supported result type."""
    if isinstance(result, Spectrum):
        ipr = ipr_values(result) if result.has_vectors else None
        rows = []
        for i, E in enumerate(result.eigenvalues):
            res = None if result.residuals is None else result.residuals[i]
            rows.append([i, E.real, E.imag, res, None if ipr is None else ipr[i], None, None])
        return STATE_COLUMNS, [[_num(v) if not isinstance(v, str) else v for v in r] for r in rows]
    if isinstance(result, (list, tuple)) and all(isinstance(s, StateDiagnostics) for s in result):
        rows = [
            [i, _num(s.energy.real), _num(s.energy.imag), _num(s.residual), _num(s.ipr),
             _num(s.ellipse_value), s.label]
            for i, s in enumerate(result)
        ]
        return STATE_COLUMNS, rows
    if isinstance(result, PhaseDiagram):
        cells = sorted(result.cells, key=lambda c: (c.V, c.gamma))
        rows = [[_num(c.V), _num(c.gamma), _num(c.max_im), _num(c.rho), _num(c.min_ipr), _num(c.w)]
                for c in cells]
        return PHASE_COLUMNS, rows
    if isinstance(result, WindingResult):
        return WINDING_COLUMNS, [[_num(t), _num(p)] for t, p in zip(result.theta_grid, result.phase_trace)]
    if isinstance(result, IprSummary):
        return SUMMARY_COLUMNS, [[_num(result.min), _num(result.max), _num(result.mean)]]
    if isinstance(result, FloquetReport):
        quasi = result.min_quasienergy
        rows = [
            [i, _num(E.real), _num(E.imag), _num(result.eigen_residuals[i]),
             _num(result.ratio_residuals[i]), _num(result.unverifiable_counts[i]),
             None if quasi is None else _num(quasi[i])]
            for i, E in enumerate(result.energies)
        ]
        return FLOQUET_COLUMNS, rows
    raise TypeError(f"cannot serialise {type(result).__name__}")


def _extra(result) -> dict:
    """Scalar fields that do not fit the row layout."""
    if isinstance(result, WindingResult):
        E0 = complex(result.base_energy)
        return {"w": int(result.w), "base_energy": [E0.real, E0.imag], "refined": bool(result.refined)}
    if isinstance(result, FloquetReport):
        k = complex(result.kick_worked_value)
        return {
            "kick_worked_value": [k.real, k.imag],
            "kick_max_residual": _num(result.kick_max_residual),
            "kick_samples": int(result.kick_samples),
        }
    if isinstance(result, PhaseDiagram):
        errors = {f"{c.V!r},{c.gamma!r}": c.error for c in result.cells if c.error}
        return {"grid": result.grid.to_dict(), "quantities": list(result.quantities), "errors": errors}
    return {}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render(result, fmt: str = "csv", metadata: dict | None = None) -> str:
    """Serialise ``result`` to a string."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    columns, rows = table(result)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([[_fmt(v) for v in r] for r in rows])
        return buf.getvalue()
    meta = {"code_version": __version__}
    if isinstance(result, PhaseDiagram):
        meta.update(result.metadata)
    meta.update(metadata or {})
    data = {"columns": columns, "rows": rows, **_extra(result)}
    return json.dumps({"metadata": meta, "data": data}, indent=1, allow_nan=False, default=_num) + "\n"


def emit(result, fmt: str = "csv", destination=None, metadata: dict | None = None) -> None:
    """Write ``result`` to a path, an open text stream, or stdout (``None`` or ``"-"``)."""
    text = render(result, fmt, metadata)
    if destination is None or destination == "-":
        sys.stdout.write(text)
        return
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
