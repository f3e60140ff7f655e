"""(V, gamma) parameter sweeps producing phase-diagram data."""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .localization import ipr_summary
from .model import IncommensurateWarning, ModelParams, ParameterError, build_hamiltonian, fibonacci_alpha
from .spectral import DEFAULT_IM_THRESHOLD, complex_dos, eigendecompose, max_abs_imag
from .topology import winding_number

__all__ = [
    "QUANTITIES",
    "WORKERS_ENV",
    "Cell",
    "GridSpec",
    "PhaseDiagram",
    "evaluate_point",
    "phase_scan",
    "resolve_workers",
]

QUANTITIES = ("max_im", "rho", "min_ipr", "w")
WORKERS_ENV = "MARYLANDLAB_WORKERS"


def _axis(rng, name):
    try:
        lo, hi, count = rng
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be (min, max, count)") from None
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ParameterError(f"{name} bounds must be finite")
    if int(count) != count or count < 1:
        raise ParameterError(f"{name} count must be a positive integer")
    count = int(count)
    if count == 1 and lo != hi:
        raise ParameterError(f"{name} with one point needs min == max")
    if count > 1 and hi <= lo:
        raise ParameterError(f"{name} needs max > min")
    return lo, hi, count


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (V, gamma) grid plus everything held fixed across it."""

    v_range: tuple = (0.0, 2.0, 41)
    gamma_range: tuple = (0.0, 1.5, 41)
    J: float = 1.0
    alpha_level: int = 13
    L: int | None = None
    n_theta: int = 256
    im_threshold: float = DEFAULT_IM_THRESHOLD
    E0: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "v_range", _axis(self.v_range, "v_range"))
        object.__setattr__(self, "gamma_range", _axis(self.gamma_range, "gamma_range"))
        if self.im_threshold <= 0:
            raise ParameterError("im_threshold must be positive")
        if self.n_theta < 64:
            raise ParameterError("n_theta must be at least 64")
        object.__setattr__(self, "E0", complex(self.E0))
        # validates J, alpha and L once, warning here rather than per cell
        self.params(self.v_values[0], self.gamma_values[0])

    @property
    def v_values(self) -> np.ndarray:
        return np.linspace(*self.v_range)

    @property
    def gamma_values(self) -> np.ndarray:
        return np.linspace(*self.gamma_range)

    @property
    def size(self) -> int:
        return self.v_range[2] * self.gamma_range[2]

    def params(self, V: float, gamma: float) -> ModelParams:
        alpha = fibonacci_alpha(self.alpha_level)
        L = alpha.denominator if self.L is None else self.L
        return ModelParams(J=self.J, V=float(V), gamma=float(gamma), alpha=alpha, L=L)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["v_range"] = list(self.v_range)
        d["gamma_range"] = list(self.gamma_range)
        d["E0"] = [self.E0.real, self.E0.imag]
        return d


@dataclass(frozen=True)
class Cell:
    V: float
    gamma: float
    max_im: float | None = None
    rho: float | None = None
    min_ipr: float | None = None
    w: int | None = None
    error: str | None = None


def evaluate_point(
    params: ModelParams,
    quantities=QUANTITIES,
    im_threshold: float = DEFAULT_IM_THRESHOLD,
    n_theta: int = 256,
    E0: complex = 0j,
) -> Cell:
    """All requested quantities at one parameter point.

    Failures are caught and stored in ``Cell.error`` so a sweep keeps going.
    """
    quantities = set(quantities)
    unknown = quantities - set(QUANTITIES)
    if unknown:
        raise ParameterError(f"unknown quantities: {sorted(unknown)}")
    out = {}
    try:
        if quantities & {"max_im", "rho", "min_ipr"}:
            spec = eigendecompose(build_hamiltonian(params), want_vectors="min_ipr" in quantities)
            if "max_im" in quantities:
                out["max_im"] = max_abs_imag(spec)
            if "rho" in quantities:
                out["rho"] = complex_dos(spec, im_threshold)
            if "min_ipr" in quantities:
                out["min_ipr"] = ipr_summary(spec).min
        if "w" in quantities:
            out["w"] = winding_number(params, E0=E0, n_theta=n_theta).w
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    return Cell(params.V, params.gamma, **out)


def _cell_task(args):
    spec, V, gamma, quantities = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IncommensurateWarning)
        params = spec.params(V, gamma)
    return evaluate_point(params, quantities, spec.im_threshold, spec.n_theta, spec.E0)


def resolve_workers(workers: int | None = None) -> int:
    """Explicit value, else ``$MARYLANDLAB_WORKERS``, else 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ParameterError(f"{WORKERS_ENV}={env!r} is not an integer") from None
        else:
            workers = 1
    if workers < 1:
        raise ParameterError("worker count must be at least 1")
    return workers


@dataclass
class PhaseDiagram:
    """Cells ordered by ``(V, gamma)``: V-major, gamma varying fastest."""

    grid: GridSpec
    quantities: tuple
    cells: list
    metadata: dict = field(default_factory=dict)

    def field(self, name: str) -> np.ndarray:
        """One quantity as a ``(v_count, gamma_count)`` float array, NaN where absent."""
        nv, ng = self.grid.v_range[2], self.grid.gamma_range[2]
        vals = [getattr(c, name) for c in self.cells]
        return np.array([math.nan if v is None else v for v in vals], dtype=float).reshape(nv, ng)


def phase_scan(spec: GridSpec, quantities=("max_im", "rho"), workers: int | None = None) -> PhaseDiagram:
    """Evaluate every grid cell, in parallel when ``workers > 1``.

    Output order is fixed by the grid, independent of completion order, and
    every cell goes through :func:`evaluate_point` exactly as a single-point
    call would.
    """
    quantities = tuple(q for q in QUANTITIES if q in set(quantities))
    if not quantities:
        raise ParameterError("no quantities requested")
    workers = resolve_workers(workers)
    tasks = [(spec, V, g, quantities) for V in spec.v_values for g in spec.gamma_values]
    start = time.perf_counter()
    if workers == 1:
        cells = [_cell_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (4 * workers))
            cells = list(pool.map(_cell_task, tasks, chunksize=chunk))
    metadata = {
        "code_version": __version__,
        "grid": spec.to_dict(),
        "quantities": list(quantities),
        "workers": workers,
        "wall_time_s": time.perf_counter() - start,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "failed_cells": sum(c.error is not None for c in cells),
    }
    return PhaseDiagram(spec, quantities, cells, metadata)
