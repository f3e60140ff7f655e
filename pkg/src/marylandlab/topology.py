"""Spectral winding number from the phase of ``det[H(theta) - E0]``."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .model import ModelParams, build_hamiltonian

__all__ = [
    "CommensurateWindingWarning",
    "SingularMatrixError",
    "WindingError",
    "WindingResult",
    "log_det",
    "winding_number",
]

_TWO_PI = 2.0 * math.pi


class SingularMatrixError(ArithmeticError):
    """The matrix is exactly singular; ``theta`` names the twist if known."""

    def __init__(self, message: str, theta: float | None = None):
        super().__init__(message)
        self.theta = theta


class WindingError(ArithmeticError):
    """The accumulated phase did not settle on an integer winding."""


class CommensurateWindingWarning(UserWarning):
    """``E0 = 0`` on a ring whose length is a multiple of ``q``.

    The potential is then exactly antisymmetric about the zero-potential
    site and ``E = 0`` is an eigenvalue of the untwisted ring whenever the
    state there is localized, so the winding about zero is ill-defined.
    Use ``L`` incommensurate with ``q`` (e.g. ``L = 377`` with
    ``alpha = 610/987``).
    """


def _wrap(phase):
    """Reduce to (-pi, pi]."""
    return math.pi - np.mod(math.pi - phase, _TWO_PI)


def log_det(M: np.ndarray) -> tuple[float, float]:
    """``(log|det M|, arg det M)`` from an LU factorisation.

    The determinant itself is never formed; for the chains of interest it
    overflows long before the matrix gets large.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] == 0:
        return 0.0, 0.0
    with warnings.catch_warnings():
        # exact singularity is reported below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    d = np.diagonal(lu)
    if np.any(d == 0):
        raise SingularMatrixError("matrix is exactly singular")
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    phase = float(np.sum(np.angle(d))) + math.pi * (swaps % 2)
    return float(np.sum(np.log(np.abs(d)))), float(_wrap(phase))


@dataclass(frozen=True)
class WindingResult:
    """Integer winding ``w`` with the unwrapped phase trace behind it."""

    w: int
    base_energy: complex
    theta_grid: np.ndarray
    phase_trace: np.ndarray
    refined: bool = False


def winding_number(
    params: ModelParams,
    E0: complex = 0.0,
    n_theta: int = 256,
    max_jump: float = math.pi / 2,
    max_depth: int = 30,
) -> WindingResult:
    """Number of times ``det[H(theta) - E0]`` encircles zero as ``theta`` runs 0 -> 2 pi.

    The twist stored in ``params`` is ignored.  Phases are sampled on a
    uniform grid and unwrapped step by step; any step whose wrapped phase
    increment reaches ``max_jump`` is bisected until it does not (or until
    ``max_depth`` halvings, after which :class:`WindingError` is raised).

    Raises
    ------
    SingularMatrixError
        ``E0`` is an eigenvalue of ``H(theta)`` at some sampled ``theta``.
    WindingError
        The total phase change is not an integer multiple of ``2 pi``.
    """
    if n_theta < 64:
        raise ValueError("n_theta must be at least 64")
    E0 = complex(E0)
    if E0 == 0 and params.commensurate and params.V != 0:
        warnings.warn(
            f"winding about E0 = 0 on a commensurate ring (L = {params.L}, q = {params.q}) "
            "is ill-defined in the localized phase",
            CommensurateWindingWarning,
            stacklevel=2,
        )
    eye = np.eye(params.L)

    def phase_at(theta):
        H = build_hamiltonian(params.replace(theta=float(theta)))
        theta = float(theta)
        try:
            return log_det(H - E0 * eye)[1]
        except SingularMatrixError:
            raise SingularMatrixError(
                f"E0 = {E0} is an eigenvalue of H(theta) at theta = {float(theta)!r}", float(theta)
            ) from None

    grid = list(_TWO_PI * np.arange(n_theta + 1) / n_theta)
    # theta = 2 pi is evaluated, not copied from 0, so the integer check is real
    phases = [phase_at(t) for t in grid]
    thetas, trace = [grid[0]], [phases[0]]
    refined = False

    def walk(t0, p0, t1, p1, depth):
        nonlocal refined
        step = float(_wrap(p1 - p0))
        if abs(step) < max_jump:
            thetas.append(t1)
            trace.append(trace[-1] + step)
            return
        if depth >= max_depth:
            raise WindingError(
                f"phase jump {step:.3g} at theta in [{float(t0)!r}, {float(t1)!r}] persists after "
                f"{max_depth} bisections; E0 may lie on the spectral curve"
            )
        refined = True
        tm = 0.5 * (t0 + t1)
        pm = phase_at(tm)
        walk(t0, p0, tm, pm, depth + 1)
        walk(tm, pm, t1, p1, depth + 1)

    for k in range(n_theta):
        walk(grid[k], phases[k], grid[k + 1], phases[k + 1], 0)

    total = (trace[-1] - trace[0]) / _TWO_PI
    w = int(round(total))
    if abs(total - w) > 1e-6:
        raise WindingError(f"accumulated winding {total!r} is not an integer")
    return WindingResult(w, E0, np.asarray(thetas), np.asarray(trace), refined)
