"""Inverse participation ratios, the mobility-edge ellipse and state labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams
from .spectral import DEFAULT_IM_THRESHOLD, Spectrum

__all__ = [
    "EXTENDED",
    "LOCALIZED",
    "IprSummary",
    "StateDiagnostics",
    "classify_states",
    "ellipse_value",
    "ipr",
    "ipr_summary",
    "ipr_values",
]

EXTENDED = "extended"
LOCALIZED = "localized"


def ipr(psi) -> float:
    """Inverse participation ratio ``sum |psi_n|^4`` of a state.

    The state is renormalised first if its norm is off by more than 1e-12.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = float(np.linalg.norm(psi))
    if norm == 0.0:
        raise ValueError("cannot compute the IPR of a zero vector")
    if abs(norm - 1.0) > 1e-12:
        psi = psi / norm
    return float(np.sum(np.abs(psi) ** 4))


def ipr_values(spectrum: Spectrum) -> np.ndarray:
    """IPR of every eigenvector column."""
    if not spectrum.has_vectors:
        raise ValueError("spectrum was computed without eigenvectors")
    prob = np.abs(spectrum.vectors) ** 2
    prob /= prob.sum(axis=0)
    return np.sum(prob**2, axis=0)


@dataclass(frozen=True)
class IprSummary:
    min: float
    max: float
    mean: float


def ipr_summary(spectrum: Spectrum) -> IprSummary:
    values = ipr_values(spectrum)
    return IprSummary(float(values.min()), float(values.max()), float(values.mean()))


def ellipse_value(E: complex, J: float, V: float, gamma: float) -> float:
    """Left-hand side of the mobility-edge ellipse at ``Re E``.

    ``V^2 / (2J sinh gamma)^2 + (Re E)^2 / (2J cosh gamma)^2``.  Values below
    one lie on the extended side, above one on the localized side.  There is
    no mobility edge in the reciprocal limit, so ``gamma == 0`` raises.
    """
    if gamma == 0:
        raise ValueError("no mobility edge at gamma = 0 (Hermitian limit)")
    re = complex(E).real
    return V**2 / (2.0 * J * math.sinh(gamma)) ** 2 + re**2 / (2.0 * J * math.cosh(gamma)) ** 2


@dataclass(frozen=True)
class StateDiagnostics:
    energy: complex
    ipr: float
    ellipse_value: float | None  # None at gamma == 0
    label: str
    residual: float | None = None


def classify_states(
    spectrum: Spectrum, params: ModelParams, im_threshold: float = DEFAULT_IM_THRESHOLD
) -> list[StateDiagnostics]:
    """Per-state diagnostics in spectrum order.

    A state is labelled extended iff ``|Im E| > im_threshold``.  The IPR and
    the ellipse value are carried along so the two classifiers can be
    compared, but they never decide the label.
    """
    values = ipr_values(spectrum)
    out = []
    for i, E in enumerate(spectrum.eigenvalues):
        E = complex(E)
        ell = None if params.gamma == 0 else ellipse_value(E, params.J, params.V, params.gamma)
        label = EXTENDED if abs(E.imag) > im_threshold else LOCALIZED
        res = None if spectrum.residuals is None else float(spectrum.residuals[i])
        out.append(StateDiagnostics(E, float(values[i]), ell, label, res))
    return out
