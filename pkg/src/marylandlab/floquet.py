"""Lattice eigenproblem <-> kicked particle with linear kinetic energy.

Three checks live here:

* the eigen-equation rearranged into a per-site Moebius ratio that must
  equal ``exp(-2 pi i alpha n)``;
* the kick function ``K(x) = 2 arctan[(2J/V) cos(x - i gamma) - E/V]``
  reproducing that ratio as ``exp(-i K(x))``;
* the one-period propagator of the kicked particle on a ``q``-point ring,
  whose quasienergy spectrum should contain zero when ``E`` is a lattice
  eigenvalue.

With ``J = 1`` everything reduces to the standard form; general ``J``
enters only through ``2J/V`` in the kick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, _reduced_residues
from .spectral import Spectrum

__all__ = [
    "FloquetReport",
    "KickPoleError",
    "RatioCheck",
    "RingPropagator",
    "RingSpectrum",
    "eigenpair_ratio_check",
    "floquet_report",
    "kick_function",
    "kick_identity_check",
    "kick_sample_residual",
    "mobius_ratio",
    "ring_propagator",
    "ring_propagator_spectrum",
]

POLE_TOL = 1e-12


class KickPoleError(ValueError):
    """The Moebius denominator vanishes; ``points`` lists the offending x."""

    def __init__(self, message: str, points=()):
        super().__init__(message)
        self.points = tuple(points)


@dataclass(frozen=True)
class RatioCheck:
    max_residual: float
    unverifiable: tuple[int, ...]  # 1-based sites with ill-conditioned ratios


def eigenpair_ratio_check(
    E: complex, psi, params: ModelParams, floor: float = POLE_TOL
) -> RatioCheck:
    """Largest ``|N_n / D_n - exp(-2 pi i alpha n)|`` over verifiable sites.

    ``N_n, D_n = V psi_n -+ i (E psi_n - hop_n)`` where ``hop_n`` collects the
    two hopping terms of site ``n`` (twist included).  Sites with
    ``|D_n| < floor * ||psi||`` are skipped and reported.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    L = params.L
    if psi.shape != (L,):
        raise ValueError(f"psi has length {psi.size}, expected {L}")
    phase = params.theta / L
    left = params.J * np.exp(-params.gamma - 1j * phase)
    right = params.J * np.exp(params.gamma + 1j * phase)
    hop = left * np.roll(psi, -1) + right * np.roll(psi, 1)
    s = E * psi - hop
    num = params.V * psi - 1j * s
    den = params.V * psi + 1j * s
    n = np.arange(1, L + 1)
    target = np.exp(-2j * np.pi * _reduced_residues(params.p, params.q, n) / params.q)
    ok = np.abs(den) >= floor * np.linalg.norm(psi)
    bad = tuple(int(k) for k in n[~ok])
    if not ok.any():
        return RatioCheck(math.nan, bad)
    res = np.abs(num[ok] / den[ok] - target[ok])
    return RatioCheck(float(res.max()), bad)


def _cos_shifted(x, gamma, shift=0.0):
    return np.cos(np.asarray(x) + shift - 1j * gamma)


def mobius_ratio(x, E, V, gamma, J=1.0, shift=0.0):
    """``(1 + iE/V - i(2J/V)cos) / (1 - iE/V + i(2J/V)cos)`` at ``x``."""
    c = (2.0 * J / V) * _cos_shifted(x, gamma, shift)
    return (1 + 1j * E / V - 1j * c) / (1 - 1j * E / V + 1j * c)


def kick_function(x, E, V, gamma, J=1.0, shift=0.0):
    """Complex kick ``K(x)``, principal branch of the complex arctan."""
    return 2.0 * np.arctan((2.0 * J / V) * _cos_shifted(x, gamma, shift) - E / V)


def kick_identity_check(x: float, E: complex, V: float, gamma: float, J: float = 1.0) -> float:
    """``|exp(-i K(x)) - Moebius ratio|``.

    The identity ``exp(-2i arctan z) = (1 - iz)/(1 + iz)`` holds on every
    branch of arctan, so no branch bookkeeping is needed.
    """
    if V == 0:
        raise ValueError("V must be nonzero")
    den = 1 - 1j * E / V + 1j * (2.0 * J / V) * complex(_cos_shifted(x, gamma))
    if abs(den) < POLE_TOL:
        raise KickPoleError(f"kick pole at x = {x!r}", [x])
    K = complex(kick_function(x, E, V, gamma, J))
    return abs(np.exp(-1j * K) - mobius_ratio(x, E, V, gamma, J))


@dataclass(frozen=True)
class RingPropagator:
    matrix: np.ndarray
    kinetic_phases: np.ndarray
    kick_factors: np.ndarray
    grid: np.ndarray


def ring_propagator(params: ModelParams, E: complex) -> RingPropagator:
    """One-period propagator ``diag(exp(-iK(x_m))) . T`` on ``x_m = 2 pi m / q``.

    ``T`` is the free linear-dispersion evolution, diagonal in momentum with
    factors ``exp(-2 pi i p n / q)``; on the ring it shifts by ``p`` sites.
    """
    if params.L != params.q:
        raise ValueError(f"ring propagator needs L == q, got L={params.L}, q={params.q}")
    if params.V == 0:
        raise ValueError("V must be nonzero")
    q, p = params.q, params.p
    x = 2.0 * np.pi * np.arange(q) / q
    shift = params.theta / params.L
    den = 1 - 1j * E / params.V + 1j * (2.0 * params.J / params.V) * _cos_shifted(
        x, params.gamma, shift
    )
    poles = np.flatnonzero(np.abs(den) < POLE_TOL)
    if poles.size:
        raise KickPoleError(f"kick poles at grid points {poles.tolist()}", x[poles])
    K = kick_function(x, E, params.V, params.gamma, params.J, shift)
    kick = np.exp(-1j * K)
    kinetic = np.exp(-2j * np.pi * _reduced_residues(p, q, np.arange(q)) / q)
    # T = F^-1 diag(kinetic) F, built column by column from unit vectors
    T = np.fft.ifft(kinetic[:, None] * np.fft.fft(np.eye(q), axis=0), axis=0)
    return RingPropagator(kick[:, None] * T, kinetic, kick, x)


@dataclass(frozen=True)
class RingSpectrum:
    quasienergies: np.ndarray  # eps with eigenvalue exp(-i eps); complex off the unitary case
    min_abs: float


def ring_propagator_spectrum(params: ModelParams, E: complex) -> RingSpectrum:
    """Quasienergies ``eps = i log(lambda)`` of the ring propagator."""
    U = ring_propagator(params, E).matrix
    lam = np.linalg.eigvals(U)
    eps = 1j * np.log(lam)
    order = np.argsort(np.abs(eps), kind="stable")
    eps = eps[order]
    return RingSpectrum(eps, float(np.abs(eps[0])))


@dataclass(frozen=True)
class FloquetReport:
    """Per-eigenpair results of the mapping checks."""

    energies: np.ndarray
    ratio_residuals: np.ndarray
    eigen_residuals: np.ndarray
    unverifiable_counts: np.ndarray
    min_quasienergy: np.ndarray | None  # only for L == q
    kick_worked_value: complex
    kick_max_residual: float
    kick_samples: int


RING_AUTO_MAX_L = 200


def floquet_report(
    spectrum: Spectrum,
    params: ModelParams,
    kick_samples: int = 10_000,
    seed: int = 0,
    ring: bool | None = None,
) -> FloquetReport:
    """Run the ratio check on every eigenpair plus the kick and ring checks.

    The ring check costs one ``q x q`` eigensolve per eigenvalue; with
    ``ring=None`` it runs only for commensurate rings up to
    ``RING_AUTO_MAX_L`` sites.
    """
    if not spectrum.has_vectors:
        raise ValueError("spectrum was computed without eigenvectors")
    n = len(spectrum)
    ratio = np.empty(n)
    skipped = np.empty(n, dtype=int)
    for i in range(n):
        chk = eigenpair_ratio_check(spectrum.eigenvalues[i], spectrum.vectors[:, i], params)
        ratio[i] = chk.max_residual
        skipped[i] = len(chk.unverifiable)
    quasi = None
    if ring is None:
        ring = params.L <= RING_AUTO_MAX_L
    if ring and params.L == params.q and params.V != 0:
        quasi = np.full(n, math.nan)
        for i, E in enumerate(spectrum.eigenvalues):
            try:
                quasi[i] = ring_propagator_spectrum(params, complex(E)).min_abs
            except KickPoleError:
                pass
    worked = complex(np.exp(-1j * kick_function(0.0, 0.0, 1.0, 0.0)))
    kick_max = kick_sample_residual(kick_samples, seed)
    return FloquetReport(
        np.asarray(spectrum.eigenvalues),
        ratio,
        np.asarray(spectrum.residuals),
        skipped,
        quasi,
        worked,
        kick_max,
        kick_samples,
    )


def kick_sample_residual(samples: int, seed: int = 0) -> float:
    """Largest kick-identity residual over random points of a bounded box.

    Box: ``x in [0, 2 pi)``, ``Re E, Im E in [-3, 3]``, ``V in [0.2, 3]``,
    ``gamma in [-1.5, 1.5]``, ``J = 1``.  Poles are skipped.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 2.0 * np.pi, samples)
    E = rng.uniform(-3, 3, samples) + 1j * rng.uniform(-3, 3, samples)
    V = rng.uniform(0.2, 3.0, samples)
    g = rng.uniform(-1.5, 1.5, samples)
    worst = 0.0
    for args in zip(x, E, V, g):
        try:
            worst = max(worst, kick_identity_check(*args))
        except KickPoleError:
            continue
    return worst
