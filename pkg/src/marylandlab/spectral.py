"""Dense non-Hermitian eigensolves, spectral diagnostics and the analytic loop."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "DEFAULT_IM_THRESHOLD",
    "TOL_EIG",
    "EigensolverError",
    "LoopMatch",
    "LoopPoint",
    "Spectrum",
    "analytic_loop",
    "complex_dos",
    "critical_gamma",
    "distance_to_loop",
    "eigendecompose",
    "loop_branches",
    "match_loop",
    "max_abs_imag",
    "matrix_norm",
]

TOL_EIG = 1e-10
DEFAULT_IM_THRESHOLD = 1e-5
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class EigensolverError(ArithmeticError):
    """The QR iteration did not converge.

    ``index`` is the first eigenvalue index (0-based) that failed to
    converge when LAPACK reports it, else ``None``.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by ``(Re, Im)`` with optional right eigenvectors.

    Column ``i`` of ``vectors`` has unit Euclidean norm and belongs to
    ``eigenvalues[i]``; ``residuals[i] = ||H v_i - E_i v_i||``.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    norm: float = 0.0

    def __post_init__(self):
        for arr in (self.eigenvalues, self.vectors, self.residuals):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def has_vectors(self) -> bool:
        return self.vectors is not None


def matrix_norm(H: np.ndarray) -> float:
    """Infinity norm (max absolute row sum)."""
    return float(np.abs(H).sum(axis=1).max()) if H.size else 0.0


def _fold_permutation(n: int) -> np.ndarray:
    # 0, n-1, 1, n-2, ...: turns a ring into a band of half-width 2
    perm = np.empty(n, dtype=np.intp)
    perm[0::2] = np.arange((n + 1) // 2)
    perm[1::2] = n - 1 - np.arange(n // 2)
    return perm


def _banded(A: np.ndarray, width: int) -> np.ndarray:
    n = A.shape[0]
    ab = np.zeros((2 * width + 1, n), dtype=complex)
    for k in range(-width, width + 1):
        diag = np.diagonal(A, k)
        if k >= 0:
            ab[width - k, k:] = diag
        else:
            ab[width - k, : n + k] = diag
    return ab


def _refine_vectors(H: np.ndarray, w: np.ndarray, V: np.ndarray) -> np.ndarray:
    """One inverse-iteration step per eigenpair.

    LAPACK vectors are only normwise accurate; tail components of localized
    states then carry O(eps ||H||) absolute noise.  A solve with the banded
    form of ``H - E`` is componentwise accurate, which the per-site ratio
    checks in :mod:`marylandlab.floquet` rely on.  Matrices that do not fold
    into a band fall back to a dense LU per eigenvalue.
    """
    n = H.shape[0]
    perm = _fold_permutation(n)
    Hp = H[np.ix_(perm, perm)]
    rows, cols = np.nonzero(Hp)
    width = int(np.abs(rows - cols).max()) if rows.size else 0
    out = np.empty_like(V, dtype=complex)
    if width <= 2:
        base = _banded(Hp.astype(complex), 2)
        for k in range(n):
            ab = base.copy()
            ab[2] -= w[k]
            try:
                x = sla.solve_banded((2, 2), ab, V[perm, k], check_finite=False)
            except np.linalg.LinAlgError:
                out[:, k] = V[:, k]
                continue
            y = np.empty(n, dtype=complex)
            y[perm] = x
            out[:, k] = y
    else:
        eye = np.eye(n)
        for k in range(n):
            try:
                lu = sla.lu_factor(H - w[k] * eye, check_finite=False)
                out[:, k] = sla.lu_solve(lu, V[:, k], check_finite=False)
            except (np.linalg.LinAlgError, ValueError):
                out[:, k] = V[:, k]
    norms = np.linalg.norm(out, axis=0)
    bad = ~np.isfinite(norms) | (norms == 0)
    out[:, bad] = V[:, bad]
    norms[bad] = 1.0
    return out / norms


def eigendecompose(H: np.ndarray, want_vectors: bool = False) -> Spectrum:
    """All eigenvalues of a dense square matrix, optionally with right vectors.

    LAPACK ``geev`` balances the matrix, reduces it to Hessenberg form and
    runs shifted QR.  Real input (``theta = 0``) is passed as real so that
    complex eigenvalues come in exact conjugate pairs and real ones carry an
    exactly zero imaginary part.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    try:
        if want_vectors:
            w, V = sla.eig(H, check_finite=False)
        else:
            w = sla.eigvals(H, check_finite=False)
    except np.linalg.LinAlgError as exc:
        m = re.search(r"order\s*>=\s*(\d+)", str(exc))
        index = int(m.group(1)) - 1 if m else None
        raise EigensolverError(f"eigensolver failed: {exc}", index) from exc
    w = np.asarray(w, dtype=complex)
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    norm = matrix_norm(H)
    if not want_vectors:
        return Spectrum(w, norm=norm)

    V = np.asarray(V, dtype=complex)[:, order]
    V = V / np.linalg.norm(V, axis=0)
    raw_res = np.linalg.norm(H @ V - V * w, axis=0)
    refined = _refine_vectors(H, w, V)
    ref_res = np.linalg.norm(H @ refined - refined * w, axis=0)
    # keep the refined vector unless it breaks the residual contract
    keep_raw = (ref_res > TOL_EIG * norm) & (raw_res < ref_res)
    refined[:, keep_raw] = V[:, keep_raw]
    residuals = np.where(keep_raw, raw_res, ref_res)
    return Spectrum(w, refined, residuals, norm)


def max_abs_imag(s: Spectrum) -> float:
    """Largest ``|Im E|`` in the spectrum."""
    if len(s) == 0:
        return 0.0
    return float(np.abs(np.asarray(s.eigenvalues).imag).max())


def complex_dos(s: Spectrum, im_threshold: float = DEFAULT_IM_THRESHOLD) -> float:
    """Fraction of eigenvalues with ``|Im E| > im_threshold``."""
    if im_threshold <= 0:
        raise ValueError("im_threshold must be positive")
    if len(s) == 0:
        return 0.0
    count = np.count_nonzero(np.abs(np.asarray(s.eigenvalues).imag) > im_threshold)
    return count / len(s)


@dataclass(frozen=True)
class LoopPoint:
    beta: float
    e_plus: complex
    e_minus: complex


def loop_branches(J: float, V: float, gamma: float, beta):
    """Both branches ``2J cos(beta - i gamma) +- iV`` (vectorised over beta)."""
    beta = np.asarray(beta, dtype=float)
    centre = 2.0 * J * (np.cos(beta) * math.cosh(gamma) + 1j * np.sin(beta) * math.sinh(gamma))
    return centre + 1j * V, centre - 1j * V


def analytic_loop(J: float, V: float, gamma: float, beta: float) -> LoopPoint:
    """Point of the analytic dispersion loop at quasi-momentum ``beta``."""
    plus, minus = loop_branches(J, V, gamma, beta)
    return LoopPoint(float(beta), complex(plus), complex(minus))


def critical_gamma(J: float, V: float) -> float:
    """``arcsinh(|V| / 2|J|)``; the spectrum is real iff ``|gamma|`` is below it."""
    if J == 0:
        raise ValueError("J must be nonzero")
    return math.asinh(abs(V) / (2.0 * abs(J)))


@dataclass(frozen=True)
class LoopMatch:
    distance: float
    branch: str  # "+" or "-"
    beta: float


def _golden_min(f, a: float, b: float, tol: float):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def match_loop(
    E: complex,
    J: float,
    V: float,
    gamma: float,
    n_beta: int = 4096,
    tol: float = 1e-12,
    n_candidates: int = 3,
) -> LoopMatch:
    """Closest point of the analytic loop to ``E``, over both branches.

    Samples ``n_beta`` values of ``beta`` in ``[-pi, pi)``, then refines the
    best few sampled minima of each branch by golden-section search.
    """
    if n_beta < 8:
        raise ValueError("n_beta must be at least 8")
    E = complex(E)
    beta = -math.pi + 2.0 * math.pi * np.arange(n_beta) / n_beta
    step = 2.0 * math.pi / n_beta
    best = LoopMatch(math.inf, "+", 0.0)
    for sign, branch in ((1.0, "+"), (-1.0, "-")):
        dist = np.abs(E - loop_branches(J, V, gamma, beta)[0 if sign > 0 else 1])
        k0 = int(np.argmin(dist))
        if dist[k0] < best.distance:
            best = LoopMatch(float(dist[k0]), branch, float(beta[k0]))
        # local minima on the periodic grid
        is_min = (dist <= np.roll(dist, 1)) & (dist <= np.roll(dist, -1))
        cand = np.flatnonzero(is_min)
        cand = cand[np.argsort(dist[cand])][:n_candidates]

        def f(b, sign=sign):
            return abs(E - (2.0 * J * (math.cos(b) * math.cosh(gamma)
                                       + 1j * math.sin(b) * math.sinh(gamma)) + sign * 1j * V))

        for k in cand:
            b, fb = _golden_min(f, beta[k] - step, beta[k] + step, tol)
            if fb < best.distance:
                b = (b + math.pi) % (2.0 * math.pi) - math.pi
                best = LoopMatch(float(fb), branch, float(b))
    return best


def distance_to_loop(
    E: complex, J: float, V: float, gamma: float, n_beta: int = 4096, tol: float = 1e-12
) -> float:
    """Distance from ``E`` to the nearest point of either loop branch."""
    return match_loop(E, J, V, gamma, n_beta=n_beta, tol=tol).distance
