"""Nonreciprocal Maryland chain: parameters and dense Hamiltonian construction.

The chain has sites ``n = 1..L`` under periodic boundary conditions, hopping
``J e^{-gamma}`` to the left and ``J e^{+gamma}`` to the right, and the onsite
potential ``V tan(pi alpha n)``.  ``alpha = p/q`` is always an exact rational,
so the potential is exactly ``q``-periodic.  A boundary twist ``theta`` is
spread uniformly over the bonds as a phase ``theta / L`` per bond.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

__all__ = [
    "INT64_MAX",
    "IncommensurateWarning",
    "ModelParams",
    "ParameterError",
    "build_hamiltonian",
    "fibonacci_alpha",
    "onsite_potential",
    "onsite_potentials",
]

INT64_MAX = 2**63 - 1


class ParameterError(ValueError):
    """Invalid model or scan configuration."""


class IncommensurateWarning(UserWarning):
    """``L`` is not a multiple of ``q``; the ring wrap breaks exact periodicity."""


def fibonacci_alpha(level: int) -> Fraction:
    """Return the Fibonacci approximant ``F_level / F_{level+1}``.

    Uses ``F_1 = F_2 = 1``.  Level 13 gives ``233/377`` and level 15 gives
    ``610/987``.  Denominators must fit in a signed 64-bit integer because
    site arithmetic is vectorised with numpy ``int64``.
    """
    level = int(level)
    if level < 2:
        raise ParameterError(f"Fibonacci level must be >= 2, got {level}")
    a, b = 1, 1  # F_1, F_2
    for _ in range(level - 1):
        a, b = b, a + b
    if b > INT64_MAX:
        raise OverflowError(f"F_{level + 1} = {b} does not fit in int64")
    # adjacent Fibonacci numbers are always coprime
    return Fraction(a, b)


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of one model instance.

    Parameters
    ----------
    J : float
        Hopping amplitude, nonzero.
    V : float
        Onsite potential amplitude.
    gamma : float
        Hopping asymmetry.
    alpha : Fraction
        Rational modulation frequency ``p/q`` with odd ``q``.
    L : int
        Number of sites, at least 3.
    theta : float
        Boundary twist in radians.
    """

    J: float = 1.0
    V: float = 1.0
    gamma: float = 0.0
    alpha: Fraction = field(default_factory=lambda: fibonacci_alpha(13))
    L: int = 377
    theta: float = 0.0

    def __post_init__(self):
        try:
            alpha = Fraction(self.alpha)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"alpha must be rational p/q: {exc}") from None
        object.__setattr__(self, "alpha", alpha)
        for name in ("J", "V", "gamma", "theta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.J == 0.0:
            raise ParameterError("J must be nonzero")
        if alpha.denominator % 2 == 0:
            raise ParameterError(
                f"alpha = {alpha} has even denominator; tan(pi alpha n) is singular"
            )
        if alpha.denominator > INT64_MAX or abs(alpha.numerator) > INT64_MAX:
            raise OverflowError(f"alpha = {alpha} does not fit in int64")
        if int(self.L) != self.L or self.L < 3:
            raise ParameterError(f"L must be an integer >= 3, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if self.L % alpha.denominator:
            warnings.warn(
                f"L = {self.L} is not a multiple of q = {alpha.denominator}",
                IncommensurateWarning,
                stacklevel=3,
            )

    @classmethod
    def from_level(cls, level: int, L: int | None = None, **kwargs) -> "ModelParams":
        """Build parameters with ``alpha = fibonacci_alpha(level)``; ``L`` defaults to ``q``."""
        alpha = fibonacci_alpha(level)
        return cls(alpha=alpha, L=alpha.denominator if L is None else L, **kwargs)

    @property
    def p(self) -> int:
        return self.alpha.numerator

    @property
    def q(self) -> int:
        return self.alpha.denominator

    @property
    def commensurate(self) -> bool:
        return self.L % self.q == 0

    def replace(self, **changes) -> "ModelParams":
        with warnings.catch_warnings():
            # already warned at original construction
            warnings.simplefilter("ignore", IncommensurateWarning)
            return replace(self, **changes)


def _reduced_residues(p: int, q: int, n) -> np.ndarray:
    """Integer ``r`` with ``p*n = r (mod q)`` and ``|r| < q/2``."""
    n = np.asarray(n, dtype=np.int64)
    # (p mod q) * (n mod q) < q**2 must not overflow
    if q > 3_037_000_499:
        r = np.array([(p * int(k)) % q for k in n.ravel()], dtype=object).reshape(n.shape)
        return np.where(2 * r > q, r - q, r).astype(np.int64)
    r = ((p % q) * (n % q)) % q
    return np.where(2 * r > q, r - q, r)


def onsite_potentials(params: ModelParams) -> np.ndarray:
    """``V tan(pi alpha n)`` for ``n = 1..L`` as a float array."""
    r = _reduced_residues(params.p, params.q, np.arange(1, params.L + 1))
    return params.V * np.tan(np.pi * r / params.q)


def onsite_potential(n: int, params: ModelParams) -> float:
    """Onsite energy ``V tan(pi alpha n)`` at site ``n``.

    The angle ``pi p n / q`` is reduced modulo ``pi`` in integer arithmetic
    before ``tan`` is evaluated, so large ``n`` loses no precision and
    ``onsite_potential(n + q) == onsite_potential(n)`` holds exactly.
    """
    r = int(_reduced_residues(params.p, params.q, [int(n)])[0])
    return params.V * math.tan(math.pi * r / params.q)


def build_hamiltonian(params: ModelParams) -> np.ndarray:
    """Dense ``L x L`` Hamiltonian (0-based indices for sites ``1..L``).

    ``H[n, n+1] = J e^{-gamma - i theta/L}``, ``H[n+1, n] = J e^{gamma + i theta/L}``
    including the wrap bond between sites ``L`` and ``1``.  The result is a
    real array when ``theta == 0`` and complex otherwise.
    """
    L = params.L
    phase = params.theta / L
    if params.theta == 0.0:
        left = params.J * math.exp(-params.gamma)
        right = params.J * math.exp(params.gamma)
        H = np.zeros((L, L))
    else:
        left = params.J * np.exp(-params.gamma - 1j * phase)
        right = params.J * np.exp(params.gamma + 1j * phase)
        H = np.zeros((L, L), dtype=complex)
    idx = np.arange(L)
    nxt = (idx + 1) % L
    H[idx, nxt] = left
    H[nxt, idx] = right
    H[idx, idx] = onsite_potentials(params)
    return H
