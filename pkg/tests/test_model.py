import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marylandlab.model import (
    IncommensurateWarning,
    ModelParams,
    ParameterError,
    build_hamiltonian,
    fibonacci_alpha,
    onsite_potential,
    onsite_potentials,
)
from oracles import mp_tan_potential


@pytest.mark.parametrize(
    "level, expected",
    [(4, Fraction(3, 5)), (13, Fraction(233, 377)), (15, Fraction(610, 987)), (2, Fraction(1, 2))],
)
def test_fibonacci_alpha(level, expected):
    alpha = fibonacci_alpha(level)
    assert alpha == expected
    assert math.gcd(alpha.numerator, alpha.denominator) == 1


def test_fibonacci_alpha_rejects_bad_levels():
    with pytest.raises(ParameterError):
        fibonacci_alpha(1)
    fibonacci_alpha(91)  # F_92 still fits in int64
    with pytest.raises(OverflowError):
        fibonacci_alpha(92)


def test_params_validation():
    with pytest.raises(ParameterError, match="even denominator"):
        ModelParams(alpha=Fraction(89, 144), L=144)
    with pytest.raises(ParameterError):
        ModelParams(J=0.0)
    with pytest.raises(ParameterError):
        ModelParams(alpha=Fraction(1, 3), L=2)
    with pytest.raises(ParameterError):
        ModelParams(V=math.nan)


def test_incommensurate_length_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ModelParams(alpha=Fraction(233, 377), L=144)
        ModelParams(alpha=Fraction(233, 377), L=754)
    assert [w.category for w in caught] == [IncommensurateWarning]


def test_onsite_potential_examples():
    third = ModelParams(alpha=Fraction(1, 3), L=3)
    assert onsite_potential(1, third) == pytest.approx(math.sqrt(3), rel=1e-15)
    params = ModelParams.from_level(13, V=2.5)
    assert onsite_potential(params.q, params) == 0.0
    assert onsite_potential(3 * params.q, params) == 0.0


@pytest.mark.parametrize("n", [1, 2, 100, 376, 377, 378, 5000, 123456])
def test_onsite_potential_matches_extended_precision(n):
    params = ModelParams.from_level(13, V=1.0)
    expected = mp_tan_potential(1.0, 233, 377, n)
    got = onsite_potential(n, params)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_naive_angle_loses_digits_that_reduction_keeps():
    params = ModelParams.from_level(13)
    n = 10**6 + 1
    expected = mp_tan_potential(1.0, 233, 377, n)
    assert onsite_potential(n, params) == pytest.approx(expected, rel=1e-12)


@given(n=st.integers(1, 10**7), level=st.sampled_from([4, 7, 10, 13, 15]))
def test_potential_is_exactly_q_periodic(n, level):
    params = ModelParams.from_level(level)
    assert onsite_potential(n + params.q, params) == onsite_potential(n, params)


def test_vectorised_potential_matches_scalar():
    params = ModelParams.from_level(10, V=0.7)
    vec = onsite_potentials(params)
    assert np.array_equal(vec, [onsite_potential(n, params) for n in range(1, params.L + 1)])


def test_hamiltonian_three_site_example():
    H = build_hamiltonian(ModelParams(J=1, V=1, gamma=0, alpha=Fraction(1, 3), L=3))
    np.testing.assert_allclose(np.diag(H), [math.sqrt(3), -math.sqrt(3), 0], atol=1e-15)
    off = H - np.diag(np.diag(H))
    np.testing.assert_array_equal(off, np.ones((3, 3)) - np.eye(3))


def test_hamiltonian_asymmetric_hopping():
    params = ModelParams.from_level(4, gamma=math.log(2))
    H = build_hamiltonian(params)
    L = params.L
    for n in range(L):
        m = (n + 1) % L
        assert H[m, n] == pytest.approx(2.0, rel=1e-15)  # right-moving
        assert H[n, m] == pytest.approx(0.5, rel=1e-15)  # left-moving
    # wrap entries: [L,1] left-moving, [1,L] right-moving (1-based)
    assert H[L - 1, 0] == pytest.approx(0.5)
    assert H[0, L - 1] == pytest.approx(2.0)


def test_hamiltonian_structure():
    params = ModelParams.from_level(7, gamma=0.3, theta=0.4)
    H = build_hamiltonian(params)
    L = params.L
    off = H - np.diag(np.diag(H))
    assert np.count_nonzero(off) == 2 * L
    assert H[0, 1] == pytest.approx(np.exp(-0.3 - 0.4j / L))
    assert H[1, 0] == pytest.approx(np.exp(0.3 + 0.4j / L))


@pytest.mark.parametrize("L", [3, 4, 5, 8])
def test_flux_threaded_ring_spectrum(L):
    # V = 0 circulant: eigenvalues 2 cos((2 pi k + theta) / L)
    theta = math.pi
    params = ModelParams(V=0.0, alpha=Fraction(1, 3), L=L, theta=theta)
    got = np.sort(np.linalg.eigvals(build_hamiltonian(params)).real)
    expected = np.sort(2 * np.cos((2 * np.pi * np.arange(L) + theta) / L))
    np.testing.assert_allclose(got, expected, atol=1e-13)


def test_rejects_short_rings():
    with pytest.raises(ParameterError):
        ModelParams(alpha=Fraction(1, 3), L=2)


@settings(max_examples=40)
@given(
    gamma=st.floats(-2, 2),
    theta=st.floats(0, 2 * math.pi),
    V=st.floats(-3, 3),
    level=st.sampled_from([4, 7, 10]),
)
def test_hamiltonian_invariants(gamma, theta, V, level):
    base = ModelParams.from_level(level, V=V, gamma=gamma)
    H0 = build_hamiltonian(base)
    assert np.isrealobj(H0)
    Ht = build_hamiltonian(base.replace(theta=theta))
    Hm = build_hamiltonian(base.replace(theta=-theta, gamma=-gamma))
    assert np.array_equal(Ht.T, Hm)
    herm = build_hamiltonian(base.replace(gamma=0.0))
    assert np.array_equal(herm, herm.conj().T)
