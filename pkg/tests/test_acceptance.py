"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the pytest summary) and
then asserts.  Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""

import math
import sys
from fractions import Fraction

import numpy as np
import pytest

from marylandlab.floquet import eigenpair_ratio_check, kick_function, kick_sample_residual
from marylandlab.localization import EXTENDED, classify_states, ipr_values
from marylandlab.model import ModelParams, build_hamiltonian
from marylandlab.scan import GridSpec, phase_scan
from marylandlab.spectral import (
    TOL_EIG,
    complex_dos,
    critical_gamma,
    distance_to_loop,
    eigendecompose,
    max_abs_imag,
)
from marylandlab.topology import winding_number
from oracles import charpoly_eigenvalues, match_multisets

GAMMA_C = 0.4812


def _spectrum(level, vectors=False, L=None, **kw):
    params = ModelParams.from_level(level, L=L, **kw)
    return params, eigendecompose(build_hamiltonian(params), want_vectors=vectors)


def test_1_critical_point(record):
    max_im = lambda g: max_abs_imag(_spectrum(13, J=1, V=1, gamma=g)[1])
    lo_val, hi_val = max_im(0.45), max_im(0.51)
    lo, hi = 0.45, 0.51
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if complex_dos(_spectrum(13, J=1, V=1, gamma=mid)[1]) > 0:
            hi = mid
        else:
            lo = mid
    onset = 0.5 * (lo + hi)
    ok = lo_val < 1e-8 and hi_val > 1e-3 and abs(onset - GAMMA_C) <= 0.01
    record("1 critical point", ok,
           f"max|Im E|={lo_val:.2e} at 0.45, {hi_val:.3e} at 0.51; onset {onset:.4f} vs {GAMMA_C}")
    assert ok


def test_2_closed_form_gamma_c(record):
    gc = critical_gamma(1, 1)
    ok = abs(gc - 0.481212) <= 1e-6
    record("2 closed-form gamma_c", ok, f"critical_gamma(1,1)={gc:.9f}")
    assert ok


@pytest.mark.slow
def test_3_dispersion_loop(record):
    means = {}
    worst_377 = None
    for level in (10, 12, 13, 15):  # L = 89, 233, 377, 987
        params, s = _spectrum(level, J=1, V=1, gamma=1.0)
        d = np.array([distance_to_loop(E, 1, 1, 1) for E in s.eigenvalues if abs(E.imag) > 1e-5])
        means[params.L] = d.mean()
        if params.L == 377:
            worst_377 = d.max()
    seq = list(means.values())
    monotone = all(b < a for a, b in zip(seq, seq[1:]))
    ok = worst_377 < 5e-2 and monotone
    record("3 dispersion loop", ok,
           f"max distance at L=377 {worst_377:.2e}; means "
           + ", ".join(f"L={L}: {m:.2e}" for L, m in means.items()))
    assert ok


@pytest.fixture(scope="module")
def mobility_edge():
    params, s = _spectrum(15, vectors=True, J=1, V=1, gamma=0.5)  # L = 987
    states = classify_states(s, params)
    outside = [st for st in states if abs(st.ellipse_value - 1) > 0.05]
    return params, outside


@pytest.mark.slow
def test_4a_mobility_edge_classifier_agreement(record, mobility_edge):
    _, outside = mobility_edge
    agree = np.mean([(st.ellipse_value < 1) == (abs(st.energy.imag) > 1e-5) for st in outside])
    ok = agree >= 0.95
    record("4a mobility-edge classifier agreement", ok,
           f"{agree:.1%} of {len(outside)} states outside the band")
    assert ok


@pytest.mark.slow
def test_4b_mobility_edge_ipr_separation(record, mobility_edge):
    params, outside = mobility_edge
    L = params.L
    ext = [st.ipr for st in outside if st.label == EXTENDED]
    loc = [st.ipr for st in outside if st.label != EXTENDED]
    n_ext_bad = sum(v >= 20 / L for v in ext)
    n_loc_bad = sum(v <= 0.05 for v in loc)
    ok = n_ext_bad == 0 and n_loc_bad == 0
    record("4b mobility-edge IPR separation", ok,
           f"extended: max IPR*L={max(ext) * L:.1f} (limit 20), {n_ext_bad}/{len(ext)} over; "
           f"localized: min IPR={min(loc):.4f} (limit 0.05), {n_loc_bad}/{len(loc)} under")
    assert ok


@pytest.mark.slow
def test_5_winding_phase_diagram(record):
    spec = GridSpec(v_range=(0.2, 2.0, 21), gamma_range=(0.0, 1.5, 21), J=1.0,
                    alpha_level=13, L=144, n_theta=256)
    diag = phase_scan(spec, quantities=("w",))
    dv = (2.0 - 0.2) / 20
    dg = 1.5 / 20
    values, mismatches, excluded = set(), 0, 0
    for c in diag.cells:
        values.add(c.w)
        boundary = abs(c.gamma - math.asinh(c.V / 2)) <= dg or abs(c.V - 2 * math.sinh(c.gamma)) <= dv
        if boundary:
            excluded += 1
            continue
        if (c.w == 0) != (abs(2 * math.sinh(c.gamma)) < c.V):
            mismatches += 1
    quantized = values <= {-1, 0, 1}
    anti = {}
    for g in (0.1, 0.3, 0.6, 1.0, 1.4):
        p = ModelParams(J=1.0, V=1.0, gamma=g, alpha=Fraction(233, 377), L=144)
        anti[g] = (winding_number(p).w, winding_number(p.replace(gamma=-g)).w)
    antisym = all(a == -b for a, b in anti.values())
    ok = quantized and mismatches == 0 and antisym
    record("5 winding phase diagram", ok,
           f"w values {sorted(v for v in values if v is not None)}; {mismatches} mismatches over "
           f"{len(diag.cells) - excluded} cells ({excluded} boundary cells excluded); "
           f"antisymmetry {anti}")
    assert ok


def test_6_oracle_equivalence(record):
    rng = np.random.default_rng(20240601)
    alphas = {3: Fraction(1, 3), 5: Fraction(3, 5), 13: Fraction(8, 13)}
    worst = 0.0
    for L, alpha in alphas.items():
        for _ in range(50):
            J = rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)
            params = ModelParams(J=J, V=rng.uniform(-3, 3), gamma=rng.uniform(-1.5, 1.5),
                                 alpha=alpha, L=L, theta=rng.uniform(0, 2 * math.pi))
            H = build_hamiltonian(params)
            worst = max(worst, match_multisets(eigendecompose(H).eigenvalues, charpoly_eigenvalues(H)))
    ok = worst < 1e-8
    record("6 oracle equivalence", ok, f"max matched distance {worst:.2e} over 150 draws")
    assert ok


def test_7_kicked_particle_identities(record):
    params, s = _spectrum(13, vectors=True, J=1, V=1, gamma=0.5)
    ratio = max(eigenpair_ratio_check(s.eigenvalues[i], s.vectors[:, i], params).max_residual
                for i in range(len(s)))
    kick = kick_sample_residual(10_000, seed=0)
    worked = abs(np.exp(-1j * complex(kick_function(0.0, 0.0, 1.0, 0.0))) - (-3 - 4j) / 5)
    ok = ratio < 1e-7 and kick < 1e-12 and worked <= 1e-15
    record("7 kicked-particle identities", ok,
           f"ratio residual {ratio:.2e}; kick residual {kick:.2e}; worked value error {worked:.1e}")
    assert ok


def test_8_property_suites(record):
    rng = np.random.default_rng(8)
    checks = {}
    conj, resid, ipr_ok = 0.0, 0.0, True
    for _ in range(20):
        level = int(rng.choice([4, 7, 10, 13]))
        params = ModelParams.from_level(level, V=rng.uniform(-3, 3), gamma=rng.uniform(-1.5, 1.5))
        s = eigendecompose(build_hamiltonian(params), want_vectors=True)
        conj = max(conj, match_multisets(s.eigenvalues, s.eigenvalues.conj()) / s.norm)
        resid = max(resid, s.residuals.max() / s.norm)
        v = ipr_values(s)
        ipr_ok &= bool(np.all(v >= 1 / params.L - 1e-15) and np.all(v <= 1 + 1e-15))
    checks["conjugation closure"] = conj <= 1e-10
    checks["residual contract"] = resid <= TOL_EIG
    checks["IPR bounds"] = ipr_ok

    spec = GridSpec(v_range=(0.5, 1.5, 3), gamma_range=(0.0, 1.0, 3), alpha_level=10)
    a = phase_scan(spec, quantities=("max_im", "rho", "min_ipr"))
    b = phase_scan(spec, quantities=("max_im", "rho", "min_ipr"))
    checks["scan determinism"] = a.cells == b.cells

    same = True
    for V, g in [(0.5, 1.0), (1.5, 0.2), (1.0, 1.2), (0.3, 0.05)]:
        p = ModelParams(J=1.0, V=V, gamma=g, alpha=Fraction(233, 377), L=144)
        same &= winding_number(p, n_theta=128).w == winding_number(p, n_theta=256).w
    checks["w grid independence"] = same

    ok = all(checks.values())
    record("8 property suites", ok,
           "; ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
           + f" (conj {conj:.1e}, residual {resid:.1e} x ||H||)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
