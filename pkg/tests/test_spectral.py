import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from movingwave import make_domain
from movingwave import spectral as sp
from movingwave.diagnostics import check_energy_identity, check_parseval, energy
from movingwave.domain import DomainError
from movingwave.initialdata import InitialData, ZeroProfile, bump_profile
from movingwave.spectral import CoefficientError

mp.mp.dps = 30


def _mp_field(ell, t0, coeffs, x, t):
    """phi, phi_x, phi_t by direct high-precision summation."""
    ell, x, t = mp.mpf(ell), mp.mpf(x), mp.mpf(t)
    alpha = 2 / mp.log((1 + ell) / (1 - ell))
    N = len(coeffs) // 2
    phi = px = pt = mp.mpc(0)
    for n, c in zip(range(-N, N + 1), coeffs):
        k = 1j * n * mp.pi * alpha
        c = mp.mpc(c.real, c.imag)
        ep, em = mp.power(t + x, k), mp.power(t - x, k)
        phi += c * (ep - em)
        px += c * k * (ep / (t + x) + em / (t - x))
        pt += c * k * (ep / (t + x) - em / (t - x))
    return [float(mp.re(v)) for v in (phi, px, pt)]


def test_sharp_constant_single_pair(single_pair):
    expected = float(4 * mp.pi ** 2 * (2 / mp.log(3)) * mp.mpf("0.01"))
    assert single_pair.S == pytest.approx(expected, rel=1e-14)
    assert single_pair.S == pytest.approx(0.7186961, abs=1e-7)


def test_field_against_high_precision(dom, rng):
    sol = sp.random_coefficients(dom, 6, rng)
    t = rng.uniform(2, 30, 12)
    x = rng.uniform(-1, 1, 12) * dom.ell * t
    got = np.array(sol.evaluate(x, t)).T
    ref = np.array([_mp_field(dom.ell, dom.t0, sol.coeffs, xi, ti) for xi, ti in zip(x, t)])
    np.testing.assert_allclose(got, ref, rtol=0, atol=1e-12 * np.max(np.abs(ref)))


def test_dirichlet_at_both_ends(dom, rng):
    sol = sp.random_coefficients(dom, 8, rng)
    t = np.geomspace(2, 200, 25)
    for x in (np.zeros_like(t), dom.ell * t):
        phi, _, _ = sol.evaluate(x, t)
        assert np.max(np.abs(phi)) <= 1e-12 * sol.amplitude


def test_oddness_in_x(dom, rng):
    sol = sp.random_coefficients(dom, 5, rng)
    t = rng.uniform(2, 10, 20)
    x = rng.uniform(0, 1, 20) * dom.ell * t
    a, b = sol.evaluate(x, t), sol.evaluate(-x, t)
    np.testing.assert_allclose(a[0], -b[0], atol=1e-13)
    np.testing.assert_allclose(a[1], b[1], atol=1e-12)


def test_log_periodic_profile(dom, rng):
    sol = sp.random_coefficients(dom, 7, rng)
    s = np.geomspace(1, 9, 17)
    F, dF = sol.profile(s)
    G, dG = sol.profile(dom.lam * s)
    np.testing.assert_allclose(F, G, atol=1e-12)
    np.testing.assert_allclose(dF, dom.lam * dG, atol=1e-12)


def test_trace_matches_evaluate(dom, rng):
    sol = sp.random_coefficients(dom, 6, rng)
    t = np.geomspace(2, 50, 9)
    px, pt = sol.trace("fixed", t)
    _, ex, et = sol.evaluate(np.zeros_like(t), t)
    np.testing.assert_allclose(px, ex, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(pt, 0.0, atol=1e-13)
    px, pt = sol.trace("moving", t)
    _, ex, et = sol.evaluate(dom.ell * t, t)
    np.testing.assert_allclose(px, ex, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(pt, et, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(pt, -dom.ell * px, atol=1e-13)


def test_point_outside_domain(single_pair):
    with pytest.raises(DomainError):
        single_pair.evaluate(2.0, 2.0)
    with pytest.raises(DomainError):
        single_pair.evaluate(0.0, 1.0)
    with pytest.raises(ValueError):
        single_pair.trace("middle", 2.0)


def test_energy_identity_exact(single_pair):
    rec = check_energy_identity(single_pair, 3.7)
    assert rec.passed and rec.rel_residual <= 1e-12


def test_parseval_single_pair(single_pair):
    e2, e3 = check_parseval(single_pair, 2.0)
    four_s = float(16 * mp.pi ** 2 * (2 / mp.log(3)) * mp.mpf("0.01"))
    assert e2.rhs == pytest.approx(four_s, rel=1e-14)
    assert e2.lhs == pytest.approx(2.874784, abs=1e-6)
    assert e3.lhs == pytest.approx(four_s, rel=1e-10)


def test_energy_bracket_single_pair(single_pair):
    E = energy(single_pair, 2.0)
    S = single_pair.S
    assert S / 3 <= E <= S


def test_zero_coefficients():
    d = make_domain(0.3, 1.0)
    sol = sp.SpectralSolution(d, np.zeros(9, complex), True)
    assert sol.S == 0.0
    assert energy(sol, 4.0) == 0.0


def test_unit_mode_is_complex(dom):
    e = sp.unit_mode(dom, 2)
    phi, _, _ = e.evaluate_complex(0.3, 2.0)
    assert abs(phi.imag) > 0
    with pytest.raises(ValueError):
        sp.unit_mode(dom, 0)


@pytest.mark.parametrize("coeffs, msg", [
    (np.array([0.1, 0.2, 0.1]), "C0 must be zero"),
    (np.array([0.1, 0, 0.1, 0]), "odd length"),
    (np.array([np.nan, 0, 1]), "finite"),
])
def test_malformed_coefficients(dom, coeffs, msg):
    with pytest.raises(CoefficientError, match=msg):
        sp.SpectralSolution(dom, coeffs)


def test_round_trip_band_limited(dom, rng):
    sol = sp.random_coefficients(dom, 8, rng, N=16)
    back = sp.compute_coefficients(sp.synthesize(sol), N=16)
    err = np.max(np.abs(back.coeffs - sol.coeffs)) / np.max(np.abs(sol.coeffs))
    assert err <= 1e-9
    assert back.coeffs[16] == 0
    np.testing.assert_array_equal(back.coeffs[:16][::-1], np.conj(back.coeffs[17:]))


def test_coefficients_independent_of_data_time(dom, rng):
    sol = sp.random_coefficients(dom, 4, rng, N=8)
    late = sp.compute_coefficients(sp.synthesize(sol, 7.5), N=8)
    np.testing.assert_allclose(late.coeffs, sol.coeffs, atol=1e-10 * sol.amplitude)


@given(st.floats(0.05, 0.9), st.integers(1, 6), st.integers(0, 2 ** 31))
@settings(max_examples=15, deadline=None)
def test_round_trip_property(ell, n_star, seed):
    d = make_domain(ell, 1.5)
    sol = sp.random_coefficients(d, n_star, np.random.default_rng(seed), N=n_star + 2)
    back = sp.compute_coefficients(sp.synthesize(sol), N=n_star + 2)
    assert np.max(np.abs(back.coeffs - sol.coeffs)) <= 1e-9 * np.max(np.abs(sol.coeffs))


@given(st.floats(-3, 3), st.integers(0, 2 ** 31))
@settings(max_examples=20, deadline=None)
def test_flux_constant_homogeneous(factor, seed):
    d = make_domain(0.4, 2.0)
    sol = sp.random_coefficients(d, 5, np.random.default_rng(seed))
    assert sol.scaled(factor).S == pytest.approx(factor ** 2 * sol.S, rel=1e-12, abs=1e-300)


def test_bump_coefficient_decay(dom):
    data = InitialData(dom, bump_profile(0.5, 0.3, 1.0, 1.0), ZeroProfile())
    sol = sp.compute_coefficients(data, N=64)
    mags = np.abs(sol.coeffs[65:])
    # C^2 data: |n C_n| summable, tail well below the head
    assert mags[-1] <= 1e-3 * mags[0]


def test_coefficient_csv_round_trip(tmp_path, dom, rng):
    sol = sp.random_coefficients(dom, 4, rng)
    sp.write_coefficients(tmp_path / "c.csv", sol)
    back = sp.read_coefficients(tmp_path / "c.csv", dom)
    np.testing.assert_array_equal(back.coeffs, sol.coeffs)


def test_coefficient_csv_rejects_c0(tmp_path, dom):
    (tmp_path / "c.csv").write_text("n,re,im\n-1,0.1,0\n0,0.5,0\n1,0.1,0\n")
    with pytest.raises(CoefficientError, match="C0 must be zero"):
        sp.read_coefficients(tmp_path / "c.csv", dom)
