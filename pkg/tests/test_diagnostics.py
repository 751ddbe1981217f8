import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from movingwave import make_domain
from movingwave import spectral as sp
from movingwave.characteristics import build_profile, sharpness_scenario, state_energy
from movingwave.initialdata import InitialData
from movingwave.diagnostics import (
    ObservabilityError, check_decay_bounds, check_energy_bounds, check_trace_bounds,
    default_times, direct_bound, direct_inequality_check, energy, observability_constant,
    observability_report, periods_to_cover, run_identity_suite, trace_bounds, trace_identity_value,
    trace_integral, trace_integral_window, write_energy_csv,
)

mp.mp.dps = 30


def _mp_weighted_fixed_trace(ell, t0, coeffs, M):
    """integral of t * phi_x(0,t)**2 over M log-periods, by mpmath quadrature."""
    ell = mp.mpf(ell)
    lam = (1 + ell) / (1 - ell)
    alpha = 2 / mp.log(lam)
    N = len(coeffs) // 2
    cs = [(n, mp.mpc(c.real, c.imag)) for n, c in zip(range(-N, N + 1), coeffs) if c != 0]

    def f(u):
        t = mp.e ** u
        dF = sum(c * 1j * n * mp.pi * alpha * mp.e ** (1j * n * mp.pi * alpha * u) for n, c in cs) / t
        return t * t * mp.re(2 * dF) ** 2

    a = mp.log(t0)
    return float(mp.quad(f, mp.linspace(a, a + M * mp.log(lam), 4 * M + 1)))


def test_weighted_trace_single_pair(single_pair):
    for M in (1, 2):
        ref = _mp_weighted_fixed_trace(0.5, 2, single_pair.coeffs, M)
        assert trace_integral(single_pair, "fixed", M) == pytest.approx(ref, rel=1e-12)
        assert trace_identity_value(single_pair, "fixed", M) == pytest.approx(ref, rel=1e-12)


def test_weighted_trace_random(dom, rng):
    sol = sp.random_coefficients(dom, 3, rng)
    ref = _mp_weighted_fixed_trace(0.5, 2, sol.coeffs, 1)
    assert trace_integral(sol, "fixed", 1) == pytest.approx(ref, rel=1e-12)


def test_moving_identity_value(single_pair):
    W = trace_integral(single_pair, "moving", 2)
    assert W == pytest.approx(8 * single_pair.S / 0.75 ** 2, rel=1e-12)


@pytest.mark.parametrize("ell", [0.2, 0.5, 0.8])
def test_identity_suite_passes(ell, rng):
    d = make_domain(ell, 2.0)
    sol = sp.random_coefficients(d, 32, rng)
    rep = run_identity_suite(sol)
    assert rep.passed, rep.to_text()
    names = {r.name for r in rep.records}
    assert names == {"est0", "E2", "E3", "ES", "=slf", "=slm", "EB0", "EBlt", "D0", "Dlt"}
    assert sum(r.name == "est0" for r in rep.records) == 5
    bounds = [r for r in rep.records if r.kind == "<="]
    assert all(r.slack is not None and r.slack >= 0 for r in bounds)


def test_suite_independent_of_workers(single_pair):
    a = run_identity_suite(single_pair, workers=1).to_json()
    b = run_identity_suite(single_pair, workers=4).to_json()
    assert a == b


def test_report_formats(single_pair):
    rep = run_identity_suite(single_pair, times=[2.0, 5.0], Ms=(1,))
    payload = json.loads(rep.to_json())
    assert payload["passed"] is True
    assert len(payload["records"]) == len(rep.records)
    text = rep.to_text()
    assert text.rstrip().endswith("overall: PASS (tolerance 1e-08)")


def test_failing_record_is_reported(single_pair):
    rep = run_identity_suite(single_pair, times=[2.0], Ms=(1,), tol=1e-17)
    assert not rep.passed
    assert rep.failing()


@given(st.floats(0.1, 0.9), st.integers(0, 2 ** 31))
@settings(max_examples=10, deadline=None)
def test_energy_bracket_property(ell, seed):
    d = make_domain(ell, 1.0)
    sol = sp.random_coefficients(d, 6, np.random.default_rng(seed))
    for t in (1.0, 3.3):
        assert all(r.passed for r in check_energy_bounds(sol, t))
    assert all(r.passed for r in check_decay_bounds(sol, 4.0))


@given(st.floats(0.1, 0.9), st.integers(0, 2 ** 31), st.integers(1, 3))
@settings(max_examples=10, deadline=None)
def test_trace_bounds_property(ell, seed, M):
    d = make_domain(ell, 1.0)
    sol = sp.random_coefficients(d, 6, np.random.default_rng(seed))
    E0 = energy(sol, 1.0)
    for ep in ("fixed", "moving"):
        assert all(r.passed for r in check_trace_bounds(sol, ep, M, E0))


def test_trace_bound_values(dom):
    assert trace_bounds(dom, "fixed", 1, 1.0) == pytest.approx((4.0, 12.0))
    assert trace_bounds(dom, "moving", 2, 1.0) == pytest.approx((16 / (2.25 * 0.5), 16 / (0.25 * 1.5)))


def test_periods_to_cover(dom):
    assert periods_to_cover(dom, 6.0) == 1
    assert periods_to_cover(dom, 6.0001) == 2
    assert periods_to_cover(dom, 3.0) == 1
    assert periods_to_cover(dom, 18.0) == 2


def test_direct_bound_printed_form_fails(dom):
    """The fixed-endpoint bound with factor (1-ell) is violated; (1+ell) holds."""
    T = dom.period_end(1)
    printed_violations = 0
    for i in range(50):
        sol = sp.random_coefficients(dom, 8, np.random.default_rng([7, i]))
        E0 = energy(sol, dom.t0)
        lhs = trace_integral_window(sol, "fixed", dom.t0, T)
        printed_violations += lhs > 4 * (1 - dom.ell) * E0
        assert direct_inequality_check(sol, "fixed", T, E0).passed
        assert direct_inequality_check(sol, "moving", T, E0).passed
    assert printed_violations > 0
    assert direct_bound(dom, "fixed", T, 1.0) == pytest.approx(6.0)


@pytest.mark.parametrize("ell", [0.2, 0.5, 0.8])
def test_moving_ratio_is_universal(ell, rng):
    d = make_domain(ell, 2.0)
    for _ in range(5):
        sol = sp.random_coefficients(d, 8, rng)
        rep = observability_report(sol, "moving", d.critical_time)
        assert rep.ratio == pytest.approx((1 + ell) ** 2 * (1 - ell) / 4, rel=1e-9)
        assert rep.ratio_full == pytest.approx(rep.ratio / (1 + ell ** 2), rel=1e-12)


def test_observability_constants(dom):
    assert observability_constant(dom, "fixed") == 1.5
    assert observability_constant(dom, "moving") == 0.84375


def test_observability_ratio_within_constant(dom, rng):
    for _ in range(10):
        sol = sp.random_coefficients(dom, 8, rng)
        rep = observability_report(sol, "fixed", 4.0)
        assert rep.observable and rep.flags == ()
        assert 0 < rep.ratio <= 1.5
        assert rep.margin == pytest.approx(1.5 - rep.ratio)


def test_observability_quiet_window_flags(dom):
    sc = sharpness_scenario(dom, 0.1, "fixed")
    prof = build_profile(sc.data)
    rep = observability_report(prof, "fixed", 3.4, E0=state_energy(prof, dom.t0))
    assert rep.flags == ("below sharp time", "not observable")
    assert rep.ratio > 1e6
    # the same data observed from t = 2.1 on: the whole window is quiet
    late = make_domain(0.5, 2.1)
    data = InitialData(late, sc.data.phi0, sc.data.phi1, sc.data_time)
    quiet = build_profile(data)
    rep = observability_report(quiet, "fixed", 3.4, E0=state_energy(quiet, 2.1))
    assert rep.trace_phi_x == 0.0
    assert math.isinf(rep.ratio)
    assert rep.flags == ("below sharp time", "not observable")
    assert rep.as_dict()["ratio"] is None


def test_observability_error_above_sharp_time(dom, single_pair):
    with pytest.raises(ObservabilityError):
        observability_report(single_pair, "fixed", 4.0, E0=1e3)
    rep = observability_report(single_pair, "fixed", 4.0, E0=1e3, strict=False)
    assert "not observable" in rep.flags


def test_observability_window_validation(single_pair):
    with pytest.raises(ValueError):
        observability_report(single_pair, "fixed", 0.0)
    with pytest.raises(ValueError):
        observability_report(single_pair, "top", 4.0)


def test_default_times(dom):
    t = default_times(dom)
    assert t[0] == 2.0 and t[-1] == pytest.approx(20.0)
    np.testing.assert_allclose(np.diff(np.log(t)), np.log(10) / 4)


def test_energy_csv(tmp_path, single_pair):
    write_energy_csv(tmp_path / "e.csv", single_pair, [2.0, 4.0])
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "t,E,lower,upper"
    assert len(lines) == 3
