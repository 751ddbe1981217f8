"""Energies, identity residuals, boundary-trace integrals and observability reports.

Functions accept any solution object exposing ``domain``, ``evaluate(x, t)``
and ``trace(endpoint, t)``: a :class:`SpectralSolution`, a
:class:`CharacteristicProfile` or a :class:`ControlledCharacteristics`.
Identities involving the flux constant S need a spectral solution.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .characteristics import state_energy
from .control import check_endpoint
from .quadrature import DEFAULT_RULE, QuadratureRule, integrate, integrate_adaptive
from .spectral import SpectralSolution

DEFAULT_TOL = 1e-8
#: trace integrals at or below this fraction of E(t0) count as zero
QUIET_RTOL = 1e-12


class ObservabilityError(AssertionError):
    """Observed ratio exceeds the constant on a window at least the sharp time."""


@dataclass(frozen=True)
class IdentityRecord:
    """One identity (``kind="=="``) or one-sided bound (``kind="<="``: lhs <= rhs)."""

    name: str
    at: str
    kind: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    tolerance: float
    passed: bool
    slack: float | None = None


def _record(name, at, kind, lhs, rhs, tol):
    lhs, rhs = float(lhs), float(rhs)
    if kind == "==":
        resid = abs(lhs - rhs)
        slack = None
    elif kind == "<=":
        resid = max(0.0, lhs - rhs)
        slack = (rhs - lhs) / abs(rhs) if rhs != 0 else None
    else:
        raise ValueError(f"unknown record kind {kind!r}")
    scale = max(abs(lhs), abs(rhs))
    rel = resid / scale if scale > 0 else 0.0
    return IdentityRecord(name, at, kind, lhs, rhs, resid, rel, tol, bool(rel <= tol), slack)


@dataclass
class IdentityReport:
    records: list = field(default_factory=list)
    tolerance: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failing(self):
        return [r for r in self.records if not r.passed]

    def extend(self, records):
        self.records.extend(records)
        return self

    def as_dict(self) -> dict:
        return {"passed": self.passed, "tolerance": self.tolerance,
                "records": [asdict(r) for r in self.records]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        head = f"{'identity':<8} {'at':<22} {'kind':<4} {'lhs':>24} {'rhs':>24} {'rel.res':>10} {'slack':>10}  ok"
        lines = [head]
        for r in self.records:
            slack = "" if r.slack is None else f"{r.slack:10.3e}"
            lines.append(f"{r.name:<8} {r.at:<22} {r.kind:<4} {r.lhs:24.16e} {r.rhs:24.16e} "
                         f"{r.rel_residual:10.3e} {slack:>10}  {'yes' if r.passed else 'NO'}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} (tolerance {self.tolerance:g})")
        return "\n".join(lines) + "\n"


# --- energies ------------------------------------------------------------------

def _rule_for(sol, rule):
    if isinstance(sol, SpectralSolution):
        return rule.at_least(4 * sol.N)
    return rule


def energy(sol, t: float, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """E(t) = 1/2 * integral over (0, ell*t) of phi_x**2 + phi_t**2."""
    if not isinstance(sol, SpectralSolution):
        return state_energy(sol, t)
    t = float(t)

    def f(x):
        _, px, pt = sol.evaluate(x, np.full_like(x, t))
        return 0.5 * (px ** 2 + pt ** 2)

    return float(integrate_adaptive(f, 0.0, sol.domain.ell * t, _rule_for(sol, rule)))


def _at(t):
    return f"t={t:.6g}"


def check_energy_identity(sol: SpectralSolution, t: float, rule: QuadratureRule = DEFAULT_RULE,
                          tol: float = DEFAULT_TOL) -> IdentityRecord:
    """t*E(t) + integral_0^{ell t} x phi_x phi_t dx against S."""
    t = float(t)

    def f(x):
        _, px, pt = sol.evaluate(x, np.full_like(x, t))
        return np.stack([0.5 * t * (px ** 2 + pt ** 2), x * px * pt])

    a, b = integrate_adaptive(f, 0.0, sol.domain.ell * t, _rule_for(sol, rule))
    return _record("est0", _at(t), "==", a + b, sol.S, tol)


def check_parseval(sol: SpectralSolution, t: float, rule: QuadratureRule = DEFAULT_RULE,
                   tol: float = DEFAULT_TOL):
    """Weighted integrals of (phi_x +/- phi_t)**2 over (-ell t, ell t) against 4S."""
    t = float(t)
    L = sol.domain.ell * t

    def f(x):
        _, px, pt = sol.evaluate(x, np.full_like(x, t))
        return np.stack([(t + x) * (px + pt) ** 2, (t - x) * (px - pt) ** 2])

    e2, e3 = integrate_adaptive(f, -L, L, _rule_for(sol, rule))
    return [_record("E2", _at(t), "==", e2, 4 * sol.S, tol),
            _record("E3", _at(t), "==", e3, 4 * sol.S, tol)]


def check_energy_bounds(sol: SpectralSolution, t: float, rule: QuadratureRule = DEFAULT_RULE,
                        tol: float = DEFAULT_TOL, E: float | None = None):
    """S/((1+ell)t) <= E(t) <= S/((1-ell)t)."""
    ell = sol.domain.ell
    E = energy(sol, t, rule) if E is None else E
    return [_record("ES", _at(t) + " lower", "<=", sol.S / ((1 + ell) * t), E, tol),
            _record("ES", _at(t) + " upper", "<=", E, sol.S / ((1 - ell) * t), tol)]


def decay_bounds(domain, E0: float, t):
    """Two-sided bound on E(t) in terms of E(t0)."""
    ell, t0 = domain.ell, domain.t0
    t = np.asarray(t, dtype=float)
    return (1 - ell) * t0 * E0 / ((1 + ell) * t), (1 + ell) * t0 * E0 / ((1 - ell) * t)


def check_decay_bounds(sol, t: float, E0: float | None = None, rule: QuadratureRule = DEFAULT_RULE,
                       tol: float = DEFAULT_TOL):
    E0 = energy(sol, sol.domain.t0, rule) if E0 is None else E0
    E = energy(sol, t, rule)
    lo, hi = decay_bounds(sol.domain, E0, t)
    return [_record("decay", _at(t) + " lower", "<=", float(lo), E, tol),
            _record("decay", _at(t) + " upper", "<=", E, float(hi), tol)]


# --- boundary traces --------------------------------------------------------------

def trace_integral_window(sol, endpoint: str, a: float, b: float, weighted: bool = False,
                          functional: str = "phi_x", rule: QuadratureRule | None = None) -> float:
    """integral_a^b w(t) q(t) dt at the endpoint, w = t if ``weighted`` else 1.

    q is phi_x**2 (``functional="phi_x"``) or phi_x**2 + phi_t**2 (``"full"``).
    The integral is taken in u = log t, where mode traces are pure
    oscillations.
    """
    check_endpoint(endpoint)
    if functional not in ("phi_x", "full"):
        raise ValueError(f"functional must be 'phi_x' or 'full', got {functional!r}")
    d = sol.domain
    periods = max(1.0, math.log(b / a) / d.log_lambda)

    def f(u):
        t = np.exp(u)
        px, pt = sol.trace(endpoint, t)
        q = px ** 2 + (pt ** 2 if functional == "full" else 0.0)
        return q * (t * t if weighted else t)

    ua, ub = math.log(a), math.log(b)
    if isinstance(sol, SpectralSolution):
        base = QuadratureRule(int(math.ceil(max(16, 4 * sol.N) * periods)), 8) if rule is None else rule
        return float(integrate_adaptive(f, ua, ub, base, max_panels=1 << 14))
    base = QuadratureRule(int(math.ceil(2048 * periods)), 8) if rule is None else rule
    return float(integrate(f, ua, ub, base))


def trace_integral(sol, endpoint: str, M: int = 1, weighted: bool = True,
                   rule: QuadratureRule | None = None) -> float:
    """Trace integral over the M log-periods [t0, lam**M t0]."""
    if int(M) != M or M < 1:
        raise ValueError(f"M must be an integer >= 1, got {M!r}")
    d = sol.domain
    return trace_integral_window(sol, endpoint, d.t0, d.period_end(int(M)), weighted, "phi_x", rule)


def trace_identity_value(sol: SpectralSolution, endpoint: str, M: int) -> float:
    """Closed-form value of the weighted trace integral over M periods."""
    check_endpoint(endpoint)
    base = 4 * M * sol.S
    return base if endpoint == "fixed" else base / (1 - sol.domain.ell ** 2) ** 2


def check_trace_identity(sol: SpectralSolution, endpoint: str, M: int,
                         tol: float = DEFAULT_TOL) -> IdentityRecord:
    name = "=slf" if endpoint == "fixed" else "=slm"
    lhs = trace_integral(sol, endpoint, M, weighted=True)
    return _record(name, f"M={M}", "==", lhs, trace_identity_value(sol, endpoint, M), tol)


def trace_bounds(domain, endpoint: str, M: int, E0: float):
    """Two-sided bounds on the weighted trace integral in terms of E(t0)."""
    check_endpoint(endpoint)
    ell, t0 = domain.ell, domain.t0
    k = 4 * M * t0 * E0
    if endpoint == "fixed":
        return k * (1 - ell), k * (1 + ell)
    return k / ((1 + ell) ** 2 * (1 - ell)), k / ((1 - ell) ** 2 * (1 + ell))


def check_trace_bounds(sol, endpoint: str, M: int, E0: float | None = None,
                       rule: QuadratureRule = DEFAULT_RULE, tol: float = DEFAULT_TOL):
    name = "EB0" if endpoint == "fixed" else "EBlt"
    E0 = energy(sol, sol.domain.t0, rule) if E0 is None else E0
    W = trace_integral(sol, endpoint, M, weighted=True)
    lo, hi = trace_bounds(sol.domain, endpoint, M, E0)
    return [_record(name, f"M={M} lower", "<=", lo, W, tol),
            _record(name, f"M={M} upper", "<=", W, hi, tol)]


def periods_to_cover(domain, T: float) -> int:
    """Smallest M >= 1 with lam**M t0 >= T."""
    r = math.log(T / domain.t0) / domain.log_lambda
    return max(1, int(math.ceil(r - 1e-12)))


def direct_bound(domain, endpoint: str, T: float, E0: float) -> float:
    """Upper bound on the unweighted trace integral over [t0, T].

    Both follow from the upper weighted-trace bounds, since t >= t0. At the
    fixed endpoint this is 4M(1+ell)E(t0).
    """
    check_endpoint(endpoint)
    M = periods_to_cover(domain, T)
    ell = domain.ell
    if endpoint == "fixed":
        return 4 * M * (1 + ell) * E0
    return 4 * M * E0 / ((1 - ell) ** 2 * (1 + ell))


def direct_inequality_check(sol, endpoint: str, T: float, E0: float | None = None,
                            rule: QuadratureRule = DEFAULT_RULE, tol: float = DEFAULT_TOL) -> IdentityRecord:
    name = "D0" if endpoint == "fixed" else "Dlt"
    d = sol.domain
    E0 = energy(sol, d.t0, rule) if E0 is None else E0
    lhs = trace_integral_window(sol, endpoint, d.t0, float(T), weighted=False)
    M = periods_to_cover(d, T)
    return _record(name, f"T={T:.6g} M={M}", "<=", lhs, direct_bound(d, endpoint, T, E0), tol)


# --- observability ----------------------------------------------------------------

def observability_constant(domain, endpoint: str) -> float:
    check_endpoint(endpoint)
    ell = domain.ell
    if endpoint == "fixed":
        return (1 + ell) / (4 * (1 - ell) ** 2)
    return (1 + ell) ** 3 / 4


@dataclass(frozen=True)
class ObservabilityReport:
    endpoint: str
    window: tuple
    E0: float
    trace_phi_x: float
    trace_full: float
    ratio: float
    ratio_full: float
    constant: float
    critical_time: float
    at_or_above_critical: bool
    margin: float
    flags: tuple

    @property
    def observable(self) -> bool:
        return "not observable" not in self.flags

    def as_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        out["flags"] = list(self.flags)
        for k in ("ratio", "ratio_full", "margin"):
            if not math.isfinite(out[k]):
                out[k] = None
        return out


def observability_report(sol, endpoint: str, T0: float, E0: float | None = None,
                         rule: QuadratureRule = DEFAULT_RULE, strict: bool = True) -> ObservabilityReport:
    """E(t0) against the boundary observation over [t0, t0 + T0].

    Raises :class:`ObservabilityError` when T0 >= T* and the ratio exceeds the
    constant, unless ``strict`` is False.
    """
    check_endpoint(endpoint)
    if not T0 > 0:
        raise ValueError(f"window length must be positive, got {T0!r}")
    d = sol.domain
    E0 = energy(sol, d.t0, rule) if E0 is None else float(E0)
    a, b = d.t0, d.t0 + float(T0)
    obs = trace_integral_window(sol, endpoint, a, b, weighted=False)
    full = obs if endpoint == "fixed" else (1 + d.ell ** 2) * obs
    quiet = obs <= QUIET_RTOL * max(E0, np.finfo(float).tiny)
    ratio = math.inf if (quiet and E0 > 0) else (E0 / obs if obs > 0 else 0.0)
    ratio_full = math.inf if (quiet and E0 > 0) else (E0 / full if full > 0 else 0.0)
    C = observability_constant(d, endpoint)
    above = T0 >= d.critical_time * (1 - 1e-12)
    flags = []
    if not above:
        flags.append("below sharp time")
    if ratio > C:
        flags.append("not observable")
    if strict and above and ratio > C * (1 + 1e-10):
        raise ObservabilityError(
            f"ratio {ratio:.6g} exceeds constant {C:.6g} at {endpoint} endpoint with T0={T0:g} >= T*"
        )
    return ObservabilityReport(endpoint, (a, b), E0, obs, full, ratio, ratio_full, C,
                               d.critical_time, bool(above), C - ratio, tuple(flags))


# --- suites and exports ---------------------------------------------------------------

def default_times(domain, count: int = 5, span: float = 10.0):
    return domain.t0 * np.geomspace(1.0, span, count)


def run_identity_suite(sol: SpectralSolution, times=None, Ms=(1, 2, 3), tol: float = DEFAULT_TOL,
                       rule: QuadratureRule = DEFAULT_RULE, workers: int = 1) -> IdentityReport:
    """Every identity and bound of the solution family for one coefficient set.

    Per-time checks may run on ``workers`` threads; records are assembled in
    a fixed order, so the report does not depend on the worker count.
    """
    d = sol.domain
    times = default_times(d) if times is None else np.asarray(times, dtype=float)
    E0 = energy(sol, d.t0, rule)

    def at_time(t):
        E = energy(sol, t, rule)
        return [check_energy_identity(sol, t, rule, tol), *check_parseval(sol, t, rule, tol),
                *check_energy_bounds(sol, t, rule, tol, E)]

    def per_period(M):
        out = []
        for ep in ("fixed", "moving"):
            out.append(check_trace_identity(sol, ep, M, tol))
            out.extend(check_trace_bounds(sol, ep, M, E0, rule, tol))
        return out

    def direct(T):
        return [direct_inequality_check(sol, ep, T, E0, rule, tol) for ep in ("fixed", "moving")]

    jobs = [(at_time, t) for t in times] + [(per_period, int(M)) for M in Ms]
    jobs += [(direct, d.period_end(1)), (direct, 1.5 * d.period_end(1))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: job[0](job[1]), jobs))
    else:
        parts = [fn(arg) for fn, arg in jobs]
    report = IdentityReport([], tol)
    for p in parts:
        report.extend(p)
    return report


def write_energy_csv(path, sol, times, rule: QuadratureRule = DEFAULT_RULE):
    """Rows t, E(t) and the bracket S/((1+ell)t), S/((1-ell)t)."""
    ell = sol.domain.ell
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "E", "lower", "upper"])
        for t in np.asarray(times, dtype=float):
            E = energy(sol, t, rule)
            w.writerow([f"{t:.17g}", f"{E:.17g}", f"{sol.S / ((1 + ell) * t):.17g}",
                        f"{sol.S / ((1 - ell) * t):.17g}"])
