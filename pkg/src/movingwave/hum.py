"""Galerkin HUM synthesis of null controls at one endpoint.

The control is sought in the span of boundary traces of the adjoint modes,

    g_n(t) = A_n t^(i n pi alpha - 1),   A_n = 2 pi alpha i n            (fixed)
                                         A_n = 2 pi alpha i n (1+ell)^(i n pi alpha) / (1 - ell^2)  (moving)

Pairing the controlled state with conj(e_m), e_m the m-th unit mode, gives
P_m(t) = integral_0^{ell t} (y_t conj(e_m) - y conj(d_t e_m)) dx with
dP_m/dt = kappa * v(t) * conj(g_m(t)). Null control means P_m(T) = 0 for all
m, which for v = sum_n c_n w(t) g_n(t) is the Gramian system

    kappa * sum_n G_mn c_n = -P_m(t0).

Two weights w are offered. ``cost="uniform"`` (w = 1) minimises the plain
L^2(t0, T) norm. ``cost="log"`` (w = t) minimises the norm of L^2(dt/t); its
basis functions t^(i n pi alpha) are exactly periodic in log t, which is the
structure of null controls on windows of one log-period, and is the default
for synthesis.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .characteristics import ControlledCharacteristics, solve_controlled, state_energy
from .control import BoundaryControl, check_endpoint, control_from_function, zero_control
from .domain import DomainError, MovingDomain
from .initialdata import InitialData, bump_profile, zero_data
from .quadrature import DEFAULT_RULE, QuadratureRule, integrate, integrate_adaptive

COSTS = ("uniform", "log")
KAPPA_RTOL = 1e-4
ILL_CONDITIONED = 1e8


class GramianError(RuntimeError):
    """The Galerkin system could not be solved."""


class ControllabilityWarning(UserWarning):
    """Window shorter than the sharp time or Gramian badly conditioned."""


def _modes(N: int) -> np.ndarray:
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    return np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])


def trace_amplitudes(d: MovingDomain, endpoint: str, modes) -> np.ndarray:
    """A_n with g_n(t) = A_n t^(i n pi alpha - 1)."""
    check_endpoint(endpoint)
    n = np.asarray(modes, dtype=float)
    a = 2j * math.pi * d.alpha * n
    if endpoint == "moving":
        a = a * np.exp(1j * math.pi * d.alpha * n * math.log1p(d.ell)) / (1.0 - d.ell ** 2)
    return a


def adjoint_traces(d: MovingDomain, endpoint: str, modes, t) -> np.ndarray:
    """g_n(t) as an array of shape (len(modes), len(t))."""
    n = np.asarray(modes, dtype=float)
    t = np.asarray(t, dtype=float)
    a = trace_amplitudes(d, endpoint, n)
    return a[:, None] * np.exp((1j * math.pi * d.alpha * n[:, None]) * np.log(t)[None, :]) / t[None, :]


def _check_cost(cost: str) -> str:
    if cost not in COSTS:
        raise ValueError(f"cost must be one of {COSTS}, got {cost!r}")
    return cost


def _power_integrals(d, k, t0, T, shift):
    """integral_{t0}^{T} t^(i k pi alpha + shift) dt for integer k, closed form."""
    p = 1j * math.pi * d.alpha * np.asarray(k, dtype=float) + (shift + 1.0)
    out = np.empty(p.shape, dtype=complex)
    zero = np.abs(p) == 0
    lt0, lT = math.log(t0), math.log(T)
    pz = p[~zero]
    out[~zero] = (np.exp(pz * lT) - np.exp(pz * lt0)) / pz
    out[zero] = lT - lt0
    return out


@dataclass(frozen=True)
class HumGramian:
    """G[m, n] = integral of w(t) g_n(t) conj(g_m(t)) dt over [t0, T].

    Rows and columns run over ``modes`` = -N..-1, 1..N.
    """

    domain: MovingDomain
    endpoint: str
    T: float
    N: int
    cost: str
    matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    hermiticity_residual: float

    @property
    def modes(self) -> np.ndarray:
        return _modes(self.N)

    @property
    def window(self):
        return (self.domain.t0, self.T)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def condition(self) -> float:
        lo = self.min_eigenvalue
        return math.inf if lo <= 0 else self.max_eigenvalue / lo

    @property
    def positive_definite(self) -> bool:
        return self.min_eigenvalue > 0

    def as_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "cost": self.cost,
            "N": self.N,
            "window": list(self.window),
            "window_length": self.T - self.domain.t0,
            "critical_time": self.domain.critical_time,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "condition": self.condition if math.isfinite(self.condition) else None,
            "hermiticity_residual": self.hermiticity_residual,
            "positive_definite": self.positive_definite,
        }


def build_gramian(d: MovingDomain, endpoint: str, T: float, N: int, cost: str = "uniform") -> HumGramian:
    """Closed-form Galerkin Gramian on the window [t0, T]."""
    check_endpoint(endpoint)
    _check_cost(cost)
    T = float(T)
    if not T > d.t0:
        raise DomainError(f"degenerate window: T={T} must exceed t0={d.t0}")
    n = _modes(N)
    a = trace_amplitudes(d, endpoint, n)
    shift = -2.0 if cost == "uniform" else -1.0
    k = n[None, :] - n[:, None]
    M = np.conj(a)[:, None] * a[None, :] * _power_integrals(d, k, d.t0, T, shift)
    resid = float(np.max(np.abs(M - M.conj().T)) / np.max(np.abs(M)))
    eig = scipy.linalg.eigvalsh(0.5 * (M + M.conj().T))
    return HumGramian(d, endpoint, T, int(N), cost, M, eig, resid)


def gramian_by_quadrature(d: MovingDomain, endpoint: str, T: float, N: int, cost: str = "uniform",
                          rtol: float = 1e-13) -> np.ndarray:
    """Same matrix by numerical quadrature of the trace products in u = log t."""
    check_endpoint(endpoint)
    _check_cost(cost)
    n = _modes(N)
    a = trace_amplitudes(d, endpoint, n)
    ks = np.arange(-2 * N, 2 * N + 1)
    shift = -1.0 if cost == "uniform" else 0.0

    def f(u):
        return np.exp((1j * math.pi * d.alpha * ks[:, None] + shift) * u[None, :])

    rule = QuadratureRule(max(16, 4 * N), 8)
    vals = integrate_adaptive(f, math.log(d.t0), math.log(T), rule, rtol=rtol, max_panels=1 << 14)
    k = n[None, :] - n[:, None]
    return np.conj(a)[:, None] * a[None, :] * vals[k + 2 * N]


def pairing_vector(data: InitialData, d: MovingDomain, endpoint: str, N: int,
                   rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    """b_m = integral_0^{ell t0} (y1 conj(e_m) - y0 conj(d_t e_m)) dx at t = t0.

    The pairing depends only on the data and the modes; ``endpoint`` is
    validated but does not enter. Ordered like the Gramian modes.
    """
    check_endpoint(endpoint)
    if data.domain != d or abs(data.time - d.t0) > 1e-14 * d.t0:
        raise DomainError("pairing needs data at t0 on the same domain")
    n = _modes(N).astype(float)
    k = math.pi * d.alpha * n
    t0 = d.t0

    def f(x):
        lp, lm = np.log(t0 + x), np.log(t0 - x)
        ep = np.exp(-1j * k[:, None] * lp[None, :])
        em = np.exp(-1j * k[:, None] * lm[None, :])
        e = ep - em
        et = -1j * k[:, None] * (ep / (t0 + x)[None, :] - em / (t0 - x)[None, :])
        return data.phi1(x)[None, :] * e - data.phi0(x)[None, :] * et

    bps = [p for p in data.breakpoints if p > 0]
    return integrate_adaptive(f, 0.0, data.length, rule.at_least(4 * N), breakpoints=bps)


def terminal_pairing(sol: ControlledCharacteristics, modes, t: float | None = None,
                     rule: QuadratureRule | None = None) -> np.ndarray:
    """P_m(t) for the controlled state at time t (default: its horizon)."""
    d = sol.domain
    t = sol.T if t is None else float(t)
    n = np.asarray(modes, dtype=float)
    k = math.pi * d.alpha * n
    rule = QuadratureRule(max(512, 16 * int(np.max(np.abs(n)))), 8) if rule is None else rule

    def f(x):
        y, _, yt = sol.evaluate(x, np.full_like(x, t))
        lp, lm = np.log(t + x), np.log(t - x)
        ep = np.exp(-1j * k[:, None] * lp[None, :])
        em = np.exp(-1j * k[:, None] * lm[None, :])
        et = -1j * k[:, None] * (ep / (t + x)[None, :] - em / (t - x)[None, :])
        return yt[None, :] * (ep - em) - y[None, :] * et

    return integrate(f, 0.0, d.ell * t, rule, breakpoints=sol.x_breakpoints(t))


# --- duality constant --------------------------------------------------------

@dataclass(frozen=True)
class DualityCalibration:
    endpoint: str
    kappa: float
    ratios: tuple
    spread: float
    zero_probe: tuple

    def as_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "kappa": self.kappa,
            "probe_ratios": [[r.real, r.imag] for r in self.ratios],
            "relative_spread": self.spread,
            "zero_probe": list(self.zero_probe),
        }


def _probe(d, endpoint, T, lo, hi, m, samples_per_period):
    bump = bump_profile(0.5 * (lo + hi), 0.5 * (hi - lo))
    ctrl = control_from_function(endpoint, d, lo, hi, bump, bump.derivative, samples_per_period)
    sol = solve_controlled(d, zero_data(d), ctrl, T)
    lhs = terminal_pairing(sol, [m])[0]

    def g(t):
        return ctrl(t) * np.conj(adjoint_traces(d, endpoint, [m], t)[0])

    rhs = integrate(g, lo, hi, QuadratureRule(256, 8))
    return lhs, rhs


def calibrate_duality(d: MovingDomain, endpoint: str, T: float | None = None,
                      samples_per_period: int = 4096) -> DualityCalibration:
    """Measure kappa = P_m(T) / integral v conj(g_m) dt with three probe controls.

    Each probe starts from zero data, drives a bump control through the
    characteristic solver and pairs the terminal state with a unit mode.
    Probes disagreeing by more than 1e-4 (relative) raise an error.
    """
    check_endpoint(endpoint)
    T = d.critical_end if T is None else float(T)
    t0 = d.t0
    span = T - t0
    probes = [(t0 + 0.1 * span, t0 + 0.45 * span, 1),
              (t0 + 0.3 * span, t0 + 0.8 * span, 2),
              (t0 + 0.55 * span, t0 + 0.95 * span, 3)]
    ratios = []
    for lo, hi, m in probes:
        lhs, rhs = _probe(d, endpoint, T, lo, hi, m, samples_per_period)
        ratios.append(complex(lhs / rhs))
    r = np.array(ratios)
    kappa = float(np.mean(r.real))
    spread = float(np.max(np.abs(r - kappa)) / abs(kappa))
    if not (abs(kappa) > 0 and spread <= KAPPA_RTOL):
        raise RuntimeError(f"duality ratio is not constant across probes: {ratios}")
    z = zero_control_probe(d, endpoint, T)
    return DualityCalibration(endpoint, kappa, tuple(ratios), spread, z)


def zero_control_probe(d: MovingDomain, endpoint: str, T: float):
    """Both sides of the duality relation for v = 0 from zero data: (0, 0)."""
    sol = solve_controlled(d, zero_data(d), zero_control(endpoint, d, d.t0, T), T)
    return (float(abs(terminal_pairing(sol, [1])[0])), 0.0)


def analytic_kappa(d: MovingDomain, endpoint: str) -> float:
    """Duality constant from differentiating P over the moving interval."""
    check_endpoint(endpoint)
    return 1.0 if endpoint == "fixed" else -(1.0 - d.ell ** 2)


# --- synthesis -----------------------------------------------------------------

def _real_subspace(N: int) -> np.ndarray:
    """Q with c = Q z, z = (Re c_1..c_N, Im c_1..c_N), c_{-n} = conj(c_n)."""
    Q = np.zeros((2 * N, 2 * N), dtype=complex)
    for n in range(1, N + 1):
        p, q = N - 1 + n, N - n
        Q[p, n - 1] = Q[q, n - 1] = 1.0
        Q[p, N + n - 1] = 1j
        Q[q, N + n - 1] = -1j
    return Q


@dataclass(frozen=True)
class NullControlDesign:
    """Synthesised control with the quantities that produced it."""

    control: BoundaryControl
    gramian: HumGramian
    kappa: float
    pairing: np.ndarray = field(repr=False)
    imag_residue: float
    below_critical: bool

    def as_dict(self) -> dict:
        out = {"kappa": self.kappa, "imag_residue": self.imag_residue,
               "below_critical": self.below_critical, "cost": self.control.cost}
        out.update({f"gramian_{k}": v for k, v in self.gramian.as_dict().items()})
        return out


def design_null_control(d: MovingDomain, endpoint: str, T: float, N: int, data: InitialData,
                        cost: str = "log", kappa: float | None = None,
                        samples_per_period: int = 4096) -> NullControlDesign:
    """Solve the Galerkin system and sample the resulting real control."""
    check_endpoint(endpoint)
    _check_cost(cost)
    T = float(T)
    below = (T - d.t0) < d.critical_time * (1 - 1e-12)
    if below:
        warnings.warn(
            f"window length {T - d.t0:.6g} is below the sharp time {d.critical_time:.6g}; "
            "null controllability is not expected",
            ControllabilityWarning, stacklevel=2,
        )
    gram = build_gramian(d, endpoint, T, N, cost)
    if gram.condition > ILL_CONDITIONED:
        warnings.warn(f"Gramian condition estimate {gram.condition:.3e}", ControllabilityWarning,
                      stacklevel=2)
    if kappa is None:
        kappa = calibrate_duality(d, endpoint, T, samples_per_period).kappa
    b = pairing_vector(data, d, endpoint, N)
    Q = _real_subspace(int(N))
    A = Q.conj().T @ gram.matrix @ Q
    rhs = Q.conj().T @ (-b / kappa)
    try:
        z = scipy.linalg.solve(A.real, rhs.real, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise GramianError(f"Galerkin solve failed (condition {gram.condition:.3e}): {exc}") from None
    if not np.all(np.isfinite(z)):
        raise GramianError(f"non-finite Galerkin solution (condition {gram.condition:.3e})")
    c = Q @ z

    n = gram.modes
    amp = trace_amplitudes(d, endpoint, n) * c
    q = 1j * math.pi * d.alpha * n + (-1.0 if cost == "uniform" else 0.0)

    def series(t):
        t = np.asarray(t, dtype=float)
        return (amp[:, None] * np.exp(q[:, None] * np.log(t)[None, :])).sum(axis=0)

    def value(t):
        return series(t).real

    def slope(t):
        t = np.asarray(t, dtype=float)
        return ((amp * q)[:, None] * np.exp(q[:, None] * np.log(t)[None, :])).sum(axis=0).real / t

    ctrl = control_from_function(endpoint, d, d.t0, T, value, slope, samples_per_period,
                                 coefficients=c, modes=n, cost_weight=cost)
    full = series(ctrl.times)
    sup = max(float(np.max(np.abs(full.real))), np.finfo(float).tiny)
    imag = float(np.max(np.abs(full.imag))) / sup
    return NullControlDesign(ctrl, gram, float(kappa), b, imag, bool(below))


def synthesize_null_control(d: MovingDomain, endpoint: str, T: float, N: int, data: InitialData,
                            cost: str = "log", kappa: float | None = None,
                            samples_per_period: int = 4096) -> BoundaryControl:
    """Control at ``endpoint`` on [t0, T] steering ``data`` to rest at T."""
    return design_null_control(d, endpoint, T, N, data, cost, kappa, samples_per_period).control


@dataclass(frozen=True)
class ControlVerification:
    energy_ratio: float
    initial_energy: float
    terminal_energy: float
    cost: float
    K: float

    def as_dict(self) -> dict:
        return {
            "energy_ratio": self.energy_ratio,
            "initial_energy": self.initial_energy,
            "terminal_energy": self.terminal_energy,
            "cost": self.cost,
            "K": self.K,
        }


def verify_control(ctrl: BoundaryControl, data: InitialData, T: float | None = None) -> ControlVerification:
    """Run the characteristic solver and compare E(T) with E(t0)."""
    d = data.domain
    T = ctrl.t_end if T is None else float(T)
    sol = solve_controlled(d, data, ctrl, T)
    e0 = state_energy(sol, d.t0)
    eT = state_energy(sol, T)
    if e0 > 0:
        ratio, K = eT / e0, ctrl.cost / e0
    else:
        ratio, K = (0.0 if eT == 0 else math.inf), (0.0 if ctrl.cost == 0 else math.inf)
    return ControlVerification(float(ratio), float(e0), float(eT), float(ctrl.cost), float(K))


def write_gramian_json(path, gram: HumGramian, extra: dict | None = None):
    payload = gram.as_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
