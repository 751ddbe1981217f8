"""d'Alembert solutions built along characteristics.

Homogeneous solutions are phi = F(t+x) - F(t-x) with F tabulated over one
log-period and extended by F(lam*s) = F(s). The controlled problem uses two
profiles, y = G(t+x) - H(t-x), linked through the boundary conditions

    x = 0:      H(tau)   = G(tau) - v(tau)                 (tau >= t0)
    x = ell*t:  G(sigma) = H(sigma/lam) + v(sigma/(1+ell))  (sigma >= (1+ell)*t0)

where v is the control at its endpoint and zero at the other one. Each map
sends an argument strictly downward, so G and H are evaluated by recursion
until the argument lands in the range fixed by the initial data.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .control import BoundaryControl, check_endpoint
from .domain import DomainError, MovingDomain
from .initialdata import InitialData, Profile, ZeroProfile, bump_profile
from .quadrature import QuadratureRule, _gauss_legendre, integrate

DEFAULT_SAMPLES = 4096
SEAM_RTOL = 1e-9
#: minimum control samples per log-period per active mode
CONTROL_SAMPLES_PER_MODE = 32


class ProfileError(ValueError):
    """Initial data that do not produce a consistent log-periodic profile."""


# --- uniform-grid cubic Hermite --------------------------------------------

@dataclass(frozen=True)
class UniformHermite:
    """Cubic Hermite interpolant on the grid u0 + k*h, k = 0..K.

    With ``period`` set, arguments are reduced modulo ``K*h`` first; otherwise
    they are clamped to the grid.
    """

    u0: float
    h: float
    values: np.ndarray
    slopes: np.ndarray
    periodic: bool = False

    @property
    def cells(self) -> int:
        return self.values.size - 1

    def _locate(self, u):
        r = (np.asarray(u, dtype=float) - self.u0) / self.h
        K = self.cells
        if self.periodic:
            r = np.mod(r, K)
        j = np.clip(np.floor(r).astype(np.int64), 0, K - 1)
        tau = r - j
        if not self.periodic:
            tau = np.clip(tau, 0.0, 1.0)
        return j, tau

    def __call__(self, u, order: int = 0):
        """Value and u-derivatives up to ``order`` (<= 2) as a tuple."""
        j, s = self._locate(u)
        f0, f1 = self.values[j], self.values[j + 1]
        m0, m1 = self.slopes[j] * self.h, self.slopes[j + 1] * self.h
        s2 = s * s
        df = f0 - f1
        out = [(2 * s - 3) * s2 * df + f0 + (s2 - 2 * s + 1) * s * m0 + (s - 1) * s2 * m1]
        if order >= 1:
            out.append(((6 * s2 - 6 * s) * df + (3 * s2 - 4 * s + 1) * m0 + (3 * s2 - 2 * s) * m1) / self.h)
        if order >= 2:
            out.append(((12 * s - 6) * df + (6 * s - 4) * m0 + (6 * s - 2) * m1) / self.h ** 2)
        return tuple(out)


def _cumulative(f, grid, breakpoints=()):
    """Running integrals of f from grid[0] to each grid point (8-point Gauss per cell)."""
    inner = [p for p in breakpoints if grid[0] < p < grid[-1]]
    edges = np.unique(np.concatenate([grid, np.asarray(inner, dtype=float)]))
    xg, wg = _gauss_legendre(8)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * xg[None, :]
    cells = (np.asarray(f(nodes.ravel())).reshape(nodes.shape) * wg[None, :]).sum(axis=1) * half
    run = np.concatenate([[0.0], np.cumsum(cells)])
    return run[np.searchsorted(edges, grid)]


# --- homogeneous profile ----------------------------------------------------

@dataclass(frozen=True)
class CharacteristicProfile:
    """Log-periodic profile F tabulated on [s_min, lam*s_min].

    The table stores F and dF/du (u = log s) at ``samples_per_period + 1``
    log-uniform points. F is anchored by F(s_min) = 0 unless shifted with
    :meth:`with_offset`; observables do not depend on the constant.
    """

    domain: MovingDomain
    data_time: float
    table: UniformHermite
    seam_value_mismatch: float = 0.0
    seam_slope_mismatch: float = 0.0
    offset: float = 0.0

    @property
    def s_min(self) -> float:
        return (1.0 - self.domain.ell) * self.data_time

    @property
    def samples_per_period(self) -> int:
        return self.table.cells

    @property
    def samples(self) -> np.ndarray:
        return self.table.values + self.offset

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.table.values - self.table.values.mean())))

    def with_offset(self, c: float) -> "CharacteristicProfile":
        return CharacteristicProfile(self.domain, self.data_time, self.table,
                                     self.seam_value_mismatch, self.seam_slope_mismatch,
                                     self.offset + float(c))

    def profile(self, s, order: int = 1):
        """F(s) and its s-derivatives up to ``order`` (<= 2)."""
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0):
            raise DomainError("profile argument must be positive")
        parts = self.table(np.log(s), order)
        out = [parts[0] + self.offset]
        if order >= 1:
            out.append(parts[1] / s)
        if order >= 2:
            out.append((parts[2] - parts[1]) / s ** 2)
        return tuple(out)

    def evaluate(self, x, t):
        return evaluate_homogeneous(self, x, t)

    def trace(self, endpoint: str, t):
        """(phi_x, phi_t) at x = 0 or x = ell*t."""
        check_endpoint(endpoint)
        t = np.asarray(t, dtype=float)
        _check_time(self.domain, t)
        if endpoint == "fixed":
            _, dF = self.profile(t)
            return 2.0 * dF, np.zeros_like(dF)
        ell = self.domain.ell
        _, dp = self.profile((1.0 + ell) * t)
        _, dm = self.profile((1.0 - ell) * t)
        return dp + dm, dp - dm


def _check_time(d: MovingDomain, t):
    if np.any(np.asarray(t) < d.t0 * (1 - 1e-14)):
        raise DomainError(f"time must be >= t0={d.t0}")


def build_profile(data: InitialData, samples_per_period: int = DEFAULT_SAMPLES) -> CharacteristicProfile:
    """Tabulate F(s + x) = 1/2 phi0(x) + 1/2 * integral_0^x phi1 over one period.

    The data time s is ``data.time``; x runs over [-ell*s, ell*s] using the
    odd extensions, which covers F on [(1-ell)s, (1+ell)s].
    """
    if int(samples_per_period) != samples_per_period or samples_per_period < 8:
        raise ValueError("samples_per_period must be an integer >= 8")
    d, s = data.domain, data.time
    K = int(samples_per_period)
    u0 = math.log((1.0 - d.ell) * s)
    h = d.log_lambda / K
    u = u0 + h * np.arange(K + 1)
    x = np.clip(np.exp(u) - s, -data.length, data.length)
    x[0], x[-1] = -data.length, data.length

    def vel(xx):
        return data.extended(xx)[2]

    cum = _cumulative(vel, x, data.breakpoints)
    phi0, dphi0, phi1 = data.extended(x)
    values = 0.5 * phi0 + 0.5 * cum
    slopes = 0.5 * (dphi0 + phi1) * (s + x)

    scale = max(float(np.max(np.abs(values))), data.sup_norm() * data.length, np.finfo(float).tiny)
    value_gap = abs(values[-1] - values[0])
    if value_gap > SEAM_RTOL * scale:
        raise ProfileError(f"profile does not close over one period: seam mismatch {value_gap:.3e}")
    slope_gap = abs(slopes[-1] - slopes[0])
    # enforce exact periodicity of the table; any slope jump is a genuine kink
    values[-1] = values[0]
    table = UniformHermite(u0, h, values, slopes, periodic=True)
    return CharacteristicProfile(d, s, table, float(value_gap), float(slope_gap))


def evaluate_homogeneous(p: CharacteristicProfile, x, t):
    """(phi, phi_x, phi_t) from phi = F(t+x) - F(t-x)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_time(p.domain, t)
    if np.any(np.abs(x) > p.domain.ell * t * (1 + 1e-14)):
        raise DomainError("|x| must be <= ell*t")
    x, t = np.broadcast_arrays(x, t)
    Fp, dFp = p.profile(t + x)
    Fm, dFm = p.profile(t - x)
    return Fp - Fm, dFp + dFm, dFp - dFm


class _FieldProfile(Profile):
    """phi(., t) or phi_t(., t) of a characteristic profile as a function of x."""

    def __init__(self, p: CharacteristicProfile, t: float, kind: str):
        self.p, self.t, self.kind = p, float(t), kind

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        Fp, dFp = self.p.profile(self.t + x)
        Fm, dFm = self.p.profile(self.t - x)
        return Fp - Fm if self.kind == "phi" else dFp - dFm

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        _, dFp, d2p = self.p.profile(self.t + x, 2)
        _, dFm, d2m = self.p.profile(self.t - x, 2)
        return dFp + dFm if self.kind == "phi" else d2p + d2m

    def second_derivative(self, x):
        if self.kind != "phi":
            raise NotImplementedError("third profile derivative is not tabulated")
        x = np.asarray(x, dtype=float)
        _, _, d2p = self.p.profile(self.t + x, 2)
        _, _, d2m = self.p.profile(self.t - x, 2)
        return d2p - d2m


def snapshot(p: CharacteristicProfile, t: float) -> InitialData:
    """State (phi, phi_t) at time t as initial data at data time t."""
    _check_time(p.domain, t)
    return InitialData(p.domain, _FieldProfile(p, t, "phi"), _FieldProfile(p, t, "phi_t"),
                       float(t), "snapshot")


# --- sharpness construction ---------------------------------------------------

@dataclass(frozen=True)
class SharpnessScenario:
    """Bump data at time s whose boundary trace vanishes on ``quiet_window``."""

    domain: MovingDomain
    endpoint: str
    delta: float
    data_time: float
    support: tuple
    quiet_window: tuple
    T_delta: float
    data: InitialData

    def as_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "delta": self.delta,
            "data_time": self.data_time,
            "support": list(self.support),
            "quiet_window": list(self.quiet_window),
            "T_delta": self.T_delta,
        }


def sharpness_scenario(d: MovingDomain, delta: float, endpoint: str = "fixed",
                       amplitude: float = 1.0) -> SharpnessScenario:
    """Displacement bump placed so no wave reaches the endpoint on (t0+delta, T_delta-delta).

    Fixed endpoint: data at s = (t0-delta)/(1-ell) supported on (ell*s-delta, ell*s).
    Moving endpoint: data at s = (1+ell)*t0 - delta supported on (0, delta).
    Both give T_delta = ((1+ell)*t0 - 2*delta)/(1-ell) < t0 + T*.
    """
    check_endpoint(endpoint)
    ell, t0 = d.ell, d.t0
    delta = float(delta)
    limit = ell * t0 / (2.0 - ell)
    if not 0.0 < delta < limit:
        raise DomainError(
            f"delta must lie in (0, {limit:.6g}) so the support fits and the quiet window is nonempty"
        )
    if endpoint == "fixed":
        s = (t0 - delta) / (1.0 - ell)
        support = (ell * s - delta, ell * s)
    else:
        s = (1.0 + ell) * t0 - delta
        support = (0.0, delta)
    bump = bump_profile(0.5 * (support[0] + support[1]), 0.5 * delta, amplitude, ell * s)
    data = InitialData(d, bump, ZeroProfile(), s, f"sharpness-{endpoint}")
    T_delta = ((1.0 + ell) * t0 - 2.0 * delta) / (1.0 - ell)
    return SharpnessScenario(d, endpoint, delta, s, support, (t0 + delta, T_delta - delta), T_delta, data)


# --- controlled problem ---------------------------------------------------------

@dataclass(frozen=True)
class ControlledCharacteristics:
    """Solution y = G(t+x) - H(t-x) of the controlled problem on [t0, T]."""

    domain: MovingDomain
    init: InitialData
    control: BoundaryControl
    T: float
    cumulative: UniformHermite
    kinks: np.ndarray = field(repr=False)

    @property
    def endpoint(self) -> str:
        return self.control.endpoint

    # base profiles straight from the initial data
    def _G0(self, sigma, order):
        x = np.clip(sigma - self.domain.t0, 0.0, self.init.length)
        out = [0.5 * self.init.phi0(x) + 0.5 * self.cumulative(x)[0]]
        if order >= 1:
            out.append(0.5 * (self.init.phi0.derivative(x) + self.init.phi1(x)))
        return out

    def _H0(self, tau, order):
        x = np.clip(self.domain.t0 - tau, 0.0, self.init.length)
        out = [-0.5 * self.init.phi0(x) + 0.5 * self.cumulative(x)[0]]
        if order >= 1:
            out.append(0.5 * (self.init.phi0.derivative(x) - self.init.phi1(x)))
        return out

    def _control(self, t, active):
        if not active:
            z = np.zeros_like(t)
            return z, z
        return self.control(t), self.control.derivative(t)

    def G(self, sigma, order: int = 1):
        """G and dG/dsigma for sigma in [t0, (1+ell)T]."""
        sigma = np.asarray(sigma, dtype=float)
        d = self.domain
        top = (1.0 + d.ell) * d.t0
        base = sigma <= top
        out = [np.empty_like(sigma) for _ in range(order + 1)]
        if np.any(base):
            for o, v in zip(out, self._G0(sigma[base], order)):
                o[base] = v
        rest = ~base
        if np.any(rest):
            sr = sigma[rest]
            h = self.H(sr / d.lam, order)
            tm = sr / (1.0 + d.ell)
            v, dv = self._control(tm, self.endpoint == "moving")
            out[0][rest] = h[0] + v
            if order >= 1:
                out[1][rest] = h[1] / d.lam + dv / (1.0 + d.ell)
        return out

    def H(self, tau, order: int = 1):
        """H and dH/dtau for tau in [(1-ell)t0, T]."""
        tau = np.asarray(tau, dtype=float)
        t0 = self.domain.t0
        base = tau <= t0
        out = [np.empty_like(tau) for _ in range(order + 1)]
        if np.any(base):
            for o, v in zip(out, self._H0(tau[base], order)):
                o[base] = v
        rest = ~base
        if np.any(rest):
            tr = tau[rest]
            g = self.G(tr, order)
            v, dv = self._control(tr, self.endpoint == "fixed")
            out[0][rest] = g[0] - v
            if order >= 1:
                out[1][rest] = g[1] - dv
        return out

    def _check(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        _check_time(self.domain, t)
        if np.any(t > self.T * (1 + 1e-12)):
            raise DomainError(f"time beyond the solved range T={self.T}")
        if np.any(x < -1e-14 * t) or np.any(x > self.domain.ell * t * (1 + 1e-14)):
            raise DomainError("x must lie in [0, ell*t]")
        return np.broadcast_arrays(x, t)

    def evaluate(self, x, t):
        """(y, y_x, y_t) on the physical interval [0, ell*t]."""
        x, t = self._check(x, t)
        G, dG = self.G((t + x).ravel())
        H, dH = self.H((t - x).ravel())
        shape = x.shape
        return ((G - H).reshape(shape), (dG + dH).reshape(shape), (dG - dH).reshape(shape))

    def x_breakpoints(self, t: float):
        """Points of (0, ell*t) where y_x or y_t may be discontinuous or kinked."""
        L = self.domain.ell * t
        pts = np.concatenate([self.kinks - t, t - self.kinks])
        return np.unique(pts[(pts > 0) & (pts < L)])

    def boundary_values(self, t):
        """(y(0,t), y(ell*t,t))."""
        t = np.asarray(t, dtype=float)
        y0 = self.evaluate(np.zeros_like(t), t)[0]
        y1 = self.evaluate(self.domain.ell * t, t)[0]
        return y0, y1


def _kink_set(d: MovingDomain, init: InitialData, control: BoundaryControl, T: float):
    t0, ell = d.t0, d.ell
    base = [t0, (1 + ell) * t0, (1 - ell) * t0]
    for p in (*init.phi0.breakpoints, *init.phi1.breakpoints):
        if 0 < p < init.length:
            base += [t0 + p, t0 - p]
    ta, tb = control.window
    base += [ta, tb] if control.endpoint == "fixed" else [(1 + ell) * ta, (1 + ell) * tb]
    base = np.asarray(base)
    top = (1 + ell) * T
    j = max(0, int(math.ceil(math.log(top / base.min()) / d.log_lambda)) + 1)
    pts = (base[:, None] * d.lam ** np.arange(j + 1)[None, :]).ravel()
    return np.unique(pts[pts <= top * (1 + 1e-12)])


def solve_controlled(d: MovingDomain, init: InitialData, control: BoundaryControl,
                     T: float | None = None, samples: int = DEFAULT_SAMPLES) -> ControlledCharacteristics:
    """Solve the problem driven by ``control`` from data at t0 up to T.

    ``samples`` sets the resolution of the running integral of the initial
    velocity. The control must be sampled at >= 32 points per log-period per
    active mode (per unit of its Galerkin order when known).
    """
    if init.domain != d:
        raise DomainError("initial data belong to a different domain")
    if abs(init.time - d.t0) > 1e-14 * d.t0:
        raise DomainError("controlled problem starts from data at t0")
    T = control.t_end if T is None else float(T)
    if not T > d.t0:
        raise DomainError(f"horizon T={T} must exceed t0={d.t0}")
    ta, tb = control.window
    if ta < d.t0 * (1 - 1e-12) or tb > T * (1 + 1e-12):
        raise DomainError(f"control window ({ta}, {tb}) must lie in [t0, T] = [{d.t0}, {T}]")
    modes = 1 if control.modes is None else max(1, int(np.max(np.abs(control.modes))))
    need = CONTROL_SAMPLES_PER_MODE * modes
    have = control.samples_per_log_period(d)
    if have < need * (1 - 1e-9):
        raise ValueError(f"insufficient control sampling: {have:.1f} samples per period, need {need}")
    L = init.length
    grid = np.linspace(0.0, L, int(samples) + 1)
    cum = _cumulative(init.phi1, grid, init.phi1.breakpoints)
    table = UniformHermite(0.0, L / samples, cum, np.asarray(init.phi1(grid), dtype=float))
    return ControlledCharacteristics(d, init, control, T, table, _kink_set(d, init, control, T))


def _integrand_breaks(obj, t):
    if isinstance(obj, ControlledCharacteristics):
        return obj.x_breakpoints(t)
    return ()


def state_energy(obj, t: float, rule: QuadratureRule | None = None) -> float:
    """E(t) = 1/2 * integral over (0, ell*t) of the squared space and time derivatives.

    A fixed dense rule is used: the controlled state is only piecewise
    smooth, so panel doubling would stall on interpolation kinks.
    """
    rule = QuadratureRule(512, 8) if rule is None else rule
    d = obj.domain
    t = float(t)
    _check_time(d, t)

    def f(x):
        _, u_x, u_t = obj.evaluate(x, np.full_like(x, t))
        return 0.5 * (u_x ** 2 + u_t ** 2)

    return float(integrate(f, 0.0, d.ell * t, rule, breakpoints=_integrand_breaks(obj, t)))


def write_series_csv(path, t, values):
    """Two-column ``t,value`` CSV for plotting traces and controls."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for a, b in zip(np.asarray(t, float), np.asarray(values, float)):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])
