"""Initial displacement/velocity pairs on [0, ell*s] and their odd extensions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .domain import DomainError, MovingDomain
from .quadrature import DEFAULT_RULE, QuadratureRule, integrate_adaptive

#: Dirichlet compatibility tolerance, relative to the profile sup-norm.
DIRICHLET_RTOL = 1e-12


class Profile:
    """A real function on [0, L] with a first (and optionally second) derivative.

    Subclasses implement ``__call__`` and ``derivative``. ``breakpoints`` lists
    points where the profile is less smooth; quadrature splits panels there.
    """

    breakpoints: tuple = ()

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def second_derivative(self, x):
        raise NotImplementedError(f"{type(self).__name__} has no second derivative")


class ZeroProfile(Profile):
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    derivative = second_derivative = __call__

    def __repr__(self):
        return "ZeroProfile()"


@dataclass(frozen=True)
class BumpProfile(Profile):
    """amplitude * (1 - r**2)**3 with r = |x - center|/halfwidth, zero for r > 1."""

    center: float
    halfwidth: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError(f"halfwidth must be positive, got {self.halfwidth!r}")

    @property
    def breakpoints(self):
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    @property
    def support(self):
        return self.breakpoints

    def _r(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.halfwidth

    def __call__(self, x):
        r = self._r(x)
        q = 1.0 - r * r
        return np.where(np.abs(r) < 1.0, self.amplitude * q ** 3, 0.0)

    def derivative(self, x):
        r = self._r(x)
        q = 1.0 - r * r
        return np.where(np.abs(r) < 1.0, -6.0 * self.amplitude * r * q ** 2 / self.halfwidth, 0.0)

    def second_derivative(self, x):
        r = self._r(x)
        q = 1.0 - r * r
        d2 = 6.0 * self.amplitude * q * (5.0 * r * r - 1.0) / self.halfwidth ** 2
        return np.where(np.abs(r) < 1.0, d2, 0.0)

    @property
    def integral(self):
        """Exact integral over the support, amplitude*halfwidth*32/35."""
        return self.amplitude * self.halfwidth * 32.0 / 35.0


@dataclass(frozen=True)
class SineProfile(Profile):
    """amplitude * sin(k*pi*x/length): a generic smooth, non band-limited profile."""

    k: int
    length: float
    amplitude: float = 1.0

    def _w(self):
        return self.k * math.pi / self.length

    def __call__(self, x):
        return self.amplitude * np.sin(self._w() * np.asarray(x, dtype=float))

    def derivative(self, x):
        return self.amplitude * self._w() * np.cos(self._w() * np.asarray(x, dtype=float))

    def second_derivative(self, x):
        return -self._w() ** 2 * self(x)


class SampledProfile(Profile):
    """Cubic-spline interpolant of samples on a strictly increasing grid."""

    def __init__(self, x, values):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or x.size < 4:
            raise ValueError("sampled profile needs matching 1-D arrays with at least 4 points")
        if not np.all(np.diff(x) > 0):
            raise ValueError("sample positions must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(values))):
            raise ValueError("samples must be finite")
        self.x = x
        self.values = values
        self._spline = CubicSpline(x, values)
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self.breakpoints = tuple(x)

    def __call__(self, x):
        return self._spline(np.asarray(x, dtype=float))

    def derivative(self, x):
        return self._d1(np.asarray(x, dtype=float))

    def second_derivative(self, x):
        return self._d2(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"SampledProfile(n={self.x.size}, x=[{self.x[0]}, {self.x[-1]}])"


def load_profile_csv(path) -> SampledProfile:
    """Read a two-column ``x,value`` CSV with a header row."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2:
            raise ValueError(f"{path}: expected a 2-column header row")
        try:
            float(header[0])
        except ValueError:
            pass
        else:
            raise ValueError(f"{path}: header row required, got numeric first row")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns")
            rows.append((float(row[0]), float(row[1])))
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    if arr.shape[0] >= 2 and not np.all(np.diff(arr[:, 0]) > 0):
        raise ValueError(f"{path}: x column must be strictly increasing")
    return SampledProfile(arr[:, 0], arr[:, 1])


def write_profile_csv(path, x, values):
    with open(path, "w", newline="") as fh:
        fh.write("x,value\n")
        for xi, vi in zip(np.asarray(x, float), np.asarray(values, float)):
            fh.write(f"{xi:.17g},{vi:.17g}\n")


def bump_profile(center: float, halfwidth: float, amplitude: float = 1.0,
                 length: float | None = None) -> BumpProfile:
    """Polynomial C^2 bump; with ``length`` the support must lie in [0, length]."""
    bump = BumpProfile(float(center), float(halfwidth), float(amplitude))
    if length is not None:
        lo, hi = bump.support
        span = 1e-12 * length
        if lo < -span or hi > length + span:
            raise DomainError(
                f"bump support ({lo}, {hi}) is not inside the interval (0, {length})"
            )
    return bump


@dataclass(frozen=True)
class InitialData:
    """Displacement ``phi0`` and velocity ``phi1`` on [0, ell*time].

    ``time`` is the data time s (defaults to the domain's t0). Values for
    negative x come from the odd extension of both profiles.
    """

    domain: MovingDomain
    phi0: Profile
    phi1: Profile
    time: float | None = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        s = self.domain.t0 if self.time is None else float(self.time)
        if s < self.domain.t0:
            raise DomainError(f"data time {s} precedes t0={self.domain.t0}")
        object.__setattr__(self, "time", s)
        L = self.length
        grid = np.linspace(0.0, L, 513)
        sup = float(np.max(np.abs(self.phi0(grid))))
        ends = np.abs(self.phi0(np.array([0.0, L])))
        if np.any(ends > DIRICHLET_RTOL * sup):
            raise DomainError(
                f"phi0 must vanish at both ends: phi0(0)={ends[0]:.3g}, phi0({L:g})={ends[1]:.3g}"
            )

    @property
    def length(self) -> float:
        return self.domain.ell * self.time

    @property
    def breakpoints(self):
        """Kinks of either profile on (-L, L), mirrored, plus the origin."""
        L = self.length
        pts = {0.0}
        for p in (*self.phi0.breakpoints, *self.phi1.breakpoints):
            if 0.0 < p < L:
                pts.update((p, -p))
        return tuple(sorted(pts))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.length * (1 + 1e-14)):
            raise DomainError(f"|x| must be <= ell*s = {self.length}")
        return x

    def extended(self, x):
        """Odd extensions of phi0, phi1 and the even extension of phi0'."""
        x = self._check(x)
        sign = np.where(x < 0, -1.0, 1.0)
        a = np.minimum(np.abs(x), self.length)
        return sign * self.phi0(a), self.phi0.derivative(a), sign * self.phi1(a)

    def sup_norm(self, n: int = 2049) -> float:
        grid = np.linspace(0.0, self.length, n)
        return float(max(np.max(np.abs(self.phi0(grid))), np.max(np.abs(self.phi1(grid)))))

    def scaled(self, factor: float) -> "InitialData":
        return InitialData(self.domain, _Scaled(self.phi0, factor), _Scaled(self.phi1, factor),
                           self.time, self.label)


class _Scaled(Profile):
    def __init__(self, base, factor):
        self.base = base
        self.factor = float(factor)
        self.breakpoints = base.breakpoints

    def __call__(self, x):
        return self.factor * self.base(x)

    def derivative(self, x):
        return self.factor * self.base.derivative(x)

    def second_derivative(self, x):
        return self.factor * self.base.second_derivative(x)


def odd_extend(d: InitialData, x):
    """(phi0, phi1) at x in [-ell*s, ell*s] via the odd extension."""
    phi0, _, phi1 = d.extended(x)
    return phi0, phi1


def data_energy(d: InitialData, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """E = 1/2 * integral over (0, ell*s) of phi0'**2 + phi1**2."""
    def f(x):
        return 0.5 * (d.phi0.derivative(x) ** 2 + d.phi1(x) ** 2)

    bps = [p for p in d.breakpoints if p > 0]
    return float(integrate_adaptive(f, 0.0, d.length, rule, breakpoints=bps))


def zero_data(domain: MovingDomain, time: float | None = None) -> InitialData:
    return InitialData(domain, ZeroProfile(), ZeroProfile(), time, "zero")


def catalog(name: str, domain: MovingDomain, time: float | None = None, **params) -> InitialData:
    """Named initial data: ``zero``, ``bump`` (displacement), ``sine`` (displacement)."""
    s = domain.t0 if time is None else time
    L = domain.ell * s
    if name == "zero":
        return zero_data(domain, time)
    if name == "bump":
        c = params.get("center", 0.5 * L)
        h = params.get("halfwidth", 0.25 * L)
        amp = params.get("amplitude", 1.0)
        vel = params.get("velocity", 0.0)
        b = bump_profile(c, h, amp, L)
        phi1 = ZeroProfile() if vel == 0 else bump_profile(c, h, vel, L)
        return InitialData(domain, b, phi1, time, "bump")
    if name == "sine":
        k = int(params.get("k", 1))
        amp = params.get("amplitude", 1.0)
        return InitialData(domain, SineProfile(k, L, amp), ZeroProfile(), time, "sine")
    raise ValueError(f"unknown catalog profile {name!r}")


def sampled_data(domain: MovingDomain, phi0_csv, phi1_csv=None) -> InitialData:
    phi0 = load_profile_csv(Path(phi0_csv))
    phi1 = ZeroProfile() if phi1_csv is None else load_profile_csv(Path(phi1_csv))
    L = domain.initial_length
    for name, prof in (("phi0", phi0), ("phi1", phi1)):
        if isinstance(prof, SampledProfile) and (prof.x[0] > 1e-12 * L or prof.x[-1] < L * (1 - 1e-12)):
            raise DomainError(f"{name} samples must cover [0, {L}]")
    return InitialData(domain, phi0, phi1, None, "sampled")
