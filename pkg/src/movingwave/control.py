"""Boundary controls v(t) sampled on a log-uniform grid of their window."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .domain import MovingDomain
from .quadrature import QuadratureRule, integrate

ENDPOINTS = ("fixed", "moving")


def check_endpoint(endpoint: str) -> str:
    if endpoint not in ENDPOINTS:
        raise ValueError(f"endpoint must be 'fixed' or 'moving', got {endpoint!r}")
    return endpoint


@dataclass(frozen=True)
class BoundaryControl:
    """Control acting at one endpoint on [t_start, t_end], zero outside.

    Samples live on a grid uniform in u = log t and are interpolated by cubic
    Hermite polynomials in u when ``slopes`` (dv/dt) are given, otherwise by a
    cubic spline in u. ``coefficients`` and ``modes`` keep the Galerkin
    representation when the control came from the HUM solve.
    """

    endpoint: str
    t_start: float
    t_end: float
    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    modes: np.ndarray | None = None
    cost_weight: str | None = None
    cost: float = field(init=False)

    def __post_init__(self):
        check_endpoint(self.endpoint)
        t = np.asarray(self.times, float)
        v = np.asarray(self.values, float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 4:
            raise ValueError("control needs matching 1-D time/value arrays with >= 4 samples")
        if not (self.t_start < self.t_end and np.all(np.diff(t) > 0)):
            raise ValueError("control window and sample times must be increasing")
        if not np.isclose(t[0], self.t_start, rtol=1e-12) or not np.isclose(t[-1], self.t_end, rtol=1e-12):
            raise ValueError("samples must span exactly the control window")
        if not np.all(np.isfinite(v)):
            raise ValueError("control samples must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        u = np.log(t)
        if self.slopes is not None:
            dv = np.asarray(self.slopes, float)
            object.__setattr__(self, "slopes", dv)
            interp = CubicHermiteSpline(u, v, dv * t)
        else:
            interp = CubicSpline(u, v)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())
        object.__setattr__(self, "cost", self._cost())

    @property
    def window(self):
        return (self.t_start, self.t_end)

    def samples_per_log_period(self, domain: MovingDomain) -> float:
        return (self.times.size - 1) * domain.log_lambda / math.log(self.t_end / self.t_start)

    def interior(self, t):
        """Interpolant and d/dt evaluated with t clamped into the window."""
        t = np.clip(np.asarray(t, float), self.t_start, self.t_end)
        u = np.log(t)
        return self._interp(u), self._dinterp(u) / t

    def __call__(self, t):
        t = np.asarray(t, float)
        inside = (t >= self.t_start) & (t <= self.t_end)
        return np.where(inside, self.interior(t)[0], 0.0)

    def derivative(self, t):
        t = np.asarray(t, float)
        inside = (t >= self.t_start) & (t <= self.t_end)
        return np.where(inside, self.interior(t)[1], 0.0)

    def _cost(self) -> float:
        # one panel per sample cell: the integrand is polynomial in u there
        u = np.log(self.times)
        rule = QuadratureRule(self.times.size - 1, 8)

        def f(uu):
            return self._interp(uu) ** 2 * np.exp(uu)

        return float(integrate(f, u[0], u[-1], rule))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def scaled(self, factor: float) -> "BoundaryControl":
        return BoundaryControl(
            self.endpoint, self.t_start, self.t_end, self.times, self.values * factor,
            None if self.slopes is None else self.slopes * factor,
            None if self.coefficients is None else self.coefficients * factor,
            self.modes, self.cost_weight,
        )


def log_grid(t_start: float, t_end: float, domain: MovingDomain, samples_per_period: int):
    """Log-uniform grid on [t_start, t_end] with at least ``samples_per_period`` cells per period."""
    periods = math.log(t_end / t_start) / domain.log_lambda
    n = max(8, int(math.ceil(samples_per_period * periods - 1e-9)))
    t = np.exp(np.linspace(math.log(t_start), math.log(t_end), n + 1))
    t[0], t[-1] = t_start, t_end
    return t


def control_from_function(endpoint: str, domain: MovingDomain, t_start: float, t_end: float,
                          fn, dfn=None, samples_per_period: int = 4096, **extra) -> BoundaryControl:
    """Sample callables v(t) (and dv/dt) on a log-uniform grid of the window."""
    t = log_grid(t_start, t_end, domain, samples_per_period)
    slopes = None if dfn is None else np.asarray(dfn(t), float)
    return BoundaryControl(endpoint, t_start, t_end, t, np.asarray(fn(t), float), slopes, **extra)


def zero_control(endpoint: str, domain: MovingDomain, t_start: float, t_end: float,
                 samples_per_period: int = 64) -> BoundaryControl:
    def zero(t):
        return np.zeros_like(t)

    return control_from_function(endpoint, domain, t_start, t_end, zero, zero, samples_per_period)


def write_control_csv(path, ctrl: BoundaryControl):
    with open(path, "w", newline="") as fh:
        fh.write("t,value\n")
        for t, v in zip(ctrl.times, ctrl.values):
            fh.write(f"{t:.17g},{v:.17g}\n")


def read_control_csv(path, endpoint: str) -> BoundaryControl:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "value"]:
            raise ValueError(f"{path}: header must be 't,value'")
        rows = np.array([[float(a), float(b)] for a, b in reader], dtype=float)
    return BoundaryControl(endpoint, rows[0, 0], rows[-1, 0], rows[:, 0], rows[:, 1])
