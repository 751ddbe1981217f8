"""Geometry of the expanding interval (0, ell*t) and its derived constants."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

#: Speeds inside this band are treated as well conditioned.
WELL_CONDITIONED_BAND = (1e-6, 1.0 - 1e-6)


class DomainError(ValueError):
    """Raised for invalid geometry or for points outside the space-time domain."""


class ConditioningWarning(UserWarning):
    """Speed is so close to 0 or 1 that lambda/alpha lose accuracy."""


@dataclass(frozen=True)
class MovingDomain:
    """The interval (0, ell*t) for t >= t0.

    Derived constants are filled in at construction:

    * ``lam`` -- dilation factor (1+ell)/(1-ell) of one reflection cycle
    * ``log_lambda`` -- its logarithm, the log-period
    * ``alpha`` -- 2/log(lam)
    * ``critical_time`` -- sharp observation window 2*ell*t0/(1-ell)
    """

    ell: float
    t0: float
    lam: float = field(init=False)
    log_lambda: float = field(init=False)
    alpha: float = field(init=False)
    critical_time: float = field(init=False)

    def __post_init__(self):
        ell, t0 = _validate(self.ell, self.t0)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "t0", t0)
        log_lambda = math.log1p(ell) - math.log1p(-ell)
        object.__setattr__(self, "lam", (1.0 + ell) / (1.0 - ell))
        object.__setattr__(self, "log_lambda", log_lambda)
        object.__setattr__(self, "alpha", 2.0 / log_lambda)
        object.__setattr__(self, "critical_time", 2.0 * ell * t0 / (1.0 - ell))

    def length(self, t):
        """Length ell*t of the interval at time t."""
        return self.ell * np.asarray(t, dtype=float)

    @property
    def initial_length(self) -> float:
        return self.ell * self.t0

    @property
    def critical_end(self) -> float:
        """End t0 + T* of the sharp window; equals lam*t0."""
        return self.t0 + self.critical_time

    def period_end(self, M: int = 1) -> float:
        """Time lam**M * t0 reached after M reflection cycles."""
        return self.t0 * self.lam ** M


def _validate(ell, t0):
    try:
        ell = float(ell)
        t0 = float(t0)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"speed and initial time must be real numbers: {exc}") from None
    if not math.isfinite(ell):
        raise DomainError(f"speed must be finite, got {ell!r}")
    if not math.isfinite(t0):
        raise DomainError(f"initial time must be finite, got {t0!r}")
    if ell <= 0.0:
        raise DomainError(f"speed must be > 0, got {ell!r}")
    if ell >= 1.0:
        raise DomainError(f"speed must be < 1, got {ell!r}")
    if t0 <= 0.0:
        raise DomainError(f"initial time must be > 0, got {t0!r}")
    lo, hi = WELL_CONDITIONED_BAND
    if not lo <= ell <= hi:
        warnings.warn(
            f"speed {ell!r} is outside [{lo}, {hi}]; derived constants are ill conditioned",
            ConditioningWarning,
            stacklevel=4,
        )
    return ell, t0


def make_domain(ell: float, t0: float) -> MovingDomain:
    """Validate ``ell`` and ``t0`` and return the domain with derived constants."""
    return MovingDomain(ell, t0)


def log_coordinate(d: MovingDomain, x, t):
    """Map (x, t) with -ell*t <= x <= ell*t to z = alpha*log((t+x)/(t(1-ell))) in [0, 2]."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < d.t0):
        raise DomainError(f"time must be >= t0={d.t0}")
    s = t + x
    if np.any(s <= 0.0):
        raise DomainError("t + x must be positive")
    z = d.alpha * (np.log(s) - np.log(t) - math.log1p(-d.ell))
    return z[()] if z.ndim == 0 else z


class LiteratureTimes(NamedTuple):
    """Control times normalised to an initial length ell*t0 = 1."""

    T0_norm: float
    T1: float
    T2: float
    T3: float


def literature_times(ell: float) -> LiteratureTimes:
    """Sharp time against the three earlier multiplier-method times.

    ``T0_norm`` is the sharp window with t0 = 1/ell. T1 and T3 overflow to
    ``inf`` as ell approaches 1.
    """
    ell, _ = _validate(ell, 1.0)
    with np.errstate(over="ignore"):
        t1 = float(np.expm1(2.0 * ell * (1.0 + ell) / (1.0 - ell) ** 3) / ell)
        t3 = float(np.expm1(2.0 * ell * (1.0 + ell) / (1.0 - ell)) / ell)
    t0_norm = MovingDomain(ell, 1.0 / ell).critical_time
    return LiteratureTimes(t0_norm, t1, 2.0 / (1.0 - ell), t3)
