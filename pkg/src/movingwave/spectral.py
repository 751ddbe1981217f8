"""Generalized Fourier representation of the homogeneous solution.

The solution is phi(x, t) = F(t + x) - F(t - x) with the log-periodic profile

    F(s) = sum_n C_n exp(i n pi alpha log s),

so every quantity below reduces to evaluating F, F' and F'' at s = t +/- x.
Mode sums use Horner's scheme in z = exp(i pi alpha log s): the logarithm is
taken once per point and the mode order is fixed, which keeps results
deterministic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainError, MovingDomain
from .initialdata import InitialData, Profile
from .quadrature import DEFAULT_RULE, QuadratureRule, integrate_adaptive

DEFAULT_ORDER = 64
SYMMETRY_RTOL = 1e-8
IMAG_RTOL = 1e-10


class CoefficientError(ValueError):
    """Malformed coefficient family (C0 != 0, bad indexing, broken symmetry)."""


def _horner(w, z):
    """sum_{k=1}^{K} w[k-1] * z**k for each entry of z."""
    acc = np.zeros_like(z)
    for wk in w[::-1]:
        acc = (acc + wk) * z
    return acc


@dataclass(frozen=True)
class SpectralSolution:
    """Truncated coefficients C_n, n = -N..N, stored densely (index n + N)."""

    domain: MovingDomain
    coeffs: np.ndarray
    symmetric: bool = False
    S: float = field(init=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1 or c.size < 3:
            raise CoefficientError("coefficients must be a 1-D array of odd length 2N+1 >= 3")
        if not np.all(np.isfinite(c)):
            raise CoefficientError("coefficients must be finite")
        N = c.size // 2
        if c[N] != 0:
            raise CoefficientError(f"C0 must be zero, got {c[N]!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "S", _sharp_constant(self.domain, c))

    @property
    def N(self) -> int:
        return self.coeffs.size // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def coefficient(self, n: int) -> complex:
        return complex(self.coeffs[n + self.N]) if abs(n) <= self.N else 0j

    @property
    def amplitude(self) -> float:
        """sum |C_n|, a bound on sup |F|."""
        return float(np.sum(np.abs(self.coeffs)))

    # --- profile F and its derivatives -----------------------------------
    def _sums(self, s, weights):
        s = np.asarray(s, dtype=float)
        theta = math.pi * self.domain.alpha * np.log(s)
        z = np.exp(1j * theta)
        N = self.N
        out = []
        for w in weights:
            pos = _horner(w[N + 1:], z)
            neg = _horner(w[:N][::-1], np.conj(z))
            out.append(pos + neg)
        return out

    def _checked_real(self, vals, scale):
        if self.symmetric:
            resid = float(np.max(np.abs(vals.imag), initial=0.0))
            if resid > IMAG_RTOL * max(scale, np.finfo(float).tiny):
                raise RuntimeError(f"imaginary residue {resid:.3e} exceeds tolerance")
        return vals.real

    def profile_complex(self, s, order: int = 1):
        """Complex F(s) and its s-derivatives up to ``order`` (<= 2)."""
        n = self.modes.astype(float)
        ia = 1j * math.pi * self.domain.alpha * n
        weights = [self.coeffs, self.coeffs * ia, self.coeffs * ia * (ia - 1.0)][: order + 1]
        sums = self._sums(s, weights)
        s = np.asarray(s, dtype=float)
        return tuple(v / s ** k for k, v in enumerate(sums))

    def profile(self, s, order: int = 1):
        """F(s) and its s-derivatives up to ``order`` (<= 2), as real arrays."""
        vals = self.profile_complex(s, order)
        smin = float(np.min(s))
        k = math.pi * self.domain.alpha * self.N
        amp = self.amplitude
        scales = (amp, amp * k / smin, amp * k * (k + 1) / smin ** 2)
        return tuple(self._checked_real(v, sc) for v, sc in zip(vals, scales))

    def _check_point(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(t < self.domain.t0 * (1 - 1e-14)):
            raise DomainError(f"time must be >= t0={self.domain.t0}")
        if np.any(np.abs(x) > self.domain.ell * t * (1 + 1e-14)):
            raise DomainError("|x| must be <= ell*t")
        return np.broadcast_arrays(x, t)

    def evaluate(self, x, t):
        """(phi, phi_x, phi_t) on the closed extended interval [-ell*t, ell*t]."""
        x, t = self._check_point(x, t)
        Fp, dFp = self.profile(t + x)
        Fm, dFm = self.profile(t - x)
        return Fp - Fm, dFp + dFm, dFp - dFm

    def evaluate_complex(self, x, t):
        """Complex (phi, phi_x, phi_t); used for single-mode solutions."""
        x, t = self._check_point(x, t)
        Fp, dFp = self.profile_complex(t + x)
        Fm, dFm = self.profile_complex(t - x)
        return Fp - Fm, dFp + dFm, dFp - dFm

    def trace(self, endpoint: str, t):
        return boundary_trace(self, endpoint, t)

    def scaled(self, factor: float) -> "SpectralSolution":
        return SpectralSolution(self.domain, self.coeffs * factor, self.symmetric)


def _sharp_constant(domain, coeffs):
    N = coeffs.size // 2
    n = np.arange(-N, N + 1)
    return float(2.0 * math.pi ** 2 * domain.alpha * np.sum(np.abs(n * coeffs) ** 2))


def unit_mode(domain: MovingDomain, m: int) -> SpectralSolution:
    """Complex mode e_m: C_m = 1, all other coefficients zero."""
    N = abs(int(m))
    if N == 0:
        raise ValueError("mode 0 is identically zero")
    c = np.zeros(2 * N + 1, complex)
    c[m + N] = 1.0
    return SpectralSolution(domain, c, symmetric=False)


def sharp_constant(sol: SpectralSolution) -> float:
    """S = 2 pi^2 alpha sum |n C_n|^2, recomputed from the coefficients."""
    return _sharp_constant(sol.domain, sol.coeffs)


def evaluate(sol: SpectralSolution, x, t):
    return sol.evaluate(x, t)


def boundary_trace(sol: SpectralSolution, endpoint: str, t):
    """(phi_x, phi_t) at x = 0 (``fixed``) or x = ell*t (``moving``)."""
    d = sol.domain
    t = np.asarray(t, dtype=float)
    if np.any(t < d.t0 * (1 - 1e-14)):
        raise DomainError(f"time must be >= t0={d.t0}")
    n = sol.modes.astype(float)
    w = 1j * n * sol.coeffs
    if endpoint == "fixed":
        (sums,) = sol._sums(t, [w])
        phi_x = sol._checked_real(2 * math.pi * d.alpha * sums / t,
                                  2 * math.pi * d.alpha * np.sum(np.abs(w)) / d.t0)
        return phi_x, np.zeros_like(phi_x)
    if endpoint == "moving":
        (sums,) = sol._sums((1.0 + d.ell) * t, [w])
        k = 2 * math.pi * d.alpha / (1.0 - d.ell ** 2)
        phi_x = sol._checked_real(k * sums / t, k * np.sum(np.abs(w)) / d.t0)
        return phi_x, -d.ell * phi_x
    raise ValueError(f"endpoint must be 'fixed' or 'moving', got {endpoint!r}")


def compute_coefficients(data: InitialData, N: int = DEFAULT_ORDER,
                         rule: QuadratureRule = DEFAULT_RULE,
                         rtol: float = 1e-12, max_panels: int = 1024) -> SpectralSolution:
    """C_n = 1/(4 n pi i) * integral of (phi0' + phi1)(x) exp(-i n pi alpha log(s+x)) dx.

    The integral runs over (-ell*s, ell*s) with the odd extensions of the data
    at data time s. It is evaluated in u = log(s + x), where the exponential
    oscillates uniformly; the panel count is at least 4N.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    d, s = data.domain, data.time
    n = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)]).astype(float)
    k = math.pi * d.alpha * n

    def f(u):
        x = np.exp(u) - s
        x = np.clip(x, -data.length, data.length)
        _, d0, p1 = data.extended(x)
        g = (d0 + p1) * np.exp(u)
        return g[None, :] * np.exp(-1j * k[:, None] * u[None, :])

    ua, ub = math.log((1.0 - d.ell) * s), math.log((1.0 + d.ell) * s)
    bps = [math.log(s + p) for p in data.breakpoints]
    vals = integrate_adaptive(f, ua, ub, rule.at_least(4 * N), rtol, max_panels, breakpoints=bps)
    c = vals / (4.0 * math.pi * 1j * n)
    neg, pos = c[:N][::-1], c[N:]
    scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
    mismatch = float(np.max(np.abs(neg - np.conj(pos))))
    if mismatch > SYMMETRY_RTOL * scale:
        raise CoefficientError(
            f"conjugate symmetry violated by {mismatch / scale:.3e} (relative); "
            "data or quadrature resolution is inadequate"
        )
    full = np.concatenate([np.conj(pos[::-1]), [0j], pos])
    return SpectralSolution(d, full, symmetric=True)


def from_positive(domain: MovingDomain, positive, N: int | None = None) -> SpectralSolution:
    """Real solution from C_1..C_K, padded with zero modes up to order N."""
    pos = np.asarray(positive, dtype=complex)
    N = pos.size if N is None else int(N)
    if N < pos.size:
        raise ValueError("N is smaller than the number of supplied modes")
    pos = np.concatenate([pos, np.zeros(N - pos.size, complex)])
    return SpectralSolution(domain, np.concatenate([np.conj(pos[::-1]), [0j], pos]), True)


def random_coefficients(domain: MovingDomain, n_star: int, rng, decay: float = 1.0,
                        amplitude: float = 1.0, N: int | None = None) -> SpectralSolution:
    """Band-limited real solution with C_n ~ amplitude * normal / n**decay for n <= n_star."""
    n = np.arange(1, n_star + 1)
    pos = amplitude * (rng.standard_normal(n_star) + 1j * rng.standard_normal(n_star)) / n ** decay
    return from_positive(domain, pos, N)


class _SeriesProfile(Profile):
    """phi(., s) or phi_t(., s) of a spectral solution as a function of x."""

    def __init__(self, sol: SpectralSolution, s: float, kind: str):
        self.sol, self.s, self.kind = sol, float(s), kind

    def _parts(self, x, order):
        x = np.asarray(x, dtype=float)
        return self.sol.profile(self.s + x, order), self.sol.profile(self.s - x, order)

    def __call__(self, x):
        (Fp, dFp), (Fm, dFm) = self._parts(x, 1)
        return Fp - Fm if self.kind == "phi" else dFp - dFm

    def derivative(self, x):
        (_, dFp, d2p), (_, dFm, d2m) = self._parts(x, 2)
        return dFp + dFm if self.kind == "phi" else d2p + d2m

    def second_derivative(self, x):
        (_, _, d2p), (_, _, d2m) = self._parts(x, 2)
        if self.kind == "phi":
            return d2p - d2m
        raise NotImplementedError("third derivative of the profile is not provided")


def synthesize(sol: SpectralSolution, time: float | None = None) -> InitialData:
    """Initial data (phi, phi_t) at ``time`` (default t0) of a spectral solution."""
    s = sol.domain.t0 if time is None else float(time)
    return InitialData(sol.domain, _SeriesProfile(sol, s, "phi"), _SeriesProfile(sol, s, "phi_t"),
                       s, "band-limited")


def write_coefficients(path, sol: SpectralSolution):
    """CSV rows ``n,re,im`` for n = -N..N."""
    with open(path, "w", newline="") as fh:
        fh.write("n,re,im\n")
        for n, c in zip(sol.modes, sol.coeffs):
            fh.write(f"{int(n)},{c.real:.17g},{c.imag:.17g}\n")


def read_coefficients(path, domain: MovingDomain) -> SpectralSolution:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["n", "re", "im"]:
            raise CoefficientError(f"{path}: header must be 'n,re,im'")
        rows = [(int(r[0]), float(r[1]), float(r[2])) for r in reader if r]
    if not rows:
        raise CoefficientError(f"{path}: no coefficient rows")
    rows.sort()
    ns = [r[0] for r in rows]
    N = max(abs(n) for n in ns)
    if ns != list(range(-N, N + 1)):
        raise CoefficientError(f"{path}: rows must cover n = -N..N exactly once")
    c = np.array([complex(r[1], r[2]) for r in rows])
    if c[N] != 0:
        raise CoefficientError(f"C0 must be zero, got {c[N]!r}")
    sym = bool(np.allclose(c[::-1], np.conj(c), rtol=0, atol=SYMMETRY_RTOL * np.max(np.abs(c))))
    if sym:
        c = 0.5 * (c + np.conj(c[::-1]))
    return SpectralSolution(domain, c, symmetric=sym)
