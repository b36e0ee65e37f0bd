"""Shared numerical plumbing: grids, thresholds, configuration, Gamma on the
imaginary axis and the endpoint-regularised log integral."""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np


class InvalidArgument(ValueError):
    """Raised when an input violates an operation's precondition."""


class DomainError(ValueError):
    """Raised when |r| >= 1 makes ln(1 - |r|^2) undefined."""


class NumericalError(RuntimeError):
    """Raised when an integrator or evolution fails to meet its tolerances."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid x_j = -L + j*h, h = 2L/n."""

    L: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and _is_power_of_two(int(self.n))):
            raise InvalidArgument(f"grid count must be a power of two >= 2, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidArgument(f"grid half-width must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def points(self) -> np.ndarray:
        return -self.L + np.arange(self.n) * self.h

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the real FFT (length n//2 + 1)."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.h)


def make_uniform_grid(L: float, n: int) -> SpatialGrid:
    return SpatialGrid(float(L), int(n))


@dataclass(frozen=True)
class KGrid:
    """Symmetric grid of real spectral parameters on [-K, K]."""

    K: float
    m: int

    def __post_init__(self):
        if self.m < 2 or not self.K > 0:
            raise InvalidArgument(f"k-grid needs K > 0 and m >= 2, got K={self.K}, m={self.m}")

    @property
    def points(self) -> np.ndarray:
        k = np.linspace(-self.K, self.K, self.m)
        # exact antisymmetry so that k and -k are bitwise negatives
        half = self.m // 2
        k[self.m - half:] = -k[:half][::-1]
        if self.m % 2:
            k[half] = 0.0
        return k


def make_kgrid(K: float, m: int) -> KGrid:
    return KGrid(float(K), int(m))


@dataclass(frozen=True)
class RegionThresholds:
    M: float = 2.0
    M_prime: float = 1.0
    M_tilde: float = 1.0
    tau_I: float = 5.0
    rho: float = 0.5
    region2_margin: float = 0.0

    def __post_init__(self):
        for name in ("M", "M_prime", "M_tilde", "tau_I", "rho"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"threshold {name} must be positive")
        if self.M_tilde > self.tau_I:
            raise InvalidArgument("M_tilde must not exceed tau_I")


@dataclass(frozen=True)
class Tolerances:
    quad_tol: float = 1e-11
    ode_tol: float = 1e-11
    conservation_tol: float = 1e-8
    compare_tol: float = 1e-6

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (0 < v <= 1e-2):
                raise InvalidArgument(f"tolerance {f.name}={v} outside (0, 1e-2]")


@dataclass(frozen=True)
class GridConfig:
    L: float = 40.0
    n: int = 2048
    K: float = 8.0
    m: int = 321

    def spatial(self) -> SpatialGrid:
        return make_uniform_grid(self.L, self.n)

    def kgrid(self) -> KGrid:
        return make_kgrid(self.K, self.m)


@dataclass(frozen=True)
class Config:
    grid: GridConfig = field(default_factory=GridConfig)
    thresholds: RegionThresholds = field(default_factory=RegionThresholds)
    tolerances: Tolerances = field(default_factory=Tolerances)
    extra: dict = field(default_factory=dict)


_SECTIONS = {"grid": GridConfig, "thresholds": RegionThresholds, "tolerances": Tolerances}


def load_config(path: str | Path | None = None, data: dict | None = None) -> Config:
    """Read a JSON document with optional sections grid/thresholds/tolerances.

    Any other top-level keys are kept verbatim in ``Config.extra`` for the
    commands that need them (profiles, rays, time lists).
    """
    if data is None:
        data = {} if path is None else json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise InvalidArgument("configuration must be a JSON object")
    parts = {}
    for name, cls in _SECTIONS.items():
        section = data.get(name, {})
        known = {f.name for f in fields(cls)}
        unknown = set(section) - known
        if unknown:
            raise InvalidArgument(f"unknown keys in [{name}]: {sorted(unknown)}")
        parts[name] = cls(**section)
    extra = {k: v for k, v in data.items() if k not in _SECTIONS}
    return Config(extra=extra, **parts)


def with_overrides(cfg: Config, **grid_kw) -> Config:
    kw = {k: v for k, v in grid_kw.items() if v is not None}
    return replace(cfg, grid=replace(cfg.grid, **kw)) if kw else cfg


# --- Gamma on the imaginary axis -------------------------------------------

# Lanczos g=7, n=9 coefficients (Godfrey).
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _log_gamma_right(z: complex) -> complex:
    """log Gamma(z) for Re z >= 1/2, continuous branch."""
    z = z - 1.0
    x = _LANCZOS_C[0]
    for i in range(1, len(_LANCZOS_C)):
        x += _LANCZOS_C[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def log_gamma(z: complex) -> complex:
    """Complex log Gamma by Lanczos, using reflection when Re z < 1/2.

    The imaginary part is *not* reduced; callers wrap it as needed.
    """
    z = complex(z)
    if z.real >= 0.5:
        return _log_gamma_right(z)
    # Gamma(z) = pi / (sin(pi z) Gamma(1 - z))
    return math.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - _log_gamma_right(1.0 - z)


def _wrap(angle: float) -> float:
    """Reduce to the principal interval (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


def gamma_imag_axis(nu: float) -> complex:
    """Gamma(i*nu) from the Lanczos routine."""
    return cmath.exp(log_gamma(1j * nu))


def gamma_arg_imag_axis(nu: float) -> float:
    """Principal argument of Gamma(i*nu) for 0 < nu <= 10."""
    if not (nu > 0 and math.isfinite(nu)):
        raise InvalidArgument(f"nu must be positive, got {nu}")
    arg = _wrap(log_gamma(1j * nu).imag)
    conj = _wrap(log_gamma(-1j * nu).imag)
    assert abs(_wrap(arg + conj)) < 1e-9, "Schwarz reflection violated"
    return arg


# --- endpoint-regularised log integral -------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _graded_panels(a: float, b: float, ratio: float = 0.15, min_width: float = 1e-14):
    """Panels on [a, b] shrinking geometrically toward the endpoint b."""
    edges = [b]
    w = b - a
    while w > min_width * max(1.0, abs(b)):
        w *= ratio
        edges.append(b - w)
    edges.append(a)
    edges = sorted(set(edges))
    return np.array(edges)


def composite_gauss_legendre(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray) -> complex:
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f(s.ravel()).reshape(s.shape)
    return np.sum((vals * _GL_WEIGHTS[None, :]).sum(axis=1) * half)


def with_breakpoints(edges: np.ndarray, f) -> np.ndarray:
    """Add f.breakpoints (if f has any) lying inside the span of ``edges``."""
    bp = getattr(f, "breakpoints", None)
    if bp is None:
        return edges
    bp = np.asarray(bp, float)
    inner = bp[(bp > edges[0]) & (bp < edges[-1])]
    return np.unique(np.concatenate([edges, inner]))


def _check_subunit(modsq: np.ndarray):
    if np.any(~np.isfinite(modsq)) or np.any(modsq >= 1.0):
        raise DomainError("|r| >= 1 encountered; ln(1 - |r|^2) undefined")


def endpoint_log_integral(r: Callable[[np.ndarray], np.ndarray], k0: float,
                          tol: float = 1e-11) -> float:
    """(1/pi) * int_{-k0}^{k0} ln((1-|r(s)|^2)/(1-|r(k0)|^2)) ds/(s-k0).

    ``r`` maps an array of real s to complex r(s). The integrand is continuous
    at s = k0; within a relative distance ``tol`` of it the analytic limit
    d/ds ln(1-|r|^2) at k0 is used instead of the cancelling quotient.
    """
    if not k0 > 0:
        raise InvalidArgument(f"k0 must be positive, got {k0}")
    m0 = float(np.abs(r(np.array([k0])))[0] ** 2)
    _check_subunit(np.array([m0]))
    h = 1e-5 * k0
    sd = k0 + h * np.array([-2.0, -1.0, 1.0, 2.0])
    md = np.abs(r(sd)) ** 2
    _check_subunit(md)
    lg = np.log1p(-md)
    slope = (lg[0] - 8 * lg[1] + 8 * lg[2] - lg[3]) / (12 * h)

    def integrand(s):
        ms = np.abs(r(s)) ** 2
        _check_subunit(ms)
        # ln((1-ms)/(1-m0)) = log1p((m0-ms)/(1-m0))
        num = np.log1p((m0 - ms) / (1.0 - m0))
        d = s - k0
        near = np.abs(d) < tol * k0
        out = np.where(near, slope, num / np.where(near, 1.0, d))
        return out

    edges = with_breakpoints(_graded_panels(-k0, k0), r)
    return float(np.real(composite_gauss_legendre(integrand, edges))) / math.pi
