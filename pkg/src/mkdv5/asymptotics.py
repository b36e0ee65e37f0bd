"""Region classification and leading-order long-time formulas.

Conventions: k0 = (|x|/(80 t))^(1/4), tau = t k0^5, self-similar variable
y = x/(20 t)^(1/5) with amplitude scale (8/(5 t))^(1/5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .core import (DomainError, InvalidArgument, RegionThresholds, composite_gauss_legendre,
                   endpoint_log_integral, gamma_arg_imag_axis, with_breakpoints)
from .scattering import ReflectionInterpolant, ScatteringData


class OutOfTheory(InvalidArgument):
    """(x, t) matches none of the five regions under the given thresholds."""


class ExtrapolationError(InvalidArgument):
    pass


class StationaryPoint(NamedTuple):
    k0: float
    imaginary: bool


def stationary_point(x: float, t: float) -> StationaryPoint:
    """Real stationary points +-k0 for x > 0; for x < 0 they sit at +-i k0."""
    if not t > 0:
        raise InvalidArgument(f"t must be positive, got {t}")
    return StationaryPoint((abs(x) / (80.0 * t)) ** 0.25, x < 0)


@dataclass(frozen=True)
class Region:
    label: str
    k0: float
    tau: float


def classify(x: float, t: float, th: RegionThresholds = RegionThresholds()) -> Region:
    if t < 1:
        raise InvalidArgument(f"classification needs t >= 1, got {t}")
    k0 = stationary_point(x, t).k0
    tau = t * k0 ** 5
    if tau <= th.M_prime:
        return Region("III", k0, tau)
    if x > 0 and k0 <= th.M and tau >= th.tau_I:
        return Region("I", k0, tau)
    if x > 0 and th.M_tilde <= tau <= t ** (2.0 / 7.0 - th.region2_margin):
        return Region("II", k0, tau)
    if x < 0 and k0 <= th.M and tau >= th.M_tilde:
        return Region("IV", k0, tau)
    if x < 0 and k0 >= th.M:
        return Region("V", k0, tau)
    if x > 0:
        why = (f"k0={k0:.4g} > M={th.M}" if k0 > th.M
               else f"tau={tau:.4g} below tau_I={th.tau_I} and outside [M_tilde, t^(2/7)]")
    else:
        why = f"tau={tau:.4g} in (M'={th.M_prime}, M_tilde={th.M_tilde})"
    raise OutOfTheory(f"(x={x}, t={t}) is outside every region: {why}")


def nu_of(r_k0: complex) -> float:
    m = abs(r_k0) ** 2
    if not m < 1:
        raise DomainError(f"|r(k0)| = {abs(r_k0)} >= 1")
    return -math.log1p(-m) / (2 * math.pi)


def _reflection(data) -> ReflectionInterpolant:
    if isinstance(data, ScatteringData):
        return data.reflection()
    return data


def phase_phi(data, k0: float, quad_tol: float = 1e-11) -> float:
    """phi(k0) = -3pi/4 - arg r(k0) + arg Gamma(i nu) - (endpoint log integral)."""
    r = _reflection(data)
    rk0 = complex(r(np.array([k0]))[0])
    nu = nu_of(rk0)
    arg_gamma = gamma_arg_imag_axis(nu) if nu > 0 else -math.pi / 2
    arg_r = math.atan2(rk0.imag, rk0.real) if rk0 != 0 else 0.0
    return -0.75 * math.pi - arg_r + arg_gamma - endpoint_log_integral(r, k0, quad_tol)


@dataclass(frozen=True)
class AsymptoticEvaluation:
    x: float
    t: float
    region: Region
    nu: float
    phi: float
    theta: float
    value: float
    error_scale: float

    @property
    def k0(self) -> float:
        return self.region.k0

    @property
    def tau(self) -> float:
        return self.region.tau

    @property
    def theta_reduced(self) -> float:
        return math.remainder(self.theta, 2 * math.pi)

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.nu) / (2 * self.k0 * math.sqrt(10 * self.k0 * self.t))


def region1_theta(t: float, k0: float, nu: float, phi: float) -> float:
    tau = t * k0 ** 5
    return 128.0 * tau + nu * math.log(2560.0 * tau) + phi


def region1_eval(x: float, t: float, data, th: RegionThresholds = RegionThresholds(),
                 quad_tol: float = 1e-11) -> AsymptoticEvaluation:
    region = classify(x, t, th)
    if region.label != "I":
        raise InvalidArgument(f"(x={x}, t={t}) is in region {region.label}, not I")
    k0, tau = region.k0, region.tau
    r = _reflection(data)
    nu = nu_of(complex(r(np.array([k0]))[0]))
    phi = phase_phi(r, k0, quad_tol)
    theta = region1_theta(t, k0, nu, phi)
    amp = math.sqrt(nu) / (2 * k0 * math.sqrt(10 * k0 * t))
    err = 1.0 / tau + (k0 ** 3 * t) ** -0.75
    return AsymptoticEvaluation(x, t, region, nu, phi, theta, amp * math.cos(theta), err)


def painleve_error_scale(region: Region, t: float, rho: float) -> float:
    base = t ** -0.3
    if region.label == "II":
        return base + (region.tau / t) ** 0.4
    if region.label == "III":
        return base
    if region.label == "IV":
        return base * math.exp(-8 * (20 * region.tau) ** 0.8 * rho)
    raise InvalidArgument(f"no Painleve formula in region {region.label}")


def painleve_region_eval(x: float, t: float, profile, region: Region,
                         th: RegionThresholds = RegionThresholds()) -> AsymptoticEvaluation:
    """u ~ (8/(5t))^(1/5) u_p(x/(20t)^(1/5)) in regions II, III, IV."""
    err = painleve_error_scale(region, t, th.rho)
    y = x / (20.0 * t) ** 0.2
    yg = profile.y
    if not (yg[0] <= y <= yg[-1]):
        raise ExtrapolationError(f"y={y:.4g} outside profile support [{yg[0]:.4g}, {yg[-1]:.4g}]")
    up = float(CubicSpline(yg, profile.u)(y))
    value = (8.0 / (5.0 * t)) ** 0.2 * up
    return AsymptoticEvaluation(x, t, region, 0.0, 0.0, 0.0, value, err)


def region5_bound(x: float, t: float, th: RegionThresholds = RegionThresholds(), c: float = 1.0) -> float:
    region = classify(x, t, th)
    if region.label != "V":
        raise InvalidArgument(f"(x={x}, t={t}) is in region {region.label}, not V")
    tau = region.tau
    return t ** -0.2 * math.exp(-c * tau) + t ** -0.3 * math.exp(-8 * (20 * tau) ** 0.8 * th.rho)


def evaluate(x: float, t: float, data, profile=None,
             th: RegionThresholds = RegionThresholds()) -> AsymptoticEvaluation:
    """Dispatch to the region's formula. Regions II-IV need a Painleve profile;
    without one the value is NaN. Region V reports its bound with value 0."""
    region = classify(x, t, th)
    if region.label == "I":
        return region1_eval(x, t, data, th)
    if region.label == "V":
        return AsymptoticEvaluation(x, t, region, 0.0, 0.0, 0.0, 0.0, region5_bound(x, t, th))
    if profile is None:
        err = painleve_error_scale(region, t, th.rho)
        return AsymptoticEvaluation(x, t, region, 0.0, 0.0, 0.0, float("nan"), err)
    return painleve_region_eval(x, t, profile, region, th)


# --- delta function ------------------------------------------------------------

def _panels_toward(a: float, b: float, c: float) -> np.ndarray:
    """Edges on [a, b] graded geometrically toward an interior or end point c."""
    edges = {a, b}
    for lo, hi in ((a, c), (c, b)):
        w = hi - lo
        if w <= 0:
            continue
        edges.add(c)
        d = w
        while d > 1e-13 * max(1.0, abs(c)):
            d *= 0.2
            edges.add(c - d if hi == c else c + d)
    return np.array(sorted(edges))


def delta_eval(data, k0: float, k: complex) -> complex:
    """delta(k) = exp{(1/(2 pi i)) int_{-k0}^{k0} ln(1-|r(s)|^2)/(s-k) ds}."""
    k = complex(k)
    if k.imag == 0 and -k0 <= k.real <= k0:
        raise InvalidArgument(f"k={k} lies on the cut [-k0, k0]")
    r = _reflection(data)

    def f(s):
        m = np.abs(r(s)) ** 2
        if np.any(m >= 1):
            raise DomainError("|r| >= 1 on the cut")
        return np.log1p(-m)

    c = min(max(k.real, -k0), k0)
    fc = float(f(np.array([c]))[0])
    # principal logs: the branch cut of log(k0-k) - log(-k0-k) is the segment itself
    log_term = np.log(k0 - k) - np.log(-k0 - k)
    edges = with_breakpoints(_panels_toward(-k0, k0, c), r)
    integral = composite_gauss_legendre(lambda s: (f(s) - fc) / (s - k), edges)
    integral += fc * log_term
    return complex(np.exp(integral / (2j * math.pi)))


# --- sweep CSV ------------------------------------------------------------------

SWEEP_COLUMNS = ["x", "t", "region", "k0", "tau", "nu", "value", "error_scale"]


def sweep_rows(evals):
    for e in evals:
        yield (e.x, e.t, e.region.label, e.k0, e.tau, e.nu, e.value, e.error_scale)
