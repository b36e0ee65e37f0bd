"""Direct scattering: Jost transport, s(k), and the reflection coefficient."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .core import InvalidArgument, KGrid, NumericalError, SpatialGrid, Tolerances
from . import tables

# k values per transport batch; fixed so results never depend on worker count
CHUNK = 32


@dataclass(frozen=True)
class InitialProfile:
    grid: SpatialGrid
    values: np.ndarray
    require_decay: bool = True
    name: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise InvalidArgument(f"profile has {v.shape} samples, grid has {self.grid.n}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("profile values must be finite")
        object.__setattr__(self, "values", v)
        peak = np.max(np.abs(v)) if v.size else 0.0
        if self.require_decay and self.decay_tail > 1e-8 * peak:
            raise InvalidArgument(
                f"profile does not decay inside the grid: tail {self.decay_tail:.3e} vs peak {peak:.3e}")

    @property
    def decay_tail(self) -> float:
        x = self.grid.points
        outer = np.abs(x) >= 0.9 * self.grid.L
        return float(np.max(np.abs(self.values[outer]))) if outer.any() else 0.0

    @property
    def x(self) -> np.ndarray:
        return self.grid.points


def sech_profile(grid: SpatialGrid, amp: float, width: float = 1.0, shift: float = 0.0) -> InitialProfile:
    x = grid.points - shift
    with np.errstate(over="ignore"):
        v = amp / np.cosh(width * x)
    return InitialProfile(grid, v, name=f"sech(amp={amp!r},width={width!r})")


def gauss_profile(grid: SpatialGrid, amp: float, width: float = 1.0, shift: float = 0.0) -> InitialProfile:
    x = grid.points - shift
    v = amp * np.exp(-((x / width) ** 2))
    return InitialProfile(grid, v, name=f"gauss(amp={amp!r},width={width!r})")


PROFILES = {"sech": sech_profile, "gauss": gauss_profile}


def make_profile(grid: SpatialGrid, name: str, amp: float, width: float = 1.0) -> InitialProfile:
    try:
        return PROFILES[name](grid, amp, width)
    except KeyError:
        raise InvalidArgument(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class ScatteringData:
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    kgrid: KGrid | None = None
    det_defect: float = 0.0
    tail_bound: float = 0.0
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.b / self.a

    @property
    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(np.abs(self.a) ** 2 - np.abs(self.b) ** 2 - 1.0)))

    @property
    def symmetry_defect(self) -> float:
        """max |r(-k) - conj r(k)| over the grid (needs a symmetric grid)."""
        r = self.r
        return float(np.max(np.abs(r[::-1] - np.conj(r))))

    def reflection(self) -> "ReflectionInterpolant":
        return ReflectionInterpolant(self.k, self.r)


class ReflectionInterpolant:
    """Cubic interpolation of Re r and Im r; zero outside the sampled band.

    Interpolating the real and imaginary parts (rather than |r|) keeps |r|^2
    smooth through zeros of r and cannot overshoot below zero.
    """

    def __init__(self, k: np.ndarray, r: np.ndarray):
        self.k = np.asarray(k, float)
        r = np.asarray(r, complex)
        self.kmax = float(np.max(np.abs(self.k)))
        self._re = CubicSpline(self.k, r.real)
        self._im = CubicSpline(self.k, r.imag)

    def __call__(self, s):
        s = np.asarray(s, float)
        out = self._re(s) + 1j * self._im(s)
        return np.where(np.abs(s) <= self.kmax, out, 0.0)

    @property
    def breakpoints(self) -> np.ndarray:
        """Spline knots; quadrature panels should not straddle them."""
        return self.k


def _support_window(values: np.ndarray, rel: float = 1e-18) -> tuple[int, int]:
    peak = np.max(np.abs(values))
    if peak == 0:
        return 0, 0
    idx = np.nonzero(np.abs(values) > rel * peak)[0]
    lo, hi = max(idx[0] - 4, 0), min(idx[-1] + 5, values.size)
    return lo, hi


def _transport(x: np.ndarray, u: np.ndarray, ks: np.ndarray, tol: float):
    """Integrate phi' = E^{-1} U E phi from x[-1] to x[0], phi = I at the right end.

    phi = e^{-ikx s3} psi_+ e^{ikx s3}, hence s(k) = phi at the left end.
    Returns (phi11, phi12, phi21, phi22) arrays over ks.
    """
    m = ks.size
    spline = CubicSpline(x, u)
    two_k = 2.0 * ks

    def rhs(xx, y):
        p = y.reshape(4, m)
        uu = spline(xx)
        e = np.exp(1j * two_k * xx)
        up, dn = uu * np.conj(e), uu * e
        # [[0, u e^{-2ikx}], [u e^{2ikx}, 0]] @ [[p0, p1], [p2, p3]]
        return np.concatenate((up * p[2], up * p[3], dn * p[0], dn * p[1]))

    y0 = np.concatenate((np.ones(m), np.zeros(m), np.zeros(m), np.ones(m))).astype(complex)
    sol = solve_ivp(rhs, (x[-1], x[0]), y0, method="DOP853", rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise NumericalError(f"Jost transport failed for k in [{ks[0]}, {ks[-1]}]: {sol.message}")
    return sol.y[:, -1].reshape(4, m)


def _transport_profile(profile: InitialProfile, ks: np.ndarray, tol: float):
    lo, hi = _support_window(profile.values)
    if hi - lo < 4:
        one, zero = np.ones(ks.size, complex), np.zeros(ks.size, complex)
        return (one, zero, zero, one), 0.0
    x, u = profile.x[lo:hi], profile.values[lo:hi]
    outside = np.concatenate((profile.values[:lo], profile.values[hi:]))
    tail = float(np.max(np.abs(outside)) * 2 * profile.grid.L) if outside.size else 0.0
    return _transport(x, u, ks, tol), tail


def jost_scattering_at_k(profile: InitialProfile, k: float, tol: Tolerances | float | None = None):
    """Return (a(k), b(k)) for real k."""
    ode_tol = _ode_tol(tol)
    if not np.isfinite(k):
        raise InvalidArgument(f"k must be finite, got {k}")
    phi, _ = _transport_profile(profile, np.array([float(k)]), ode_tol)
    return complex(phi[0][0]), complex(phi[2][0])


def _ode_tol(tol):
    if tol is None:
        return Tolerances().ode_tol
    return tol.ode_tol if isinstance(tol, Tolerances) else float(tol)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MKDV5_THREADS", "1")))
    except ValueError:
        return 1


def scattering_data(profile: InitialProfile, kgrid: KGrid | np.ndarray,
                    tol: Tolerances | float | None = None) -> ScatteringData:
    ode_tol = _ode_tol(tol)
    ks = kgrid.points if isinstance(kgrid, KGrid) else np.asarray(kgrid, float)
    if np.any(np.diff(ks) <= 0):
        raise InvalidArgument("k nodes must be strictly ascending")
    chunks = [ks[i:i + CHUNK] for i in range(0, ks.size, CHUNK)]

    def run(chunk):
        try:
            return _transport_profile(profile, chunk, ode_tol)
        except NumericalError as exc:
            raise NumericalError(f"{exc} (chunk k={chunk[0]:.6g}..{chunk[-1]:.6g})") from exc

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(run, chunks))
    phis = [res[0] for res in results]
    tail = max(res[1] for res in results)
    p11, p12, p21, p22 = (np.concatenate([p[i] for p in phis]) for i in range(4))
    det = p11 * p22 - p12 * p21
    meta = {"profile": profile.name, "L": profile.grid.L, "n": profile.grid.n, "ode_tol": ode_tol}
    return ScatteringData(
        k=ks, a=p11, b=p21,
        kgrid=kgrid if isinstance(kgrid, KGrid) else None,
        det_defect=float(np.max(np.abs(det - 1.0))),
        tail_bound=tail, meta=meta,
    )


def evolve_scattering(data: ScatteringData, t: float) -> ScatteringData:
    """a(k,t) = a(k), b(k,t) = b(k) exp(32 i k^5 t)."""
    if not np.isfinite(t):
        raise InvalidArgument("t must be finite")
    phase = np.remainder(32.0 * data.k ** 5 * t, 2 * np.pi)
    return ScatteringData(
        k=data.k, a=data.a, b=data.b * np.exp(1j * phase), kgrid=data.kgrid,
        det_defect=data.det_defect, tail_bound=data.tail_bound,
        t=data.t + t, meta=dict(data.meta),
    )


def born_reflection(profile: InitialProfile, k: np.ndarray) -> np.ndarray:
    """First Neumann iterate: b(k) ~ -int u0(x) exp(2ikx) dx (trapezoid rule)."""
    k = np.atleast_1d(np.asarray(k, float))
    x, u, h = profile.x, profile.values, profile.grid.h
    return -np.array([np.sum(u * np.exp(2j * kk * x)) * h for kk in k])


# --- CSV surface -------------------------------------------------------------

COLUMNS = ["k", "re_a", "im_a", "re_b", "im_b", "re_r", "im_r"]


def write_csv(data: ScatteringData, fh) -> None:
    r = data.r
    meta = dict(data.meta)
    meta.update(t=data.t, det_defect=data.det_defect, tail_bound=data.tail_bound,
                unitarity_defect=data.unitarity_defect)
    if data.kgrid is not None:
        meta.update(K=data.kgrid.K, m=data.kgrid.m)
    rows = zip(data.k, data.a.real, data.a.imag, data.b.real, data.b.imag, r.real, r.imag)
    tables.write_table(fh, COLUMNS, rows, meta)


def read_csv(fh) -> ScatteringData:
    meta, cols, rows = tables.read_table(fh)
    if cols != COLUMNS:
        raise InvalidArgument(f"unexpected scattering columns {cols}")
    arr = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    kgrid = KGrid(float(meta["K"]), int(meta["m"])) if "K" in meta else None
    keep = {k: v for k, v in meta.items()
            if k not in ("t", "det_defect", "tail_bound", "unitarity_defect", "K", "m")}
    return ScatteringData(
        k=arr[:, 0], a=arr[:, 1] + 1j * arr[:, 2], b=arr[:, 3] + 1j * arr[:, 4], kgrid=kgrid,
        det_defect=float(meta.get("det_defect", 0.0)), tail_bound=float(meta.get("tail_bound", 0.0)),
        t=float(meta.get("t", 0.0)), meta=keep,
    )
