"""Fourier pseudo-spectral evolution of

    u_t + u_xxxxx + 30 u^4 u_x - 10 u^2 u_xxx - 10 u_x^3 - 40 u u_x u_xx = 0

with a fourth-order exponential Runge-Kutta (ETDRK4) stepper on a periodic grid.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import InvalidArgument, NumericalError, SpatialGrid
from .scattering import InitialProfile
from . import tables


class StepSizeError(NumericalError):
    """Conservation drift exceeded the configured tolerance."""


class InstabilityError(NumericalError):
    """The sup norm grew by more than three orders of magnitude."""


# --- spectral helpers --------------------------------------------------------

def spectral_derivative(values: np.ndarray, grid: SpatialGrid, order: int = 1) -> np.ndarray:
    xi = grid.wavenumbers
    vh = np.fft.rfft(values)
    if grid.n % 2 == 0 and order % 2 == 1:
        vh[-1] = 0.0
    return np.fft.irfft((1j * xi) ** order * vh, n=grid.n)


def spectral_eval(uhat: np.ndarray, grid: SpatialGrid, xs, order: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant (or a derivative) at arbitrary xs.

    ``uhat`` is the rfft of the grid samples. The Nyquist mode is treated as a
    cosine so that the interpolant is real.
    """
    xs = np.atleast_1d(np.asarray(xs, float))
    n = grid.n
    xi = grid.wavenumbers
    c = uhat * (1j * xi) ** order / n
    c = c.astype(complex)
    c[1:] *= 2.0
    nyq = c[-1] / 2.0 if n % 2 == 0 else 0.0
    if n % 2 == 0:
        c[-1] = 0.0
    out = np.empty(xs.size)
    step = max(1, 2 ** 22 // c.size)
    for i in range(0, xs.size, step):
        ph = np.outer(xs[i:i + step] + grid.L, xi)
        out[i:i + step] = np.real(np.exp(1j * ph) @ c)
        if n % 2 == 0 and order % 2 == 0:
            out[i:i + step] += np.real(nyq * np.cos(ph[:, -1]))
    return out


def dealias_mask(grid: SpatialGrid, fraction: float) -> np.ndarray:
    xi = grid.wavenumbers
    return np.abs(xi) <= fraction * (np.pi / grid.h) * (1 + 1e-12)


# --- nonlinearity --------------------------------------------------------------

def nonlinearity(values: np.ndarray, grid: SpatialGrid, form: str = "divergence",
                 dealias_fraction: float = 1.0) -> np.ndarray:
    """F(u) such that u_t = -u_xxxxx - F(u).

    ``expanded``:   30u^4 u_x - 10u^2 u_xxx - 10 u_x^3 - 40 u u_x u_xx
    ``divergence``: 6 (u^5)_x - 5 (u (u^2)_xx)_x
    """
    u = np.asarray(values, float)
    if u.shape != (grid.n,):
        raise InvalidArgument("field length does not match grid")
    if not np.all(np.isfinite(u)):
        raise InvalidArgument("NaN or inf in field")
    mask = dealias_mask(grid, dealias_fraction)
    xi = grid.wavenumbers

    def filt(v):
        return np.fft.irfft(np.fft.rfft(v) * mask, n=grid.n)

    def d(v, k=1):
        vh = np.fft.rfft(v) * mask
        return np.fft.irfft((1j * xi) ** k * vh, n=grid.n)

    u = filt(u)
    if form == "expanded":
        ux, uxx, uxxx = d(u), d(u, 2), d(u, 3)
        return filt(30 * u ** 4 * ux - 10 * u ** 2 * uxxx - 10 * ux ** 3 - 40 * u * ux * uxx)
    if form == "divergence":
        q = 6 * filt(u ** 5) - 5 * filt(u * d(filt(u * u), 2))
        return d(q)
    raise InvalidArgument(f"unknown nonlinearity form {form!r}")


# --- configuration and state ---------------------------------------------------

@dataclass(frozen=True)
class Absorber:
    """Damping -sigma(x) u concentrated around the periodic seam x = +-L.

    sigma rises as sin^2 from zero at distance ``width`` from the seam to
    ``strength`` at the seam. It is applied as the exact factor
    exp(-sigma dt) after every step, so large strengths stay stable. Every
    linear wave of u_t = -u_xxxxx has group velocity 5 xi^4 >= 0, so the layer
    cannot send energy back toward the interior.
    """

    width: float
    strength: float = 400.0

    def __post_init__(self):
        if not self.width > 0 or not self.strength >= 0:
            raise InvalidArgument("absorber needs width > 0 and strength >= 0")

    def sigma(self, grid: SpatialGrid) -> np.ndarray:
        dist = grid.L - np.abs(grid.points)
        s = np.clip(1.0 - dist / self.width, 0.0, 1.0)
        return self.strength * np.sin(0.5 * np.pi * s) ** 2


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_end: float
    dealias_fraction: float = 2.0 / 3.0
    snapshot_stride: int = 0
    scheme: str = "etdrk4"
    form: str = "divergence"
    conservation_tol: float | None = 1e-8
    absorber: Absorber | None = None
    contour_points: int = 32

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise InvalidArgument("dealias_fraction must lie in (0, 1]")
        if self.t_end < 0:
            raise InvalidArgument("t_end must be non-negative")
        if self.scheme != "etdrk4":
            raise InvalidArgument(f"unsupported scheme {self.scheme!r}")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


def mass_of(values: np.ndarray, grid: SpatialGrid) -> float:
    return float(np.sum(values * values) * grid.h)


def energy_of(values: np.ndarray, grid: SpatialGrid) -> float:
    ux = spectral_derivative(values, grid)
    return float(np.sum(ux * ux + values ** 4) * grid.h)


@dataclass(frozen=True)
class FieldSnapshot:
    grid: SpatialGrid
    t: float
    values: np.ndarray
    mass: float = field(default=float("nan"))
    energy: float = field(default=float("nan"))
    dt: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.shape != (self.grid.n,) or not np.all(np.isfinite(v)):
            raise InvalidArgument("snapshot values must be finite and match the grid")
        object.__setattr__(self, "values", v)
        if np.isnan(self.mass):
            object.__setattr__(self, "mass", mass_of(v, self.grid))
        if np.isnan(self.energy):
            object.__setattr__(self, "energy", energy_of(v, self.grid))

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def spectrum(self) -> np.ndarray:
        return np.fft.rfft(self.values)

    def at(self, xs, order: int = 0) -> np.ndarray:
        return spectral_eval(self.spectrum, self.grid, xs, order)


def mass(snapshot: FieldSnapshot) -> float:
    return mass_of(snapshot.values, snapshot.grid)


def energy(snapshot: FieldSnapshot) -> float:
    return energy_of(snapshot.values, snapshot.grid)


# --- ETDRK4 ---------------------------------------------------------------------

def etdrk4_coefficients(lin: np.ndarray, dt: float, m: int = 32):
    """E, E2, Q, f1, f2, f3 by contour averaging around each dt*lin."""
    hl = dt * lin
    # full circle: the symbol is imaginary, so no conjugate-symmetry shortcut
    roots = np.exp(2j * np.pi * (np.arange(1, m + 1) - 0.5) / m)
    z = hl[:, None] + roots[None, :]
    ez = np.exp(z)
    Q = dt * np.mean((np.exp(z / 2) - 1) / z, axis=1)
    f1 = dt * np.mean((-4 - z + ez * (4 - 3 * z + z ** 2)) / z ** 3, axis=1)
    f2 = dt * np.mean((2 + z + ez * (-2 + z)) / z ** 3, axis=1)
    f3 = dt * np.mean((-4 - 3 * z - z ** 2 + ez * (4 - z)) / z ** 3, axis=1)
    return np.exp(hl), np.exp(hl / 2), Q, f1, f2, f3


class Stepper:
    """ETDRK4 integrator for u_t = -u_xxxxx - F(u) in rfft space, plus the optional
    absorbing layer."""

    def __init__(self, grid: SpatialGrid, cfg: EvolutionConfig):
        self.grid, self.cfg = grid, cfg
        xi = grid.wavenumbers
        self.mask = dealias_mask(grid, cfg.dealias_fraction).astype(float)
        if grid.n % 2 == 0:
            self.mask[-1] = 0.0
        self.ik = 1j * xi
        self.k2 = -(xi ** 2)
        lin = -1j * xi ** 5
        self.E, self.E2, self.Q, self.f1, self.f2, self.f3 = etdrk4_coefficients(
            lin, cfg.dt, cfg.contour_points)
        self.damping = np.exp(-cfg.absorber.sigma(grid) * cfg.dt) if cfg.absorber else None
        if cfg.form not in ("divergence", "expanded"):
            raise InvalidArgument(f"unknown nonlinearity form {cfg.form!r}")

    def N(self, vh: np.ndarray) -> np.ndarray:
        n, mask = self.grid.n, self.mask
        u = np.fft.irfft(vh, n=n)
        if self.cfg.form == "divergence":
            u2h = np.fft.rfft(u * u) * mask
            w = u * np.fft.irfft(self.k2 * u2h, n=n)
            q = 6.0 * u ** 5 - 5.0 * w
            out = -self.ik * (np.fft.rfft(q) * mask)
        else:
            ux = np.fft.irfft(self.ik * vh, n=n)
            uxx = np.fft.irfft(self.k2 * vh, n=n)
            uxxx = np.fft.irfft(self.ik * self.k2 * vh, n=n)
            f = 30 * u ** 4 * ux - 10 * u ** 2 * uxxx - 10 * ux ** 3 - 40 * u * ux * uxx
            out = -(np.fft.rfft(f) * mask)
        return out

    def step(self, v: np.ndarray) -> np.ndarray:
        E, E2, Q = self.E, self.E2, self.Q
        Nv = self.N(v)
        a = E2 * v + Q * Nv
        Na = self.N(a)
        b = E2 * v + Q * Na
        Nb = self.N(b)
        c = E2 * a + Q * (2 * Nb - Nv)
        Nc = self.N(c)
        v = E * v + Nv * self.f1 + 2 * (Na + Nb) * self.f2 + Nc * self.f3
        if self.damping is not None:
            v = np.fft.rfft(self.damping * np.fft.irfft(v, n=self.grid.n)) * self.mask
        return v


Observer = Callable[[float, np.ndarray], None]


def evolve(profile: InitialProfile, cfg: EvolutionConfig,
           observer: Observer | None = None) -> list[FieldSnapshot]:
    """Evolve to t_end; returns snapshots at t=0, every ``snapshot_stride``
    steps (0 means none), and at the final time.

    ``observer(t, uhat)`` is called after every step with the rfft state.
    """
    grid = profile.grid
    stepper = Stepper(grid, cfg)
    v = np.fft.rfft(profile.values) * stepper.mask
    u_init = np.fft.irfft(v, n=grid.n)
    first = FieldSnapshot(grid, 0.0, u_init, dt=cfg.dt)
    snaps = [first]
    m0, e0 = first.mass, first.energy
    sup0 = float(np.max(np.abs(u_init))) or 1.0
    if observer is not None:
        observer(0.0, v)
    nsteps = cfg.steps
    for i in range(1, nsteps + 1):
        v = stepper.step(v)
        t = i * cfg.dt
        if observer is not None:
            observer(t, v)
        take = i == nsteps or (cfg.snapshot_stride and i % cfg.snapshot_stride == 0)
        check = take or i % 256 == 0
        if not check:
            continue
        if not np.all(np.isfinite(v)):
            raise InstabilityError(f"non-finite field at t={t:.6g}; reduce dt")
        u = np.fft.irfft(v, n=grid.n)
        sup = float(np.max(np.abs(u)))
        if sup > 1e3 * sup0:
            raise InstabilityError(f"sup norm grew from {sup0:.3e} to {sup:.3e} by t={t:.6g}; reduce dt")
        if not take:
            continue
        snap = FieldSnapshot(grid, t, u, dt=cfg.dt)
        if cfg.conservation_tol is not None and cfg.absorber is None and m0 > 0:
            dm = abs(snap.mass - m0) / m0
            de = abs(snap.energy - e0) / abs(e0)
            if max(dm, de) > cfg.conservation_tol:
                raise StepSizeError(
                    f"conservation drift mass={dm:.3e} energy={de:.3e} exceeds "
                    f"{cfg.conservation_tol:.1e} at t={t:.6g}; use a smaller dt")
        snaps.append(snap)
    return snaps


def rescaled_profile(profile: InitialProfile, lam: float) -> InitialProfile:
    """x -> lam * u0(lam * x) resampled by band-limited interpolation."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    grid = profile.grid
    if lam == 1.0:
        return InitialProfile(grid, profile.values.copy(), profile.require_decay, profile.name)
    u = profile.values
    peak = np.max(np.abs(u)) or 1.0
    if lam < 1.0:
        outer = np.abs(grid.points) >= 0.9 * lam * grid.L
        if np.max(np.abs(u[outer])) > 1e-8 * peak:
            raise InvalidArgument(f"rescaled support overflows the grid for lambda={lam}")
    xs = lam * grid.points
    inside = np.abs(xs) < grid.L
    vals = np.zeros(grid.n)
    vals[inside] = lam * spectral_eval(np.fft.rfft(u), grid, xs[inside])
    return InitialProfile(grid, vals, profile.require_decay, f"{profile.name}@lambda={lam!r}")


# --- file surfaces ----------------------------------------------------------------

MAGIC = b"MKDV5"
VERSION = 1


def write_snapshot(snap: FieldSnapshot, csv_path, json_path=None) -> None:
    with open(csv_path, "w") as fh:
        tables.write_table(fh, ["x", "u"], zip(snap.x, snap.values))
    meta = {"t": snap.t, "dt": snap.dt, "n": snap.grid.n, "L": snap.grid.L,
            "mass": snap.mass, "energy": snap.energy}
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def read_snapshot(csv_path, json_path) -> FieldSnapshot:
    with open(json_path) as fh:
        meta = json.load(fh)
    with open(csv_path) as fh:
        _, cols, rows = tables.read_table(fh)
    vals = np.array([r[1] for r in rows], float)
    grid = SpatialGrid(float(meta["L"]), int(meta["n"]))
    return FieldSnapshot(grid, float(meta["t"]), vals, dt=float(meta["dt"]))


_HEADER = struct.Struct("<5sBQddd")


def write_checkpoint(snap: FieldSnapshot, path) -> None:
    """Binary: magic 'MKDV5', version byte, n (u64), L, t, dt, then n float64; little-endian."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, snap.grid.n, snap.grid.L, snap.t, snap.dt))
        fh.write(np.asarray(snap.values, dtype="<f8").tobytes())


def read_checkpoint(path) -> FieldSnapshot:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, n, L, t, dt = _HEADER.unpack(head)
        if magic != MAGIC:
            raise InvalidArgument("not an MKDV5 checkpoint")
        if version != VERSION:
            raise InvalidArgument(f"unsupported checkpoint version {version}")
        vals = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(float)
    return FieldSnapshot(SpatialGrid(L, int(n)), t, vals, dt=dt)


def scaling_defect(profile: InitialProfile, lam: float, t: float, steps: int,
                   dealias_fraction: float = 2.0 / 3.0) -> float:
    """sup |u_lam(x, t) - lam u(lam x, lam^5 t)| over the nodes where lam x is a node
    (or inside the grid, via interpolation), both runs taking ``steps`` steps."""
    grid = profile.grid
    scaled = rescaled_profile(profile, lam)
    a = evolve(scaled, EvolutionConfig(dt=t / steps, t_end=t, dealias_fraction=dealias_fraction,
                                       conservation_tol=None))[-1]
    T = lam ** 5 * t
    b = evolve(profile, EvolutionConfig(dt=T / steps, t_end=T, dealias_fraction=dealias_fraction,
                                        conservation_tol=None))[-1]
    xs = grid.points
    inside = np.abs(lam * xs) < grid.L
    ref = lam * b.at(lam * xs[inside])
    return float(np.max(np.abs(a.values[inside] - ref)))
