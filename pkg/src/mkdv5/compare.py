"""Numeric-versus-asymptotic comparison and decay-law fitting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .asymptotics import (OutOfTheory, classify, painleve_region_eval, region1_eval,
                          region5_bound, painleve_error_scale)
from .core import Config, InvalidArgument, load_config
from .evolution import Absorber, EvolutionConfig, evolve, spectral_eval
from .scattering import make_profile, scattering_data
from . import tables


@dataclass(frozen=True)
class CompareRow:
    x: float
    t: float
    region: str
    u_numeric: float
    u_asymptotic: float | None
    error_scale: float | None

    @property
    def abs_err(self) -> float | None:
        if self.u_asymptotic is None:
            return None
        return abs(self.u_numeric - self.u_asymptotic)

    @property
    def err_ratio(self) -> float | None:
        if self.u_asymptotic is None or not self.error_scale:
            return None
        return self.abs_err / self.error_scale

    def as_tuple(self):
        return (self.x, self.t, self.region, self.u_numeric, self.u_asymptotic,
                self.abs_err, self.error_scale, self.err_ratio)


COMPARE_COLUMNS = ["x", "t", "region", "u_numeric", "u_asymptotic", "abs_err",
                   "error_scale", "err_ratio"]


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    stderr: float
    n_points: int


def fit_decay_exponent(t, amplitude) -> FitResult:
    """Least-squares slope of ln(amplitude) against ln(t)."""
    t = np.asarray(t, float)
    a = np.asarray(amplitude, float)
    if t.size != a.size or t.size < 3:
        raise InvalidArgument("need at least three (t, amplitude) pairs")
    if np.any(a <= 0) or np.any(t <= 0):
        raise InvalidArgument("times and amplitudes must be positive")
    res = stats.linregress(np.log(t), np.log(a))
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    return FitResult(float(res.slope), float(res.intercept), abs(stderr), int(t.size))


# --- time series along a ray ---------------------------------------------------

class RayRecorder:
    """Observer sampling u(x(t), t) with x(t) = 80 k0^4 t at every step."""

    def __init__(self, grid, k0: float, t_min: float = 0.0):
        self.grid, self.speed, self.t_min = grid, 80.0 * k0 ** 4, t_min
        self.t: list[float] = []
        self.u: list[float] = []

    def __call__(self, t, uhat):
        if t < self.t_min:
            return
        self.t.append(t)
        self.u.append(float(spectral_eval(uhat, self.grid, [self.speed * t])[0]))

    def series(self):
        return np.array(self.t), np.array(self.u)


def local_extrema(t: np.ndarray, u: np.ndarray):
    """Extrema of u located by a parabola through each discrete extremum
    and its neighbours. Returns (times, |u| at the extrema)."""
    du = np.diff(u)
    idx = np.nonzero(np.sign(du[:-1]) * np.sign(du[1:]) < 0)[0] + 1
    te, ae = [], []
    for i in idx:
        y0, y1, y2 = u[i - 1], u[i], u[i + 1]
        h = t[i + 1] - t[i]
        denom = y0 - 2 * y1 + y2
        s = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        te.append(t[i] + s * h)
        ae.append(abs(y1 - 0.25 * (y0 - y2) * s))
    return np.array(te), np.array(ae)


def envelope_at(t: np.ndarray, u: np.ndarray, targets) -> tuple[np.ndarray, np.ndarray]:
    """For each target time, the extremum closest to it: (t_extremum, |u|)."""
    te, ae = local_extrema(t, u)
    if te.size == 0:
        raise InvalidArgument("series has no local extrema")
    picks = [int(np.argmin(np.abs(te - tt))) for tt in targets]
    return te[picks], ae[picks]


def zero_crossing_frequency(t: np.ndarray, u: np.ndarray, t_lo: float, t_hi: float) -> float:
    """Mean angular frequency pi * (crossings - 1) / (span between first and last crossing)."""
    w = (t >= t_lo) & (t <= t_hi)
    tw, uw = t[w], u[w]
    s = np.sign(uw)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size < 3:
        raise InvalidArgument("too few zero crossings in window")
    tz = tw[idx] - uw[idx] * (tw[idx + 1] - tw[idx]) / (uw[idx + 1] - uw[idx])
    return math.pi * (tz.size - 1) / (tz[-1] - tz[0])


# --- full pipeline ---------------------------------------------------------------

@dataclass(frozen=True)
class ComparePlan:
    profile: str = "sech"
    amp: float = 0.2
    width: float = 1.0
    dt: float = 0.005
    times: tuple = (10.0,)
    xs: tuple = ()
    ray_k0: tuple = ()
    absorber_width: float = 0.0
    absorber_strength: float = 400.0
    dealias_fraction: float = 2.0 / 3.0
    painleve_profile: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: Config, **overrides) -> "ComparePlan":
        e = dict(cfg.extra)
        prof = e.get("profile", {})
        evo = e.get("evolution", {})
        kw = dict(
            profile=prof.get("name", "sech"), amp=float(prof.get("amp", 0.2)),
            width=float(prof.get("width", 1.0)),
            dt=float(evo.get("dt", 0.005)),
            absorber_width=float(evo.get("absorber_width", 0.0)),
            absorber_strength=float(evo.get("absorber_strength", 400.0)),
            dealias_fraction=float(evo.get("dealias_fraction", 2.0 / 3.0)),
            times=tuple(float(v) for v in e.get("times", [10.0])),
            xs=tuple(float(v) for v in e.get("points", {}).get("x", [])),
            ray_k0=tuple(float(v) for v in e.get("points", {}).get("ray_k0", [])),
            painleve_profile=e.get("painleve_profile"),
        )
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


def _points_at(plan: ComparePlan, t: float) -> list[float]:
    xs = set(plan.xs) | {80.0 * k0 ** 4 * t for k0 in plan.ray_k0}
    return sorted(xs)


def run_compare(cfg: Config | str, observer=None, **overrides) -> list[CompareRow]:
    """Evolve the configured datum, evaluate the asymptotic formulas at the
    requested (x, t) points and return rows ordered by t, then x.

    ``observer(t, uhat)``, if given, also sees every step of the evolution.
    """
    if not isinstance(cfg, Config):
        cfg = load_config(cfg)
    plan = ComparePlan.from_config(cfg, **overrides)
    grid = cfg.grid.spatial()
    th = cfg.thresholds
    profile = make_profile(grid, plan.profile, plan.amp, plan.width)
    times = sorted(plan.times)
    steps = {}
    for t in times:
        k = int(round(t / plan.dt))
        if abs(k * plan.dt - t) > 1e-9 * max(1.0, t):
            raise InvalidArgument(f"time {t} is not a multiple of dt={plan.dt}")
        steps[k] = t
    if not plan.xs and not plan.ray_k0:
        raise InvalidArgument("no evaluation points configured")
    for t in times:
        far = [x for x in _points_at(plan, t) if abs(x) >= grid.L]
        if far:
            raise InvalidArgument(f"points {far} at t={t} lie outside the grid |x| < {grid.L}")

    sampled: dict[float, dict[float, float]] = {}

    def sample(t, uhat):
        if observer is not None:
            observer(t, uhat)
        k = int(round(t / plan.dt))
        if k in steps:
            tt = steps[k]
            pts = _points_at(plan, tt)
            sampled[tt] = dict(zip(pts, spectral_eval(uhat, grid, pts)))

    absorber = Absorber(plan.absorber_width, plan.absorber_strength) if plan.absorber_width > 0 else None
    ecfg = EvolutionConfig(dt=plan.dt, t_end=times[-1], dealias_fraction=plan.dealias_fraction,
                           absorber=absorber, conservation_tol=cfg.tolerances.conservation_tol
                           if absorber is None else None)
    evolve(profile, ecfg, observer=sample)

    data = scattering_data(profile, cfg.grid.kgrid(), cfg.tolerances)
    refl = data.reflection()
    pprof = None
    if plan.painleve_profile:
        from .painleve import read_profile_csv
        with open(plan.painleve_profile) as fh:
            pprof = read_profile_csv(fh)
    trivial_pII = abs(complex(refl(np.array([0.0]))[0])) == 0.0

    rows = []
    for t in times:
        for x in _points_at(plan, t):
            un = float(sampled[t][x])
            try:
                reg = classify(x, t, th)
            except OutOfTheory:
                rows.append(CompareRow(x, t, "none", un, None, None))
                continue
            if reg.label == "I":
                ev = region1_eval(x, t, refl, th, cfg.tolerances.quad_tol)
                ua, es = ev.value, ev.error_scale
            elif reg.label == "V":
                ua, es = 0.0, region5_bound(x, t, th)
            elif pprof is not None:
                ev = painleve_region_eval(x, t, pprof, reg, th)
                ua, es = ev.value, ev.error_scale
            else:
                es = painleve_error_scale(reg, t, th.rho)
                # s = r(0) = 0 gives the trivial Painleve solution
                ua = 0.0 if trivial_pII else None
            rows.append(CompareRow(x, t, reg.label, un, ua, es))
    return rows


def write_rows(rows, fh, fmt: str = "csv", meta: dict | None = None) -> None:
    if fmt == "csv":
        tables.write_table(fh, COMPARE_COLUMNS, (r.as_tuple() for r in rows), meta)
    elif fmt == "json":
        doc = {"meta": meta or {}, "rows": [dict(zip(COMPARE_COLUMNS, r.as_tuple())) for r in rows]}
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    else:
        raise InvalidArgument(f"unknown format {fmt!r}")


def read_rows(fh) -> list[CompareRow]:
    _, cols, raw = tables.read_table(fh)
    if cols != COMPARE_COLUMNS:
        raise InvalidArgument(f"unexpected compare columns {cols}")
    return [CompareRow(r[0], r[1], str(r[2]), r[3], r[4], r[6]) for r in raw]
