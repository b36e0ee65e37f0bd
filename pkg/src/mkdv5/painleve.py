"""Fourth-order Painleve II profile tools.

    u'''' - 40 u^2 u'' - 40 u (u')^2 + 96 u^5 - 4 y u = 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .core import InvalidArgument, NumericalError
from .evolution import FieldSnapshot, spectral_eval
from . import tables


class DivergenceError(NumericalError):
    def __init__(self, msg: str, y: float):
        super().__init__(msg)
        self.y = y


SOURCES = ("extracted", "integrated", "linear-oracle")


@dataclass(frozen=True)
class PainleveProfile:
    y: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    d3u: np.ndarray
    source: str = "integrated"
    t: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, a), float) for a in ("y", "u", "du", "d2u", "d3u")]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1 or arrays[0].size < 9:
            raise InvalidArgument("profile arrays must be 1-D, equal length, at least 9 nodes")
        dy = np.diff(arrays[0])
        if np.any(dy <= 0) or np.max(np.abs(dy - dy[0])) > 1e-9 * abs(dy[0]):
            raise InvalidArgument("y grid must be uniform and increasing")
        if self.source not in SOURCES:
            raise InvalidArgument(f"unknown source tag {self.source!r}")
        for name, a in zip(("y", "u", "du", "d2u", "d3u"), arrays):
            object.__setattr__(self, name, a)

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def __neg__(self) -> "PainleveProfile":
        return PainleveProfile(self.y, -self.u, -self.du, -self.d2u, -self.d3u,
                               self.source, self.t, dict(self.meta))


def _fd_weights(offsets: np.ndarray) -> np.ndarray:
    """First-derivative weights at 0 for integer offsets (unit spacing)."""
    n = offsets.size
    V = np.vander(offsets.astype(float), n, increasing=True).T
    rhs = np.zeros(n)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


_CENTRAL = _fd_weights(np.arange(-4, 5))


@lru_cache(maxsize=None)
def _edge_weights(i: int, n: int) -> tuple:
    start = 0 if i < 4 else n - 9
    offsets = np.arange(start, start + 9) - i
    return tuple(offsets), tuple(_fd_weights(offsets))


def fd_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Eighth-order finite-difference derivative on a uniform grid."""
    n = f.size
    out = np.empty(n)
    out[4:n - 4] = sum(w * f[4 + j:n - 4 + j] for j, w in zip(range(-4, 5), _CENTRAL))
    for i in list(range(4)) + list(range(n - 4, n)):
        offs, ws = _edge_weights(i, n)
        out[i] = sum(w * f[i + o] for o, w in zip(offs, ws))
    return out / h


def ode_residual(p: PainleveProfile) -> np.ndarray:
    d4u = fd_derivative(p.d3u, p.dy)
    u = p.u
    u2 = u * u
    # u^5 by multiplication: numpy's vector pow is not exactly odd in u
    return d4u - 40 * u2 * p.d2u - 40 * u * p.du * p.du + 96 * (u2 * u2 * u) - 4 * p.y * u


def _rhs(y, s):
    u, u1, u2, u3 = s
    return [u1, u2, u3, 40 * u * u * u2 + 40 * u * u1 * u1 - 96 * u ** 5 + 4 * y * u]


def integrate_ivp(y0: float, state, y_end: float, tol: float = 1e-10,
                  dy: float = 0.01) -> PainleveProfile:
    """Integrate from y0 with state (u, u', u'', u''') to y_end."""
    state = np.asarray(state, float)
    if state.shape != (4,) or not np.all(np.isfinite(state)):
        raise InvalidArgument("state must be four finite numbers")
    if abs(y_end - y0) > 50:
        raise InvalidArgument("|y_end - y0| must not exceed 50")
    if y_end == y0:
        raise InvalidArgument("empty integration interval")
    npts = max(9, int(round(abs(y_end - y0) / dy)) + 1)
    ys = np.linspace(y0, y_end, npts)

    def blowup(y, s):
        return abs(s[0]) - 1e6
    blowup.terminal = True

    sol = solve_ivp(_rhs, (y0, y_end), state, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True, events=blowup)
    if sol.status == 1 and sol.t_events[0].size:
        yb = float(sol.t_events[0][0])
        raise DivergenceError(f"solution blew up (|u| > 1e6) near y={yb:.6g}", yb)
    if not sol.success:
        raise NumericalError(f"Painleve integration failed: {sol.message}")
    s = sol.sol(ys)
    if ys[0] > ys[-1]:
        ys, s = ys[::-1], s[:, ::-1]
    return PainleveProfile(ys, s[0], s[1], s[2], s[3], "integrated", meta={"y0": y0, "tol": tol})


@lru_cache(maxsize=8)
def _airy_type_base(y_lo: float, y_hi: float, npts: int):
    """Solution of u'''' = 4 y u decaying as y -> +inf, normalised to u(0) = 1."""
    y_start = max(y_hi, 8.0) + 10.0
    lam = -math.sqrt(2.0) * y_start ** 0.25            # decaying WKB exponent rate
    # u ~ y^(-3/8) exp(-(4 sqrt2 / 5) y^(5/4)); unit amplitude at the start
    corr = -0.375 / y_start
    d1 = lam + corr
    start = np.array([1.0, d1, d1 ** 2, d1 ** 3])

    def rhs(y, s):
        return [s[1], s[2], s[3], 4 * y * s[0]]

    y_stop = min(y_lo, 0.0)
    sol = solve_ivp(rhs, (y_start, y_stop), start, method="DOP853", rtol=1e-13, atol=1e-300,
                    dense_output=True)
    if not sol.success:
        raise NumericalError(f"linear oracle integration failed: {sol.message}")
    norm = sol.sol(0.0)[0]
    ys = np.linspace(y_lo, y_hi, npts)
    return sol.sol(ys) / norm


def linear_oracle(y_grid, s: float) -> PainleveProfile:
    """s times the solution of u'''' = 4 y u that decays as y -> +inf (u(0) = 1)."""
    if abs(s) > 1e-2:
        raise InvalidArgument("linear oracle amplitude must satisfy |s| <= 1e-2")
    y = np.asarray(y_grid, float)
    base = _airy_type_base(float(y[0]), float(y[-1]), y.size)
    return PainleveProfile(y, s * base[0], s * base[1], s * base[2], s * base[3],
                           "linear-oracle", meta={"s": s})


def self_similar_field(grid, t: float, g, dg=None):
    """u(x, t) = (8/(5t))^(1/5) g(x/(20t)^(1/5)) sampled on ``grid``."""
    y = grid.points / (20.0 * t) ** 0.2
    return (8.0 / (5.0 * t)) ** 0.2 * g(y)


def extract_self_similar(snap: FieldSnapshot, y_max: float = 6.0, dy: float = 0.01) -> PainleveProfile:
    """u_p(y) = (5t/8)^(1/5) u(y (20t)^(1/5), t) on |y| <= y_max.

    Derivatives come from the snapshot's trigonometric interpolant, so no
    windowing of the resampled data is needed.
    """
    t = snap.t
    if t < 1:
        raise InvalidArgument("extraction needs t >= 1")
    s = (20.0 * t) ** 0.2
    if y_max * s >= snap.grid.L:
        raise InvalidArgument(f"window |x| <= {y_max * s:.4g} overflows grid half-width {snap.grid.L}")
    npts = int(round(2 * y_max / dy)) + 1
    y = np.linspace(-y_max, y_max, npts)
    amp = (5.0 * t / 8.0) ** 0.2
    uhat = snap.spectrum
    d = [amp * s ** j * spectral_eval(uhat, snap.grid, y * s, order=j) for j in range(4)]
    return PainleveProfile(y, *d, source="extracted", t=t)


PROFILE_COLUMNS = ["y", "u", "du", "d2u", "d3u", "residual"]


def write_profile_csv(p: PainleveProfile, fh) -> None:
    meta = {"source": p.source}
    if p.t is not None:
        meta["t"] = p.t
    res = ode_residual(p)
    tables.write_table(fh, PROFILE_COLUMNS, zip(p.y, p.u, p.du, p.d2u, p.d3u, res), meta)


def read_profile_csv(fh) -> PainleveProfile:
    meta, cols, rows = tables.read_table(fh)
    if cols != PROFILE_COLUMNS:
        raise InvalidArgument(f"unexpected profile columns {cols}")
    a = np.array(rows, float)
    return PainleveProfile(a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4],
                           meta.get("source", "integrated"), meta.get("t"))
