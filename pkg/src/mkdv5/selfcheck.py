"""Invariant suite on small built-in fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import delta_eval
from .core import Tolerances, make_kgrid, make_uniform_grid
from .evolution import EvolutionConfig, evolve, nonlinearity, scaling_defect
from .painleve import PainleveProfile, ode_residual
from .scattering import gauss_profile, scattering_data, sech_profile

FAULTS = ("nonlinearity-sign",)


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    defect: float
    limit: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.defect) and self.defect <= self.limit

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        s = f"{status} {self.module}/{self.name}: defect={self.defect:.3e} limit={self.limit:.1e}"
        return s + (f" ({self.note})" if self.note else "")


@dataclass
class Report:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.passed]

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]


def _unitarity(tol: Tolerances):
    g = make_uniform_grid(24.0, 512)
    data = scattering_data(sech_profile(g, 0.5), make_kgrid(4.0, 41), tol)
    return [("scattering", "unitarity", data.unitarity_defect, 1e-8),
            ("scattering", "symmetry", data.symmetry_defect, 1e-8)]


def _conservation(tol: Tolerances):
    g = make_uniform_grid(32.0, 512)
    snaps = evolve(sech_profile(g, 0.3), EvolutionConfig(dt=1e-4, t_end=0.05, conservation_tol=None))
    s0, s1 = snaps[0], snaps[-1]
    drift = max(abs(s1.mass - s0.mass) / abs(s0.mass), abs(s1.energy - s0.energy) / abs(s0.energy))
    return [("evolution", "conservation", drift, tol.conservation_tol)]


def _scaling(tol: Tolerances):
    g = make_uniform_grid(128.0, 2048)
    d = scaling_defect(gauss_profile(g, 0.1, 2.0), 2.0, 0.002, 32)
    return [("evolution", "scaling-symmetry", d, tol.compare_tol)]


def _forms(tol: Tolerances, faults):
    g = make_uniform_grid(math.pi, 64)
    u = np.sin(g.points)
    div = nonlinearity(u, g, "divergence")
    if "nonlinearity-sign" in faults:
        div = -div
    d = float(np.max(np.abs(div - nonlinearity(u, g, "expanded"))))
    return [("evolution", "form-equivalence", d, 1e-10)]


def _delta_jump(tol: Tolerances):
    def r(s):
        return 0.5 * np.exp(-np.asarray(s, float) ** 2) + 0j

    k0, eps = 1.0, 1e-6
    worst = 0.0
    for k in np.linspace(-0.8, 0.8, 5):
        ratio = delta_eval(r, k0, k + 1j * eps) / delta_eval(r, k0, k - 1j * eps)
        worst = max(worst, abs(ratio - (1 - abs(r(k)) ** 2)))
    return [("asymptotics", "delta-jump", worst, 1e-4)]


def _parity(tol: Tolerances):
    rng = np.random.default_rng(7)
    y = np.linspace(-3.0, 3.0, 61)
    p = PainleveProfile(y, *rng.standard_normal((4, y.size)))
    odd = float(np.max(np.abs(ode_residual(-p) + ode_residual(p))))
    lin = PainleveProfile(y, y.copy(), np.ones_like(y), np.zeros_like(y), np.zeros_like(y))
    sub = float(np.max(np.abs(ode_residual(lin) - (-40 * y + 96 * y ** 5 - 4 * y ** 2))))
    return [("painleve", "parity", odd, 0.0),
            ("painleve", "substitution", sub, 1e-12 * float(np.max(96 * np.abs(y) ** 5)))]


def selfcheck(tolerances: Tolerances | None = None, faults=()) -> Report:
    """Run every invariant. ``faults`` names deliberate corruptions (see FAULTS)
    used to confirm that the checks can fail."""
    tol = tolerances or Tolerances()
    unknown = set(faults) - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown fault(s) {sorted(unknown)}")
    report = Report()
    checks = [_unitarity, _conservation, _scaling, lambda t: _forms(t, faults),
              _delta_jump, _parity]
    for check in checks:
        try:
            items = check(tol)
        except Exception as exc:  # a crash is a failed invariant, not a crashed suite
            name = getattr(check, "__name__", "check").strip("_")
            report.results.append(CheckResult("selfcheck", name, float("nan"), 0.0, repr(exc)))
            continue
        report.results.extend(CheckResult(*it) for it in items)
    return report
