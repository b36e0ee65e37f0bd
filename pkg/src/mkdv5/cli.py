"""Command-line entry point: ``mkdv5 <command> [options]``.

Exit status: 0 ok, 2 invalid arguments, 3 numerical failure, 4 selfcheck failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys

import numpy as np

from . import asymptotics, compare, painleve, scattering, tables
from .core import Config, DomainError, InvalidArgument, NumericalError, load_config, with_overrides
from .evolution import Absorber, EvolutionConfig, FieldSnapshot, evolve, write_checkpoint
from .selfcheck import FAULTS, selfcheck

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_SELFCHECK = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit(args, columns, rows, meta=None):
    rows = list(rows)
    with _output(args.out) as fh:
        if args.format == "json":
            json.dump({"meta": meta or {}, "rows": [dict(zip(columns, r)) for r in rows]},
                      fh, indent=1, sort_keys=True, default=float)
            fh.write("\n")
        else:
            tables.write_table(fh, columns, rows, meta)


# --- shared option handling -----------------------------------------------------

def _config(args) -> Config:
    cfg = load_config(args.config)
    return with_overrides(cfg, n=args.n, L=args.L)


def _profile(args, cfg: Config):
    prof = dict(cfg.extra.get("profile", {}))
    name = args.profile or prof.get("name", "sech")
    amp = args.amp if args.amp is not None else float(prof.get("amp", 0.2))
    width = args.width if args.width is not None else float(prof.get("width", 1.0))
    return scattering.make_profile(cfg.grid.spatial(), name, amp, width)


def _evolution(args, cfg: Config, t_end: float) -> EvolutionConfig:
    evo = dict(cfg.extra.get("evolution", {}))
    dt = args.dt if args.dt is not None else float(evo.get("dt", 0.005))
    width = float(evo.get("absorber_width", 0.0))
    absorber = Absorber(width, float(evo.get("absorber_strength", 400.0))) if width > 0 else None
    return EvolutionConfig(dt=dt, t_end=t_end,
                           dealias_fraction=float(evo.get("dealias_fraction", 2.0 / 3.0)),
                           absorber=absorber,
                           conservation_tol=None if absorber else cfg.tolerances.conservation_tol)


def _times(args, cfg: Config) -> list[float]:
    times = args.t if args.t is not None else [float(v) for v in cfg.extra.get("times", [])]
    if not times:
        raise InvalidArgument("no times given (use --t or a 'times' list in the config)")
    if any(t <= 0 for t in times):
        raise InvalidArgument("times must be positive")
    return sorted(times)


def _ray_k0(args, cfg: Config) -> list[float]:
    if args.ray_k0 is not None:
        return [args.ray_k0]
    return [float(v) for v in cfg.extra.get("points", {}).get("ray_k0", [])]


def _snapshots_at(profile, ecfg: EvolutionConfig, times) -> list[FieldSnapshot]:
    """Fields at each requested time; times must be multiples of dt."""
    wanted = {}
    for t in times:
        k = int(round(t / ecfg.dt))
        if abs(k * ecfg.dt - t) > 1e-9 * max(1.0, t):
            raise InvalidArgument(f"time {t} is not a multiple of dt={ecfg.dt}")
        wanted[k] = t
    grid = profile.grid
    out = {}

    def observer(t, uhat):
        k = int(round(t / ecfg.dt))
        if k in wanted:
            out[wanted[k]] = FieldSnapshot(grid, wanted[k], np.fft.irfft(uhat, grid.n), dt=ecfg.dt)

    evolve(profile, ecfg, observer=observer)
    return [out[t] for t in sorted(out)]


# --- commands --------------------------------------------------------------------

def cmd_scatter(args) -> int:
    cfg = _config(args)
    data = scattering.scattering_data(_profile(args, cfg), cfg.grid.kgrid(), cfg.tolerances)
    if args.format == "json":
        r = data.r
        rows = zip(data.k, data.a.real, data.a.imag, data.b.real, data.b.imag, r.real, r.imag)
        _emit(args, scattering.COLUMNS, rows,
              dict(data.meta, unitarity_defect=data.unitarity_defect, tail_bound=data.tail_bound))
    else:
        with _output(args.out) as fh:
            scattering.write_csv(data, fh)
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _config(args)
    times = _times(args, cfg)
    profile = _profile(args, cfg)
    snaps = _snapshots_at(profile, _evolution(args, cfg, times[-1]), times)
    rows = ((s.t, x, u) for s in snaps for x, u in zip(s.x, s.values))
    meta = {"mass": [s.mass for s in snaps], "energy": [s.energy for s in snaps],
            "n": profile.grid.n, "L": profile.grid.L, "profile": profile.name}
    _emit(args, ["t", "x", "u"], rows, meta)
    if args.checkpoint:
        write_checkpoint(snaps[-1], args.checkpoint)
    return EXIT_OK


def cmd_asym(args) -> int:
    cfg = _config(args)
    if args.data:
        with open(args.data) as fh:
            data = scattering.read_csv(fh)
    else:
        data = scattering.scattering_data(_profile(args, cfg), cfg.grid.kgrid(), cfg.tolerances)
    refl = data.reflection()
    pprof = None
    if args.painleve:
        with open(args.painleve) as fh:
            pprof = painleve.read_profile_csv(fh)
    xs = args.x if args.x is not None else [float(v) for v in cfg.extra.get("points", {}).get("x", [])]
    rays = _ray_k0(args, cfg)
    rows = []
    for t in _times(args, cfg):
        for x in sorted(set(xs) | {80.0 * k0 ** 4 * t for k0 in rays}):
            try:
                ev = asymptotics.evaluate(x, t, refl, pprof, cfg.thresholds)
            except asymptotics.OutOfTheory:
                rows.append((x, t, "none", None, None, None, None, None))
                continue
            rows.append(next(asymptotics.sweep_rows([ev])))
    if not rows:
        raise InvalidArgument("no evaluation points (use --x or --ray-k0)")
    _emit(args, asymptotics.SWEEP_COLUMNS, rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    over = {"profile": args.profile, "amp": args.amp, "width": args.width, "dt": args.dt,
            "times": tuple(args.t) if args.t is not None else None,
            "ray_k0": (args.ray_k0,) if args.ray_k0 is not None else None}
    rows = compare.run_compare(cfg, **over)
    with _output(args.out) as fh:
        compare.write_rows(rows, fh, args.format)
    return EXIT_OK


def cmd_painleve(args) -> int:
    if args.action == "integrate":
        if args.state is None or len(args.state) != 4:
            raise InvalidArgument("--state needs four numbers u,u',u'',u'''")
        prof = painleve.integrate_ivp(args.y0, args.state, args.y_end, tol=args.tol)
    elif args.action == "residual":
        if not args.input:
            raise InvalidArgument("residual needs --input PROFILE.csv")
        with open(args.input) as fh:
            prof = painleve.read_profile_csv(fh)
        res = painleve.ode_residual(prof)
        print(f"sup |R| = {float(np.max(np.abs(res))):.6e}", file=sys.stderr)
        _emit(args, ["y", "residual"], zip(prof.y, res))
        return EXIT_OK
    else:  # extract
        cfg = _config(args)
        times = _times(args, cfg)
        if len(times) != 1:
            raise InvalidArgument("extract takes exactly one time")
        profile = _profile(args, cfg)
        snap = _snapshots_at(profile, _evolution(args, cfg, times[0]), times)[0]
        prof = painleve.extract_self_similar(snap, y_max=args.y_max, dy=args.dy)
    with _output(args.out) as fh:
        painleve.write_profile_csv(prof, fh)
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    cfg = _config(args)
    tol = cfg.tolerances
    if args.conservation_tol is not None:
        from dataclasses import replace
        tol = replace(tol, conservation_tol=args.conservation_tol)
    report = selfcheck(tol, faults=args.fault or ())
    with _output(args.out) as fh:
        for line in report.lines():
            fh.write(line + "\n")
    return EXIT_OK if report.passed else EXIT_SELFCHECK


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration file")
    common.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--profile", metavar="NAME", choices=sorted(scattering.PROFILES))
    common.add_argument("--amp", type=float, metavar="FLOAT")
    common.add_argument("--width", type=float, metavar="FLOAT")
    common.add_argument("--n", type=int, metavar="INT", help="spatial grid size (power of two)")
    common.add_argument("--L", type=float, metavar="FLOAT", help="grid half-width")
    common.add_argument("--dt", type=float, metavar="FLOAT")
    common.add_argument("--t", type=_floats, metavar="LIST", help="comma-separated times")
    common.add_argument("--ray-k0", type=float, metavar="FLOAT", dest="ray_k0")

    p = argparse.ArgumentParser(prog="mkdv5", description="Defocusing fifth-order mKdV lab.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scatter", parents=[common], help="profile -> scattering data")
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("evolve", parents=[common], help="profile -> snapshots")
    s.add_argument("--checkpoint", metavar="PATH", help="also write the last field in binary form")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("asym", parents=[common], help="scattering data + points -> asymptotic values")
    s.add_argument("--data", metavar="PATH", help="scattering CSV (default: compute from the profile)")
    s.add_argument("--x", type=_floats, metavar="LIST", help="comma-separated x positions")
    s.add_argument("--painleve", metavar="PATH", help="Painleve profile CSV for regions II-IV")
    s.set_defaults(func=cmd_asym)

    s = sub.add_parser("compare", parents=[common], help="numerics vs asymptotics")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("painleve", parents=[common], help="profile extraction and ODE tools")
    s.add_argument("action", choices=("extract", "residual", "integrate"))
    s.add_argument("--input", metavar="PATH")
    s.add_argument("--y0", type=float, default=0.0)
    s.add_argument("--y-end", type=float, default=5.0, dest="y_end")
    s.add_argument("--state", type=_floats, metavar="LIST")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--y-max", type=float, default=6.0, dest="y_max")
    s.add_argument("--dy", type=float, default=0.01)
    s.set_defaults(func=cmd_painleve)

    s = sub.add_parser("selfcheck", parents=[common], help="run the invariant suite")
    s.add_argument("--conservation-tol", type=float, dest="conservation_tol")
    s.add_argument("--fault", action="append", choices=FAULTS, help="inject a deliberate fault")
    s.set_defaults(func=cmd_selfcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidArgument, OSError, json.JSONDecodeError) as exc:
        print(f"mkdv5: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, DomainError, FloatingPointError) as exc:
        print(f"mkdv5: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
