"""Command-line front end.

Every artifact carries the package version, the hash of the resolved system
description and the RNG seed, and is written deterministically so identical
flags give identical bytes.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import __version__, config, dynamics, integrability, kepler, quantize
from .errors import SpinTorusError
from .symbol import PhasePoint

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class ComputationError(Exception):
    pass


# -- argument parsing ---------------------------------------------------------------


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be at least 1")
    return value


def _vector(text: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated vector")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"{text!r} needs exactly three components")
    return np.array(parts)


def _common(p: argparse.ArgumentParser, default_format: str = "json") -> None:
    g = p.add_argument_group("system and run options")
    g.add_argument("--config", metavar="PATH",
                   help=f"JSON system description (default: ${config.ENV_VAR}, else the Kepler preset)")
    g.add_argument("--system", choices=sorted(config.PRESETS), help="built-in system preset")
    g.add_argument("--alpha", type=_positive_float, help="override the Coulomb coupling")
    g.add_argument("--c", type=_positive_float, dest="c_light", help="override the speed of light")
    g.add_argument("--tol", type=_positive_float, help="integration tolerance")
    g.add_argument("--format", choices=("json", "csv", "table"), default=default_format)
    g.add_argument("--seed", type=int, default=0, help="RNG seed (recorded in the output)")
    g.add_argument("--workers", type=_positive_int, default=1, help="parallel level solves")
    g.add_argument("--output", metavar="PATH", help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spintorus", description="Semiclassical spin tori for Dirac particles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("levels", help="quantized energy levels of the Coulomb problem")
    p.add_argument("--scheme", choices=quantize.SCHEMES, default="ebk-spin")
    p.add_argument("--nmax", type=_positive_int, help="largest principal index (>= 1)")
    p.add_argument("--emax", type=float, help="energy ceiling instead of --nmax")
    p.add_argument("--spin", type=Fraction, default=Fraction(1, 2), help="spin quantum number s")
    _common(p)

    p = sub.add_parser("compare", help="level-by-level comparison of two schemes")
    p.add_argument("--a", choices=quantize.SCHEMES, default="sommerfeld-old")
    p.add_argument("--b", choices=quantize.SCHEMES, default="ebk-spin")
    p.add_argument("--nmax", type=_positive_int, default=4)
    _common(p)

    p = sub.add_parser("spin-angle", help="spin rotation angle and Maslov index of a basis cycle")
    p.add_argument("--cycle", choices=("r", "L"), default="L")
    p.add_argument("--I-r", dest="I_r", type=float, default=0.5, help="radial action in units of hbar")
    p.add_argument("--L", dest="L", type=_positive_float, default=1.0, help="|L| in units of hbar")
    p.add_argument("--energy", type=float, help="torus energy (required for non-Coulomb systems)")
    _common(p)

    p = sub.add_parser("orbit", help="trajectory with transported spin as plot-ready rows")
    p.add_argument("--I-r", dest="I_r", type=float, default=0.5, help="radial action in units of hbar")
    p.add_argument("--L", dest="L", type=_positive_float, default=1.0, help="|L| in units of hbar")
    p.add_argument("--periods", type=_positive_float, default=1.0, help="radial periods (Coulomb)")
    p.add_argument("--t-final", type=_positive_float, help="integration time (overrides --periods)")
    p.add_argument("--x0", type=_vector, help="initial position x1,x2,x3")
    p.add_argument("--p0", type=_vector, help="initial momentum p1,p2,p3")
    p.add_argument("--s0", type=_vector, default=np.array([1.0, 0.0, 0.0]), help="initial spin direction")
    p.add_argument("--branch", choices=("+", "-"), default="+")
    p.add_argument("--samples", type=_positive_int, default=201, help="output rows")
    _common(p, default_format="csv")

    p = sub.add_parser("check-integrability", help="involution residuals at random bound points")
    p.add_argument("--points", type=_positive_int, default=200)
    p.add_argument("--perturb-bz", type=float, default=0.0,
                   help="constant z field added to the Thomas field (negative control)")
    _common(p)
    return parser


# -- commands ----------------------------------------------------------------------------


def _tol(args, default):
    return args.tol if args.tol is not None else default


def _require_coulomb(system, what):
    if system["potential"] != "coulomb":
        raise ComputationError(f"{what} is implemented for Coulomb systems only")


def cmd_levels(args, system, cfg):
    _require_coulomb(system, "levels")
    spectrum = quantize.enumerate_spectrum(args.emax, cfg, args.scheme, nmax=args.nmax, s=args.spin,
                                           workers=args.workers, tol=_tol(args, kepler.CYCLE_TOL))
    result = {
        "scheme": args.scheme,
        "levels": [lv.as_dict() for lv in spectrum.levels],
        "groups": [{"E": g.E, "families": g.families, "degeneracy": g.degeneracy} for g in spectrum.groups],
        "failures": [{"level": qn.label(), "error": msg} for qn, msg in spectrum.failures],
    }
    columns = ["n_r", "l", "m_s", "principal", "E", "binding", "I_r", "L", "alpha_r", "alpha_L", "lz_states"]
    rows = [[lv.as_dict()[c] for c in columns] for lv in spectrum.levels]
    return result, columns, rows, [f"{qn.label()}: {msg}" for qn, msg in spectrum.failures]


def cmd_compare(args, system, cfg):
    _require_coulomb(system, "compare")
    tol = _tol(args, kepler.CYCLE_TOL)
    a = quantize.enumerate_spectrum(None, cfg, args.a, nmax=args.nmax, workers=args.workers, tol=tol)
    b = quantize.enumerate_spectrum(None, cfg, args.b, nmax=args.nmax, workers=args.workers, tol=tol)
    pairs = quantize.compare_spectra(a, b)
    mc2 = cfg.rest_energy
    items = [{"I_r": str(pr.actions[0]), "L": str(pr.actions[1]), "E_a": pr.a.E, "E_b": pr.b.E,
              "delta": pr.delta} for pr in pairs]
    result = {
        "a": args.a,
        "b": args.b,
        "nmax": args.nmax,
        "pairs": items,
        "unpaired_a": len(a.levels) - len(pairs),
        "unpaired_b": len(b.levels) - len(pairs),
        "max_abs_delta": max((abs(pr.delta) / mc2 for pr in pairs), default=0.0),
    }
    columns = ["I_r", "L", "E_a", "E_b", "delta"]
    rows = [[it[c] for c in columns] for it in items]
    problems = [f"{args.a} {qn.label()}: {msg}" for qn, msg in a.failures]
    problems += [f"{args.b} {qn.label()}: {msg}" for qn, msg in b.failures]
    return result, columns, rows, problems


def cmd_spin_angle(args, system, cfg):
    hbar = cfg.hbar
    L = args.L * hbar
    tol = _tol(args, kepler.CYCLE_TOL)
    if args.energy is not None:
        E, w = args.energy, None
    elif system["potential"] == "coulomb":
        w = quantize.solve_binding(args.I_r * hbar, L, cfg)
        E = cfg.rest_energy - w
    else:
        raise ComputationError("non-Coulomb systems need --energy")
    c_r, c_l = kepler.build_cycles(E if w is None else None, L, cfg, binding=w)
    cycle = c_r if args.cycle == "r" else c_l
    transport = kepler.transport_around(cycle, cfg, tol)
    angle = kepler.spin_rotation_angle(cycle, E, L, cfg, tol, transport=transport)
    maslov = kepler.maslov_index(cycle, E, L, cfg, tol, transport=transport)
    kw = {"binding": w} if w is not None else {}
    e_arg = None if w is not None else E
    result = {
        "cycle": args.cycle,
        "alpha": angle.alpha,
        "winding": angle.winding,
        "maslov": maslov,
        "E": E,
        "L": L,
        "I_r": kepler.radial_action(e_arg, L, cfg, **kw),
        "T_r": kepler.radial_period(e_arg, L, cfg, **kw),
        "dphi": kepler.apsidal_angle(e_arg, L, cfg, **kw),
        "axis_error": angle.axis_error,
        "return_distance": angle.return_distance,
    }
    columns = list(result)
    return result, columns, [[result[c] for c in columns]], []


def cmd_orbit(args, system, cfg):
    hbar = cfg.hbar
    tol = _tol(args, dynamics.DEFAULT_TOL)
    T = None
    if args.x0 is not None or args.p0 is not None:
        if args.x0 is None or args.p0 is None:
            raise ComputationError("--x0 and --p0 must be given together")
        start = PhasePoint(args.p0, args.x0)
    elif system["potential"] == "coulomb":
        L = args.L * hbar
        w = quantize.solve_binding(args.I_r * hbar, L, cfg)
        start = kepler.torus_point(None, L, cfg, binding=w)
        T = kepler.radial_period(None, L, cfg, binding=w)
    elif system["potential"] == "free":
        start = PhasePoint(np.array([0.3, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    else:
        start = PhasePoint(np.array([0.0, 0.5, 0.0]), np.array([1.0, 0.0, 0.0]))
    if args.t_final is not None:
        t_final = args.t_final
    elif T is not None:
        t_final = args.periods * T
    else:
        t_final = 10.0
    s0 = args.s0 / np.linalg.norm(args.s0)
    t_eval = np.linspace(0.0, t_final, args.samples)
    traj = dynamics.hamiltonian_flow(start, cfg, args.branch, t_final, tol, t_eval=t_eval)
    rows = dynamics.trajectory_rows(traj, s0)
    result = {"branch": args.branch, "energy": traj.energy, "t_final": t_final, "columns": dynamics.CSV_COLUMNS,
              "rows": rows}
    return result, list(dynamics.CSV_COLUMNS), rows, []


def cmd_check_integrability(args, system, cfg):
    _require_coulomb(system, "check-integrability")
    pert = [0.0, 0.0, args.perturb_bz] if args.perturb_bz else None
    gens = integrability.kepler_generators(cfg, pert)
    report = integrability.check_integrability(cfg, points=args.points, seed=args.seed, gens=gens)
    result = report.as_dict()
    result["perturb_bz"] = args.perturb_bz
    columns = list(result)
    return result, columns, [[result[c] for c in columns]], []


COMMANDS = {
    "levels": cmd_levels,
    "compare": cmd_compare,
    "spin-angle": cmd_spin_angle,
    "orbit": cmd_orbit,
    "check-integrability": cmd_check_integrability,
}


# -- rendering ---------------------------------------------------------------------------


def _cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def render(fmt: str, meta: dict, result: dict, columns, rows) -> str:
    if fmt == "json":
        return json.dumps({**meta, "result": result}, sort_keys=True, indent=2) + "\n"
    header = "# " + " ".join(f"{k}={meta[k]}" for k in sorted(meta)) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([[_cell(v) for v in row] for row in rows])
        return header + buf.getvalue()
    cells = [list(map(str, columns))] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return header + "\n".join(lines) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "levels" and args.nmax is None and args.emax is None:
        args.nmax = 4
    if args.command == "levels" and (args.spin < 0 or (2 * args.spin).denominator != 1):
        parser.print_usage(sys.stderr)
        print("spintorus: error: --spin must be a non-negative half-integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        overrides = {"alpha": args.alpha, "c": args.c_light}
        system = config.resolve(args.config, args.system, overrides)
        cfg = config.build(system)
    except config.ConfigError as exc:
        print(f"spintorus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    meta = {
        "command": args.command,
        "config_hash": config.config_hash(system),
        "seed": args.seed,
        "system": system,
        "version": __version__,
    }
    try:
        result, columns, rows, problems = COMMANDS[args.command](args, system, cfg)
    except (SpinTorusError, ComputationError, ValueError, ArithmeticError) as exc:
        print(f"spintorus: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    meta_flat = meta if args.format == "json" else {k: v for k, v in meta.items() if k != "system"}
    text = render(args.format, meta_flat, result, columns, rows)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in problems:
        print(f"spintorus: {line}", file=sys.stderr)
    return EXIT_FAILURE if problems else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
