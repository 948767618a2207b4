"""Translational flow, spin transport and the skew-product flow on phase space x S^2.

All integrations use scipy's Dormand-Prince 5(4) pair (``RK45``) with dense
output.  The state vector is ``[p(3), x(3), q(4)]`` where ``q`` is the SU(2)
rotor of :mod:`spintorus.rotor`; the rotor rides on the same adaptive steps as
the orbit and is renormalised whenever it is sampled.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import CaptureError, SingularityError, StiffnessError
from .rotor import SpinRotor, rotor_rate, su2_to_so3
from .symbol import FieldConfig, PhasePoint, classical_hamiltonians, precession_field

DEFAULT_TOL = 1e-10
# embedded Dormand-Prince 8(5,3) with dense output
METHOD = "DOP853"


@dataclass(frozen=True)
class SkewState:
    pt: PhasePoint
    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(3)
        object.__setattr__(self, "s", s / np.linalg.norm(s))


@dataclass(frozen=True)
class Generator:
    """A phase-space function together with its spin lift.

    ``velocity(p, x)`` returns ``(dp/dt, dx/dt)`` of the Hamiltonian flow of
    ``value``; ``field(p, x)`` is the precession vector used to carry spins
    along that flow.
    """

    name: str
    value: Callable[[np.ndarray, np.ndarray], float]
    velocity: Callable[[np.ndarray, np.ndarray], tuple]
    field: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    p: np.ndarray
    x: np.ndarray
    rotors: Optional[np.ndarray]
    energy: float
    branch: str
    cfg: FieldConfig = field(repr=False)
    sol: object = field(repr=False, default=None)
    turning_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self):
        return len(self.times)

    def point(self, k: int) -> PhasePoint:
        return PhasePoint(self.p[k], self.x[k])

    def state_at(self, t: float) -> np.ndarray:
        """Dense-output state ``[p, x, (q)]`` at time ``t``."""
        return self.sol(t)

    @property
    def final_point(self) -> PhasePoint:
        return self.point(-1)

    @property
    def final_rotor(self) -> SpinRotor:
        if self.rotors is None:
            raise ValueError("trajectory was integrated without spin transport")
        return SpinRotor(self.rotors[-1])

    def energies(self) -> np.ndarray:
        idx = 0 if self.branch == "+" else 1
        return np.array([classical_hamiltonians(self.point(k), self.cfg)[idx] for k in range(len(self))])

    def energy_drift(self) -> np.ndarray:
        return np.abs(self.energies() - self.energy) / abs(self.energy)

    def angular_momenta(self) -> np.ndarray:
        return np.cross(self.x, self.p)

    def spins(self, s0) -> np.ndarray:
        s0 = np.asarray(s0, dtype=float)
        return np.array([su2_to_so3(SpinRotor(q)) @ s0 for q in self.rotors])


# -- right-hand sides -----------------------------------------------------------


def _branch_sign(branch: str) -> float:
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    return 1.0 if branch == "+" else -1.0


def _central_rhs(cfg: FieldConfig, sign: float, with_rotor: bool):
    slope = cfg.central.slope
    c2 = cfg.c * cfg.c
    mc2 = cfg.rest_energy
    m2c4 = mc2 * mc2

    def rhs(t, y):
        p1, p2, p3, x1, x2, x3 = y[:6]
        r = math.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
        eps = math.sqrt(c2 * (p1 * p1 + p2 * p2 + p3 * p3) + m2c4)
        dV = slope(r) / r if r > 0 else 0.0
        v = sign * c2 / eps
        out = [-dV * x1, -dV * x2, -dV * x3, v * p1, v * p2, v * p3]
        if with_rotor:
            # C = c^2 V'(r) / (r eps (eps + mc^2)) * (x cross p)
            k = c2 * dV / (eps * (eps + mc2))
            C = (k * (x2 * p3 - x3 * p2), k * (x3 * p1 - x1 * p3), k * (x1 * p2 - x2 * p1))
            out.extend(rotor_rate(C, y[6:10]))
        return out

    return rhs


def _generic_rhs(cfg: FieldConfig, sign: float, with_rotor: bool):
    e, c = cfg.charge, cfg.c
    c2 = c * c
    mc2 = cfg.rest_energy

    def rhs(t, y):
        p, x = y[:3], y[3:6]
        A = cfg.vector_potential(x)
        pi = p - (e / c) * A
        eps = math.sqrt(c2 * float(pi @ pi) + mc2 * mc2)
        xdot = sign * c2 * pi / eps
        pdot = -cfg.potential_gradient(x)
        if cfg.A is not None:
            pdot = pdot + sign * (e * c / eps) * (cfg.vector_potential_jacobian(x) @ pi)
        out = np.concatenate([pdot, xdot])
        if with_rotor:
            C = precession_field(PhasePoint(p, x), cfg)
            out = np.concatenate([out, rotor_rate(C, y[6:10])])
        return out

    return rhs


def hamiltonian_rhs(cfg: FieldConfig, branch: str = "+", with_rotor: bool = False):
    sign = _branch_sign(branch)
    if cfg.central is not None and cfg.A is None:
        return _central_rhs(cfg, sign, with_rotor)
    return _generic_rhs(cfg, sign, with_rotor)


def _atol(p0, x0, tol, n_rotor):
    ps = float(np.linalg.norm(p0)) or 1e-8
    xs = float(np.linalg.norm(x0)) or 1e-8
    return np.concatenate([np.full(3, tol * ps), np.full(3, tol * xs), np.full(n_rotor, tol)])


def _solve(rhs, y0, t_final, tol, atol, events=None, t_eval=None):
    sol = solve_ivp(
        rhs,
        (0.0, t_final),
        y0,
        method=METHOD,
        rtol=tol,
        atol=atol,
        dense_output=True,
        events=events,
        t_eval=t_eval,
    )
    if sol.status == -1:
        raise StiffnessError(sol.message)
    return sol


def _zero_crossings(sol, g) -> np.ndarray:
    """Sign changes of ``g(y)`` along a dense solution, refined by Brent's method.

    Scanning the step grid after the fact (rather than through the solver's
    event machinery) tolerates functions that hover at round-off level, such
    as p . x on a circular orbit: brackets whose refined endpoints disagree
    with the grid are simply skipped.
    """
    ts = np.asarray(sol.ts)
    Y = sol(ts)
    vals = np.array([g(Y[:, k]) for k in range(len(ts))])
    out = [ts[k] for k in range(1, len(ts)) if vals[k] == 0.0]

    def f(t):
        return g(sol(t))

    for k in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        a, b = sorted((ts[k], ts[k + 1]))
        if f(a) * f(b) >= 0:
            continue
        xtol = 1e-12 + 4 * np.finfo(float).eps * max(abs(a), abs(b))
        out.append(brentq(f, a, b, xtol=xtol))
    return np.array(sorted(out, key=abs))


def _normalise_rotors(Y):
    if Y.shape[0] < 10:
        return None
    q = Y[6:10].T
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def hamiltonian_flow(
    init: PhasePoint,
    cfg: FieldConfig,
    branch: str = "+",
    t_final: float = 1.0,
    tol: float = DEFAULT_TOL,
    *,
    with_rotor: Optional[bool] = None,
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate Hamilton's equations for H+ or H-.

    On the positive branch the spin rotor is integrated alongside.  Zero
    crossings of ``p . x`` (radial turning points) are located on the dense
    output and stored in ``turning_times``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    sign = _branch_sign(branch)
    if with_rotor is None:
        with_rotor = sign > 0
    elif with_rotor and sign < 0:
        raise ValueError("spin transport is only defined on the positive-energy branch")
    h_plus, h_minus = classical_hamiltonians(init, cfg)
    energy = h_plus if sign > 0 else h_minus

    y0 = np.concatenate([init.p, init.x, [1.0, 0.0, 0.0, 0.0] if with_rotor else []])
    rhs = hamiltonian_rhs(cfg, branch, with_rotor)

    def radial(y):
        return y[0] * y[3] + y[1] * y[4] + y[2] * y[5]

    events = []
    if cfg.central is not None and cfg.central.singular:

        def capture(t, y):
            return math.sqrt(y[3] ** 2 + y[4] ** 2 + y[5] ** 2) - cfg.r_guard

        capture.terminal = True
        events.append(capture)

    try:
        sol = _solve(rhs, y0, t_final, tol, _atol(init.p, init.x, tol, 4 if with_rotor else 0), events or None,
                     t_eval)
    except (SingularityError, ZeroDivisionError) as exc:
        raise CaptureError(str(exc)) from exc
    if sol.status == 1:
        raise CaptureError(f"trajectory reached r < {cfg.r_guard} at t = {sol.t[-1]:.6g}")

    Y = sol.y
    return Trajectory(
        times=sol.t,
        p=Y[:3].T.copy(),
        x=Y[3:6].T.copy(),
        rotors=_normalise_rotors(Y) if with_rotor else None,
        energy=energy,
        branch=branch,
        cfg=cfg,
        sol=sol.sol,
        turning_times=_zero_crossings(sol.sol, radial),
    )


def spin_transport(traj: Trajectory, cfg: Optional[FieldConfig] = None) -> SpinRotor:
    """SU(2) transporter d(t_final) accumulated along ``traj``."""
    return traj.final_rotor


@dataclass(frozen=True)
class SpinHistory:
    times: np.ndarray
    s: np.ndarray


def precess_spin(traj: Trajectory, cfg: FieldConfig, s0, tol: float = DEFAULT_TOL) -> SpinHistory:
    """Solve ds/dt = C x s along the dense output of ``traj``.

    Independent of the rotor integration: it re-samples the orbit and
    integrates the classical spin directly on S^2.
    """
    s0 = np.asarray(s0, dtype=float)
    if abs(np.linalg.norm(s0) - 1.0) > 1e-12:
        raise ValueError("s0 must be a unit vector")

    def rhs(t, s):
        y = traj.sol(t)
        C = precession_field(PhasePoint(y[:3], y[3:6]), cfg)
        return np.cross(C, s)

    sol = solve_ivp(rhs, (traj.times[0], traj.times[-1]), s0, method=METHOD, rtol=tol, atol=tol * 1e-2,
                    t_eval=traj.times)
    if sol.status == -1:
        raise StiffnessError(sol.message)
    return SpinHistory(sol.t, sol.y.T.copy())


def skew_step(state: SkewState, cfg: FieldConfig, t: float, tol: float = DEFAULT_TOL) -> SkewState:
    """Apply the skew-product flow for time ``t`` (negative times run backwards)."""
    if t == 0:
        return state
    traj = hamiltonian_flow(state.pt, cfg, "+", t, tol)
    R = su2_to_so3(traj.final_rotor)
    return SkewState(traj.final_point, R @ state.s)


# -- generic generators ---------------------------------------------------------


def hamiltonian_generator(cfg: FieldConfig) -> Generator:
    rhs = hamiltonian_rhs(cfg, "+", with_rotor=False)

    def value(p, x):
        return classical_hamiltonians(PhasePoint(p, x), cfg)[0]

    def velocity(p, x):
        d = rhs(0.0, np.concatenate([p, x]))
        return np.asarray(d[:3]), np.asarray(d[3:6])

    def field(p, x):
        return precession_field(PhasePoint(p, x), cfg)

    return Generator("H", value, velocity, field)


@dataclass(frozen=True)
class FlowResult:
    times: np.ndarray
    p: np.ndarray
    x: np.ndarray
    rotors: np.ndarray
    sol: object = field(repr=False, default=None)
    event_times: tuple = ()

    @property
    def final_rotor(self) -> SpinRotor:
        return SpinRotor(self.rotors[-1])

    @property
    def final_point(self) -> PhasePoint:
        return PhasePoint(self.p[-1], self.x[-1])


def skew_flow(
    gen: Generator,
    pt: PhasePoint,
    t: float,
    tol: float = DEFAULT_TOL,
    *,
    events: Sequence[Callable] = (),
    t_eval: Optional[Sequence[float]] = None,
    cfg: Optional[FieldConfig] = None,
) -> FlowResult:
    """Integrate the skew product of an arbitrary generator for time ``t``.

    When ``gen`` is the Hamiltonian of a central ``cfg`` the fast right-hand
    side of :func:`hamiltonian_flow` is used.
    """
    y0 = np.concatenate([pt.p, pt.x, [1.0, 0.0, 0.0, 0.0]])
    if t == 0:
        return FlowResult(np.zeros(1), pt.p[None], pt.x[None], y0[None, 6:])
    if cfg is not None and gen.name == "H":
        rhs = hamiltonian_rhs(cfg, "+", with_rotor=True)
    else:

        def rhs(_, y):
            p, x = y[:3], y[3:6]
            pdot, xdot = gen.velocity(p, x)
            return np.concatenate([pdot, xdot, rotor_rate(gen.field(p, x), y[6:10])])

    sol = _solve(rhs, y0, t, tol, _atol(pt.p, pt.x, tol, 4), None, t_eval)
    Y = sol.y
    return FlowResult(
        times=sol.t,
        p=Y[:3].T.copy(),
        x=Y[3:6].T.copy(),
        rotors=_normalise_rotors(Y),
        sol=sol.sol,
        event_times=tuple(_zero_crossings(sol.sol, lambda y, ev=ev: ev(y[:3], y[3:6])) for ev in events),
    )


# -- export ---------------------------------------------------------------------

CSV_COLUMNS = ["t", "x1", "x2", "x3", "p1", "p2", "p3", "s1", "s2", "s3", "energy_drift"]


def trajectory_rows(traj: Trajectory, s0) -> list[list[float]]:
    spins = traj.spins(s0) if traj.rotors is not None else np.tile(np.asarray(s0, float), (len(traj), 1))
    drift = traj.energy_drift()
    return [
        [float(traj.times[k]), *map(float, traj.x[k]), *map(float, traj.p[k]), *map(float, spins[k]), float(drift[k])]
        for k in range(len(traj))
    ]


def trajectory_to_csv(traj: Trajectory, s0, stream=None) -> str:
    buf = stream if stream is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in trajectory_rows(traj, s0):
        writer.writerow([repr(v) for v in row])
    return buf.getvalue() if stream is None else ""


def trajectory_to_json(traj: Trajectory, s0) -> str:
    rows = trajectory_rows(traj, s0)
    payload = {"columns": CSV_COLUMNS, "energy": traj.energy, "branch": traj.branch, "rows": rows}
    return json.dumps(payload, sort_keys=True)


def _unit_l(p, x):
    L = np.cross(x, p)
    return L / np.linalg.norm(L)


def abs_angular_momentum_generator() -> Generator:
    """|L| generates right-handed rotation about n = L/|L| at unit rate; spins follow with C = n."""

    def value(p, x):
        return float(np.linalg.norm(np.cross(x, p)))

    def velocity(p, x):
        n = _unit_l(p, x)
        return np.cross(n, p), np.cross(n, x)

    return Generator("|L|", value, velocity, _unit_l)


def lz_generator() -> Generator:
    ez = np.array([0.0, 0.0, 1.0])

    def value(p, x):
        return float(x[0] * p[1] - x[1] * p[0])

    def velocity(p, x):
        return np.cross(ez, p), np.cross(ez, x)

    return Generator("Lz", value, velocity, lambda p, x: ez)
