"""Central-field tori: turning points, actions, fundamental cycles, Maslov indices
and spin rotation angles.

Energies ``E`` include the rest energy.  Internally the Coulomb routines work
with the binding energy ``w = mc^2 - E`` so that weakly relativistic runs
(large ``c``) keep their precision; functions taking ``binding=`` accept it
directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .dynamics import (
    DEFAULT_TOL,
    FlowResult,
    abs_angular_momentum_generator,
    hamiltonian_flow,
    hamiltonian_generator,
    lz_generator,
    skew_flow,
)
from .errors import DegenerateCycleError, FallToCenterError, NoBoundOrbitError
from .rotor import SpinRotor, qmul
from .symbol import FieldConfig, PhasePoint

CYCLE_TOL = 1e-11
_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=200)


def _require_central(cfg: FieldConfig):
    if cfg.central is None or cfg.A is not None:
        raise ValueError("orbit routines need a central electrostatic FieldConfig")


def _is_coulomb(cfg: FieldConfig) -> bool:
    return cfg.central is not None and cfg.central.kind == "coulomb"


def _binding(E, cfg, binding):
    return cfg.rest_energy - E if binding is None else binding


def _energy(E, cfg, binding):
    return cfg.rest_energy - binding if E is None else E


def circular_binding(L: float, cfg: FieldConfig) -> float:
    """Binding energy of the circular Coulomb orbit, the lower edge of the bound window in E."""
    kappa = cfg.central.params["kappa"]
    _check_coulomb_L(L, cfg)
    s = kappa / (cfg.c * L)
    return cfg.rest_energy * s * s / (1.0 + math.sqrt(1.0 - s * s))


def _check_coulomb_L(L, cfg):
    kappa = cfg.central.params["kappa"]
    if not L > kappa / cfg.c:
        raise FallToCenterError(f"L = {L!r} is not above e^2/c = {kappa / cfg.c!r}")


# -- turning points ---------------------------------------------------------------


def _coulomb_roots(w: float, L: float, cfg: FieldConfig) -> tuple[float, float]:
    _check_coulomb_L(L, cfg)
    kappa = cfg.central.params["kappa"]
    mc2 = cfg.rest_energy
    E = mc2 - w
    if not w > 0:
        raise NoBoundOrbitError(f"E = {E!r} is not below the rest energy")
    # (m^2c^4 - E^2) r^2 - 2 E kappa r + (c^2 L^2 - kappa^2) = 0
    a = w * (2 * mc2 - w)
    b = -2.0 * E * kappa
    cc = (cfg.c * L) ** 2 - kappa**2
    disc = b * b - 4 * a * cc
    if disc < 0:
        if disc > -1e-13 * b * b:
            disc = 0.0
        else:
            raise NoBoundOrbitError(f"(E, L) = ({E!r}, {L!r}) lies below the circular orbit")
    q = -0.5 * (b - math.sqrt(disc))
    r1, r2 = cc / q, q / a
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _effective_potential(r, L, cfg):
    """V(r) + eps - mc^2 at p_r = 0, with the rest energy removed analytically."""
    cp = cfg.c * L / r
    mc2 = cfg.rest_energy
    return cfg.central.energy(r) + cp * cp / (math.hypot(cp, mc2) + mc2)


def _general_roots(E: float, L: float, cfg: FieldConfig) -> tuple[float, float]:
    if not L > 0:
        raise NoBoundOrbitError("L must be positive")
    excess = E - cfg.rest_energy
    U = lambda r: _effective_potential(r, L, cfg) - excess
    # locate the minimum of the effective potential on a log grid, then refine
    grid = np.logspace(-6, 6, 241)
    vals = np.array([U(r) for r in grid])
    k = int(np.argmin(vals))
    if vals[k] >= 0 or k in (0, len(grid) - 1):
        raise NoBoundOrbitError(f"no bound libration at (E, L) = ({E!r}, {L!r})")
    lo = next((i for i in range(k, -1, -1) if vals[i] > 0), None)
    hi = next((i for i in range(k, len(grid)) if vals[i] > 0), None)
    if lo is None or hi is None:
        raise NoBoundOrbitError(f"orbit at (E, L) = ({E!r}, {L!r}) is not confined")
    r_min = brentq(U, grid[lo], grid[k], xtol=1e-300, rtol=1e-15)
    r_max = brentq(U, grid[k], grid[hi], xtol=1e-300, rtol=1e-15)
    return r_min, r_max


def turning_points(E: Optional[float], L: float, cfg: FieldConfig, *, binding: Optional[float] = None):
    """Inner and outer radial turning points (r_min, r_max)."""
    _require_central(cfg)
    if _is_coulomb(cfg):
        return _coulomb_roots(_binding(E, cfg, binding), L, cfg)
    return _general_roots(_energy(E, cfg, binding), L, cfg)


# -- radial quadratures -----------------------------------------------------------


def _coulomb_quadratures(w, L, cfg, which):
    a, b = _coulomb_roots(w, L, cfg)
    mc2 = cfg.rest_energy
    kappa = cfg.central.params["kappa"]
    K = math.sqrt(w * (2 * mc2 - w)) / cfg.c  # p_r = K sqrt((r-a)(b-r)) / r
    if which == "action":
        if b - a <= 1e-15 * b:
            return 0.0
        val, _ = quad(lambda r: 1.0 / r, a, b, weight="alg", wvar=(0.5, 0.5), **_QUAD)
        return K * val / math.pi
    if b - a <= 1e-15 * b:
        raise DegenerateCycleError("circular orbit: no radial libration")
    if which == "apsidal":
        val, _ = quad(lambda r: 1.0 / r, a, b, weight="alg", wvar=(-0.5, -0.5), **_QUAD)
        return 2.0 * L * val / K
    if which == "period":
        E = mc2 - w
        val, _ = quad(lambda r: E * r + kappa, a, b, weight="alg", wvar=(-0.5, -0.5), **_QUAD)
        return 2.0 * val / (cfg.c**2 * K)
    raise ValueError(which)


def _pr_squared(r, E, L, cfg):
    mc2 = cfg.rest_energy
    d = (E - mc2) - cfg.central.energy(r)  # kinetic energy minus rest energy
    return d * (d + 2 * mc2) / cfg.c**2 - (L / r) ** 2


def _general_quadratures(E, L, cfg, which):
    a, b = _general_roots(E, L, cfg)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    if which == "action" and half <= 1e-15 * b:
        return 0.0
    if half <= 1e-15 * b:
        raise DegenerateCycleError("circular orbit: no radial libration")

    def pr_sin(th):
        # p_r / sin(theta) stays finite at the turning points
        s = math.sin(th)
        if s < 1e-9:
            th = max(th, 1e-9) if th < 1 else min(th, math.pi - 1e-9)
            s = math.sin(th)
        r = mid - half * math.cos(th)
        return math.sqrt(max(_pr_squared(r, E, L, cfg), 0.0)) / s, r

    if which == "action":
        f = lambda th: pr_sin(th)[0] * half * math.sin(th) ** 2
        val, _ = quad(f, 0.0, math.pi, epsabs=0.0, epsrel=1e-12, limit=200)
        return val / math.pi

    def integrand(th, g):
        ps, r = pr_sin(th)
        return g(r) * half / ps

    if which == "apsidal":
        val, _ = quad(integrand, 0.0, math.pi, args=(lambda r: L / r**2,), epsabs=0.0, epsrel=1e-12, limit=200)
        return 2.0 * val
    if which == "period":
        g = lambda r: (E - cfg.central.energy(r)) / cfg.c**2
        val, _ = quad(integrand, 0.0, math.pi, args=(g,), epsabs=0.0, epsrel=1e-12, limit=200)
        return 2.0 * val
    raise ValueError(which)


def _quadrature(E, L, cfg, binding, which):
    _require_central(cfg)
    if _is_coulomb(cfg):
        return _coulomb_quadratures(_binding(E, cfg, binding), L, cfg, which)
    return _general_quadratures(_energy(E, cfg, binding), L, cfg, which)


def radial_action(E: Optional[float], L: float, cfg: FieldConfig, *, binding: Optional[float] = None) -> float:
    """I_r = (1/2pi) closed integral of p_r dr, by adaptive quadrature."""
    return _quadrature(E, L, cfg, binding, "action")


def apsidal_angle(E: Optional[float], L: float, cfg: FieldConfig, *, binding: Optional[float] = None) -> float:
    """Azimuth swept during one radial period."""
    return _quadrature(E, L, cfg, binding, "apsidal")


def radial_period(E: Optional[float], L: float, cfg: FieldConfig, *, binding: Optional[float] = None) -> float:
    """Time from perihelion to perihelion."""
    return _quadrature(E, L, cfg, binding, "period")


@dataclass(frozen=True)
class OrbitParams:
    E: float
    L: float
    r_min: float
    r_max: float
    T_r: float
    dphi: float
    I_r: float


def orbit_params(E: Optional[float], L: float, cfg: FieldConfig, *, binding: Optional[float] = None) -> OrbitParams:
    r_min, r_max = turning_points(E, L, cfg, binding=binding)
    return OrbitParams(
        E=_energy(E, cfg, binding),
        L=L,
        r_min=r_min,
        r_max=r_max,
        T_r=radial_period(E, L, cfg, binding=binding),
        dphi=apsidal_angle(E, L, cfg, binding=binding),
        I_r=radial_action(E, L, cfg, binding=binding),
    )


# -- torus points and cycles ------------------------------------------------------


def orientation_matrix(node: float, inclination: float, periapsis: float) -> np.ndarray:
    """Rz(node) Rx(inclination) Rz(periapsis)."""

    def rz(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])

    c, s = math.cos(inclination), math.sin(inclination)
    rx = np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])
    return rz(node) @ rx @ rz(periapsis)


def torus_point(
    E: Optional[float],
    L: float,
    cfg: FieldConfig,
    *,
    binding: Optional[float] = None,
    phase: float = 0.0,
    node: float = 0.3,
    inclination: float = 0.7,
    periapsis: float = 0.0,
    tol: float = CYCLE_TOL,
) -> PhasePoint:
    """Point on the (E, L) torus: perihelion of an oriented orbit, advanced by ``phase`` radial periods."""
    r_min, _ = turning_points(E, L, cfg, binding=binding)
    R = orientation_matrix(node, inclination, periapsis)
    pt = PhasePoint(R @ np.array([0.0, L / r_min, 0.0]), R @ np.array([r_min, 0.0, 0.0]))
    if phase:
        T = radial_period(E, L, cfg, binding=binding)
        pt = hamiltonian_flow(pt, cfg, "+", phase * T, tol, with_rotor=False).final_point
    return pt


@dataclass(frozen=True)
class Cycle:
    """Closed loop on a torus as an ordered list of (generator, duration) segments."""

    label: str
    segments: tuple
    base: PhasePoint
    E: float
    L: float

    @property
    def axis(self) -> np.ndarray:
        L = self.base.angular_momentum
        return L / np.linalg.norm(L)


def build_cycles(
    E: Optional[float],
    L: float,
    cfg: FieldConfig,
    *,
    binding: Optional[float] = None,
    base: Optional[PhasePoint] = None,
    phase: float = 0.25,
) -> tuple[Cycle, Cycle]:
    """Radial and angular basis cycles (C_r, C_L).

    C_r follows the orbit for one radial period and then rotates back by the
    apsidal angle about the angular-momentum axis; C_L is a full turn about
    that axis.
    """
    r_min, r_max = turning_points(E, L, cfg, binding=binding)
    if r_max - r_min <= 1e-10 * r_max:
        raise DegenerateCycleError("circular orbit: the radial cycle collapses")
    w = _binding(E, cfg, binding)
    E = _energy(E, cfg, binding)
    T = radial_period(None, L, cfg, binding=w)
    dphi = apsidal_angle(None, L, cfg, binding=w)
    if base is None:
        base = torus_point(E, L, cfg, binding=binding, phase=phase)
    c_r = Cycle("C_r", (("H", T), ("|L|", -dphi)), base, E, L)
    c_l = Cycle("C_L", (("|L|", 2 * math.pi),), base, E, L)
    return c_r, c_l


def _generator(name, cfg):
    if name == "H":
        return hamiltonian_generator(cfg)
    if name == "|L|":
        return abs_angular_momentum_generator()
    if name == "Lz":
        return lz_generator()
    raise ValueError(f"unknown generator {name!r}")


def _radial_event(p, x):
    return float(p @ x)


def _polar_event(p, x):
    # sign of the polar momentum p_theta (polar axis = z)
    return float(x[2] * (x @ p) - (x @ x) * p[2])


@dataclass(frozen=True)
class CycleTransport:
    cycle: Cycle
    final: PhasePoint
    rotor: SpinRotor
    half_angle: np.ndarray
    flows: tuple = field(repr=False)

    @property
    def winding(self) -> float:
        """Total rotation angle about the cycle axis, not reduced."""
        return 2.0 * float(self.half_angle[-1] - self.half_angle[0])

    def return_distance(self) -> float:
        b, f = self.cycle.base, self.final
        return float(np.linalg.norm(f.x - b.x) / np.linalg.norm(b.x) + np.linalg.norm(f.p - b.p) / np.linalg.norm(b.p))


def transport_around(cycle: Cycle, cfg: FieldConfig, tol: float = CYCLE_TOL, *, samples: int = 257) -> CycleTransport:
    """Carry the SU(2) frame around ``cycle``, segment by segment."""
    n = cycle.axis
    pt = cycle.base
    total = np.array([1.0, 0.0, 0.0, 0.0])
    track = [np.array([0.0])]
    flows = []
    for name, duration in cycle.segments:
        gen = _generator(name, cfg)
        events = (_radial_event,) if name == "H" else (_polar_event,)
        t_eval = None if name == "H" else np.linspace(0.0, duration, samples)
        flow = skew_flow(gen, pt, duration, tol, events=events, t_eval=t_eval, cfg=cfg)
        if name == "H" and len(flow.times) < 2:
            raise DegenerateCycleError("empty orbit segment")
        qs = np.array([qmul(q, total) for q in flow.rotors])
        half = np.unwrap(np.arctan2(-(qs[:, 1:] @ n), qs[:, 0]))
        # stitch onto the running track so winding stays continuous across segments
        half += track[-1][-1] - half[0]
        track.append(half[1:])
        total = qs[-1]
        pt = flow.final_point
        flows.append(flow)
    return CycleTransport(cycle, pt, SpinRotor(total), np.concatenate(track), tuple(flows))


def _crossings(times, duration, skip=1e-9):
    lo, hi = sorted((0.0, duration))
    eps = skip * abs(duration)
    return sum(1 for t in times if lo + eps < t <= hi + eps)


def maslov_index(cycle: Cycle, E: Optional[float], L: float, cfg: FieldConfig, tol: float = CYCLE_TOL,
                 *, transport: Optional[CycleTransport] = None) -> int:
    """Number of libration turning points met along the cycle.

    C_r counts sign changes of p_r on its orbit segment; C_L counts sign changes
    of the polar momentum p_theta during the full turn, which needs an orbit
    plane tilted against the z axis.
    """
    r_min, r_max = turning_points(cycle.E if E is None else E, L, cfg)
    if r_max - r_min <= 1e-10 * r_max:
        raise DegenerateCycleError("circular orbit: no radial libration to count")
    if transport is None:
        transport = transport_around(cycle, cfg, tol)
    if cycle.label == "C_r":
        (name, duration), flow = cycle.segments[0], transport.flows[0]
        return _crossings(flow.event_times[0], duration)
    n = cycle.axis
    if abs(abs(n[2]) - 1.0) < 1e-12:
        raise DegenerateCycleError("orbit plane is equatorial: p_theta vanishes identically")
    return sum(_crossings(flow.event_times[0], d) for (_, d), flow in zip(cycle.segments, transport.flows))


@dataclass(frozen=True)
class SpinAngle:
    alpha: float
    winding: float
    degenerate: bool
    axis_error: float
    return_distance: float


def spin_rotation_angle(cycle: Cycle, E: Optional[float], L: float, cfg: FieldConfig, tol: float = CYCLE_TOL,
                        *, transport: Optional[CycleTransport] = None) -> SpinAngle:
    """Net rotation of a transported spin frame about n = L/|L| around ``cycle``, in [0, 4pi).

    The angle is read from the continuously unwrapped half angle of the
    accumulated rotor, so a 2pi turn (rotor -1) is not lost.
    """
    if transport is None:
        transport = transport_around(cycle, cfg, tol)
    q = transport.rotor.q
    n = cycle.axis
    v = q[1:]
    along = float(v @ n)
    perp = float(np.linalg.norm(v - along * n))
    winding = transport.winding
    degenerate = bool(np.linalg.norm(v) < 1e-9 and q[0] > 0)
    alpha = 0.0 if degenerate else winding % (4 * math.pi)
    return SpinAngle(
        alpha=alpha,
        winding=winding,
        degenerate=degenerate,
        axis_error=perp,
        return_distance=transport.return_distance(),
    )


def latitude(s, n) -> float:
    """Angle between spin ``s`` and axis ``n``."""
    s = np.asarray(s, float)
    n = np.asarray(n, float)
    return math.atan2(float(np.linalg.norm(np.cross(s, n))), float(s @ n))
