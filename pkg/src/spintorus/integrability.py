"""Numerical checks of skew-product integrability and of the invariant latitude bundles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kepler
from .dynamics import (
    DEFAULT_TOL,
    Generator,
    SkewState,
    abs_angular_momentum_generator,
    hamiltonian_generator,
    lz_generator,
    skew_flow,
)
from .rotor import su2_to_so3
from .symbol import FieldConfig, PhasePoint

INTEGRABLE_THRESHOLD = 1e-6
NOT_INTEGRABLE_THRESHOLD = 1e-3
BUNDLE_THRESHOLD = 1e-7
FD_STEP = 1e-5


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))

    def __len__(self):
        return len(self.generators)

    def __getitem__(self, j) -> Generator:
        return self.generators[j]

    @property
    def A(self) -> list:
        return [g.value for g in self.generators]

    @property
    def Bfields(self) -> list:
        return [g.field for g in self.generators]


def kepler_generators(cfg: FieldConfig, perturbation: Optional[Sequence[float]] = None) -> GeneratorSet:
    """(H, |L|, L_z) lifted by (Thomas field, L/|L|, e_z).

    ``perturbation`` adds a constant vector to the Thomas field, which breaks
    the involution conditions and serves as a negative control.
    """
    H = hamiltonian_generator(cfg)
    if perturbation is not None:
        b = np.asarray(perturbation, dtype=float)
        base_field = H.field
        H = Generator("H*", H.value, H.velocity, lambda p, x: base_field(p, x) + b)
    return GeneratorSet((H, abs_angular_momentum_generator(), lz_generator()))


# -- brackets -------------------------------------------------------------------------


def _steps(pt: PhasePoint, rel_step: float):
    hp = rel_step * max(float(np.linalg.norm(pt.p)), 1e-300)
    hx = rel_step * max(float(np.linalg.norm(pt.x)), 1e-300)
    return hp, hx


def _fd_gradient(f, pt: PhasePoint, rel_step: float, richardson: bool):
    """Central-difference (dp, dx) gradients; vector-valued f gives shape (3, *out)."""
    hp, hx = _steps(pt, rel_step)

    def central(h_p, h_x):
        gp, gx = [], []
        for i in range(3):
            e = np.zeros(3)
            e[i] = h_p
            gp.append((np.asarray(f(pt.p + e, pt.x)) - np.asarray(f(pt.p - e, pt.x))) / (2 * h_p))
            e = np.zeros(3)
            e[i] = h_x
            gx.append((np.asarray(f(pt.p, pt.x + e)) - np.asarray(f(pt.p, pt.x - e))) / (2 * h_x))
        return np.array(gp, dtype=float), np.array(gx, dtype=float)

    gp, gx = central(hp, hx)
    if not richardson:
        return gp, gx
    gp2, gx2 = central(hp / 2, hx / 2)
    return (4 * gp2 - gp) / 3, (4 * gx2 - gx) / 3


def poisson_bracket(
    f: Callable,
    g: Callable,
    pt: PhasePoint,
    *,
    grad_f: Optional[Callable] = None,
    grad_g: Optional[Callable] = None,
    rel_step: float = FD_STEP,
    richardson: bool = True,
):
    """{f, g} = sum_i df/dx_i dg/dp_i - df/dp_i dg/dx_i, so that {x_1, p_1} = 1.

    ``f`` and ``g`` take ``(p, x)``; either may be vector valued, in which case
    the bracket acts componentwise.  ``grad_*`` return ``(d/dp, d/dx)`` with
    the coordinate index first.
    """
    fp, fx = grad_f(pt.p, pt.x) if grad_f else _fd_gradient(f, pt, rel_step, richardson)
    gp, gx = grad_g(pt.p, pt.x) if grad_g else _fd_gradient(g, pt, rel_step, richardson)
    fp, fx, gp, gx = (np.asarray(a, dtype=float) for a in (fp, fx, gp, gx))
    out = np.tensordot(fx, gp, axes=(0, 0)) - np.tensordot(fp, gx, axes=(0, 0))
    return float(out) if out.ndim == 0 else out


def involution_residual(gens: GeneratorSet, j: int, k: int, pt: PhasePoint, *, rel_step: float = FD_STEP,
                        richardson: bool = True) -> np.ndarray:
    """Residual of the spin involution condition for the pair (j, k).

    Written with the bracket convention {f, g} = df/dp dg/dx - df/dx dg/dp,
    the opposite of :func:`poisson_bracket`; with it the vanishing residual is
    exactly the commutation of the two skew products for ds/dt = C x s.
    """
    Aj, Ak = gens[j].value, gens[k].value
    Cj, Ck = gens[j].field, gens[k].field
    kw = dict(rel_step=rel_step, richardson=richardson)
    term = -poisson_bracket(Aj, Ck, pt, **kw) - poisson_bracket(Cj, Ak, pt, **kw)
    return term - np.cross(Cj(pt.p, pt.x), Ck(pt.p, pt.x))


def max_residual(gens: GeneratorSet, pt: PhasePoint, **kw) -> float:
    d = len(gens)
    return max(float(np.linalg.norm(involution_residual(gens, j, k, pt, **kw))) for j in range(d) for k in range(d))


def convergence_order(gens: GeneratorSet, pt: PhasePoint, rel_step: float = 1e-2) -> float:
    """Observed order of the raw central-difference residual between steps h and h/2."""
    r1 = max_residual(gens, pt, rel_step=rel_step, richardson=False)
    r2 = max_residual(gens, pt, rel_step=rel_step / 2, richardson=False)
    return math.log2(r1 / r2)


def verdict(residual: float) -> str:
    if residual <= INTEGRABLE_THRESHOLD:
        return "integrable"
    if residual <= NOT_INTEGRABLE_THRESHOLD:
        return "inconclusive - refine"
    return "not integrable"


def random_bound_points(cfg: FieldConfig, n: int, rng: np.random.Generator) -> list[PhasePoint]:
    """Points with E < mc^2 and L above the capture threshold in a Coulomb field."""
    kappa = cfg.central.params["kappa"]
    mc2, c = cfg.rest_energy, cfg.c
    bohr = cfg.hbar**2 / (cfg.mass * kappa)
    out = []
    while len(out) < n:
        r = bohr * rng.uniform(0.5, 20.0)
        x = r * _random_unit(rng)
        p_esc = math.sqrt((mc2 + kappa / r) ** 2 - mc2**2) / c
        p = p_esc * rng.uniform(0.1, 0.95) * _random_unit(rng)
        if np.linalg.norm(np.cross(x, p)) > 1.05 * kappa / c:
            out.append(PhasePoint(p, x))
    return out


def _random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class IntegrabilityReport:
    max_residual: float
    verdict: str
    seed: int
    points: int
    order: float

    def as_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "verdict": self.verdict,
            "seed": self.seed,
            "points": self.points,
            "convergence_order": self.order,
        }


def check_integrability(cfg: FieldConfig, *, points: int = 200, seed: int = 0,
                        gens: Optional[GeneratorSet] = None) -> IntegrabilityReport:
    gens = kepler_generators(cfg) if gens is None else gens
    rng = np.random.default_rng(seed)
    pts = random_bound_points(cfg, points, rng)
    worst = max(max_residual(gens, pt) for pt in pts)
    order = convergence_order(gens, pts[0])
    return IntegrabilityReport(worst, verdict(worst), seed, points, order)


# -- skew products ----------------------------------------------------------------------


def apply_generator(gen: Generator, state: SkewState, t: float, cfg: FieldConfig, tol: float = DEFAULT_TOL):
    """Flow a SkewState along one generator; also returns the per-step samples."""
    flow = skew_flow(gen, state.pt, t, tol, cfg=cfg)
    R = su2_to_so3(flow.final_rotor)
    return SkewState(flow.final_point, R @ state.s), flow


def commutation_defect(gens: GeneratorSet, state: SkewState, j: int, k: int, t: float, s: float,
                       cfg: FieldConfig, tol: float = DEFAULT_TOL) -> float:
    """Distance between Y_j^t Y_k^s and Y_k^s Y_j^t applied to ``state``."""
    a, _ = apply_generator(gens[k], state, s, cfg, tol)
    a, _ = apply_generator(gens[j], a, t, cfg, tol)
    b, _ = apply_generator(gens[j], state, t, cfg, tol)
    b, _ = apply_generator(gens[k], b, s, cfg, tol)
    dx = np.linalg.norm(a.pt.x - b.pt.x) / np.linalg.norm(state.pt.x)
    dp = np.linalg.norm(a.pt.p - b.pt.p) / np.linalg.norm(state.pt.p)
    return float(max(dx, dp, np.linalg.norm(a.s - b.s)))


def spin_at_latitude(n, theta: float, azimuth: float) -> np.ndarray:
    n = np.asarray(n, float) / np.linalg.norm(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return math.cos(theta) * n + math.sin(theta) * (math.cos(azimuth) * e1 + math.sin(azimuth) * e2)


@dataclass(frozen=True)
class BundleReport:
    theta: float
    max_deviation: float
    max_return_distance: float
    loops: int
    seed: int
    threshold: float = BUNDLE_THRESHOLD
    words: tuple = field(default=(), repr=False)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.threshold


def _latitudes(flow, s_start):
    out = []
    for q, p, x in zip(flow.rotors, flow.p, flow.x):
        from .rotor import SpinRotor

        s = su2_to_so3(SpinRotor(q)) @ s_start
        out.append(kepler.latitude(s, np.cross(x, p)))
    return np.array(out)


def check_bundle_geometry(
    E: float,
    L: float,
    theta: float,
    cfg: FieldConfig,
    n_loops: int = 20,
    *,
    seed: int = 0,
    gens: Optional[GeneratorSet] = None,
    word_length: int = 3,
    tol: float = DEFAULT_TOL,
) -> BundleReport:
    """Transport spins seeded at latitude ``theta`` around random closed words in the generators.

    Each loop is a random word followed by the inverse segments in shuffled
    order; commuting flows bring it back to the base point.  The report holds
    the largest latitude deviation seen at any integration step.
    """
    if not 0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    gens = kepler_generators(cfg) if gens is None else gens
    rng = np.random.default_rng(seed)
    T_r = kepler.radial_period(E, L, cfg)
    spans = [T_r, math.pi, math.pi]
    worst, worst_return, words = 0.0, 0.0, []
    for _ in range(n_loops):
        base = kepler.torus_point(
            E, L, cfg,
            phase=rng.uniform(0, 1),
            node=rng.uniform(0, 2 * math.pi),
            inclination=math.acos(rng.uniform(-0.95, 0.95)),
            periapsis=rng.uniform(0, 2 * math.pi),
            tol=tol,
        )
        n0 = base.angular_momentum
        state = SkewState(base, spin_at_latitude(n0, theta, rng.uniform(0, 2 * math.pi)))
        word = [(int(j), float(rng.uniform(-1, 1) * spans[j])) for j in rng.integers(0, len(gens), word_length)]
        closing = [(j, -t) for j, t in word]
        rng.shuffle(closing)
        word = word + closing
        words.append(tuple(word))
        for j, t in word:
            s_start = state.s
            state, flow = apply_generator(gens[j], state, t, cfg, tol)
            worst = max(worst, float(np.max(np.abs(_latitudes(flow, s_start) - theta))))
        d = np.linalg.norm(state.pt.x - base.x) / np.linalg.norm(base.x) + np.linalg.norm(
            state.pt.p - base.p) / np.linalg.norm(base.p)
        worst_return = max(worst_return, float(d))
    return BundleReport(theta, worst, worst_return, n_loops, seed, words=tuple(words))
