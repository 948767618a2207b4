"""Quantization conditions with spin, closed-form oracles and spectrum enumeration."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from scipy.optimize import brentq

from . import kepler
from .errors import NoBoundStateError, SolverError, SpinTorusError
from .symbol import FieldConfig

SCHEMES = ("sommerfeld-old", "ebk-noswitch", "ebk-spin", "dirac-exact")
SPIN_SCHEMES = ("ebk-spin", "dirac-exact")

GROUP_TOL = 1e-13
PROBE_ACTION = 0.25
_TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class QuantumNumbers:
    n_r: int
    l: int
    m_s: Fraction = Fraction(-1, 2)
    s: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "m_s", Fraction(self.m_s))
        object.__setattr__(self, "s", Fraction(self.s))
        if (self.s * 2).denominator != 1 or self.s < 0:
            raise ValueError(f"spin must be a non-negative half-integer, got {self.s}")
        if abs(self.m_s) > self.s or (self.s - self.m_s).denominator != 1:
            raise ValueError(f"m_s = {self.m_s} is not in -s..s for s = {self.s}")

    def label(self) -> str:
        return f"(n_r={self.n_r}, l={self.l}, m_s={self.m_s})"


@dataclass(frozen=True)
class Corrections:
    mu_r: float = 0.0
    mu_L: float = 0.0
    alpha_r: float = 0.0
    alpha_L: float = 0.0


NO_CORRECTIONS = Corrections()
KEPLER_CORRECTIONS = Corrections(2, 2, _TWO_PI, _TWO_PI)


def scheme_corrections(scheme: str) -> Corrections:
    """Nominal correction terms of a scheme (the ebk-spin entry is only the solver's seed)."""
    if scheme == "sommerfeld-old":
        return NO_CORRECTIONS
    if scheme == "ebk-noswitch":
        return Corrections(2, 2, 0.0, 0.0)
    if scheme in SPIN_SCHEMES:
        return KEPLER_CORRECTIONS
    raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def quantized_actions(qn: QuantumNumbers, corrections: Corrections, hbar: float = 1.0) -> tuple[float, float]:
    """(I_r, L) = hbar (n + mu/4 + m_s alpha / 2pi) for the radial and angular cycles."""
    m_s = float(qn.m_s)
    I_r = hbar * (qn.n_r + corrections.mu_r / 4 + m_s * corrections.alpha_r / _TWO_PI)
    L = hbar * (qn.l + corrections.mu_L / 4 + m_s * corrections.alpha_L / _TWO_PI)
    return I_r, L


def nominal_actions(qn: QuantumNumbers, scheme: str) -> tuple[Fraction, Fraction]:
    """Exact rational (I_r, L)/hbar with the scheme's nominal corrections."""
    if scheme == "sommerfeld-old":
        return Fraction(qn.n_r), Fraction(qn.l)
    if scheme == "ebk-noswitch":
        return qn.n_r + Fraction(1, 2), qn.l + Fraction(1, 2)
    if scheme in SPIN_SCHEMES:
        return qn.n_r + Fraction(1, 2) + qn.m_s, qn.l + Fraction(1, 2) + qn.m_s
    raise ValueError(f"unknown scheme {scheme!r}")


def admissible(qn: QuantumNumbers, scheme: str) -> bool:
    """n_r >= 0, l >= 0 and a torus with I_r >= 0 and L > 0 (l >= 1 in the old theory)."""
    if qn.n_r < 0 or qn.l < 0:
        return False
    I_r, L = nominal_actions(qn, scheme)
    if scheme == "sommerfeld-old":
        return qn.l >= 1
    return I_r >= 0 and L > 0


def lz_states(qn: QuantumNumbers, scheme: str) -> int:
    """Number of L_z = hbar (m + m_s) values with |L_z| < L (the third, azimuthal action)."""
    _, L = nominal_actions(qn, scheme)
    shift = qn.m_s if scheme in SPIN_SCHEMES else Fraction(0)
    # m + shift ranges over the lattice shift + Z strictly inside (-L, L)
    lo = math.floor(-L - shift) + 1
    hi = math.ceil(L - shift) - 1
    return max(0, hi - lo + 1)


# -- closed forms ---------------------------------------------------------------------


def _exact_x(I_r: float, L: float, alpha: float) -> float:
    if not L > alpha:
        raise NoBoundStateError(f"L/hbar = {L!r} does not exceed the coupling {alpha!r}")
    if I_r < 0:
        raise NoBoundStateError(f"negative radial action {I_r!r}")
    return (alpha / (I_r + math.sqrt(L * L - alpha * alpha))) ** 2


def exact_energy(I_r_over_hbar: float, L_over_hbar: float, cfg: FieldConfig) -> float:
    """Sommerfeld fine-structure energy for the given actions (includes rest energy)."""
    x = _exact_x(I_r_over_hbar, L_over_hbar, cfg.coupling)
    return cfg.rest_energy / math.sqrt(1.0 + x)


def exact_binding(I_r_over_hbar: float, L_over_hbar: float, cfg: FieldConfig) -> float:
    """mc^2 - exact_energy, evaluated without cancellation."""
    x = _exact_x(I_r_over_hbar, L_over_hbar, cfg.coupling)
    root = math.sqrt(1.0 + x)
    return cfg.rest_energy * x / (root * (1.0 + root))


def dirac_energy(n: int, j: Fraction, cfg: FieldConfig) -> float:
    """Dirac-Coulomb level E(n, j) in its textbook form."""
    alpha = cfg.coupling
    k = float(j) + 0.5
    delta = k - math.sqrt(k * k - alpha * alpha)
    return cfg.rest_energy / math.sqrt(1.0 + (alpha / (n - delta)) ** 2)


@dataclass(frozen=True)
class DiracState:
    n: int
    l: int
    j: Fraction
    E: float

    @property
    def degeneracy(self) -> int:
        return int(2 * self.j + 1)


def dirac_states(nmax: int, cfg: FieldConfig) -> list[DiracState]:
    """All (n, l, j) subshells with n <= nmax."""
    out = []
    for n in range(1, nmax + 1):
        for l in range(n):
            for j in (Fraction(2 * l - 1, 2), Fraction(2 * l + 1, 2)):
                if j > 0:
                    out.append(DiracState(n, l, j, dirac_energy(n, j, cfg)))
    return out


# -- solving ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelRecord:
    qn: QuantumNumbers
    scheme: str
    E: float
    binding: float
    I_r: float
    L: float
    mu_r: float
    mu_L: float
    alpha_r: float
    alpha_L: float
    principal: Fraction
    lz_states: int
    iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "n_r": self.qn.n_r,
            "l": self.qn.l,
            "m_s": str(self.qn.m_s),
            "s": str(self.qn.s),
            "scheme": self.scheme,
            "principal": str(self.principal),
            "E": self.E,
            "binding": self.binding,
            "I_r": self.I_r,
            "L": self.L,
            "mu_r": self.mu_r,
            "mu_L": self.mu_L,
            "alpha_r": self.alpha_r,
            "alpha_L": self.alpha_L,
            "lz_states": self.lz_states,
        }


def solve_binding(I_r: float, L: float, cfg: FieldConfig) -> float:
    """Binding energy w = mc^2 - E at which the quadrature radial action equals ``I_r``.

    The bracket starts from the Bohr estimate and grows geometrically; the
    circular orbit closes it from above.
    """
    if cfg.central is None or cfg.central.kind != "coulomb":
        raise ValueError("level solving is implemented for the Coulomb problem")
    try:
        w_circ = kepler.circular_binding(L, cfg)
    except kepler.FallToCenterError as exc:
        raise NoBoundStateError(str(exc)) from exc
    if I_r < 0:
        raise NoBoundStateError(f"negative radial action {I_r!r}")
    if I_r == 0:
        return w_circ

    def f(w):
        return kepler.radial_action(None, L, cfg, binding=w) - I_r

    kappa = cfg.central.params["kappa"]
    w_bohr = cfg.mass * kappa**2 / (2 * (I_r + L) ** 2)
    lo = min(0.5 * w_bohr, 0.5 * w_circ)
    hi = w_circ
    for _ in range(200):
        if f(lo) > 0:
            break
        lo *= 0.5
    else:
        raise SolverError(f"no sign change below w = {lo!r} (target I_r = {I_r!r}, L = {L!r})")
    if f(hi) >= 0:
        raise SolverError(f"bracket [{lo!r}, {hi!r}] has no sign change for I_r = {I_r!r}, L = {L!r}")
    try:
        return brentq(f, lo, hi, xtol=1e-17 * w_bohr, rtol=1e-15, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise SolverError(f"brentq failed on [{lo!r}, {hi!r}]: {exc}") from exc


def torus_corrections(L: float, cfg: FieldConfig, *, binding: float, tol: float = kepler.CYCLE_TOL) -> Corrections:
    """Maslov indices and spin rotation angles measured numerically on the (w, L) torus."""
    c_r, c_l = kepler.build_cycles(None, L, cfg, binding=binding)
    tr = kepler.transport_around(c_r, cfg, tol)
    tl = kepler.transport_around(c_l, cfg, tol)
    E = cfg.rest_energy - binding
    return Corrections(
        mu_r=kepler.maslov_index(c_r, E, L, cfg, tol, transport=tr),
        mu_L=kepler.maslov_index(c_l, E, L, cfg, tol, transport=tl),
        alpha_r=kepler.spin_rotation_angle(c_r, E, L, cfg, tol, transport=tr).alpha,
        alpha_L=kepler.spin_rotation_angle(c_l, E, L, cfg, tol, transport=tl).alpha,
    )


def _probe_binding(I_r, L, cfg):
    # circular tori have no radial cycle; measure on the nearest libration instead
    hbar = cfg.hbar
    if I_r >= PROBE_ACTION * hbar:
        return None
    return solve_binding(PROBE_ACTION * hbar, L, cfg)


def solve_level(qn: QuantumNumbers, cfg: FieldConfig, scheme: str = "ebk-spin", *, tol: float = kepler.CYCLE_TOL,
                max_iter: int = 5) -> LevelRecord:
    """Energy of one quantized torus.

    ``ebk-spin`` measures Maslov indices and spin angles on the torus it
    converges to and re-solves until those corrections stop changing.
    ``dirac-exact`` evaluates the closed form instead of rooting the quadrature.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if not admissible(qn, scheme):
        raise NoBoundStateError(f"{qn.label()} is not admissible in scheme {scheme}")
    hbar = cfg.hbar
    principal = sum(nominal_actions(qn, scheme))
    lz = lz_states(qn, scheme)
    corr = scheme_corrections(scheme)

    if scheme == "dirac-exact":
        I_r, L = (float(v) for v in nominal_actions(qn, scheme))
        w = exact_binding(I_r, L, cfg)
        return LevelRecord(qn, scheme, cfg.rest_energy - w, w, I_r * hbar, L * hbar, corr.mu_r, corr.mu_L,
                           corr.alpha_r, corr.alpha_L, principal, lz)

    I_r, L = quantized_actions(qn, corr, hbar)
    w = solve_binding(max(I_r, 0.0), L, cfg)
    iterations = 0
    if scheme == "ebk-spin":
        for iterations in range(1, max_iter + 1):
            w_probe = _probe_binding(I_r, L, cfg)
            new = torus_corrections(L, cfg, binding=w if w_probe is None else w_probe, tol=tol)
            change = max(abs(new.mu_r - corr.mu_r), abs(new.mu_L - corr.mu_L),
                         abs(new.alpha_r - corr.alpha_r) / _TWO_PI, abs(new.alpha_L - corr.alpha_L) / _TWO_PI)
            corr = new
            I_r, L = quantized_actions(qn, corr, hbar)
            if I_r < 0 and I_r > -1e-9 * hbar:
                I_r = 0.0
            w = solve_binding(I_r, L, cfg)
            if change < 1e-9:
                break
        else:
            raise SolverError(f"spin corrections for {qn.label()} did not settle after {max_iter} passes")
    return LevelRecord(qn, scheme, cfg.rest_energy - w, w, I_r, L, corr.mu_r, corr.mu_L, corr.alpha_r,
                       corr.alpha_L, principal, lz, iterations)


# -- spectra ------------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelGroup:
    E: float
    levels: tuple

    @property
    def families(self) -> int:
        return len(self.levels)

    @property
    def degeneracy(self) -> int:
        return sum(lv.lz_states for lv in self.levels)


@dataclass(frozen=True)
class Spectrum:
    scheme: str
    levels: tuple
    groups: tuple
    failures: tuple = field(default_factory=tuple)


def quantum_numbers(nmax, scheme: str, s: Fraction = Fraction(1, 2)) -> list[QuantumNumbers]:
    """Admissible quantum numbers with nominal principal index (I_r + L)/hbar <= nmax."""
    nmax = Fraction(nmax)
    spins = [Fraction(0)] if scheme not in SPIN_SCHEMES else [-Fraction(s) + k for k in range(int(2 * s) + 1)]
    spin = Fraction(s) if scheme in SPIN_SCHEMES else Fraction(0)
    out = []
    bound = int(nmax) + 2
    for m_s in spins:
        for n_r in range(bound + 1):
            for l in range(bound + 1):
                qn = QuantumNumbers(n_r, l, m_s, spin)
                if admissible(qn, scheme) and sum(nominal_actions(qn, scheme)) <= nmax:
                    out.append(qn)
    return sorted(out, key=lambda q: (q.m_s, q.n_r, q.l))


def group_levels(levels, tol: float) -> tuple:
    ordered = sorted(levels, key=lambda lv: (lv.E, lv.qn.n_r, lv.qn.l, lv.qn.m_s))
    groups, current = [], []
    for lv in ordered:
        if current and lv.E - current[0].E > tol:
            groups.append(LevelGroup(current[0].E, tuple(current)))
            current = []
        current.append(lv)
    if current:
        groups.append(LevelGroup(current[0].E, tuple(current)))
    return tuple(groups)


def enumerate_spectrum(
    E_max: Optional[float],
    cfg: FieldConfig,
    scheme: str = "ebk-spin",
    *,
    nmax=None,
    s: Fraction = Fraction(1, 2),
    group_tol: Optional[float] = None,
    workers: int = 1,
    tol: float = kepler.CYCLE_TOL,
) -> Spectrum:
    """Solve every admissible level below ``E_max`` (or with principal index <= ``nmax``) and group by energy.

    Per-level failures are collected in ``failures`` rather than raised.
    """
    if E_max is None and nmax is None:
        raise ValueError("give E_max or nmax")
    if E_max is not None:
        if not E_max < cfg.rest_energy:
            raise ValueError("E_max must lie below the rest energy")
        # Bohr estimate of the largest principal index, padded for relativistic shifts
        kappa = cfg.central.params["kappa"]
        w_min = cfg.rest_energy - E_max
        bound = math.sqrt(cfg.mass * kappa**2 / (2 * w_min)) / cfg.hbar + 2
        nmax = bound if nmax is None else min(Fraction(nmax), bound)
    if not isinstance(nmax, (int, Fraction)):
        nmax = Fraction(math.floor(nmax))
    qns = quantum_numbers(nmax, scheme, s)

    def run(qn):
        try:
            return solve_level(qn, cfg, scheme, tol=tol), None
        except SpinTorusError as exc:
            return None, (qn, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, qns))
    else:
        results = [run(qn) for qn in qns]
    levels = [lv for lv, _ in results if lv is not None]
    if E_max is not None:
        levels = [lv for lv in levels if lv.E <= E_max]
    failures = tuple(f for _, f in results if f is not None)
    tol_abs = (GROUP_TOL if group_tol is None else group_tol) * cfg.rest_energy
    levels = sorted(levels, key=lambda lv: (lv.E, lv.qn.n_r, lv.qn.l, lv.qn.m_s))
    return Spectrum(scheme, tuple(levels), group_levels(levels, tol_abs), failures)


@dataclass(frozen=True)
class LevelPair:
    actions: tuple
    a: LevelRecord
    b: LevelRecord

    @property
    def delta(self) -> float:
        return self.b.E - self.a.E


def compare_spectra(a: Spectrum, b: Spectrum) -> list[LevelPair]:
    """Pair levels of two schemes whose nominal quantized actions coincide exactly."""
    index = {}
    for lv in a.levels:
        index.setdefault(nominal_actions(lv.qn, a.scheme), lv)
    pairs = []
    for lv in b.levels:
        key = nominal_actions(lv.qn, b.scheme)
        if key in index:
            pairs.append(LevelPair(key, index[key], lv))
    return pairs


def spin_shifted(qn: QuantumNumbers) -> QuantumNumbers:
    """Old-theory quantum numbers (n_r + 1/2 + m_s, l + 1/2 + m_s) carrying the same actions."""
    n_r = qn.n_r + Fraction(1, 2) + qn.m_s
    l = qn.l + Fraction(1, 2) + qn.m_s
    if n_r.denominator != 1 or l.denominator != 1:
        raise ValueError(f"{qn.label()} has no integer old-theory partner")
    return QuantumNumbers(int(n_r), int(l), Fraction(0), Fraction(0))
