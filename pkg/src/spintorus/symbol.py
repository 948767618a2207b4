"""Dirac principal symbol, its eigenvalue Hamiltonians and the spin precession field.

Units default to natural units (hbar = c = m = 1) with the Coulomb coupling
e^2 = alpha.  Every constant lives on :class:`FieldConfig`, so SI-style runs
only need a different config.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SingularityError

ALPHA_FS = 1 / 137.035999

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
_Z2 = np.zeros((2, 2), dtype=complex)
DIRAC_ALPHA = np.array([np.block([[_Z2, s], [s, _Z2]]) for s in SIGMA])
DIRAC_BETA = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)

_FD_EPS = np.finfo(float).eps ** (1 / 3)

ScalarField = Callable[[np.ndarray], float]
VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CentralPotential:
    """Radial potential energy V(r) = e*phi(r) with its derivative dV/dr."""

    kind: str
    energy: Callable[[float], float]
    slope: Callable[[float], float]
    singular: bool = False
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FieldConfig:
    """Electromagnetic potentials plus the physical constants of a run.

    ``jac_A(x)[i, k]`` is dA_k/dx_i.  Missing gradients fall back to central
    differences.  ``central`` is set by the factory functions for spherically
    symmetric electrostatic systems and unlocks fast paths downstream.
    """

    phi: Optional[ScalarField] = None
    A: Optional[VectorField] = None
    grad_phi: Optional[VectorField] = None
    jac_A: Optional[Callable[[np.ndarray], np.ndarray]] = None
    charge: float = math.sqrt(ALPHA_FS)
    mass: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    central: Optional[CentralPotential] = None
    r_guard: float = 1e-8
    name: str = "custom"

    def __post_init__(self):
        for attr in ("mass", "c", "hbar"):
            value = getattr(self, attr)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{attr} must be a positive finite number, got {value!r}")

    @property
    def rest_energy(self) -> float:
        return self.mass * self.c**2

    @property
    def coupling(self) -> float:
        """Dimensionless coupling e^2/(hbar c)."""
        return self.charge**2 / (self.hbar * self.c)

    @property
    def magnetic(self) -> bool:
        return self.A is not None

    def _guard(self, x: np.ndarray) -> None:
        if self.central is not None and self.central.singular:
            if math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) < self.r_guard:
                raise SingularityError(f"potential is singular at x = {x}")

    def potential_energy(self, x) -> float:
        """e*phi(x)."""
        x = np.asarray(x, dtype=float)
        self._guard(x)
        if self.central is not None:
            return self.central.energy(float(np.linalg.norm(x)))
        if self.phi is None:
            return 0.0
        value = self.charge * float(self.phi(x))
        if not math.isfinite(value):
            raise SingularityError(f"potential is not finite at x = {x}")
        return value

    def scalar_potential(self, x) -> float:
        return self.potential_energy(x) / self.charge if self.charge else 0.0

    def potential_gradient(self, x) -> np.ndarray:
        """Gradient of e*phi, i.e. -e*E."""
        x = np.asarray(x, dtype=float)
        self._guard(x)
        if self.central is not None:
            r = float(np.linalg.norm(x))
            if r == 0.0:
                return np.zeros(3)
            return self.central.slope(r) * x / r
        if self.grad_phi is not None:
            return self.charge * np.asarray(self.grad_phi(x), dtype=float)
        if self.phi is None:
            return np.zeros(3)
        return self.charge * _central_gradient(self.phi, x)

    def e_field(self, x) -> np.ndarray:
        if self.charge == 0:
            return np.zeros(3)
        return -self.potential_gradient(x) / self.charge

    def vector_potential(self, x) -> np.ndarray:
        if self.A is None:
            return np.zeros(3)
        return np.asarray(self.A(np.asarray(x, dtype=float)), dtype=float)

    def vector_potential_jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.A is None:
            return np.zeros((3, 3))
        if self.jac_A is not None:
            return np.asarray(self.jac_A(x), dtype=float)
        return _central_jacobian(self.A, x)

    def b_field(self, x) -> np.ndarray:
        if self.A is None:
            return np.zeros(3)
        J = self.vector_potential_jacobian(x)
        return np.array([J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]])

    def check_fields(self, x, rtol: float = 1e-6) -> bool:
        """Compare supplied analytic gradients with central differences at ``x``."""
        x = np.asarray(x, dtype=float)
        ok = True
        if self.grad_phi is not None and self.phi is not None:
            fd = _central_gradient(self.phi, x)
            ok &= _close(fd, np.asarray(self.grad_phi(x), dtype=float), rtol)
        if self.jac_A is not None and self.A is not None:
            fd = _central_jacobian(self.A, x)
            ok &= _close(fd, np.asarray(self.jac_A(x), dtype=float), rtol)
        return bool(ok)


def _close(a, b, rtol):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return np.max(np.abs(a - b)) <= rtol * scale


def _central_gradient(f: ScalarField, x: np.ndarray) -> np.ndarray:
    h = _FD_EPS * max(1.0, float(np.linalg.norm(x)))
    g = np.empty(3)
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h
        g[i] = (f(x + dx) - f(x - dx)) / (2 * h)
    return g


def _central_jacobian(F: VectorField, x: np.ndarray) -> np.ndarray:
    h = _FD_EPS * max(1.0, float(np.linalg.norm(x)))
    J = np.empty((3, 3))
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h
        J[i] = (np.asarray(F(x + dx)) - np.asarray(F(x - dx))) / (2 * h)
    return J


# -- system factories ---------------------------------------------------------


def coulomb(alpha: float = ALPHA_FS, *, mass: float = 1.0, c: float = 1.0, hbar: float = 1.0) -> FieldConfig:
    """Attractive Coulomb field with e*phi = -e^2/r and e^2 = alpha*hbar*c."""
    kappa = alpha * hbar * c
    pot = CentralPotential(
        kind="coulomb",
        energy=lambda r: -kappa / r,
        slope=lambda r: kappa / (r * r),
        singular=True,
        params={"kappa": kappa},
    )
    e = math.sqrt(kappa)
    return FieldConfig(
        phi=lambda x: -e / np.linalg.norm(x),
        charge=e,
        mass=mass,
        c=c,
        hbar=hbar,
        central=pot,
        name="coulomb",
    )


def harmonic(k: float = 1.0, *, charge: float = math.sqrt(ALPHA_FS), mass: float = 1.0,
             c: float = 1.0, hbar: float = 1.0) -> FieldConfig:
    """Isotropic oscillator e*phi = k r^2 / 2."""
    pot = CentralPotential(
        kind="harmonic",
        energy=lambda r: 0.5 * k * r * r,
        slope=lambda r: k * r,
        params={"k": k},
    )
    return FieldConfig(
        phi=lambda x: 0.5 * k * float(np.dot(x, x)) / charge,
        charge=charge,
        mass=mass,
        c=c,
        hbar=hbar,
        central=pot,
        name="harmonic",
    )


def polynomial(coefficients: dict, *, charge: float = math.sqrt(ALPHA_FS), mass: float = 1.0,
               c: float = 1.0, hbar: float = 1.0) -> FieldConfig:
    """Central potential e*phi = sum_k coefficients[k] * r**k (integer k, negative allowed)."""
    coeffs = {int(k): float(v) for k, v in coefficients.items() if v != 0}
    if not coeffs:
        return free_particle(charge=charge, mass=mass, c=c, hbar=hbar)

    def energy(r):
        return sum(a * r**k for k, a in coeffs.items())

    def slope(r):
        return sum(k * a * r ** (k - 1) for k, a in coeffs.items() if k != 0)

    pot = CentralPotential(
        kind="polynomial",
        energy=energy,
        slope=slope,
        singular=any(k < 0 for k in coeffs),
        params={"coefficients": coeffs},
    )
    return FieldConfig(
        phi=lambda x: energy(float(np.linalg.norm(x))) / charge,
        charge=charge,
        mass=mass,
        c=c,
        hbar=hbar,
        central=pot,
        name="polynomial",
    )


def free_particle(*, charge: float = math.sqrt(ALPHA_FS), mass: float = 1.0, c: float = 1.0,
                  hbar: float = 1.0) -> FieldConfig:
    pot = CentralPotential(kind="free", energy=lambda r: 0.0, slope=lambda r: 0.0)
    return FieldConfig(charge=charge, mass=mass, c=c, hbar=hbar, central=pot, name="free")


# -- phase space ----------------------------------------------------------------


@dataclass(frozen=True)
class PhasePoint:
    p: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(3))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))

    @property
    def angular_momentum(self) -> np.ndarray:
        return np.cross(self.x, self.p)


@dataclass(frozen=True)
class EigenFrame:
    h_plus: float
    h_minus: float
    v_plus: np.ndarray
    v_minus: np.ndarray

    @property
    def projector_plus(self) -> np.ndarray:
        return self.v_plus @ self.v_plus.conj().T

    @property
    def projector_minus(self) -> np.ndarray:
        return self.v_minus @ self.v_minus.conj().T


def kinetic_momentum(pt: PhasePoint, cfg: FieldConfig) -> np.ndarray:
    """p - (e/c) A(x)."""
    if cfg.A is None:
        return pt.p.copy()
    return pt.p - (cfg.charge / cfg.c) * cfg.vector_potential(pt.x)


def kinetic_energy(pt: PhasePoint, cfg: FieldConfig) -> float:
    """epsilon = sqrt((c p - e A)^2 + m^2 c^4), always >= m c^2."""
    pi = kinetic_momentum(pt, cfg)
    return math.hypot(cfg.c * float(np.linalg.norm(pi)), cfg.rest_energy)


def dirac_symbol(pt: PhasePoint, cfg: FieldConfig) -> np.ndarray:
    """H_D(p, x) = c alpha.(p - e A/c) + beta m c^2 + e phi, standard representation."""
    V = cfg.potential_energy(pt.x)
    pi = kinetic_momentum(pt, cfg)
    H = cfg.c * np.tensordot(pi, DIRAC_ALPHA, axes=1) + cfg.rest_energy * DIRAC_BETA
    H = H + V * np.eye(4)
    return 0.5 * (H + H.conj().T)


def classical_hamiltonians(pt: PhasePoint, cfg: FieldConfig) -> tuple[float, float]:
    V = cfg.potential_energy(pt.x)
    eps = kinetic_energy(pt, cfg)
    return V + eps, V - eps


def eigen_split(pt: PhasePoint, cfg: FieldConfig) -> EigenFrame:
    """Orthonormal eigenframes of the Dirac symbol.

    The gauge is fixed by projecting the standard basis vectors (e1, e2 for the
    positive branch, e3, e4 for the negative one) and orthonormalising; the
    relevant diagonal block of each projector is at least 1/2, so the seeds
    never degenerate.
    """
    H = dirac_symbol(pt, cfg)
    h_plus, h_minus = classical_hamiltonians(pt, cfg)
    gap = h_plus - h_minus
    P_plus = (H - h_minus * np.eye(4)) / gap
    P_minus = (h_plus * np.eye(4) - H) / gap
    v_plus = _orthonormal_columns(P_plus[:, :2])
    v_minus = _orthonormal_columns(P_minus[:, 2:])
    return EigenFrame(h_plus, h_minus, v_plus, v_minus)


def _orthonormal_columns(M: np.ndarray) -> np.ndarray:
    a = M[:, 0] / np.linalg.norm(M[:, 0])
    b = M[:, 1] - np.vdot(a, M[:, 1]) * a
    b /= np.linalg.norm(b)
    return np.column_stack([a, b])


def precession_field(pt: PhasePoint, cfg: FieldConfig) -> np.ndarray:
    """Thomas precession field driving ds/dt = C x s on the positive branch."""
    pi = kinetic_momentum(pt, cfg)
    eps = kinetic_energy(pt, cfg)
    mc2 = cfg.rest_energy
    e, c = cfg.charge, cfg.c
    # e * E = -grad(e phi); avoids dividing by the charge
    eE = -cfg.potential_gradient(pt.x)
    C = (c * c / (eps * (eps + mc2))) * np.cross(pi, eE)
    if cfg.A is not None:
        C = C - (e * c / eps) * cfg.b_field(pt.x)
    return C
