import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spintorus import symbol
from spintorus.errors import SingularityError
from spintorus.symbol import PhasePoint

vec = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3).map(np.array)
far = vec.filter(lambda v: np.linalg.norm(v) > 0.1)


def random_points(rng, n):
    out = []
    for _ in range(n):
        x = rng.normal(size=3)
        x *= rng.uniform(0.2, 5) / np.linalg.norm(x)
        out.append(PhasePoint(rng.normal(size=3) * rng.uniform(0.01, 3), x))
    return out


def test_rest_frame_symbol():
    cfg = symbol.free_particle()
    H = symbol.dirac_symbol(PhasePoint(np.zeros(3), np.ones(3)), cfg)
    assert np.allclose(H, np.diag([1, 1, -1, -1]), atol=0)


def test_boosted_free_eigenvalues():
    cfg = symbol.free_particle(c=2.0, mass=1.5)
    p1 = 0.7
    H = symbol.dirac_symbol(PhasePoint([p1, 0, 0], [1, 0, 0]), cfg)
    ev = np.linalg.eigvalsh(H)
    e = math.sqrt((2.0 * p1) ** 2 + (1.5 * 4) ** 2)
    assert np.allclose(ev, [-e, -e, e, e], rtol=1e-14)


def test_hamiltonians_at_rest():
    assert symbol.classical_hamiltonians(PhasePoint(np.zeros(3), [1, 2, 3]), symbol.free_particle()) == (1.0, -1.0)


def test_coulomb_plug_in():
    cfg = symbol.coulomb()
    h_plus, _ = symbol.classical_hamiltonians(PhasePoint(np.zeros(3), [1, 0, 0]), cfg)
    assert h_plus == pytest.approx(1 - symbol.ALPHA_FS, rel=1e-15)


def test_coulomb_origin_is_singular():
    with pytest.raises(SingularityError):
        symbol.dirac_symbol(PhasePoint(np.ones(3), np.zeros(3)), symbol.coulomb())


@pytest.mark.parametrize("bad", [dict(mass=0.0), dict(c=-1.0), dict(hbar=0.0)])
def test_unit_validation(bad):
    with pytest.raises(ValueError):
        symbol.coulomb(**bad)


def test_generic_eigensolver_agreement():
    rng = np.random.default_rng(1)
    cfg = symbol.coulomb(0.2)
    for pt in random_points(rng, 1000):
        H = symbol.dirac_symbol(pt, cfg)
        assert np.allclose(H, H.conj().T, atol=0)
        ev = np.linalg.eigvalsh(H)
        h_plus, h_minus = symbol.classical_hamiltonians(pt, cfg)
        scale = max(abs(h_plus), abs(h_minus))
        assert abs(ev[0] - ev[1]) <= 1e-10 * scale and abs(ev[2] - ev[3]) <= 1e-10 * scale
        assert np.allclose(ev, [h_minus, h_minus, h_plus, h_plus], rtol=1e-10, atol=1e-12 * scale)
        eps = symbol.kinetic_energy(pt, cfg)
        assert h_plus - h_minus == pytest.approx(2 * eps, rel=1e-14)


def test_eigenframes_orthonormal_and_complete():
    rng = np.random.default_rng(2)
    cfg = symbol.harmonic(0.3)
    for pt in random_points(rng, 100):
        fr = symbol.eigen_split(pt, cfg)
        Vp, Vm = fr.v_plus, fr.v_minus
        assert np.allclose(Vp.conj().T @ Vp, np.eye(2), atol=1e-12)
        assert np.allclose(Vm.conj().T @ Vm, np.eye(2), atol=1e-12)
        assert np.allclose(Vp.conj().T @ Vm, 0, atol=1e-12)
        assert np.allclose(fr.projector_plus + fr.projector_minus, np.eye(4), atol=1e-12)
        P = fr.projector_plus
        assert np.allclose(P @ P, P, atol=1e-12)
        assert np.trace(P).real == pytest.approx(2)
        H = symbol.dirac_symbol(pt, cfg)
        assert np.linalg.norm(H @ Vp - fr.h_plus * Vp) <= 1e-10 * abs(fr.h_plus)
        assert np.linalg.norm(H @ Vm - fr.h_minus * Vm) <= 1e-10 * abs(fr.h_minus)


def test_rest_frame_projector():
    fr = symbol.eigen_split(PhasePoint(np.zeros(3), [1, 0, 0]), symbol.free_particle())
    assert np.allclose(fr.projector_plus, np.diag([1, 1, 0, 0]))
    assert np.allclose(fr.v_plus, np.eye(4)[:, :2])


def test_precession_vanishes_without_fields_or_momentum():
    pt = PhasePoint([0.3, -0.2, 0.5], [1, 2, 3])
    assert np.all(symbol.precession_field(pt, symbol.free_particle()) == 0)
    assert np.allclose(symbol.precession_field(PhasePoint(np.zeros(3), [1, 2, 3]), symbol.coulomb()), 0)


def test_coulomb_precession_magnitude():
    alpha, r, p = 0.1, 2.0, 0.4
    cfg = symbol.coulomb(alpha)
    pt = PhasePoint([0, p, 0], [r, 0, 0])
    eps = math.sqrt(p * p + 1)
    C = symbol.precession_field(pt, cfg)
    assert np.linalg.norm(C) == pytest.approx(alpha * p / (r * r * eps * (eps + 1)), rel=1e-13)
    assert np.allclose(C / np.linalg.norm(C), [0, 0, 1], atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(p=vec, x=far)
def test_precession_parallel_to_l(p, x):
    cfg = symbol.polynomial({-1: -0.3, 2: 0.05})
    pt = PhasePoint(p, x)
    L = pt.angular_momentum
    C = symbol.precession_field(pt, cfg)
    if np.linalg.norm(L) < 1e-6 or np.linalg.norm(C) == 0:
        return
    sin = np.linalg.norm(np.cross(C, L)) / (np.linalg.norm(C) * np.linalg.norm(L))
    assert sin <= 1e-10


def test_numerical_fields_match_analytic():
    cfg = symbol.coulomb(0.2)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.normal(size=3) * 2
        assert cfg.check_fields(x)


def test_polynomial_reproduces_coulomb():
    a, b = symbol.coulomb(0.2), symbol.polynomial({-1: -0.2})
    pt = PhasePoint([0.1, 0.2, -0.3], [1.0, -0.5, 0.7])
    assert symbol.classical_hamiltonians(pt, a) == pytest.approx(symbol.classical_hamiltonians(pt, b), rel=1e-15)
    assert np.allclose(symbol.precession_field(pt, a), symbol.precession_field(pt, b), rtol=1e-13)


def test_magnetic_precession_term():
    """On the axis of a uniform B (where A = 0) a particle at rest precesses at -(e c / mc^2) B."""
    B = 0.4
    cfg = symbol.FieldConfig(
        phi=lambda x: 0.0,
        A=lambda x: 0.5 * B * np.array([-x[1], x[0], 0.0]),
        charge=0.3,
    )
    C = symbol.precession_field(PhasePoint(np.zeros(3), [0.0, 0.0, 0.5]), cfg)
    assert np.allclose(C, [0, 0, -0.3 * B], rtol=1e-8)
