import math
from fractions import Fraction

import pytest

import oracles
from spintorus import quantize, symbol
from spintorus.errors import NoBoundStateError
from spintorus.quantize import Corrections, QuantumNumbers

ALPHA = symbol.ALPHA_FS
HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def spin_spectrum(cfg):
    return quantize.enumerate_spectrum(None, cfg, "ebk-spin", nmax=4)


@pytest.fixture(scope="module")
def old_spectrum(cfg):
    return quantize.enumerate_spectrum(None, cfg, "sommerfeld-old", nmax=4)


def test_quantized_action_arithmetic():
    assert quantize.quantized_actions(QuantumNumbers(2, 3), Corrections()) == (2.0, 3.0)
    k = quantize.KEPLER_CORRECTIONS
    assert quantize.quantized_actions(QuantumNumbers(0, 1, -HALF), k) == pytest.approx((0.0, 1.0), abs=1e-15)
    assert quantize.quantized_actions(QuantumNumbers(1, 0, HALF), k) == pytest.approx((2.0, 1.0), abs=1e-15)
    assert quantize.quantized_actions(QuantumNumbers(1, 0, HALF), k, hbar=2.0) == pytest.approx((4.0, 2.0))


@pytest.mark.parametrize("m_s, s", [(Fraction(3, 2), HALF), (Fraction(1, 3), Fraction(1))])
def test_quantum_number_validation(m_s, s):
    with pytest.raises(ValueError):
        QuantumNumbers(0, 1, m_s, s)


def test_admissibility_bound():
    for n_r in range(5):
        assert not quantize.admissible(QuantumNumbers(n_r, 0, -HALF), "ebk-spin")
        assert quantize.admissible(QuantumNumbers(n_r, 0, HALF), "ebk-spin")
        assert quantize.admissible(QuantumNumbers(n_r, 1, -HALF), "ebk-spin")
    assert not quantize.admissible(QuantumNumbers(-1, 2, HALF), "ebk-spin")
    assert not quantize.admissible(QuantumNumbers(0, 0, 0, 0), "sommerfeld-old")
    qns = quantize.quantum_numbers(4, "ebk-spin")
    assert all(not (q.l == 0 and q.m_s < 0) for q in qns)


def test_ground_state(cfg):
    E_ref = math.sqrt(1 - ALPHA**2)
    exact = quantize.solve_level(QuantumNumbers(0, 1, -HALF), cfg, "dirac-exact")
    assert exact.E == pytest.approx(E_ref, rel=1e-15)
    assert exact.E == pytest.approx(0.999973374, abs=5e-10)
    spin = quantize.solve_level(QuantumNumbers(0, 1, -HALF), cfg, "ebk-spin")
    assert spin.E == pytest.approx(E_ref, rel=1e-12)
    old = quantize.solve_level(QuantumNumbers(0, 1, 0, 0), cfg, "sommerfeld-old")
    assert abs(old.E - spin.E) <= 1e-10


def test_exact_energy_limits(cfg):
    assert quantize.exact_energy(0, 1, cfg) == pytest.approx(math.sqrt(1 - ALPHA**2), rel=1e-15)
    assert quantize.exact_energy(1, 2, symbol.coulomb(1e-12)) == pytest.approx(1.0, abs=1e-20)
    with pytest.raises(NoBoundStateError):
        quantize.exact_energy(0, 0.5 * ALPHA, cfg)


def test_closed_form_matches_independent_oracle(cfg):
    for n_r in range(4):
        for l in range(1, 4):
            assert quantize.exact_energy(n_r, l, cfg) == pytest.approx(oracles.sommerfeld_energy(n_r, l, ALPHA),
                                                                       rel=1e-15)


def test_quadrature_solve_matches_closed_form(cfg):
    worst = 0.0
    for n_r in range(7):
        for l in range(1, 7 - n_r):
            rec = quantize.solve_level(QuantumNumbers(n_r, l, 0, 0), cfg, "sommerfeld-old")
            worst = max(worst, abs(rec.E / quantize.exact_energy(n_r, l, cfg) - 1))
            assert rec.binding == pytest.approx(quantize.exact_binding(n_r, l, cfg), rel=1e-9)
    assert worst <= 1e-9


def test_nonrelativistic_bohr_limit(nr_cfg):
    kappa = nr_cfg.central.params["kappa"]
    for qn in [QuantumNumbers(0, 1, -HALF), QuantumNumbers(1, 1, HALF), QuantumNumbers(2, 2, -HALF)]:
        rec = quantize.solve_level(qn, nr_cfg, "ebk-spin")
        n = float(rec.principal)
        assert rec.binding == pytest.approx(oracles.bohr_binding(n, kappa), rel=1e-6)


def test_spectrum_matches_dirac_oracle(cfg, spin_spectrum):
    assert not spin_spectrum.failures
    worst = max(abs(lv.E / quantize.exact_energy(float(lv.I_r), float(lv.L), cfg) - 1)
                for lv in spin_spectrum.levels)
    assert worst <= 1e-9
    groups = [(g.E, g.degeneracy) for g in spin_spectrum.groups]
    ref = oracles.dirac_degeneracies(4, ALPHA)
    assert [d for _, d in groups] == [d for _, d in ref]
    for (E, _), (E_ref, _) in zip(groups, ref):
        assert E == pytest.approx(E_ref, rel=1e-8)


def test_dirac_states_helper(cfg):
    states = quantize.dirac_states(2, cfg)
    assert sum(s.degeneracy for s in states) == 10
    assert sum(s.degeneracy for s in states if s.n == 2) == 8


def test_first_excited_level_degeneracy(spin_spectrum):
    g = spin_spectrum.groups[1]
    assert {(lv.qn.n_r, lv.qn.l, lv.qn.m_s) for lv in g.levels} == {(0, 0, HALF), (1, 1, -HALF)}
    assert g.degeneracy == 4
    assert spin_spectrum.groups[0].degeneracy == 2


def test_scheme_equivalence(cfg, spin_spectrum, old_spectrum):
    old = {(lv.qn.n_r, lv.qn.l): lv for lv in old_spectrum.levels}
    paired = 0
    for lv in spin_spectrum.levels:
        partner = quantize.spin_shifted(lv.qn)
        assert quantize.nominal_actions(lv.qn, "ebk-spin") == quantize.nominal_actions(partner, "sommerfeld-old")
        if (partner.n_r, partner.l) in old:
            paired += 1
            assert abs(lv.E - old[(partner.n_r, partner.l)].E) <= 1e-10
    assert paired == len(spin_spectrum.levels)
    pairs = quantize.compare_spectra(old_spectrum, spin_spectrum)
    assert max(abs(p.delta) for p in pairs) <= 1e-10


def test_monotonicity(spin_spectrum):
    by = {(lv.qn.n_r, lv.qn.l, lv.qn.m_s): lv.E for lv in spin_spectrum.levels}
    for (n_r, l, m_s), E in by.items():
        if (n_r + 1, l, m_s) in by:
            assert by[(n_r + 1, l, m_s)] > E
        if (n_r, l + 1, m_s) in by:
            assert by[(n_r, l + 1, m_s)] > E


def test_measured_corrections_are_kepler_values(spin_spectrum):
    for lv in spin_spectrum.levels:
        assert lv.mu_r == 2 and lv.mu_L == 2
        assert lv.alpha_r == pytest.approx(2 * math.pi, abs=1e-6)
        assert lv.alpha_L == pytest.approx(2 * math.pi, abs=1e-6)


def test_spin_one_middle_levels_equal_spinless(cfg):
    spin1 = quantize.enumerate_spectrum(None, cfg, "ebk-spin", nmax=3, s=Fraction(1))
    noswitch = quantize.enumerate_spectrum(None, cfg, "ebk-noswitch", nmax=3)
    assert {lv.qn.m_s for lv in spin1.levels} == {-1, 0, 1}
    plain = {(lv.qn.n_r, lv.qn.l): lv.E for lv in noswitch.levels}
    middle = [lv for lv in spin1.levels if lv.qn.m_s == 0]
    assert middle
    for lv in middle:
        assert lv.E == pytest.approx(plain[(lv.qn.n_r, lv.qn.l)], rel=1e-12)


def test_energy_ceiling(cfg):
    E_max = quantize.exact_energy(0, 2, cfg) + 1e-12
    sp = quantize.enumerate_spectrum(E_max, cfg, "dirac-exact")
    assert all(lv.E <= E_max for lv in sp.levels)
    assert sum(g.degeneracy for g in sp.groups) == 10
    with pytest.raises(ValueError):
        quantize.enumerate_spectrum(1.5, cfg)


def test_parallel_sweep_is_identical(cfg):
    a = quantize.enumerate_spectrum(None, cfg, "ebk-spin", nmax=2)
    b = quantize.enumerate_spectrum(None, cfg, "ebk-spin", nmax=2, workers=4)
    assert [lv.as_dict() for lv in a.levels] == [lv.as_dict() for lv in b.levels]


def test_fall_to_center_is_reported(cfg):
    strong = symbol.coulomb(1.2)
    with pytest.raises(NoBoundStateError):
        quantize.solve_level(QuantumNumbers(0, 1, -HALF), strong, "ebk-spin")
