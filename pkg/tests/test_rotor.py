import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spintorus.rotor import SpinRotor, half_angle_track, qmul, rotor_rate, su2_to_so3

quat = st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4).filter(
    lambda v: np.linalg.norm(v) > 1e-3).map(np.array)


@settings(max_examples=200, deadline=None)
@given(a=quat, b=quat)
def test_product_matches_matrix_product(a, b):
    A, B = SpinRotor(a), SpinRotor(b)
    assert np.allclose((A * B).matrix(), A.matrix() @ B.matrix(), atol=1e-12)
    assert np.allclose(qmul(A.q, A.inverse().q), [1, 0, 0, 0], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(q=quat)
def test_rate_is_left_multiplication(q):
    C = np.array([0.3, -1.2, 0.7])
    q = q / np.linalg.norm(q)
    expected = -0.5 * qmul(np.r_[0.0, C], q)
    assert np.allclose(rotor_rate(C, q), expected, atol=1e-14)


def test_about_and_angle_extraction():
    axis = np.array([1.0, 2.0, 2.0]) / 3
    r = SpinRotor.about(axis, 1.1)
    assert r.angle_about(axis) == pytest.approx(1.1)
    R = su2_to_so3(r)
    assert np.allclose(R @ axis, axis)
    # right-handed: e_x about z goes to e_y
    assert np.allclose(su2_to_so3(SpinRotor.about([0, 0, 1], math.pi / 2)) @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    assert np.allclose(SpinRotor.about([0, 0, 1], 2 * math.pi).q, [-1, 0, 0, 0], atol=1e-15)


def test_half_angle_track_keeps_winding():
    axis = np.array([0, 0, 1.0])
    angles = np.linspace(0, 3.5 * math.pi, 200)
    qs = np.array([SpinRotor.about(axis, a).q for a in angles])
    track = half_angle_track(qs, axis)
    assert np.allclose(2 * track, angles, atol=1e-12)
