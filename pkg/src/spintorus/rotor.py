"""Unit quaternions standing in for SU(2) spin transporters.

A quaternion ``(w, x, y, z)`` represents the matrix ``w*1 + i*(x sx + y sy + z sz)``.
With this identification the product below is exactly the matrix product,
a constant precession field ``(0, 0, w)`` acting for time ``T`` gives
``(cos(wT/2), 0, 0, -sin(wT/2))``, and the rotation it induces on a classical
spin is the right-handed rotation by ``wT`` about z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .symbol import SIGMA


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion product matching the SU(2) matrix product d(a) @ d(b)."""
    w1, v1 = a[0], a[1:]
    w2, v2 = b[0], b[1:]
    out = np.empty(4)
    out[0] = w1 * w2 - v1 @ v2
    out[1:] = w1 * v2 + w2 * v1 - np.cross(v1, v2)
    return out


def rotor_rate(C, q) -> tuple:
    """dq/dt = -(1/2) (0, C) * q, written out on floats for speed."""
    cx, cy, cz = C
    w, x, y, z = q
    return (
        0.5 * (cx * x + cy * y + cz * z),
        -0.5 * w * cx + 0.5 * (cy * z - cz * y),
        -0.5 * w * cy + 0.5 * (cz * x - cx * z),
        -0.5 * w * cz + 0.5 * (cx * y - cy * x),
    )


@dataclass(frozen=True)
class SpinRotor:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(4)
        object.__setattr__(self, "q", q / np.linalg.norm(q))

    @classmethod
    def identity(cls) -> "SpinRotor":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def about(cls, axis, angle: float) -> "SpinRotor":
        """Rotor turning a classical spin by ``angle`` (right-handed) about ``axis``."""
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(np.concatenate([[math.cos(angle / 2)], -math.sin(angle / 2) * n]))

    def __mul__(self, other: "SpinRotor") -> "SpinRotor":
        return SpinRotor(qmul(self.q, other.q))

    def __neg__(self) -> "SpinRotor":
        return SpinRotor(-self.q)

    def inverse(self) -> "SpinRotor":
        return SpinRotor(self.q * np.array([1.0, -1.0, -1.0, -1.0]))

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.q
        return w * np.eye(2, dtype=complex) + 1j * (x * SIGMA[0] + y * SIGMA[1] + z * SIGMA[2])

    def rotation(self) -> np.ndarray:
        return su2_to_so3(self)

    def angle_about(self, axis) -> float:
        """Signed rotation angle about ``axis`` in (-2pi, 2pi], assuming the rotor is about that axis."""
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        return 2.0 * math.atan2(-float(self.q[1:] @ n), float(self.q[0]))


def su2_to_so3(d: SpinRotor) -> np.ndarray:
    """Covering map: R with d (sigma.s) d^dagger = sigma.(R s)."""
    # the standard quaternion of this rotor is (w, -x, -y, -z)
    w, x, y, z = d.q
    x, y, z = -x, -y, -z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def half_angle_track(qs: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Continuously unwrapped half rotation angle about ``axis`` along a rotor sequence.

    ``qs`` has shape (N, 4).  Unwrapping uses the sample-to-sample continuity of
    the half angle, so winding beyond 2pi (rotor -1) stays visible.
    """
    n = axis / np.linalg.norm(axis)
    raw = np.arctan2(-(qs[:, 1:] @ n), qs[:, 0])
    return np.unwrap(raw)
