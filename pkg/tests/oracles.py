"""Closed-form reference values, written independently of the package internals."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp


def _gap(w, m, c):
    # m^2 c^4 - E^2 written through the binding energy w = mc^2 - E
    return w * (2 * m * c * c - w)


def coulomb_radial_action(w, L, kappa, m=1.0, c=1.0):
    """I_r = -sqrt(L^2 - kappa^2/c^2) + kappa E / (c sqrt(m^2 c^4 - E^2)) with E = mc^2 - w."""
    E = m * c * c - w
    return -math.sqrt(L * L - (kappa / c) ** 2) + kappa * E / (c * math.sqrt(_gap(w, m, c)))


def coulomb_apsidal_angle(L, kappa, c=1.0):
    return 2 * math.pi / math.sqrt(1 - (kappa / (c * L)) ** 2)


def coulomb_dI_dE(w, kappa, m=1.0, c=1.0):
    mc2 = m * c * c
    return (kappa / c) * mc2**2 / _gap(w, m, c) ** 1.5


def coulomb_turning_points(w, L, kappa, m=1.0, c=1.0):
    """Roots of (m^2c^4 - E^2) r^2 - 2 E kappa r + (c^2 L^2 - kappa^2) = 0."""
    E = m * c * c - w
    a = _gap(w, m, c)
    b = -2 * E * kappa
    cc = c * c * L * L - kappa * kappa
    disc = math.sqrt(b * b - 4 * a * cc)
    r_max = (-b + disc) / (2 * a)
    return cc / (a * r_max), r_max


def sommerfeld_energy(n_r, n_phi, alpha, mc2=1.0):
    """mc^2 (1 + alpha^2 / (n_r + sqrt(n_phi^2 - alpha^2))^2)^(-1/2)."""
    return mc2 / math.sqrt(1 + (alpha / (n_r + math.sqrt(n_phi**2 - alpha**2))) ** 2)


def dirac_level(n, j, alpha, mc2=1.0):
    """Textbook Dirac-Coulomb level with total angular momentum j."""
    k = j + 0.5
    return mc2 * (1 + (alpha / (n - k + math.sqrt(k * k - alpha * alpha))) ** 2) ** -0.5


def dirac_degeneracies(nmax, alpha):
    """Sorted list of (E, degeneracy) for the Dirac-Coulomb spectrum with n <= nmax.

    Levels with the same (n, j) are degenerate between the two parities.
    """
    levels = {}
    for n in range(1, nmax + 1):
        for l in range(n):
            for twoj in (2 * l - 1, 2 * l + 1):
                if twoj > 0:
                    key = (n, Fraction(twoj, 2))
                    levels[key] = levels.get(key, 0) + twoj + 1
    return sorted((dirac_level(n, float(j), alpha), g) for (n, j), g in levels.items())


def bohr_binding(n, kappa, m=1.0, hbar=1.0):
    return m * kappa**2 / (2 * hbar**2 * n**2)


def kepler_period(a, kappa, m=1.0):
    return 2 * math.pi * a**1.5 / math.sqrt(kappa / m)


def planar_spin_angle(w, L, kappa, m=1.0, c=1.0, rtol=1e-12):
    """Brute-force spin angle about n over one radial period, from a planar orbit.

    Integrates r, phi and the scalar precession rate |C| (C is parallel to L in a
    central field) from perihelion to perihelion.  Returns (theta, dphi, T).
    """
    mc2 = m * c * c
    r_min, _ = coulomb_turning_points(w, L, kappa, m, c)

    def rhs(t, y):
        r, pr = y[0], y[1]
        p2 = pr * pr + (L / r) ** 2
        eps = math.sqrt(c * c * p2 + mc2 * mc2)
        dr = c * c * pr / eps
        dpr = c * c * L * L / (eps * r**3) - kappa / r**2
        dphi = c * c * L / (eps * r * r)
        rate = c * c * (kappa / r**2) * L / (r * eps * (eps + mc2))
        return [dr, dpr, dphi, rate]

    def back_at_perihelion(t, y):
        return y[1]

    back_at_perihelion.direction = 1.0
    y0 = [r_min, 0.0, 0.0, 0.0]
    # march past the aphelion first so the terminal event is the returning perihelion
    half = solve_ivp(rhs, (0, 1e12), y0, rtol=rtol, atol=1e-14, events=_aphelion(), method="DOP853")
    y1 = half.y[:, -1]
    back_at_perihelion.terminal = True
    rest = solve_ivp(rhs, (half.t[-1], 1e12), y1, rtol=rtol, atol=1e-14, events=back_at_perihelion,
                     method="DOP853")
    y = rest.y[:, -1]
    return y[3], y[2], rest.t[-1]


def _aphelion():
    def ev(t, y):
        return y[1] if t > 0 else 1.0

    ev.terminal = True
    ev.direction = -1.0
    return ev


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return q
