"""Independent reference computations used to freeze expected values.

Nothing here imports the package under test: each quantity is evaluated
from its textbook closed form with plain math, so agreement with the
library is a genuine cross-check.
"""
import math

import numpy as np
from scipy import integrate

HBAR = 6.62607015e-34 / (2 * math.pi)
KB = 1.380649e-23
C = 299792458.0
EPS0 = 8.8541878128e-12
H = 6.62607015e-34


def sphere_mass(r, rho):
    return 4.0 / 3.0 * math.pi * r**3 * rho


def cm_polarizability(r, n):
    return 4 * math.pi * EPS0 * r**3 * (n * n - 1) / (n * n + 2)


def epstein_rate(p, T, m_gas, r, m):
    return (8 / 3) * (1 + math.pi / 8) * p * math.pi * r * r / m * math.sqrt(2 * m_gas / (math.pi * KB * T))


def zpf(m, omega):
    return math.sqrt(HBAR / (2 * m * omega))


def occupation(T, omega):
    return KB * T / (HBAR * omega)


def cooperativity(g0, n_cav, kappa, gamma, n_th):
    return 4 * g0 * g0 * n_cav / (kappa * gamma * n_th)


def recoil_psd(alpha, intensity, lam):
    k = 2 * math.pi / lam
    sigma = 8 * math.pi / 3 * k**4 * (alpha / (4 * math.pi * EPS0)) ** 2
    return 0.4 * HBAR * k * sigma * intensity / C


def gaussian_peak_intensity(P, wx, wy):
    return 2 * P / (math.pi * wx * wy)


def photon_flux(P, lam):
    return P * lam / (H * C)


def lorentzian_integral(omega0, gamma, area):
    """Integral over f of the oscillator lineshape used by the fitter."""
    def s(f):
        w = 2 * math.pi * f
        return 4 * area * omega0**2 * gamma / ((w * w - omega0**2) ** 2 + gamma**2 * w * w)
    f0 = omega0 / (2 * math.pi)
    parts = [(0, f0 / 2), (f0 / 2, 2 * f0), (2 * f0, np.inf)]
    return sum(integrate.quad(s, a, b, limit=400, points=None if b == np.inf or a > f0 or b < f0 else [f0])[0]
               for a, b in parts)


def lattice_intensity(x, y, z, P, wx0, wy0, lam, zf, rho, first_site, surface=0.0):
    """Surface-locked standing-wave intensity, written out from scratch."""
    k = 2 * np.pi / lam
    theta = 2 * k * (z - surface) - 2 * k * first_site
    zt = z - np.sin(theta) / (2 * k) - zf
    zrx, zry = np.pi * wx0**2 / lam, np.pi * wy0**2 / lam
    wx = wx0 * np.sqrt(1 + (zt / zrx) ** 2)
    wy = wy0 * np.sqrt(1 + (zt / zry) ** 2)
    env = 2 * P / (np.pi * wx * wy) * np.exp(-2 * x**2 / wx**2 - 2 * y**2 / wy**2)
    return env * (1 + rho**2 + 2 * rho * np.cos(theta))


def boltzmann_variances(energy, center, half_widths, T, n=81):
    """<(r - center)^2> per axis under exp(-U/kT) by tensor-product quadrature."""
    axes = [np.linspace(c - h, c + h, n) for c, h in zip(center, half_widths)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    U = energy(X, Y, Z)
    w = np.exp(-(U - U.min()) / (KB * T))
    norm = w.sum()
    return np.array([
        (w * (X - center[0]) ** 2).sum() / norm,
        (w * (Y - center[1]) ** 2).sum() / norm,
        (w * (Z - center[2]) ** 2).sum() / norm,
    ])
