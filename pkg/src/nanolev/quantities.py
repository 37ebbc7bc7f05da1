"""Closed-form particle properties, bath rates and figures of merit.

Every power spectral density in this package is one-sided in ordinary
frequency, so that integrating it over ``f >= 0`` returns the variance.
Rates called ``gamma`` or ``kappa`` are angular (rad/s) unless a name ends
in ``_hz``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

HBAR = const.hbar
KB = const.k
C = const.c
EPS0 = const.epsilon_0

#: Mean mass of an air molecule [kg].
AIR_MOLECULE_MASS = 4.81e-26

#: Dipole-radiation geometry factor for recoil along a direction
#: perpendicular to the trap polarization.
RECOIL_GEOMETRY_FACTOR = 2.0 / 5.0


@dataclass(frozen=True)
class ParticleSpec:
    radius: float
    density: float = 1850.0
    refractive_index: float = 1.45

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"particle radius must be > 0, got {self.radius!r}")
        if not self.density > 0:
            raise ValueError(f"particle density must be > 0, got {self.density!r}")
        if not self.refractive_index > 1:
            raise ValueError(
                f"refractive index must be > 1, got {self.refractive_index!r}"
            )

    @property
    def mass(self):
        return particle_mass(self)

    @property
    def polarizability(self):
        return polarizability(self)


@dataclass(frozen=True)
class GasSpec:
    pressure: float
    temperature: float = 300.0
    molecular_mass: float = AIR_MOLECULE_MASS

    def __post_init__(self):
        if not self.pressure >= 0:
            raise ValueError(f"gas pressure must be >= 0, got {self.pressure!r}")
        if not self.temperature > 0:
            raise ValueError(
                f"gas temperature must be > 0, got {self.temperature!r}"
            )


@dataclass(frozen=True)
class MeritReport:
    """Derived scalars for one operating point.

    ``eta_min`` is clipped at 1; ``cooling_possible`` is False whenever the
    unclipped threshold exceeds unity.
    """

    z_zpf: float
    n_th: float
    C_q: float
    eta_min: float
    force_noise: float
    gamma_gas: float
    gamma_recoil_equiv: float
    g0: float = float("nan")
    cooling_possible: bool = False


def sphere_mass(radius, density):
    return 4.0 / 3.0 * np.pi * radius**3 * density


def particle_mass(spec: ParticleSpec) -> float:
    """Mass of a homogeneous sphere, (4/3) pi r^3 rho."""
    return sphere_mass(spec.radius, spec.density)


def rayleigh_polarizability(radius, refractive_index):
    """Clausius-Mossotti polarizability in SI units [F m^2]."""
    n2 = refractive_index**2
    return 4.0 * np.pi * EPS0 * radius**3 * (n2 - 1.0) / (n2 + 2.0)


def polarizability(spec: ParticleSpec) -> float:
    return rayleigh_polarizability(spec.radius, spec.refractive_index)


def gas_damping(gas: GasSpec, particle: ParticleSpec) -> float:
    """Epstein free-molecular damping rate [rad/s].

    Valid when the mean free path greatly exceeds the particle radius; this
    is not checked.
    """
    m = particle_mass(particle)
    thermal = np.sqrt(2.0 * gas.molecular_mass / (np.pi * KB * gas.temperature))
    return (
        8.0 / 3.0 * (1.0 + np.pi / 8.0)
        * gas.pressure * np.pi * particle.radius**2 / m
        * thermal
    )


def scattering_cross_section(alpha, wavelength):
    """Rayleigh scattering cross-section [m^2] for polarizability ``alpha``."""
    k = 2.0 * np.pi / wavelength
    return 8.0 * np.pi / 3.0 * k**4 * (alpha / (4.0 * np.pi * EPS0)) ** 2


def scattered_power(alpha, intensity, wavelength):
    return scattering_cross_section(alpha, wavelength) * intensity


def recoil_force_psd(scattered_power, wavelength):
    """One-sided recoil force PSD [N^2/Hz] from isotropic-ish dipole scattering."""
    if np.any(np.asarray(scattered_power) < 0):
        raise ValueError("scattered power must be >= 0")
    k = 2.0 * np.pi / wavelength
    return RECOIL_GEOMETRY_FACTOR * HBAR * k * scattered_power / C


def zpf(m, omega):
    """Zero-point fluctuation sqrt(hbar / (2 m omega)) [m]."""
    if not (m > 0 and omega > 0):
        raise ValueError(f"zpf needs m > 0 and omega > 0, got m={m!r}, omega={omega!r}")
    return np.sqrt(HBAR / (2.0 * m * omega))


def thermal_occupation(T, omega):
    # Rayleigh-Jeans limit; differs from the Bose factor by < 1e-7 at 300 K.
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega!r}")
    if T < 0:
        raise ValueError(f"temperature must be >= 0, got {T!r}")
    return KB * T / (HBAR * omega)


def cooperativity(g0, n_cav, kappa, gamma_m, n_th):
    """Quantum cooperativity 4 g0^2 n_cav / (kappa gamma_m n_th).

    Rates may be given all angular or all ordinary; the 2 pi factors cancel.
    """
    if not (kappa > 0 and gamma_m > 0 and n_th > 0):
        raise ValueError("kappa, gamma_m and n_th must all be > 0")
    return 4.0 * g0**2 * n_cav / (kappa * gamma_m * n_th)


def feedback_threshold(C_q):
    """Minimum detection efficiency (1 + 1/C_q)/9 for feedback ground-state cooling.

    The value is returned unclipped; anything above 1 means cooling is
    impossible at this cooperativity.
    """
    if not C_q > 0:
        raise ValueError(f"C_q must be > 0, got {C_q!r}")
    return (1.0 + 1.0 / C_q) / 9.0


def force_noise(T, m, gamma):
    """Thermal force noise amplitude sqrt(4 kB T m gamma) [N/sqrt(Hz)]."""
    if T < 0 or m < 0 or gamma < 0:
        raise ValueError("force_noise inputs must be >= 0")
    return np.sqrt(4.0 * KB * T * m * gamma)


def recoil_heating_rate(S_FF, m, omega):
    """Phonon heating rate S_FF z_zpf^2 / hbar^2 [1/s]."""
    return S_FF * zpf(m, omega) ** 2 / HBAR**2


def recoil_equivalent_damping(S_FF, m, omega, T):
    """Damping rate [rad/s] whose thermal bath at ``T`` heats like photon recoil."""
    return recoil_heating_rate(S_FF, m, omega) / thermal_occupation(T, omega)
