"""Cavity phase transduction, balanced homodyne detection and the imprecision budget.

The cavity is driven on resonance and responds adiabatically (kappa is five
orders of magnitude above the mechanical frequencies). A resonance shift
``dw`` displaces the reflected field along the phase quadrature by an
effective phase ``4 (kappa_ex/kappa) dw / kappa``: ``4 dw / kappa`` for a
fully overcoupled port and ``2 dw / kappa`` for the impedance-matched cavity
of the default configuration.

Homodyne records are normalized so that the shot-noise floor has unit
one-sided PSD.
"""
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

from . import fields, rng


@dataclass(frozen=True)
class ProbeSpec:
    input_power: float
    wavelength: float = 1538.72e-9
    on_resonance: bool = True

    def __post_init__(self):
        if not self.input_power >= 0:
            raise ValueError("probe power must be >= 0")

    @property
    def photon_flux(self):
        return photon_flux(self.input_power, self.wavelength)


@dataclass(frozen=True)
class DetectionChain:
    eta_cavity: float = 0.32
    eta_path: float = 0.28125

    def __post_init__(self):
        for name in ("eta_cavity", "eta_path"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")

    @property
    def eta_total(self):
        return detection_efficiency(self)


@dataclass
class PhaseSeries:
    dt: float
    phase: np.ndarray
    gradient: np.ndarray
    phase_gain: float
    mode: str = "full"


@dataclass
class HomodyneRecord:
    dt: float
    samples: np.ndarray
    transduction_gain: float
    seed: int = 0

    def __len__(self):
        return len(self.samples)


def photon_flux(power, wavelength):
    return power * wavelength / (const.h * const.c)


def detection_efficiency(chain: DetectionChain) -> float:
    return chain.eta_cavity * chain.eta_path


def phase_gain(cavity: fields.CavityModeSpec):
    """Effective quadrature phase per unit angular resonance shift [rad / (rad/s)]."""
    return 4.0 * cavity.coupling_ratio / cavity.kappa


def transduce(traj, model, mode="full"):
    """Map a trajectory onto the cavity phase quadrature.

    ``mode="full"`` propagates the exact position dependence of the shift
    (and therefore harmonics); ``mode="linear"`` keeps only the gradient at
    the trajectory origin.
    """
    origin = np.asarray(traj.origin, dtype=float)
    gain = phase_gain(model.cavity_mode)
    G = fields.coupling_gradient(model, origin)
    if mode == "full":
        shift = fields.cavity_shift(model, traj.positions) - fields.cavity_shift(model, origin)
    elif mode == "linear":
        shift = (traj.positions - origin) @ G
    else:
        raise ValueError(f"unknown transduction mode {mode!r}")
    return PhaseSeries(traj.dt, gain * shift, G, gain, mode)


def detect(phase, probe: ProbeSpec, chain: DetectionChain, seed, tone=None):
    """Shot-noise limited homodyne record of ``phase`` (a :class:`PhaseSeries`).

    ``tone`` is an optional ``(frequency_hz, amplitude)`` sinusoid added to
    the output in shot-noise units, standing in for mechanical pickup of the
    cavity mount.
    """
    if not probe.input_power > 0:
        raise ValueError("probe power must be > 0")
    eta = detection_efficiency(chain)
    scale = np.sqrt(2.0 * eta * probe.photon_flux)
    n = len(phase.phase)
    white = rng.standard_normals(seed, rng.SHOT_NOISE_STREAM, 0, n) * np.sqrt(0.5 / phase.dt)
    samples = scale * phase.phase + white
    if tone is not None:
        f_tone, amp = tone
        samples = samples + amp * np.sin(2 * np.pi * f_tone * phase.dt * np.arange(n))
    gain = scale * phase.phase_gain * abs(phase.gradient[2])
    return HomodyneRecord(phase.dt, samples, gain, seed)


def imprecision_psd(probe: ProbeSpec, chain: DetectionChain, G, cavity: fields.CavityModeSpec):
    """One-sided displacement imprecision [m^2/Hz] of the shot-noise floor."""
    flux = detection_efficiency(chain) * probe.photon_flux
    if not G > 0 or not flux > 0:
        raise ValueError("imprecision needs G > 0 and a non-zero detected flux")
    return 1.0 / (phase_gain(cavity) * G) ** 2 / (2.0 * flux)


def intracavity_photons(probe: ProbeSpec, cavity: fields.CavityModeSpec):
    """Mean intracavity photon number on resonance, 4 kappa_ex Phi / kappa^2."""
    kappa_ex = cavity.coupling_ratio * cavity.kappa
    return 4.0 * kappa_ex * probe.photon_flux / cavity.kappa**2
