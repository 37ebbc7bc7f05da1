"""Thermal-noise displacement calibration and shot-noise referenced coupling.

A homodyne record is in shot-noise units: its white floor has unit PSD.
Each mechanical peak is converted to meters by demanding that its area
equal the equipartition variance ``kB T / (m W0^2)``. The same scale then
turns the unit floor into a displacement imprecision, which pins the
transduction gain and hence the coupling ``G`` once the detected photon flux
is known.
"""
from dataclasses import dataclass, field

import numpy as np

from . import quantities, readout, spectral
from .errors import FitFailed, FloorNotResolvable

AXES = ("x", "y", "z")


@dataclass
class CalibrationResult:
    """Per-axis calibration of one homodyne record.

    Dictionaries are keyed by axis name and hold only the axes whose peak
    was fitted.
    """

    meters_per_unit: dict
    G_extracted: dict
    g0_extracted: dict
    sensitivity: dict
    floor: float
    fits: dict = field(default_factory=dict)

    def axis(self, name):
        return {
            "meters_per_unit": self.meters_per_unit[name],
            "G": self.G_extracted[name],
            "g0": self.g0_extracted[name],
            "sensitivity": self.sensitivity[name],
            "omega0": self.fits[name].omega0,
        }


def thermal_calibrate(record, fit: spectral.LorentzianFit, T, m):
    """Displacement per signal unit from equipartition.

    Parameters
    ----------
    record : HomodyneRecord
        Only used for sanity checks; the fit carries the spectral content.
    fit : LorentzianFit
        Fit of the target mechanical peak of ``record``.
    T, m : float
        Bath temperature [K] and particle mass [kg].
    """
    if not fit.area > 0:
        raise FitFailed(f"negative area {fit.area!r} in peak fit", best_residual=np.nan)
    if not (T > 0 and m > 0 and fit.omega0 > 0):
        raise ValueError("thermal calibration needs T > 0, m > 0 and a positive peak frequency")
    variance = quantities.KB * T / (m * fit.omega0**2)
    return float(np.sqrt(variance / fit.area))


def default_floor_band(dt):
    nyquist = 0.5 / dt
    return (0.5 * nyquist, 0.95 * nyquist)


def measure_floor(record, segment_length=None, band=None):
    """White-floor level of the record PSD in signal units squared per Hz."""
    psd = spectral.welch(record.samples, record.dt, segment_length=segment_length)
    band = default_floor_band(record.dt) if band is None else band
    return spectral.floor_level(psd, *band)


def extract_G(record, calibrated_scale, probe, chain, cavity, floor=None, floor_band=None):
    """Coupling [rad/s per m] that reproduces the calibrated shot-noise floor.

    Inverts :func:`readout.imprecision_psd`: the floor in displacement units is
    ``c^2 S_unit`` and equals ``1 / (g_phase G)^2 / (2 eta Phi)``.
    """
    if floor is None:
        floor = measure_floor(record, band=floor_band)
    flux = readout.detection_efficiency(chain) * probe.photon_flux
    imprecision = calibrated_scale**2 * floor
    if not (np.isfinite(imprecision) and imprecision > 0 and np.isfinite(flux)):
        raise FloorNotResolvable(
            f"shot-noise floor not resolvable (floor={floor!r}, flux={flux!r})"
        )
    return float(1.0 / (readout.phase_gain(cavity) * np.sqrt(2.0 * flux * imprecision)))


def extract_g0(G, m, omega0):
    """Single-photon coupling zpf(m, omega0) * G [rad/s]."""
    if G < 0:
        raise ValueError(f"G must be >= 0, got {G!r}")
    return float(quantities.zpf(m, omega0) * G)


def sensitivity_report(record, calibration, axis="z", reference_power=None,
                       probe_power=None, reference_sensitivity=None):
    """Displacement sensitivity sqrt(c^2 S_floor) [m/sqrt(Hz)].

    With ``reference_power`` and ``probe_power`` also returns the
    per-photon improvement over a reference detector of sensitivity
    ``reference_sensitivity`` (defaults to the same sensitivity, i.e. the
    plain power ratio at equal floor). Imprecision scales as 1/P, so the
    factor is ``(S_ref P_ref) / (S P)``.
    """
    c = calibration.meters_per_unit[axis]
    sens = float(np.sqrt(c**2 * calibration.floor))
    if reference_power is None:
        return sens
    if probe_power is None or not probe_power > 0:
        raise ValueError("per-photon comparison needs the probe power")
    ref = sens if reference_sensitivity is None else reference_sensitivity
    factor = (ref**2 * reference_power) / (sens**2 * probe_power)
    return sens, float(factor)


def calibrate(record, probe, chain, cavity, T, m, bands, segment_length=None,
              floor_band=None):
    """Run the whole chain on one record.

    ``bands`` maps axis names to ``(f_lo, f_hi)`` fit windows around each
    mechanical peak; axes missing from it are skipped.
    """
    psd = spectral.welch(record.samples, record.dt, segment_length=segment_length)
    fb = default_floor_band(record.dt) if floor_band is None else floor_band
    floor = spectral.floor_level(psd, *fb)
    if not (np.isfinite(floor) and floor > 0):
        raise FloorNotResolvable(f"shot-noise floor not resolvable (floor={floor!r})")
    scales, Gs, g0s, sens, fits = {}, {}, {}, {}, {}
    for ax, band in bands.items():
        fit = spectral.fit_lorentzian(psd, band)
        c = thermal_calibrate(record, fit, T, m)
        G = extract_G(record, c, probe, chain, cavity, floor=floor)
        fits[ax] = fit
        scales[ax] = c
        Gs[ax] = G
        g0s[ax] = extract_g0(G, m, fit.omega0)
        sens[ax] = float(np.sqrt(c**2 * floor))
    return CalibrationResult(scales, Gs, g0s, sens, float(floor), fits)
