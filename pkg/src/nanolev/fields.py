"""Analytic optical fields: tweezer, surface standing wave and evanescent cavity mode.

Coordinates are absolute lab-frame positions in meters. The tweezer beam
propagates along -z towards a reflecting slab whose top surface lies at
``reflector.surface_z``; the particle lives at ``z > surface_z``.

The standing wave is modeled as the tweezer intensity multiplied by the
two-beam interference factor ``1 + rho^2 + 2 rho cos(2 k d - phi)`` with
``d = z - surface_z``. The axial envelope is sampled through the smooth,
monotone map ``z -> z - sin(2 k d - phi) / (2 k)``, which coincides with
``z`` at every node and antinode and has zero slope at the antinodes. As a
result the lattice sites sit exactly on the antinodes no matter where the
focus is, i.e. the trap is locked to the surface.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from numba.extending import register_jitable


@dataclass(frozen=True)
class TweezerSpec:
    power: float
    wavelength: float = 1064e-9
    numerical_aperture: float = 0.95
    waist_x: float = 0.558e-6
    waist_y: float = 0.685e-6
    focus_position: tuple = (0.0, 0.0, 380e-9)

    def __post_init__(self):
        if not 0 < self.numerical_aperture < 1:
            raise ValueError("numerical aperture must lie in (0, 1)")
        if not (self.waist_x > 0 and self.waist_y > 0):
            raise ValueError("beam waists must be > 0")
        if not self.power >= 0:
            raise ValueError("tweezer power must be >= 0")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")
        object.__setattr__(self, "focus_position", tuple(float(v) for v in self.focus_position))

    @property
    def rayleigh_x(self):
        return np.pi * self.waist_x**2 / self.wavelength

    @property
    def rayleigh_y(self):
        return np.pi * self.waist_y**2 / self.wavelength

    @property
    def k(self):
        return 2.0 * np.pi / self.wavelength


@dataclass(frozen=True)
class ReflectorSpec:
    surface_z: float = 0.0
    amplitude_reflectivity: float = 0.155
    reflection_phase: float = 4.0 * np.pi * 380e-9 / 1064e-9  # first site 380 nm above the surface

    def __post_init__(self):
        if not 0 <= self.amplitude_reflectivity <= 1:
            raise ValueError("amplitude reflectivity must lie in [0, 1]")


@dataclass(frozen=True)
class CavityModeSpec:
    resonance_wavelength: float = 1538.72e-9
    kappa: float = 2 * np.pi * 5.0e9
    decay_length_field: float = 196.07e-9
    transverse_sigma_x: float = 1.2e-6
    transverse_sigma_y: float = 0.25e-6
    longitudinal_period: float = 0.6e-6
    shift_amplitude: float = 1.0697e11  # |G_z|/2pi = 3.6 MHz/nm at 380 nm
    mode_center: tuple = (0.0, 0.0, 0.0)
    coupling_ratio: float = 0.5

    def __post_init__(self):
        lengths = (
            self.resonance_wavelength, self.decay_length_field,
            self.transverse_sigma_x, self.transverse_sigma_y,
            self.longitudinal_period,
        )
        if not all(v > 0 for v in lengths):
            raise ValueError("cavity mode lengths must be > 0")
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        if not 0 < self.coupling_ratio <= 1:
            raise ValueError("coupling ratio kappa_ex/kappa must lie in (0, 1]")
        object.__setattr__(self, "mode_center", tuple(float(v) for v in self.mode_center))

    @property
    def decay_length_intensity(self):
        return self.decay_length_field / 2.0

    @property
    def surface_z(self):
        return self.mode_center[2]


@dataclass(frozen=True)
class FieldModel:
    tweezer: TweezerSpec
    reflector: ReflectorSpec = field(default_factory=ReflectorSpec)
    cavity_mode: CavityModeSpec = field(default_factory=CavityModeSpec)

    def __post_init__(self):
        if self.reflector.amplitude_reflectivity > 0 and first_site_distance(self) <= 0:
            raise ValueError("reflector must leave a first trap site above the surface")

    def replace(self, **changes):
        return replace(self, **changes)

    def kernel_params(self):
        """Flat float tuple consumed by :func:`trap_terms` (and its jitted twin)."""
        tw, rf = self.tweezer, self.reflector
        xf, yf, zf = tw.focus_position
        return (
            float(tw.power), float(tw.waist_x), float(tw.waist_y),
            float(tw.rayleigh_x), float(tw.rayleigh_y),
            xf, yf, zf,
            float(rf.amplitude_reflectivity), float(rf.reflection_phase),
            float(tw.k), float(rf.surface_z),
        )


def reflection_phase_for_first_site(z0, wavelength):
    """Reflection phase that puts the first antinode at distance ``z0`` from the surface."""
    k = 2.0 * np.pi / wavelength
    phi = 2.0 * k * z0
    if not 0 < phi < 2.0 * np.pi:
        raise ValueError("first site must lie within half a wavelength of the surface")
    return phi


def first_site_distance(model: FieldModel):
    k = model.tweezer.k
    return np.mod(model.reflector.reflection_phase, 2.0 * np.pi) / (2.0 * k)


def evanescent_decay_length(wavelength, effective_index):
    """Field decay length lambda / (2 pi sqrt(n_eff^2 - 1))."""
    return wavelength / (2.0 * np.pi * np.sqrt(effective_index**2 - 1.0))


def shift_amplitude_for_gradient(mode: CavityModeSpec, distance, G_z):
    """Peak shift amplitude that yields ``|G_z|`` at ``distance`` above the surface on the mode center."""
    delta_i = mode.decay_length_intensity
    return G_z * delta_i * np.exp(distance / delta_i)


@register_jitable
def _tweezer_terms(X, Y, zeta, P, wx0, wy0, zrx, zry):
    # intensity and its derivatives w.r.t. (X, Y, zeta)
    wx2 = wx0 * wx0 * (1.0 + zeta * zeta / (zrx * zrx))
    wy2 = wy0 * wy0 * (1.0 + zeta * zeta / (zry * zry))
    I = 2.0 * P / (np.pi * np.sqrt(wx2 * wy2)) * np.exp(-2.0 * X * X / wx2 - 2.0 * Y * Y / wy2)
    dwx2 = 2.0 * wx0 * wx0 * zeta / (zrx * zrx)
    dwy2 = 2.0 * wy0 * wy0 * zeta / (zry * zry)
    dlnz = (
        -0.5 * dwx2 / wx2 - 0.5 * dwy2 / wy2
        + 2.0 * X * X * dwx2 / (wx2 * wx2) + 2.0 * Y * Y * dwy2 / (wy2 * wy2)
    )
    return I, I * (-4.0 * X / wx2), I * (-4.0 * Y / wy2), I * dlnz


@register_jitable
def trap_terms(x, y, z, P, wx0, wy0, zrx, zry, xf, yf, zf, rho, phi, k, s):
    """Trap intensity and its gradient at (x, y, z).

    Written with scalar-or-array arithmetic only so that it can be compiled
    by numba unchanged. Returns ``(I, dI/dx, dI/dy, dI/dz)``.
    """
    X = x - xf
    Y = y - yf
    if rho == 0.0:
        return _tweezer_terms(X, Y, z - zf, P, wx0, wy0, zrx, zry)
    theta = 2.0 * k * (z - s) - phi
    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    z_env = z - sin_t / (2.0 * k)
    I0, dx0, dy0, dz0 = _tweezer_terms(X, Y, z_env - zf, P, wx0, wy0, zrx, zry)
    lattice = 1.0 + rho * rho + 2.0 * rho * cos_t
    dlattice = -4.0 * k * rho * sin_t
    return (
        I0 * lattice,
        dx0 * lattice,
        dy0 * lattice,
        dz0 * (1.0 - cos_t) * lattice + I0 * dlattice,
    )


def _split(pos):
    pos = np.asarray(pos, dtype=float)
    if pos.shape[-1] != 3:
        raise ValueError("positions must have a trailing axis of length 3")
    return pos[..., 0], pos[..., 1], pos[..., 2]


def tweezer_intensity(model: FieldModel, pos):
    """Elliptical Gaussian beam intensity [W/m^2] without the reflector."""
    tw = model.tweezer
    x, y, z = _split(pos)
    xf, yf, zf = tw.focus_position
    I, _, _, _ = _tweezer_terms(
        x - xf, y - yf, z - zf, tw.power, tw.waist_x, tw.waist_y,
        tw.rayleigh_x, tw.rayleigh_y,
    )
    return I


def _check_above_surface(model, z):
    if np.any(z < model.reflector.surface_z):
        raise ValueError("position lies behind the reflector surface")


def trap_intensity(model: FieldModel, pos):
    """Standing-wave trap intensity [W/m^2]; equals :func:`tweezer_intensity` when rho = 0."""
    if model.reflector.amplitude_reflectivity == 0:
        return tweezer_intensity(model, pos)
    x, y, z = _split(pos)
    _check_above_surface(model, z)
    return trap_terms(x, y, z, *model.kernel_params())[0]


def trap_intensity_gradient(model: FieldModel, pos):
    x, y, z = _split(pos)
    if model.reflector.amplitude_reflectivity != 0:
        _check_above_surface(model, z)
    _, gx, gy, gz = trap_terms(x, y, z, *model.kernel_params())
    return np.stack([gx, gy, gz], axis=-1)


def _mode_terms(model, pos):
    mode = model.cavity_mode
    x, y, z = _split(pos)
    cx, cy, cz = mode.mode_center
    X, Y, D = x - cx, y - cy, z - cz
    q = np.pi / mode.longitudinal_period
    sx2 = mode.transverse_sigma_x**2
    sy2 = mode.transverse_sigma_y**2
    cos2 = np.cos(q * X) ** 2
    gauss_x = np.exp(-X * X / (2.0 * sx2))
    rest = np.exp(-Y * Y / (2.0 * sy2)) * np.exp(-D / mode.decay_length_intensity)
    return mode, X, Y, q, sx2, sy2, cos2, gauss_x, rest


def cavity_shift(model: FieldModel, pos):
    """Dispersive cavity resonance shift [rad/s] for a particle at ``pos``.

    Negative (red shift); decays with the intensity decay length above the
    cavity surface.
    """
    mode, X, Y, q, sx2, sy2, cos2, gauss_x, rest = _mode_terms(model, pos)
    return -mode.shift_amplitude * cos2 * gauss_x * rest


def coupling_gradient(model: FieldModel, pos):
    """Analytic gradient (G_x, G_y, G_z) of :func:`cavity_shift` [rad/s per m]."""
    mode, X, Y, q, sx2, sy2, cos2, gauss_x, rest = _mode_terms(model, pos)
    A = mode.shift_amplitude
    shift = -A * cos2 * gauss_x * rest
    d_long = -q * np.sin(2.0 * q * X) - cos2 * X / sx2
    gx = -A * d_long * gauss_x * rest
    gy = shift * (-Y / sy2)
    gz = shift * (-1.0 / mode.decay_length_intensity)
    return np.stack([gx, gy, gz], axis=-1)


def trap_sites(model: FieldModel, n_max):
    """Axial positions of lattice sites 0..n_max on the beam axis [m].

    Empty when there is no reflector.
    """
    if model.reflector.amplitude_reflectivity == 0:
        return []
    z0 = model.reflector.surface_z + first_site_distance(model)
    half = model.tweezer.wavelength / 2.0
    return [z0 + n * half for n in range(n_max + 1)]


def site_position(model: FieldModel, n):
    """3-vector of site ``n`` on the tweezer axis."""
    xf, yf, _ = model.tweezer.focus_position
    return np.array([xf, yf, trap_sites(model, n)[n]])


def site_index(model: FieldModel, z):
    """Index of the site nearest to ``z``; ties go to the lower index."""
    sites = trap_sites(model, 0)
    if not sites:
        raise ValueError("no lattice without a reflector")
    half = model.tweezer.wavelength / 2.0
    u = (z - sites[0]) / half
    return max(int(np.ceil(u - 0.5 - 1e-9)), 0)


def translate_surface(model: FieldModel, dz):
    """Move reflector and cavity rigidly by ``dz`` along z; the tweezer stays put."""
    rf = replace(model.reflector, surface_z=model.reflector.surface_z + dz)
    cx, cy, cz = model.cavity_mode.mode_center
    cm = replace(model.cavity_mode, mode_center=(cx, cy, cz + dz))
    return replace(model, reflector=rf, cavity_mode=cm)


def steer_tweezer(model: FieldModel, x, y):
    """Move the tweezer focus laterally to (x, y)."""
    _, _, zf = model.tweezer.focus_position
    return replace(model, tweezer=replace(model.tweezer, focus_position=(x, y, zf)))


def without_reflector(model: FieldModel):
    return replace(model, reflector=replace(model.reflector, amplitude_reflectivity=0.0))
