"""Trap potential, harmonic linearization and Langevin trajectories.

The equation of motion is

    m r'' = F(r) - m gamma r' + F_th(t) [+ F_rec(t)]

with white thermal noise of one-sided PSD ``4 kB T m gamma`` per axis and,
optionally, isotropic recoil noise of one-sided PSD ``S_FF``. It is
integrated with the BAOAB splitting, using the exact Ornstein-Uhlenbeck
update for the friction + noise sub-step.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import constants as const

from . import fields, quantities, rng
from .errors import NoConvergence, TimestepTooLarge, UnstableSite

G_EARTH = const.g

#: Steps integrated per noise chunk.
CHUNK_STEPS = 1 << 18

#: Minimum oversampling of the fastest linearized frequency.
MIN_STEPS_PER_PERIOD = 50

SETTLE_FORCE_TOL = 1e-20
SETTLE_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class SimParams:
    dt: float
    duration: float
    seed: int = 0
    include_recoil: bool = False
    gravity: bool = False
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.duration >= self.dt:
            raise ValueError("duration must be >= dt")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self):
        return int(np.floor(self.duration / self.dt * (1 + 1e-12)))


@dataclass
class Trajectory:
    """Uniformly sampled phase-space record.

    ``dt`` is the sample interval of the stored record, i.e. the
    integration step times ``stride``.
    """

    dt: float
    positions: np.ndarray
    velocities: np.ndarray
    seed: int
    origin: np.ndarray
    config_hash: str = ""
    stride: int = 1
    escaped: bool = False

    def __len__(self):
        return len(self.positions)

    @property
    def times(self):
        return np.arange(len(self)) * self.dt


@dataclass(frozen=True)
class LinearizedTrap:
    equilibrium: np.ndarray
    omegas: tuple
    principal_axes: np.ndarray = field(default_factory=lambda: np.eye(3))
    hessian: np.ndarray = None

    @property
    def frequencies_hz(self):
        return tuple(w / (2 * np.pi) for w in self.omegas)


def _dipole_prefactor(particle):
    return quantities.polarizability(particle) / (2.0 * const.c * const.epsilon_0)


def potential(model, particle, pos, gravity=False):
    """Dipole potential energy -alpha I / (2 c eps0) [J], plus m g z if ``gravity``."""
    U = -_dipole_prefactor(particle) * fields.trap_intensity(model, pos)
    if gravity:
        U = U + quantities.particle_mass(particle) * G_EARTH * np.asarray(pos, float)[..., 2]
    return U


def force(model, particle, pos, gravity=False):
    """Conservative force -grad U [N] from the analytic intensity gradient."""
    F = _dipole_prefactor(particle) * fields.trap_intensity_gradient(model, pos)
    if gravity:
        F = np.array(F, copy=True)
        F[..., 2] -= quantities.particle_mass(particle) * G_EARTH
    return F


def hessian(model, particle, pos, h=1e-10, gravity=False):
    """Hessian of U by central differences of the analytic force."""
    pos = np.asarray(pos, dtype=float)
    H = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        H[:, j] = -(force(model, particle, pos + e, gravity) - force(model, particle, pos - e, gravity)) / (2 * h)
    return 0.5 * (H + H.T)


def linearize_at(model, particle, pos, gravity=False):
    m = quantities.particle_mass(particle)
    H = hessian(model, particle, pos, gravity=gravity)
    evals, evecs = np.linalg.eigh(H)
    if np.any(evals <= 0):
        raise UnstableSite(f"non-positive trap curvature {evals} at {pos}")
    # label eigenpairs by their dominant lab axis
    order = np.argmax(np.abs(evecs), axis=0)
    if sorted(order) != [0, 1, 2]:
        order = np.array([0, 1, 2])
    omegas = np.empty(3)
    axes = np.empty((3, 3))
    for col, lab in enumerate(order):
        v = evecs[:, col]
        omegas[lab] = np.sqrt(evals[col] / m)
        axes[:, lab] = v * np.sign(v[lab])
    return LinearizedTrap(np.asarray(pos, float), tuple(omegas), axes, H)


def equilibrium(model, particle, site_index=0, gravity=False):
    if model.reflector.amplitude_reflectivity == 0:
        start = np.array(model.tweezer.focus_position)
    else:
        start = fields.site_position(model, site_index)
    if not gravity:
        return start
    return settle(model, particle, start, gravity=True)[1]


def linearize(model, particle, site_index=0, gravity=False):
    """Harmonic trap at lattice site ``site_index`` (the focus when there is no lattice)."""
    pos = equilibrium(model, particle, site_index, gravity)
    return linearize_at(model, particle, pos, gravity)


@njit(cache=True)
def _force_jit(x, y, z, params, pref, mg):
    _, gx, gy, gz = fields.trap_terms(
        x, y, z, params[0], params[1], params[2], params[3], params[4], params[5],
        params[6], params[7], params[8], params[9], params[10], params[11],
    )
    return pref * gx, pref * gy, pref * gz - mg


@njit(cache=True)
def _settle_kernel(pos, params, pref, mg, step, tol, max_iter):
    x, y, z = pos[0], pos[1], pos[2]
    for it in range(max_iter):
        fx, fy, fz = _force_jit(x, y, z, params, pref, mg)
        if np.sqrt(fx * fx + fy * fy + fz * fz) < tol:
            return x, y, z, it, True
        x += step * fx
        y += step * fy
        z += step * fz
    return x, y, z, max_iter, False


def _stiffness_bound(model, particle):
    # upper bound on |d2U/dq2| anywhere in the trap
    tw, rho = model.tweezer, model.reflector.amplitude_reflectivity
    I_peak = 2 * tw.power / (np.pi * tw.waist_x * tw.waist_y) * (1 + rho) ** 2
    w_min = min(tw.waist_x, tw.waist_y)
    curv = (2 * tw.k) ** 2 + 4.0 / w_min**2 + 1.0 / min(tw.rayleigh_x, tw.rayleigh_y) ** 2
    return 2.0 * _dipole_prefactor(particle) * I_peak * curv


def settle(model, particle, start_pos, gravity=False, tol=SETTLE_FORCE_TOL,
           max_iter=SETTLE_MAX_ITER):
    """Overdamped descent of U from ``start_pos``.

    Returns ``(site_index, equilibrium, iterations)``; the site index is that
    of the nearest lattice site (ties go to the lower index) or 0 without a
    reflector.
    """
    mg = quantities.particle_mass(particle) * G_EARTH if gravity else 0.0
    step = 0.5 / _stiffness_bound(model, particle)
    x, y, z, it, ok = _settle_kernel(
        np.asarray(start_pos, dtype=float), np.array(model.kernel_params()),
        _dipole_prefactor(particle), mg, step, tol, max_iter,
    )
    if not ok:
        raise NoConvergence(f"settle did not converge within {max_iter} iterations")
    pos = np.array([x, y, z])
    idx = 0 if model.reflector.amplitude_reflectivity == 0 else fields.site_index(model, z)
    return idx, pos, it


@njit(cache=True)
def _store(state, x, y, z, vx, vy, vz, fx, fy, fz):
    state[0] = x
    state[1] = y
    state[2] = z
    state[3] = vx
    state[4] = vy
    state[5] = vz
    state[6] = fx
    state[7] = fy
    state[8] = fz


@njit(cache=True)
def _baoab_chunk(state, noise, n_steps, stride, phase, dt, inv_m, c1, c2, params,
                 pref, mg, out_pos, out_vel, out_start, site_x, site_y, site0, half,
                 surface, escape_r2, z_max, check_sites):
    x, y, z = state[0], state[1], state[2]
    vx, vy, vz = state[3], state[4], state[5]
    fx, fy, fz = state[6], state[7], state[8]
    n_out = out_start
    for i in range(n_steps):
        if phase == 0:
            if n_out >= out_pos.shape[0]:
                break
            out_pos[n_out, 0] = x
            out_pos[n_out, 1] = y
            out_pos[n_out, 2] = z
            out_vel[n_out, 0] = vx
            out_vel[n_out, 1] = vy
            out_vel[n_out, 2] = vz
            n_out += 1
        phase += 1
        if phase == stride:
            phase = 0
        # B
        vx += 0.5 * dt * fx * inv_m
        vy += 0.5 * dt * fy * inv_m
        vz += 0.5 * dt * fz * inv_m
        # A
        x += 0.5 * dt * vx
        y += 0.5 * dt * vy
        z += 0.5 * dt * vz
        # O
        vx = c1 * vx + c2 * noise[0, i]
        vy = c1 * vy + c2 * noise[1, i]
        vz = c1 * vz + c2 * noise[2, i]
        # A
        x += 0.5 * dt * vx
        y += 0.5 * dt * vy
        z += 0.5 * dt * vz
        fx, fy, fz = _force_jit(x, y, z, params, pref, mg)
        # B
        vx += 0.5 * dt * fx * inv_m
        vy += 0.5 * dt * fy * inv_m
        vz += 0.5 * dt * fz * inv_m
        dx = x - site_x
        dy = y - site_y
        if check_sites:
            n = np.floor((z - site0) / half + 0.5)
            if n < 0.0:
                n = 0.0
            dz = z - (site0 + n * half)
        else:
            dz = z - site0
        if (dx * dx + dy * dy + dz * dz > escape_r2 or z > z_max
                or (check_sites and z < surface)):
            _store(state, x, y, z, vx, vy, vz, fx, fy, fz)
            return n_out, phase, True
    _store(state, x, y, z, vx, vy, vz, fx, fy, fz)
    return n_out, phase, False


def ou_coefficients(gamma, dt, m, force_psd):
    """Velocity decay and kick size for the exact OU sub-step.

    ``force_psd`` is the total one-sided white force PSD [N^2/Hz].
    """
    c1 = np.exp(-gamma * dt)
    x = 2.0 * gamma * dt
    # (1 - exp(-x)) / x, which tends to 1 for weak damping
    shape = -np.expm1(-x) / x if x > 1e-12 else 1.0 - 0.5 * x
    var = force_psd * dt / (2.0 * m * m) * shape
    return c1, np.sqrt(var)


def recoil_psd_at(model, particle, pos):
    """Recoil force PSD for the local trap intensity at ``pos``."""
    I = float(fields.trap_intensity(model, pos))
    alpha = quantities.polarizability(particle)
    P_sc = quantities.scattered_power(alpha, I, model.tweezer.wavelength)
    return quantities.recoil_force_psd(P_sc, model.tweezer.wavelength)


def check_timestep(model, particle, sim: SimParams, site_index=0):
    lin = linearize(model, particle, site_index, sim.gravity)
    f_max = max(lin.omegas) / (2 * np.pi)
    if sim.dt > 1.0 / (MIN_STEPS_PER_PERIOD * f_max):
        raise TimestepTooLarge(
            f"dt={sim.dt:g} s exceeds 1/({MIN_STEPS_PER_PERIOD} f_max) with f_max={f_max:.4g} Hz"
        )
    return lin


def simulate(model, particle, gas, sim: SimParams, start=None, site_index=0,
             config_hash=""):
    """Integrate a Langevin trajectory in the trap around site ``site_index``.

    ``start`` is ``(position, velocity)``; by default the particle starts at
    rest on the site. Hopping between lattice sites is allowed; if the
    particle drifts laterally beyond twice the local beam radius, more than
    two Rayleigh ranges above the focus, or through the surface, the record is truncated and flagged as ``escaped``.
    """
    lin = check_timestep(model, particle, sim, site_index)
    m = quantities.particle_mass(particle)
    gamma = quantities.gas_damping(gas, particle)
    S_total = 4.0 * const.k * gas.temperature * m * gamma
    if sim.include_recoil:
        S_total += recoil_psd_at(model, particle, lin.equilibrium)
    c1, c2 = ou_coefficients(gamma, sim.dt, m, S_total)

    if start is None:
        x0, v0 = lin.equilibrium, np.zeros(3)
    else:
        x0, v0 = (np.asarray(a, dtype=float) for a in start)
    params = np.array(model.kernel_params())
    pref = _dipole_prefactor(particle)
    mg = m * G_EARTH if sim.gravity else 0.0
    f0 = force(model, particle, x0, sim.gravity)
    state = np.array([*x0, *v0, *f0], dtype=float)

    n_steps = sim.n_steps
    n_out = n_steps // sim.record_stride
    out_pos = np.empty((n_out, 3))
    out_vel = np.empty((n_out, 3))
    has_lattice = model.reflector.amplitude_reflectivity > 0
    half = model.tweezer.wavelength / 2.0
    site0 = fields.trap_sites(model, 0)[0] if has_lattice else model.tweezer.focus_position[2]
    xf, yf, zf = model.tweezer.focus_position
    tw = model.tweezer
    w_local = max(tw.waist_x * np.hypot(1.0, (site0 - zf) / tw.rayleigh_x),
                  tw.waist_y * np.hypot(1.0, (site0 - zf) / tw.rayleigh_y))
    escape_r = max(2.0 * w_local, half)
    z_max = max(site0, zf) + 2.0 * max(tw.rayleigh_x, tw.rayleigh_y)

    done, phase, written, escaped = 0, 0, 0, False
    while done < n_steps and not escaped:
        count = min(CHUNK_STEPS, n_steps - done)
        noise = np.stack([rng.standard_normals(sim.seed, s, done, count) for s in rng.AXIS_STREAMS])
        written, phase, escaped = _baoab_chunk(
            state, noise, count, sim.record_stride, phase, sim.dt, 1.0 / m, c1, c2,
            params, pref, mg, out_pos, out_vel, written, xf, yf, site0, half,
            model.reflector.surface_z, escape_r * escape_r, z_max, has_lattice,
        )
        done += count
    return Trajectory(
        dt=sim.dt * sim.record_stride,
        positions=out_pos[:written],
        velocities=out_vel[:written],
        seed=sim.seed,
        origin=np.asarray(lin.equilibrium, dtype=float),
        config_hash=config_hash,
        stride=sim.record_stride,
        escaped=bool(escaped),
    )


def equipartition_variance(T, m, omega):
    return const.k * T / (m * omega**2)
