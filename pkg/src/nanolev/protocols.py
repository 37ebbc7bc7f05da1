"""Experiment drivers: figures of merit, coupling maps, focus sweeps, site loading
and fitting the trap model to observed mechanical frequencies.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage, optimize

from . import calibration, dynamics, fields, quantities, readout
from .errors import (FitFailed, NoConvergence, NoPeakInBand, NoStableSite, PhysicsError,
                     TrapLost, UnstableSite)

AXES = calibration.AXES
FEEDBACK_LIMIT = 1.0 / 9.0


def _pool_map(fn, items, workers):
    """Ordered map, optionally over a process pool."""
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- figures of merit -------------------------------------------------------

def merit(model, particle, gas, n_cav, gamma_m, site_index=0, G_z=None):
    """Operating-point summary for the axial mode.

    Parameters
    ----------
    n_cav : float
        Intracavity photon number used in the cooperativity.
    gamma_m : float
        Mechanical damping [rad/s] entering the cooperativity.
    G_z : float, optional
        Axial coupling [rad/s per m]; evaluated from the field model if omitted.
    """
    lin = dynamics.linearize(model, particle, site_index)
    m = particle.mass
    omega = lin.omegas[2]
    if G_z is None:
        G_z = abs(fields.coupling_gradient(model, lin.equilibrium)[2])
    z_zpf = quantities.zpf(m, omega)
    g0 = z_zpf * G_z
    n_th = quantities.thermal_occupation(gas.temperature, omega)
    C_q = quantities.cooperativity(g0, n_cav, model.cavity_mode.kappa, gamma_m, n_th)
    eta = quantities.feedback_threshold(C_q) if C_q > 0 else np.inf
    S_rec = dynamics.recoil_psd_at(model, particle, lin.equilibrium)
    gamma_rec = quantities.recoil_equivalent_damping(S_rec, m, omega, gas.temperature)
    return quantities.MeritReport(
        z_zpf=float(z_zpf),
        n_th=float(n_th),
        C_q=float(C_q),
        eta_min=float(min(eta, 1.0)),
        force_noise=float(quantities.force_noise(gas.temperature, m, gamma_rec)),
        gamma_gas=float(quantities.gas_damping(gas, particle)),
        gamma_recoil_equiv=float(gamma_rec),
        g0=float(g0),
        cooling_possible=bool(eta <= 1.0),
    )


# -- coupling maps ----------------------------------------------------------

@dataclass
class CouplingMap:
    """g0 magnitudes [rad/s] on a lateral grid of tweezer positions.

    ``g0_maps[i]`` has shape ``(len(y_grid), len(x_grid))``. ``flags`` marks
    grid points where the trap or the analysis failed; those hold NaN.
    """

    x_grid: np.ndarray
    y_grid: np.ndarray
    g0_maps: np.ndarray
    mode_of_computation: str
    flags: np.ndarray = None
    g0_errors: np.ndarray = None
    omegas: np.ndarray = None

    def argmax(self, axis=2):
        j, i = np.unravel_index(np.nanargmax(self.g0_maps[axis]), self.g0_maps[axis].shape)
        return self.x_grid[i], self.y_grid[j]


def _settled_trap(model, particle, x, y):
    steered = fields.steer_tweezer(model, x, y)
    start = fields.site_position(steered, 0)
    idx, eq, _ = dynamics.settle(steered, particle, start)
    if idx != 0:
        raise UnstableSite(f"particle left the first site at ({x:g}, {y:g})")
    return steered, dynamics.linearize_at(steered, particle, eq)


def coupling_at(model, particle, x, y):
    """Analytic (g0, omega) per axis for the tweezer steered to (x, y)."""
    steered, lin = _settled_trap(model, particle, x, y)
    G = fields.coupling_gradient(steered, lin.equilibrium)
    m = particle.mass
    g0 = np.array([
        quantities.zpf(m, w) * abs(G @ lin.principal_axes[:, i])
        for i, w in enumerate(lin.omegas)
    ])
    return g0, np.array(lin.omegas)


@dataclass(frozen=True)
class SimulatedPointJob:
    model: object
    particle: object
    gas: object
    x: float
    y: float
    sim: object
    probe: object
    chain: object
    half_band: float = 30e3
    transduction: str = "full"
    segment_length: int = 1 << 14


def simulated_point(job: SimulatedPointJob):
    """g0 per axis from simulate -> detect -> calibrate, with 1-sigma errors.

    Axes without a resolvable peak get zero coupling and a NaN error.
    """
    steered, lin = _settled_trap(job.model, job.particle, job.x, job.y)
    traj = dynamics.simulate(steered, job.particle, job.gas, job.sim)
    if traj.escaped:
        raise TrapLost(f"particle escaped at ({job.x:g}, {job.y:g})")
    phase = readout.transduce(traj, steered, job.transduction)
    record = readout.detect(phase, job.probe, job.chain, job.sim.seed)
    T, m = job.gas.temperature, job.particle.mass
    g0 = np.zeros(3)
    err = np.full(3, np.nan)
    for i, ax in enumerate(AXES):
        f = lin.omegas[i] / (2 * np.pi)
        try:
            res = calibration.calibrate(
                record, job.probe, job.chain, steered.cavity_mode, T, m,
                {ax: (f - job.half_band, f + job.half_band)},
                segment_length=job.segment_length,
            )
        except (NoPeakInBand, FitFailed):
            continue
        fit = res.fits[ax]
        g0[i] = res.g0_extracted[ax]
        # g0 ~ G / sqrt(omega) ~ sqrt(area) / sqrt(omega) at fixed floor
        rel_area = fit.stderr[2] / fit.area
        rel_omega = fit.stderr[0] / fit.omega0
        err[i] = g0[i] * np.hypot(0.5 * rel_area, 0.5 * rel_omega)
    return g0, err


def map_coupling(model, particle, grid, mode="analytic", jitter=None, gas=None,
                 sim=None, probe=None, chain=None, workers=None, base_seed=0,
                 transduction="full"):
    """Coupling maps over lateral tweezer positions.

    Parameters
    ----------
    grid : (x_values, y_values)
        Uniform 1-D grids [m].
    mode : {"analytic", "simulated"}
        Analytic maps use the local gradient and linearized frequencies;
        simulated maps run the synthetic measurement at every point, with
        seed ``base_seed + flat_index``.
    jitter : float, optional
        RMS position jitter [m] convolved into analytic maps.
    """
    xs = np.asarray(grid[0], dtype=float)
    ys = np.asarray(grid[1], dtype=float)
    for g in (xs, ys):
        if len(g) > 2 and not np.allclose(np.diff(g), g[1] - g[0], rtol=1e-9, atol=0):
            raise ValueError("grid must be uniform")
    shape = (len(ys), len(xs))
    maps = np.full((3, *shape), np.nan)
    omegas = np.full((3, *shape), np.nan)
    errors = None
    flags = np.zeros(shape, dtype=bool)
    points = [(j, i) for j in range(len(ys)) for i in range(len(xs))]

    if mode == "analytic":
        for j, i in points:
            try:
                g0, w = coupling_at(model, particle, xs[i], ys[j])
            except (UnstableSite, NoConvergence):
                flags[j, i] = True
                continue
            maps[:, j, i] = g0
            omegas[:, j, i] = w
        if jitter:
            if flags.any():
                raise ValueError("jitter smoothing needs a map without flagged points")
            step = np.array([ys[1] - ys[0] if len(ys) > 1 else np.inf,
                             xs[1] - xs[0] if len(xs) > 1 else np.inf])
            sigma = jitter / step
            for a in range(3):
                maps[a] = ndimage.gaussian_filter(maps[a], sigma, mode="nearest")
    elif mode == "simulated":
        if any(v is None for v in (gas, sim, probe, chain)):
            raise ValueError("simulated maps need gas, sim, probe and chain")
        errors = np.full((3, *shape), np.nan)
        jobs = [
            SimulatedPointJob(
                model, particle, gas, float(xs[i]), float(ys[j]),
                dynamics.SimParams(sim.dt, sim.duration, base_seed + n, sim.include_recoil,
                                   sim.gravity, sim.record_stride),
                probe, chain, transduction=transduction,
            )
            for n, (j, i) in enumerate(points)
        ]
        results = _pool_map(_safe_simulated_point, jobs, workers)
        for (j, i), out in zip(points, results):
            if out is None:
                flags[j, i] = True
                continue
            maps[:, j, i], errors[:, j, i] = out
    else:
        raise ValueError(f"unknown map mode {mode!r}")
    return CouplingMap(xs, ys, maps, mode, flags, errors, omegas)


def _safe_simulated_point(job):
    try:
        return simulated_point(job)
    except PhysicsError:
        return None


# -- focus sweep ------------------------------------------------------------

@dataclass
class SweepRecord:
    """Trap and coupling versus the distance the slab was moved away from the focus."""

    cavity_focus_distance: np.ndarray
    G_per_axis: np.ndarray
    omegas: np.ndarray
    variances: np.ndarray
    surface_gap: np.ndarray
    simulated_variances: dict = field(default_factory=dict)


def _spot_check(args):
    model, particle, gas, sim, idx = args
    traj = dynamics.simulate(model, particle, gas, sim, site_index=idx)
    if traj.escaped:
        raise TrapLost("particle escaped during the spot-check simulation")
    return np.var(traj.positions, axis=0)


def sweep_focus(model, particle, distances, temperature=300.0, spot_check=(),
                gas=None, sim=None, workers=None):
    """Translate slab and cavity rigidly away from the focus and re-evaluate the trap.

    ``distances`` must be monotone. The analytic variances follow
    equipartition; ``spot_check`` lists distances at which a Langevin
    trajectory (``gas``, ``sim``) also measures them.
    """
    d = np.asarray(distances, dtype=float)
    if len(d) > 1 and not (np.all(np.diff(d) > 0) or np.all(np.diff(d) < 0)):
        raise ValueError("sweep distances must be strictly monotone")
    m = particle.mass
    G = np.empty((len(d), 3))
    W = np.empty((len(d), 3))
    gaps = np.empty(len(d))
    moved = []
    for n, dist in enumerate(d):
        mdl = fields.translate_surface(model, -dist) if dist != 0 else model
        start = fields.site_position(mdl, 0)
        try:
            idx, eq, _ = dynamics.settle(mdl, particle, start)
            lin = dynamics.linearize_at(mdl, particle, eq)
        except (UnstableSite, NoConvergence) as exc:
            raise TrapLost(f"trap lost at distance {dist:g} m: {exc}") from exc
        if idx != 0:
            raise TrapLost(f"particle left the first site at distance {dist:g} m")
        G[n] = fields.coupling_gradient(mdl, eq)
        W[n] = lin.omegas
        gaps[n] = eq[2] - mdl.reflector.surface_z
        moved.append(mdl)
    variances = quantities.KB * temperature / (m * W**2)
    sim_var = {}
    if len(spot_check):
        if gas is None or sim is None:
            raise ValueError("spot checks need gas and sim parameters")
        jobs = []
        for dist in spot_check:
            n = int(np.argmin(np.abs(d - dist)))
            if not np.isclose(d[n], dist, rtol=0, atol=1e-12):
                raise ValueError(f"spot-check distance {dist} is not on the sweep grid")
            jobs.append((moved[n], particle, gas, sim, 0))
        for dist, var in zip(spot_check, _pool_map(_spot_check, jobs, workers)):
            sim_var[float(dist)] = var
    return SweepRecord(d, G, W, variances, gaps, sim_var)


# -- lattice loading --------------------------------------------------------

@dataclass
class LoadResult:
    initial_cavity_offset: float
    final_site_index: int
    g0_z: float
    omega_z: float
    equilibrium: np.ndarray = None


def load_site(model, particle, cavity_offset):
    """Quasi-static loading into the lattice after displacing the cavity.

    The standing wave is switched off, the particle relaxes to the bare
    tweezer focus, the slab and cavity move ``cavity_offset`` away from the
    focus, and the particle then settles into whichever lattice site it
    falls into once the standing wave returns.
    """
    bare = fields.without_reflector(model)
    try:
        _, rest, _ = dynamics.settle(bare, particle, np.array(bare.tweezer.focus_position))
        moved = fields.translate_surface(model, -cavity_offset)
        if rest[2] <= moved.reflector.surface_z:
            raise NoStableSite("particle would sit behind the displaced surface")
        idx, eq, _ = dynamics.settle(moved, particle, rest)
        lin = dynamics.linearize_at(moved, particle, eq)
    except (NoConvergence, UnstableSite) as exc:
        raise NoStableSite(f"no stable site for offset {cavity_offset:g} m: {exc}") from exc
    G = fields.coupling_gradient(moved, eq)
    g0_z = quantities.zpf(particle.mass, lin.omegas[2]) * abs(G @ lin.principal_axes[:, 2])
    return LoadResult(float(cavity_offset), int(idx), float(g0_z), float(lin.omegas[2]), eq)


# -- model fitting ----------------------------------------------------------

REFLECTIVITY_BOUNDS = (0.15, 1.0)
MAX_WAIST = 5e-6
FIT_TOLERANCE = 1e-4


def _with_params(template, wx, wy, rho):
    tw = replace(template.tweezer, waist_x=wx, waist_y=wy)
    rf = replace(template.reflector, amplitude_reflectivity=rho)
    return replace(template, tweezer=tw, reflector=rf)


def model_frequencies(model, particle):
    """Linearized (f_x, f_y, f_z) at the first site [Hz]."""
    return np.array(dynamics.linearize(model, particle).frequencies_hz)


def fit_model(template, particle, targets_hz, tol=FIT_TOLERANCE):
    """Fit waists and reflectivity so the first site reproduces ``targets_hz``.

    ``targets_hz`` is ``(f_x, f_y, f_z)``. The search is a bounded
    Nelder-Mead from the template; waists stay above the diffraction limit
    ``lambda / (pi NA)`` and the amplitude reflectivity inside
    ``REFLECTIVITY_BOUNDS``. Returns ``(model, residual)``.
    """
    target = np.asarray(targets_hz, dtype=float)
    if target.shape != (3,) or np.any(target <= 0):
        raise ValueError("targets must be three positive frequencies")
    tw = template.tweezer
    w_min = tw.wavelength / (np.pi * tw.numerical_aperture)
    bounds = [(np.log(w_min), np.log(MAX_WAIST))] * 2 + [REFLECTIVITY_BOUNDS]

    def residual(p):
        mdl = _with_params(template, np.exp(p[0]), np.exp(p[1]), p[2])
        try:
            f = model_frequencies(mdl, particle)
        except (UnstableSite, ValueError):
            return 1e3
        return float(np.sum(((f - target) / target) ** 2))

    p0 = np.array([
        np.log(np.clip(tw.waist_x, w_min, MAX_WAIST)),
        np.log(np.clip(tw.waist_y, w_min, MAX_WAIST)),
        np.clip(template.reflector.amplitude_reflectivity, *REFLECTIVITY_BOUNDS),
    ])
    best = None
    for _ in range(4):
        res = optimize.minimize(
            residual, p0, method="Nelder-Mead", bounds=bounds,
            options={"xatol": 1e-12, "fatol": 1e-20, "maxiter": 4000, "adaptive": True},
        )
        if best is None or res.fun < best.fun:
            best = res
        if np.allclose(res.x, p0, rtol=0, atol=1e-10):
            break
        p0 = res.x
    fitted = _with_params(template, np.exp(best.x[0]), np.exp(best.x[1]), best.x[2])
    if not best.fun < tol:
        raise FitFailed(
            f"frequency fit failed: residual {best.fun:.3g} >= {tol:g}",
            best_residual=float(best.fun), best=fitted,
        )
    return fitted, float(best.fun)
