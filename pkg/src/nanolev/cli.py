"""Command-line entry point: ``nanolev <subcommand> [--config PATH] ...``.

Exit status is 0 on success, 1 for configuration errors and 2 for physics
or analysis failures; failures also print one JSON line to stderr.
"""
import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, calibration, config, dynamics, fields, io, protocols, readout, spectral
from .errors import ConfigError, PhysicsError

TWO_PI = 2.0 * np.pi
SUBCOMMANDS = ("merit", "simulate", "readout", "psd", "calibrate", "map", "sweep-focus",
               "load-site", "fit", "validate")


class Run:
    """Resolved configuration plus the bookkeeping shared by every subcommand."""

    def __init__(self, args):
        overrides = {"simulation.seed": args.seed} if args.seed is not None else None
        self.cfg = config.load_config(args.config, overrides)
        self.seed = self.cfg["simulation"]["seed"]
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.format = args.format
        self.workers = args.workers
        self.manifest = io.RunManifest(
            config.config_hash(self.cfg), __version__, self.seed, args.command,
        )
        self.model = config.build_model(self.cfg)
        self.particle = config.build_particle(self.cfg)
        self.gas = config.build_gas(self.cfg)

    @property
    def meta(self):
        return self.manifest.csv_meta()

    def path(self, name):
        p = self.out / name
        self.manifest.outputs.append(name)
        return p

    def finish(self):
        self.manifest.write(self.out / f"{self.manifest.subcommand}.manifest.json")
        for name in self.manifest.outputs:
            print(self.out / name)


# -- shared pipeline steps ------------------------------------------------------

def _trajectory(run, duration=None):
    sim = config.build_sim(run.cfg, duration=duration)
    traj = dynamics.simulate(run.model, run.particle, run.gas, sim,
                             config_hash=run.manifest.config_hash)
    if traj.escaped:
        raise PhysicsError(f"particle escaped after {len(traj)} recorded samples")
    return traj


def _record(run):
    traj = _trajectory(run)
    phase = readout.transduce(traj, run.model, run.cfg["analysis"]["transduction"])
    return readout.detect(phase, config.build_probe(run.cfg), config.build_chain(run.cfg), run.seed)


def _load_record(path, channel):
    hdr, data = io.read_series(path)
    if not 0 <= channel < hdr.channels:
        raise ConfigError(f"channel {channel} not in file with {hdr.channels} channels",
                          [("--channel", "out of range")])
    return readout.HomodyneRecord(hdr.dt, data[:, channel], hdr.gain, hdr.seed)


def _psd(run, series, dt):
    a = run.cfg["analysis"]
    seg = min(a["segment_length"], spectral.nearest_pow2(len(series)) if len(series) >= 8 else 8)
    seg = min(seg, len(series))
    return spectral.welch(series, dt, seg, a["overlap"], a["window"])


# -- subcommands --------------------------------------------------------------

def cmd_merit(run, args):
    c = run.cfg
    rep = protocols.merit(run.model, run.particle, run.gas, c["merit"]["n_cav"],
                          TWO_PI * c["merit"]["gamma_m_hz"])
    lin = dynamics.linearize(run.model, run.particle)
    G = fields.coupling_gradient(run.model, lin.equilibrium)
    probe, chain = config.build_probe(c), config.build_chain(c)
    imprecision = readout.imprecision_psd(probe, chain, abs(G[2]), run.model.cavity_mode)
    values = {
        "g0_Hz": rep.g0 / TWO_PI,
        "C_q": rep.C_q,
        "eta_min": rep.eta_min,
        "eta_min_limit": protocols.FEEDBACK_LIMIT,
        "cooling_possible": rep.cooling_possible,
        "z_zpf_m": rep.z_zpf,
        "n_th": rep.n_th,
        "force_noise_N_per_rtHz": rep.force_noise,
        "gamma_gas_Hz": rep.gamma_gas / TWO_PI,
        "gamma_recoil_equiv_Hz": rep.gamma_recoil_equiv / TWO_PI,
        "f_x_Hz": lin.frequencies_hz[0],
        "f_y_Hz": lin.frequencies_hz[1],
        "f_z_Hz": lin.frequencies_hz[2],
        "G_z_Hz_per_m": abs(G[2]) / TWO_PI,
        "imprecision_m_per_rtHz": float(np.sqrt(imprecision)),
        "n_cav_model": readout.intracavity_photons(probe, run.model.cavity_mode),
        "per_photon_factor": c["merit"]["reference_power_w"] / c["probe"]["power_w"],
    }
    io.write_key_values(run.path("merit.csv"), values, run.meta)


def cmd_simulate(run, args):
    traj = _trajectory(run)
    data = np.hstack([traj.positions, traj.velocities])
    if run.format == "binary":
        io.write_series(run.path("trajectory.lvts"), data, traj.dt, run.seed, run_id=run.manifest.run_id)
    else:
        t = traj.times
        rows = (tuple([t[i], *data[i]]) for i in range(len(t)))
        io.write_csv(run.path("trajectory.csv"), ["t_s", "x_m", "y_m", "z_m", "vx_m_per_s",
                                                  "vy_m_per_s", "vz_m_per_s"], rows, run.meta)


def cmd_readout(run, args):
    rec = _record(run)
    if run.format == "binary":
        io.write_series(run.path("record.lvts"), rec.samples, rec.dt, run.seed,
                        rec.transduction_gain, run.manifest.run_id)
    else:
        meta = dict(run.meta, transduction_gain=repr(rec.transduction_gain))
        rows = ((i * rec.dt, v) for i, v in enumerate(rec.samples))
        io.write_csv(run.path("record.csv"), ["t_s", "signal"], rows, meta)


def cmd_psd(run, args):
    if args.input:
        rec = _load_record(args.input, args.channel)
    else:
        rec = _record(run)
    psd = _psd(run, rec.samples, rec.dt)
    meta = dict(run.meta, n_averages=psd.n_averages, window=psd.window)
    io.write_csv(run.path("psd.csv"), ["frequency_hz", "psd_per_hz"],
                 zip(psd.frequencies, psd.values), meta)


def cmd_calibrate(run, args):
    c = run.cfg
    rec = _load_record(args.input, args.channel) if args.input else _record(run)
    lin = dynamics.linearize(run.model, run.particle)
    half = c["analysis"]["fit_half_band_hz"]
    bands = {ax: (lin.frequencies_hz[i] - half, lin.frequencies_hz[i] + half)
             for i, ax in enumerate(calibration.AXES) if ax in c["analysis"]["calibrate_axes"]}
    probe, chain = config.build_probe(c), config.build_chain(c)
    seg = min(c["analysis"]["segment_length"], len(rec.samples))
    res = calibration.calibrate(rec, probe, chain, run.model.cavity_mode, run.gas.temperature,
                                run.particle.mass, bands, segment_length=seg)
    values = {"floor_units2_per_Hz": res.floor}
    for ax in bands:
        values[f"meters_per_unit_{ax}"] = res.meters_per_unit[ax]
        values[f"G_{ax}_Hz_per_m"] = res.G_extracted[ax] / TWO_PI
        values[f"g0_{ax}_Hz"] = res.g0_extracted[ax] / TWO_PI
        values[f"sensitivity_{ax}_m_per_rtHz"] = res.sensitivity[ax]
    if "z" in bands:
        _, factor = calibration.sensitivity_report(
            rec, res, "z", c["merit"]["reference_power_w"], probe.input_power)
        values["per_photon_factor"] = factor
    fits_name = "calibration_fits.csv"
    meta = dict(run.meta, fits=fits_name)
    io.write_key_values(run.path("calibration.csv"), values, meta)
    rows = []
    for ax, fit in res.fits.items():
        err = fit.stderr
        rows.append((ax, fit.f0, fit.gamma / TWO_PI, fit.area, fit.background,
                     err[0] / TWO_PI, err[1] / TWO_PI, err[2], fit.band[0], fit.band[1]))
    io.write_csv(run.path(fits_name), ["axis", "f0_Hz", "gamma_Hz", "area", "background",
                                       "f0_err_Hz", "gamma_err_Hz", "area_err", "band_lo_Hz",
                                       "band_hi_Hz"], rows, run.meta)


def cmd_map(run, args):
    m = run.cfg["map"]
    xs = np.linspace(m["x_min_m"], m["x_max_m"], m["nx"])
    ys = np.linspace(m["y_min_m"], m["y_max_m"], m["ny"])
    kw = {}
    if m["mode"] == "simulated":
        kw = dict(gas=run.gas, sim=config.build_sim(run.cfg, duration=m["simulated_duration_s"]),
                  probe=config.build_probe(run.cfg), chain=config.build_chain(run.cfg),
                  workers=run.workers, base_seed=run.seed,
                  transduction=run.cfg["analysis"]["transduction"])
    cmap = protocols.map_coupling(run.model, run.particle, (xs, ys), m["mode"],
                                  jitter=m["jitter_m"] or None, **kw)
    meta = dict(run.meta, mode=cmap.mode_of_computation, units="g0/2pi [Hz]",
                rows="y_m", columns="x_m", flagged=int(cmap.flags.sum()))
    for i, ax in enumerate(calibration.AXES):
        rows = ((y, *(cmap.g0_maps[i, j] / TWO_PI)) for j, y in enumerate(ys))
        io.write_csv(run.path(f"map_g0_{ax}.csv"), ["y_m", *[repr(float(x)) for x in xs]], rows, meta)


def cmd_sweep(run, args):
    s = run.cfg["sweep"]
    d = np.linspace(s["distance_start_m"], s["distance_stop_m"], s["n_distances"])
    spots = [v for v in s["spot_check_m"] if np.any(np.isclose(d, v, rtol=0, atol=1e-12))]
    sim = config.build_sim(run.cfg, duration=s["spot_check_duration_s"])
    rec = protocols.sweep_focus(run.model, run.particle, d, run.gas.temperature, spots,
                                run.gas, sim, run.workers)
    rows = []
    for n, dist in enumerate(rec.cavity_focus_distance):
        sim_var = rec.simulated_variances.get(float(dist), np.full(3, np.nan))
        rows.append((dist, rec.surface_gap[n], *(np.abs(rec.G_per_axis[n]) / TWO_PI),
                     *(rec.omegas[n] / TWO_PI), *rec.variances[n], *sim_var))
    header = ["distance_m", "surface_gap_m", "G_x_Hz_per_m", "G_y_Hz_per_m", "G_z_Hz_per_m",
              "f_x_Hz", "f_y_Hz", "f_z_Hz", "var_x_m2", "var_y_m2", "var_z_m2",
              "sim_var_x_m2", "sim_var_y_m2", "sim_var_z_m2"]
    io.write_csv(run.path("sweep.csv"), header, rows, run.meta)


def cmd_load(run, args):
    s = run.cfg["load"]
    rows = []
    for off in np.linspace(s["offset_start_m"], s["offset_stop_m"], s["n_offsets"]):
        r = protocols.load_site(run.model, run.particle, off)
        rows.append((off, r.final_site_index, r.g0_z / TWO_PI, r.omega_z / TWO_PI))
    io.write_csv(run.path("load_site.csv"), ["offset_m", "site_index", "g0_z_Hz", "f_z_Hz"],
                 rows, run.meta)


def cmd_fit(run, args):
    import tomli_w

    target = np.array(run.cfg["fit"]["targets_hz"])
    fitted, residual = protocols.fit_model(run.model, run.particle, target)
    got = protocols.model_frequencies(fitted, run.particle)
    out_cfg = config.model_to_config(run.cfg, fitted)
    doc = {sec: {k: v for k, v in keys.items() if v is not None} for sec, keys in out_cfg.items()}
    with open(run.path("fitted.toml"), "wb") as fh:
        fh.write(f"# run_id: {run.manifest.run_id}\n".encode())
        tomli_w.dump(doc, fh)
    rows = [(ax, t, g, (g - t) / t) for ax, t, g in zip(calibration.AXES, target, got)]
    io.write_csv(run.path("fit.csv"), ["axis", "target_Hz", "model_Hz", "relative_error"], rows,
                 dict(run.meta, residual=repr(residual)))


def cmd_validate(args):
    path = args.config or config.default_config_path()
    report = config.validate_config(path)
    for line in report.lines():
        print(line)
    print(f"{len(report.errors)} error(s), {len(report.warnings)} warning(s)")
    if not report.ok:
        raise ConfigError(f"{report.errors[0][0]}: {report.errors[0][1]}", report.errors)


COMMANDS = {
    "merit": cmd_merit,
    "simulate": cmd_simulate,
    "readout": cmd_readout,
    "psd": cmd_psd,
    "calibrate": cmd_calibrate,
    "map": cmd_map,
    "sweep-focus": cmd_sweep,
    "load-site": cmd_load,
    "fit": cmd_fit,
}


def _default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="TOML config (default: the shipped operating point)")
    common.add_argument("--seed", type=int, default=None, help="override simulation.seed")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--workers", type=int, default=_default_workers(),
                        help="worker processes for grid and sweep work")
    common.add_argument("--format", choices=("csv", "binary"), default="binary",
                        help="time-series output format")
    parser = argparse.ArgumentParser(prog="nanolev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("psd", "calibrate"):
            p.add_argument("--input", type=Path, default=None,
                           help="LVTS file to analyze instead of a fresh synthetic record")
            p.add_argument("--channel", type=int, default=0, help="channel of --input")
    return parser


def _fail(code, exc):
    line = {"status": "error", "exit_code": code, "type": type(exc).__name__, "message": str(exc)}
    diags = getattr(exc, "diagnostics", None)
    if diags:
        line["diagnostics"] = [{"path": p, "message": m} for p, m in diags]
    print(json.dumps(line), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cmd_validate(args)
            return 0
        run = Run(args)
        COMMANDS[args.command](run, args)
        run.finish()
    except ConfigError as exc:
        return _fail(1, exc)
    except PhysicsError as exc:
        return _fail(2, exc)
    except (ValueError, OSError) as exc:
        return _fail(1, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
