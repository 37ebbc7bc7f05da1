"""TOML experiment configuration: schema, validation and model construction.

Every numeric key carries its unit in the name (``radius_m``,
``pressure_pa``, ``linewidth_hz``...). Ordinary frequencies in the file are
converted to angular rates here and nowhere else.
"""
import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import dynamics, fields, quantities, readout
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TWO_PI = 2.0 * np.pi


def _positive(v):
    return None if v > 0 else "must be > 0"


def _non_negative(v):
    return None if v >= 0 else "must be >= 0"


def _fraction(v):
    return None if 0 < v <= 1 else "must lie in (0, 1]"


def _unit_interval(v):
    return None if 0 <= v <= 1 else "must lie in [0, 1]"


def _above_one(v):
    return None if v > 1 else "must be > 1"


def _open_unit(v):
    return None if 0 < v < 1 else "must lie in (0, 1)"


def _overlap(v):
    return None if 0 <= v <= 0.9 else "must lie in [0, 0.9]"


def _vec3(v):
    return None if len(v) == 3 else "must have three components"


def _freq3(v):
    if len(v) != 3:
        return "must have three components"
    return None if all(x > 0 for x in v) else "all entries must be > 0"


def _choice(*options):
    def check(v):
        return None if v in options else f"must be one of {', '.join(options)}"
    return check


# section -> key -> (kind, default, check); default None means optional
SCHEMA = {
    "particle": {
        "radius_m": ("float", 71.5e-9, _positive),
        "density_kg_per_m3": ("float", 1850.0, _positive),
        "refractive_index": ("float", 1.45, _above_one),
    },
    "gas": {
        "pressure_pa": ("float", 150.0, _non_negative),
        "temperature_k": ("float", 300.0, _positive),
        "molecular_mass_kg": ("float", quantities.AIR_MOLECULE_MASS, _positive),
    },
    "tweezer": {
        "power_w": ("float", 0.150, _non_negative),
        "wavelength_m": ("float", 1064e-9, _positive),
        "numerical_aperture": ("float", 0.95, _open_unit),
        "waist_x_m": ("float", 0.558e-6, _positive),
        "waist_y_m": ("float", 0.685e-6, _positive),
        "focus_position_m": ("vec3", [0.0, 0.0, 380e-9], _vec3),
    },
    "reflector": {
        "surface_z_m": ("float", 0.0, None),
        "amplitude_reflectivity": ("float", 0.155, _unit_interval),
        "first_site_m": ("float", 380e-9, _positive),
        "reflection_phase_rad": ("float", None, None),
    },
    "cavity": {
        "resonance_wavelength_m": ("float", 1538.72e-9, _positive),
        "linewidth_hz": ("float", 5.0e9, _positive),
        "decay_length_field_m": ("float", 196.07e-9, _positive),
        "transverse_sigma_x_m": ("float", 1.2e-6, _positive),
        "transverse_sigma_y_m": ("float", 0.25e-6, _positive),
        "longitudinal_period_m": ("float", 0.6e-6, _positive),
        "mode_center_m": ("vec3", [0.0, 0.0, 0.0], _vec3),
        "coupling_ratio": ("float", 0.5, _fraction),
        "gz_calibration_hz_per_m": ("float", 3.6e15, _positive),
        "shift_amplitude_rad_per_s": ("float", None, _positive),
    },
    "probe": {
        "power_w": ("float", 260e-9, _positive),
        "wavelength_m": ("float", 1538.72e-9, _positive),
    },
    "detection": {
        "eta_cavity": ("float", 0.32, _fraction),
        "eta_path": ("float", 0.28125, _fraction),
    },
    "merit": {
        "n_cav": ("float", 800.0, _non_negative),
        "gamma_m_hz": ("float", 1.0e3, _positive),
        "reference_power_w": ("float", 1.0e-3, _positive),
    },
    "simulation": {
        "dt_s": ("float", 20e-9, _positive),
        "duration_s": ("float", 0.5, _positive),
        "record_stride": ("int", 10, _positive),
        "include_recoil": ("bool", False, None),
        "gravity": ("bool", False, None),
        "seed": ("int", 0, _non_negative),
    },
    "analysis": {
        "segment_length": ("int", 16384, _positive),
        "overlap": ("float", 0.5, _overlap),
        "window": ("str", "hann", None),
        "fit_half_band_hz": ("float", 30e3, _positive),
        "transduction": ("str", "full", _choice("full", "linear")),
        "calibrate_axes": ("strlist", ["z"], None),
    },
    "map": {
        "x_min_m": ("float", -1.5e-6, None),
        "x_max_m": ("float", 1.5e-6, None),
        "nx": ("int", 31, _positive),
        "y_min_m": ("float", -0.6e-6, None),
        "y_max_m": ("float", 0.6e-6, None),
        "ny": ("int", 13, _positive),
        "mode": ("str", "analytic", _choice("analytic", "simulated")),
        "jitter_m": ("float", 0.0, _non_negative),
        "simulated_duration_s": ("float", 0.1, _positive),
    },
    "sweep": {
        "distance_start_m": ("float", 0.0, None),
        "distance_stop_m": ("float", 5e-6, None),
        "n_distances": ("int", 11, _positive),
        "spot_check_m": ("floatlist", [0.0, 0.5e-6, 1e-6], None),
        "spot_check_duration_s": ("float", 0.1, _positive),
    },
    "load": {
        "offset_start_m": ("float", 0.0, _non_negative),
        "offset_stop_m": ("float", 1.2e-6, _non_negative),
        "n_offsets": ("int", 121, _positive),
    },
    "fit": {
        "targets_hz": ("floatlist", [280.3e3, 228.3e3, 444.9e3], _freq3),
    },
}


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    defaulted: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors

    def lines(self):
        out = [f"error: {p}: {m}" for p, m in self.errors]
        out += [f"warning: {p}: {m}" for p, m in self.warnings]
        out += [f"default: {p}" for p in self.defaulted]
        return out


def _coerce(kind, value):
    """Return (value, problem)."""
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None, "expected a number"
        value = float(value)
        return (value, None) if np.isfinite(value) else (None, "must be finite")
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return None, "expected an integer"
        return value, None
    if kind == "bool":
        return (value, None) if isinstance(value, bool) else (None, "expected true or false")
    if kind == "str":
        return (value, None) if isinstance(value, str) else (None, "expected a string")
    if kind == "strlist":
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            return list(value), None
        return None, "expected a list of strings"
    if kind in ("vec3", "floatlist"):
        if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
        ):
            return None, "expected a list of numbers"
        return [float(v) for v in value], None
    raise AssertionError(kind)


def resolve(raw):
    """Fill defaults and check every field.

    Returns ``(resolved, report)``; ``resolved`` holds every schema key.
    """
    report = ValidationReport()
    resolved = {}
    if not isinstance(raw, dict):
        report.errors.append(("<root>", "expected a table"))
        return resolved, report
    for section in raw:
        if section not in SCHEMA:
            report.warnings.append((section, "unknown section ignored"))
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            report.errors.append((section, "expected a table"))
            given = {}
        out = {}
        for key in given:
            if key not in keys:
                report.warnings.append((f"{section}.{key}", "unknown key ignored"))
        for key, (kind, default, check) in keys.items():
            path = f"{section}.{key}"
            if key not in given:
                out[key] = copy.deepcopy(default)
                if default is not None:
                    report.defaulted.append(path)
                continue
            value, problem = _coerce(kind, given[key])
            if problem is None and check is not None:
                problem = check(value)
            if problem is not None:
                report.errors.append((path, f"{problem} (got {given[key]!r})"))
                continue
            out[key] = value
        resolved[section] = out
    if report.ok:
        _cross_checks(resolved, report)
    return resolved, report


def _cross_checks(cfg, report):
    tw, rf = cfg["tweezer"], cfg["reflector"]
    half = tw["wavelength_m"] / 2.0
    if rf["reflection_phase_rad"] is None and not rf["first_site_m"] < half:
        report.errors.append(("reflector.first_site_m", f"must be below half a trap wavelength ({half:g} m)"))
    if tw["focus_position_m"][2] <= rf["surface_z_m"]:
        report.errors.append(("tweezer.focus_position_m", "focus must lie above the reflector surface"))
    for sec, lo, hi in (("map", "x_min_m", "x_max_m"), ("map", "y_min_m", "y_max_m"),
                        ("sweep", "distance_start_m", "distance_stop_m"),
                        ("load", "offset_start_m", "offset_stop_m")):
        if cfg[sec][hi] < cfg[sec][lo]:
            report.errors.append((f"{sec}.{hi}", f"must not be below {sec}.{lo}"))
    for ax in cfg["analysis"]["calibrate_axes"]:
        if ax not in ("x", "y", "z"):
            report.errors.append(("analysis.calibrate_axes", f"unknown axis {ax!r}"))
    sim = cfg["simulation"]
    if sim["duration_s"] < sim["dt_s"] * sim["record_stride"]:
        report.errors.append(("simulation.duration_s", "shorter than one recorded sample"))


def read_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}", [("<file>", str(exc))]) from exc


def default_config_path():
    return resources.files("nanolev") / "data" / "default.toml"


def validate_config(path):
    """Schema report for the file at ``path``; the file is only read."""
    return resolve(read_toml(path))[1]


def load_config(path=None, overrides=None):
    """Parse, validate and resolve a config file (the shipped default if ``path`` is None).

    ``overrides`` maps ``"section.key"`` to values applied before validation.
    """
    raw = read_toml(default_config_path() if path is None else path)
    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        raw.setdefault(section, {})[key] = value
    cfg, report = resolve(raw)
    if not report.ok:
        first = report.errors[0]
        raise ConfigError(f"{first[0]}: {first[1]}", report.errors)
    return cfg


def config_hash(cfg):
    """SHA-256 of the canonical JSON form of a resolved config."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()


# -- builders ----------------------------------------------------------------

def build_particle(cfg):
    p = cfg["particle"]
    return quantities.ParticleSpec(p["radius_m"], p["density_kg_per_m3"], p["refractive_index"])


def build_gas(cfg):
    g = cfg["gas"]
    return quantities.GasSpec(g["pressure_pa"], g["temperature_k"], g["molecular_mass_kg"])


def build_model(cfg):
    """FieldModel with the reflection phase and shift amplitude derived from the config."""
    t, r, c = cfg["tweezer"], cfg["reflector"], cfg["cavity"]
    tweezer = fields.TweezerSpec(
        t["power_w"], t["wavelength_m"], t["numerical_aperture"],
        t["waist_x_m"], t["waist_y_m"], tuple(t["focus_position_m"]),
    )
    phase = r["reflection_phase_rad"]
    if phase is None:
        phase = fields.reflection_phase_for_first_site(r["first_site_m"], t["wavelength_m"])
    reflector = fields.ReflectorSpec(r["surface_z_m"], r["amplitude_reflectivity"], phase)
    mode = fields.CavityModeSpec(
        resonance_wavelength=c["resonance_wavelength_m"],
        kappa=TWO_PI * c["linewidth_hz"],
        decay_length_field=c["decay_length_field_m"],
        transverse_sigma_x=c["transverse_sigma_x_m"],
        transverse_sigma_y=c["transverse_sigma_y_m"],
        longitudinal_period=c["longitudinal_period_m"],
        mode_center=tuple(c["mode_center_m"]),
        coupling_ratio=c["coupling_ratio"],
    )
    amplitude = c["shift_amplitude_rad_per_s"]
    if amplitude is None:
        # calibrate on the first site straight above the mode center
        distance = r["surface_z_m"] + fields.first_site_distance(
            fields.FieldModel(tweezer, reflector, mode)) - mode.surface_z
        amplitude = fields.shift_amplitude_for_gradient(mode, distance, TWO_PI * c["gz_calibration_hz_per_m"])
    mode = replace(mode, shift_amplitude=float(amplitude))
    try:
        return fields.FieldModel(tweezer, reflector, mode)
    except ValueError as exc:
        raise ConfigError(str(exc), [("reflector", str(exc))]) from exc


def build_probe(cfg):
    p = cfg["probe"]
    return readout.ProbeSpec(p["power_w"], p["wavelength_m"])


def build_chain(cfg):
    d = cfg["detection"]
    return readout.DetectionChain(d["eta_cavity"], d["eta_path"])


def build_sim(cfg, seed=None, duration=None):
    s = cfg["simulation"]
    return dynamics.SimParams(
        dt=s["dt_s"],
        duration=s["duration_s"] if duration is None else duration,
        seed=s["seed"] if seed is None else seed,
        include_recoil=s["include_recoil"],
        gravity=s["gravity"],
        record_stride=s["record_stride"],
    )


def model_to_config(cfg, model):
    """Copy of ``cfg`` with the tweezer waists and reflectivity taken from ``model``."""
    out = copy.deepcopy(cfg)
    out["tweezer"]["waist_x_m"] = float(model.tweezer.waist_x)
    out["tweezer"]["waist_y_m"] = float(model.tweezer.waist_y)
    out["reflector"]["amplitude_reflectivity"] = float(model.reflector.amplitude_reflectivity)
    return out
