import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanolev import calibration, dynamics, fields, quantities as q, readout, spectral
from nanolev.errors import FitFailed, FloorNotResolvable
from nanolev.readout import DetectionChain, HomodyneRecord, ProbeSpec

HALF_BAND = 30e3


@pytest.fixture(scope="module")
def linear_record(thermal_traj, model, probe, chain):
    phase = readout.transduce(thermal_traj, model, "linear")
    return readout.detect(phase, probe, chain, seed=1)


def _band(lin):
    fz = lin.frequencies_hz[2]
    return (fz - HALF_BAND, fz + HALF_BAND)


def _fit(record, lin):
    psd = spectral.welch(record.samples, record.dt, segment_length=1 << 14)
    return spectral.fit_lorentzian(psd, _band(lin))


def test_round_trip_scale(linear_record, lin, particle):
    c = calibration.thermal_calibrate(linear_record, _fit(linear_record, lin), 300.0, particle.mass)
    assert c * linear_record.transduction_gain == pytest.approx(1.0, rel=0.05)


def test_scale_independent_of_temperature(model, particle, lin, probe, chain):
    scales = []
    for T in (300.0, 600.0):
        sim = dynamics.SimParams(20e-9, 0.2, seed=8, record_stride=10)
        tr = dynamics.simulate(model, particle, q.GasSpec(150.0, T), sim)
        rec = readout.detect(readout.transduce(tr, model, "linear"), probe, chain, seed=8)
        fit = _fit(rec, lin)
        scales.append((calibration.thermal_calibrate(rec, fit, T, particle.mass), fit.area))
    (c1, a1), (c2, a2) = scales
    assert a2 / a1 == pytest.approx(2.0, rel=0.15)
    assert c2 / c1 == pytest.approx(1.0, rel=0.05)


def test_equipartition_area_gives_unit_scale(particle):
    w = 2 * np.pi * 444.9e3
    area = q.KB * 300.0 / (particle.mass * w**2)
    fit = spectral.LorentzianFit(w, 1e4, area, 1.0)
    assert calibration.thermal_calibrate(None, fit, 300.0, particle.mass) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(FitFailed):
        calibration.thermal_calibrate(None, spectral.LorentzianFit(w, 1e4, -area, 1.0), 300.0, particle.mass)


def test_extract_G_round_trip(linear_record, lin, particle, model, probe, chain):
    fit = _fit(linear_record, lin)
    c = calibration.thermal_calibrate(linear_record, fit, 300.0, particle.mass)
    G = calibration.extract_G(linear_record, c, probe, chain, model.cavity_mode)
    Gz = abs(fields.coupling_gradient(model, lin.equilibrium)[2])
    assert Gz == pytest.approx(2 * np.pi * 3.6e6 / 1e-9, rel=1e-3)
    assert G == pytest.approx(Gz, rel=0.05)


def test_extract_G_invariant_to_consistent_efficiency(thermal_traj, lin, particle, model, probe):
    phase = readout.transduce(thermal_traj, model, "linear")
    Gs = []
    for chain in (DetectionChain(0.32, 0.28125), DetectionChain(0.16, 0.28125)):
        rec = readout.detect(phase, probe, chain, seed=2)
        c = calibration.thermal_calibrate(rec, _fit(rec, lin), 300.0, particle.mass)
        Gs.append(calibration.extract_G(rec, c, probe, chain, model.cavity_mode))
    assert Gs[1] == pytest.approx(Gs[0], rel=0.05)


def test_infinite_flux_is_rejected(linear_record, model, chain):
    with pytest.raises(FloorNotResolvable):
        calibration.extract_G(linear_record, 1e-12, ProbeSpec(np.inf), chain, model.cavity_mode, floor=1.0)
    with pytest.raises(FloorNotResolvable):
        calibration.extract_G(linear_record, 1e-12, ProbeSpec(1e-6), chain, model.cavity_mode, floor=0.0)


def test_g0_examples(particle):
    G = 2 * np.pi * 3.6e6 / 1e-9
    w = 2 * np.pi * 444.9e3
    g0 = calibration.extract_g0(G, particle.mass, w)
    assert g0 / (2 * np.pi) == pytest.approx(9.3e3, rel=0.02)
    assert calibration.extract_g0(0.0, particle.mass, w) == 0.0
    assert calibration.extract_g0(2 * G, particle.mass, w) == pytest.approx(2 * g0, rel=1e-14)
    with pytest.raises(ValueError):
        calibration.extract_g0(-G, particle.mass, w)


@settings(max_examples=10, deadline=None)
@given(k=st.floats(1e-3, 1e3))
def test_calibration_absorbs_record_scale(k, linear_record, lin, particle, model, probe, chain):
    bands = {"z": _band(lin)}
    base = calibration.calibrate(linear_record, probe, chain, model.cavity_mode, 300.0,
                                 particle.mass, bands, segment_length=1 << 14)
    scaled_rec = HomodyneRecord(linear_record.dt, k * linear_record.samples,
                                k * linear_record.transduction_gain)
    scaled = calibration.calibrate(scaled_rec, probe, chain, model.cavity_mode, 300.0,
                                   particle.mass, bands, segment_length=1 << 14)
    assert scaled.meters_per_unit["z"] * k == pytest.approx(base.meters_per_unit["z"], rel=1e-6)
    assert scaled.G_extracted["z"] == pytest.approx(base.G_extracted["z"], rel=1e-6)
    assert scaled.sensitivity["z"] == pytest.approx(base.sensitivity["z"], rel=1e-6)


def test_g0_consistent_with_zpf(full_record, lin, particle, model, probe, chain):
    res = calibration.calibrate(full_record, probe, chain, model.cavity_mode, 300.0,
                                particle.mass, {"z": _band(lin)}, segment_length=1 << 14)
    ax = res.axis("z")
    assert ax["g0"] == pytest.approx(q.zpf(particle.mass, ax["omega0"]) * ax["G"], rel=1e-12)
    assert ax["meters_per_unit"] > 0 and ax["sensitivity"] > 0
    assert ax["g0"] / (2 * np.pi) == pytest.approx(9.3e3, rel=0.10)


def test_sensitivity_scaling(linear_record, lin, particle, model, probe, chain):
    res = calibration.calibrate(linear_record, probe, chain, model.cavity_mode, 300.0,
                                particle.mass, {"z": _band(lin)}, segment_length=1 << 14)
    s1 = calibration.sensitivity_report(linear_record, res)
    S_model = readout.imprecision_psd(probe, chain, abs(fields.coupling_gradient(model, lin.equilibrium)[2]),
                                      model.cavity_mode)
    assert s1**2 == pytest.approx(S_model, rel=0.10)
    res.floor *= 4
    assert calibration.sensitivity_report(linear_record, res) == pytest.approx(2 * s1, rel=1e-12)
    res.floor /= 4
    _, factor = calibration.sensitivity_report(linear_record, res, reference_power=1e-3,
                                               probe_power=probe.input_power)
    assert factor == pytest.approx(1e-3 / 260e-9, rel=1e-12)
    assert factor > 100
