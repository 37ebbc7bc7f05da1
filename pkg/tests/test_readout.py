import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanolev import dynamics, fields, readout, spectral
from nanolev.readout import DetectionChain, ProbeSpec
import oracles


def _static(model, n=4096, dt=1e-6, offset=(0.0, 0.0, 0.0)):
    eq = fields.site_position(model, 0)
    pos = np.tile(eq + np.asarray(offset), (n, 1))
    return dynamics.Trajectory(dt, pos, np.zeros_like(pos), 0, eq)


def _harmonic(model, amp, f=200e3, n=1 << 14, dt=50e-9, axis=2):
    eq = fields.site_position(model, 0)
    pos = np.tile(eq, (n, 1))
    pos[:, axis] += amp * np.sin(2 * np.pi * f * dt * np.arange(n))
    return dynamics.Trajectory(dt, pos, np.zeros_like(pos), 0, eq)


def test_detection_efficiency_examples():
    assert readout.detection_efficiency(DetectionChain()) == pytest.approx(0.09, abs=1e-12)
    assert readout.detection_efficiency(DetectionChain(1.0, 1.0)) == 1.0
    # improved cavity coupling with a path loss budget of 0.35
    assert readout.detection_efficiency(DetectionChain(0.96, 0.35)) > 0.3
    with pytest.raises(ValueError):
        DetectionChain(0.0, 0.5)
    with pytest.raises(ValueError):
        DetectionChain(0.5, 1.5)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(1e-3, 1.0), b=st.floats(1e-3, 1.0))
def test_efficiency_is_product(a, b):
    assert DetectionChain(a, b).eta_total == pytest.approx(a * b, abs=1e-12)


def test_static_particle_gives_zero_phase(model):
    for mode in ("full", "linear"):
        ph = readout.transduce(_static(model), model, mode)
        assert np.all(ph.phase == 0.0)
    with pytest.raises(ValueError):
        readout.transduce(_static(model), model, "quadratic")


def test_pure_shot_noise_floor_is_unity(model, chain):
    ph = readout.transduce(_static(model, n=1 << 18), model)
    for power in (1e-15, 260e-9, 1e-3):
        rec = readout.detect(ph, ProbeSpec(power), chain, seed=3)
        psd = spectral.welch(rec.samples, rec.dt, segment_length=4096)
        assert spectral.floor_level(psd, 1e3, 0.45 / rec.dt) == pytest.approx(1.0, rel=0.02)
    with pytest.raises(ValueError):
        readout.detect(ph, ProbeSpec(0.0), chain, seed=0)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3))
def test_linear_mode_is_linear(model, a):
    base = _harmonic(model, 0.05e-9, n=512)
    scaled = _harmonic(model, 0.05e-9 * a, n=512)
    p1 = readout.transduce(base, model, "linear").phase
    p2 = readout.transduce(scaled, model, "linear").phase
    np.testing.assert_allclose(p2, a * p1, rtol=1e-9, atol=1e-9 * np.max(np.abs(a * p1)))


def test_full_mode_reduces_to_linear(model):
    tr = _harmonic(model, 0.1e-9, n=2048)
    full = readout.transduce(tr, model, "full").phase
    lin = readout.transduce(tr, model, "linear").phase
    assert np.max(np.abs(full - lin)) / np.max(np.abs(lin)) < 1e-3


def test_linear_mode_single_line(model, probe, chain):
    tr = _harmonic(model, 3e-9)
    rec = readout.detect(readout.transduce(tr, model, "linear"), probe, chain, seed=1)
    psd = spectral.welch(rec.samples, rec.dt, segment_length=4096)
    peaks = spectral.find_peaks(psd, min_prominence=30.0)
    assert len(peaks) == 1
    assert peaks[0][0] == pytest.approx(200e3, abs=2 * psd.df)


def test_doubling_efficiency_doubles_signal_ratio(model, probe):
    tr = _harmonic(model, 1e-12)
    ph = readout.transduce(tr, model, "linear")
    r1 = readout.detect(ph, probe, DetectionChain(0.32, 0.28125), seed=1)
    r2 = readout.detect(ph, probe, DetectionChain(0.64, 0.28125), seed=1)
    assert r2.transduction_gain**2 / r1.transduction_gain**2 == pytest.approx(2.0, rel=1e-12)


def test_recorded_gain(model, probe, chain):
    ph = readout.transduce(_harmonic(model, 1e-12, n=64), model, "linear")
    rec = readout.detect(ph, probe, chain, seed=0)
    Gz = abs(fields.coupling_gradient(model, fields.site_position(model, 0))[2])
    expected = np.sqrt(2 * 0.09 * probe.photon_flux) * readout.phase_gain(model.cavity_mode) * Gz
    assert rec.transduction_gain == pytest.approx(expected, rel=1e-12)


def test_imprecision_examples(model, probe, chain):
    G = 2 * np.pi * 3.6e6 / 1e-9
    S = readout.imprecision_psd(probe, chain, G, model.cavity_mode)
    flux = oracles.photon_flux(260e-9, 1538.72e-9)
    kappa = 2 * np.pi * 5e9
    assert S == pytest.approx((kappa / (2 * G)) ** 2 / (2 * 0.09 * flux), rel=1e-12)
    assert np.sqrt(S) == pytest.approx(1.1533819436700377e-12, rel=1e-9)
    S4 = readout.imprecision_psd(ProbeSpec(4 * 260e-9), chain, G, model.cavity_mode)
    assert np.sqrt(S4) == pytest.approx(np.sqrt(S) / 2, rel=1e-12)
    big = readout.imprecision_psd(ProbeSpec(1.0), DetectionChain(1.0, 1.0), G, model.cavity_mode)
    assert big < 1e-7 * S
    with pytest.raises(ValueError):
        readout.imprecision_psd(probe, chain, 0.0, model.cavity_mode)


def test_imprecision_matches_record_floor(full_record, probe, chain, model, lin):
    psd = spectral.welch(full_record.samples, full_record.dt, segment_length=1 << 14)
    floor = spectral.floor_level(psd, 0.5 * psd.frequencies[-1], 0.95 * psd.frequencies[-1])
    Gz = abs(fields.coupling_gradient(model, lin.equilibrium)[2])
    S = readout.imprecision_psd(probe, chain, Gz, model.cavity_mode)
    assert floor / full_record.transduction_gain**2 == pytest.approx(S, rel=0.10)


def test_intracavity_photons(model):
    assert readout.intracavity_photons(ProbeSpec(0.0), model.cavity_mode) == 0.0
    n = readout.intracavity_photons(ProbeSpec(260e-9), model.cavity_mode)
    assert n == pytest.approx(128.214, rel=1e-3)
    assert readout.intracavity_photons(ProbeSpec(520e-9), model.cavity_mode) == pytest.approx(2 * n, rel=1e-12)


def test_full_mode_shows_second_harmonic(full_record, lin):
    psd = spectral.welch(full_record.samples, full_record.dt, segment_length=1 << 14)
    fz = lin.frequencies_hz[2]
    floor = spectral.floor_level(psd, 0.5 * psd.frequencies[-1], 0.95 * psd.frequencies[-1])
    _, near = psd.band(2 * fz * 0.97, 2 * fz * 1.03)
    assert near.max() > 5 * floor


def test_vibration_tone(model, probe, chain):
    ph = readout.transduce(_static(model, n=1 << 14, dt=50e-9), model)
    rec = readout.detect(ph, probe, chain, seed=0, tone=(600e3, 2000.0))
    psd = spectral.welch(rec.samples, rec.dt, segment_length=4096)
    assert psd.frequencies[np.argmax(psd.values)] == pytest.approx(600e3, abs=2 * psd.df)


def test_detect_is_deterministic(full_record, thermal_traj, model, probe, chain):
    again = readout.detect(readout.transduce(thermal_traj, model, "full"), probe, chain, seed=1)
    assert again.samples.tobytes() == full_record.samples.tobytes()
