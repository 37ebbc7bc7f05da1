import numpy as np
import pytest

from nanolev import dynamics, fields, quantities, readout

NOMINAL_POWER = 0.150
NOMINAL_RADIUS = 71.5e-9
NOMINAL_PRESSURE = 150.0


@pytest.fixture(scope="session")
def model():
    return fields.FieldModel(fields.TweezerSpec(power=NOMINAL_POWER))


@pytest.fixture(scope="session")
def particle():
    return quantities.ParticleSpec(NOMINAL_RADIUS)


@pytest.fixture(scope="session")
def gas():
    return quantities.GasSpec(NOMINAL_PRESSURE, 300.0)


@pytest.fixture(scope="session")
def lin(model, particle):
    return dynamics.linearize(model, particle)


@pytest.fixture(scope="session")
def thermal_traj(model, particle, gas):
    """Half a second of thermal motion at 1.5 mbar, 300 K, dt = 20 ns."""
    sim = dynamics.SimParams(dt=20e-9, duration=0.5, seed=1, record_stride=10)
    return dynamics.simulate(model, particle, gas, sim)


@pytest.fixture(scope="session")
def probe():
    return readout.ProbeSpec(260e-9)


@pytest.fixture(scope="session")
def chain():
    return readout.DetectionChain()


@pytest.fixture(scope="session")
def full_record(thermal_traj, model, probe, chain):
    phase = readout.transduce(thermal_traj, model, "full")
    return readout.detect(phase, probe, chain, seed=1)


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ---------------------------------------------------------

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        props = dict(report.user_properties)
        _ACCEPTANCE.append((props.get("criterion", report.nodeid), report.outcome,
                            props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}  {detail}")
