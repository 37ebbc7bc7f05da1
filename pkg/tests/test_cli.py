import json
import subprocess
import sys

import numpy as np
import pytest

from nanolev import cli, io, rng

SMALL = """
[simulation]
duration_s = 0.02
[analysis]
segment_length = 8192
[map]
nx = 3
ny = 3
[sweep]
n_distances = 3
distance_stop_m = 1e-6
spot_check_m = []
[load]
n_offsets = 5
offset_stop_m = 0.6e-6
"""


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _kv(path):
    _, _, rows = io.read_csv(path)
    return dict(rows)


def test_merit_default_config(tmp_path, capsys):
    code, out, _ = _run(capsys, "merit", "--out", tmp_path)
    assert code == 0
    v = _kv(tmp_path / "merit.csv")
    assert float(v["g0_Hz"]) == pytest.approx(9.3e3, rel=0.05)
    assert float(v["C_q"]) == pytest.approx(4e-9, rel=0.1)
    assert float(v["eta_min_limit"]) == pytest.approx(1 / 9, rel=1e-12)
    assert v["cooling_possible"] == "false"
    man = json.loads((tmp_path / "merit.manifest.json").read_text())
    assert man["outputs"] == ["merit.csv"] and man["timestamp"].endswith("Z")
    meta, _, _ = io.read_csv(tmp_path / "merit.csv")
    assert meta["run_id"] == man["run_id"]


def test_simulate_is_byte_deterministic(tmp_path, small_config, capsys):
    for fmt in ("binary", "csv"):
        outs = []
        for k in range(2):
            d = tmp_path / f"{fmt}{k}"
            assert _run(capsys, "simulate", "--config", small_config, "--seed", 5, "--out", d,
                        "--format", fmt)[0] == 0
            outs.append(d)
        name = "trajectory.lvts" if fmt == "binary" else "trajectory.csv"
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    hdr, data = io.read_series(tmp_path / "binary0" / "trajectory.lvts")
    assert hdr.channels == 6 and hdr.seed == 5 and data.shape == (100_000, 6)


def test_psd_of_white_fixture_is_flat(tmp_path, capsys):
    dt = 1e-6
    src = tmp_path / "white.lvts"
    io.write_series(src, rng.standard_normals(0, 0, 0, 1 << 18), dt)
    code, _, _ = _run(capsys, "psd", "--input", src, "--out", tmp_path)
    assert code == 0
    meta, header, rows = io.read_csv(tmp_path / "psd.csv")
    f, s = np.array(rows, dtype=float).T
    band = (f > 1e3) & (f < 490e3)
    assert np.mean(s[band]) == pytest.approx(2 * dt, rel=0.02)
    assert int(meta["n_averages"]) > 1


def test_readout_psd_calibrate_chain(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[simulation]\nduration_s = 0.2\n[analysis]\ntransduction = 'linear'\n")
    assert _run(capsys, "readout", "--config", cfg, "--seed", 2, "--out", tmp_path)[0] == 0
    rec = tmp_path / "record.lvts"
    hdr, _ = io.read_series(rec)
    assert hdr.gain > 0 and hdr.channels == 1
    code, _, _ = _run(capsys, "calibrate", "--config", cfg, "--input", rec, "--out", tmp_path)
    assert code == 0
    v = _kv(tmp_path / "calibration.csv")
    assert float(v["G_z_Hz_per_m"]) == pytest.approx(3.6e15, rel=0.05)
    assert float(v["g0_z_Hz"]) == pytest.approx(9.3e3, rel=0.10)
    assert float(v["meters_per_unit_z"]) * hdr.gain == pytest.approx(1.0, rel=0.05)
    assert (tmp_path / "calibration_fits.csv").exists()


def test_protocol_subcommands(tmp_path, small_config, capsys):
    for cmd, files in (("map", ["map_g0_x.csv", "map_g0_y.csv", "map_g0_z.csv"]),
                       ("sweep-focus", ["sweep.csv"]),
                       ("load-site", ["load_site.csv"]),
                       ("fit", ["fitted.toml", "fit.csv"])):
        code, out, err = _run(capsys, cmd, "--config", small_config, "--out", tmp_path)
        assert code == 0, err
        for f in files:
            assert (tmp_path / f).exists()
    _, header, rows = io.read_csv(tmp_path / "load_site.csv")
    assert [int(r[1]) for r in rows] == [0, 0, 1, 1, 1]
    _, _, rows = io.read_csv(tmp_path / "fit.csv")
    assert all(abs(float(r[3])) < 0.01 for r in rows)
    # the fitted model is itself a valid config
    assert _run(capsys, "validate", "--config", tmp_path / "fitted.toml")[0] == 0


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[particle]\nradius_m = -1.0\n")
    code, out, err = _run(capsys, "validate", "--config", bad)
    assert code == 1
    line = json.loads(err.strip().splitlines()[-1])
    assert line["exit_code"] == 1 and line["diagnostics"][0]["path"] == "particle.radius_m"
    assert _run(capsys, "merit", "--config", bad, "--out", tmp_path)[0] == 1
    assert _run(capsys, "psd", "--input", tmp_path / "nope.lvts", "--out", tmp_path)[0] == 1
    infeasible = tmp_path / "inf.toml"
    infeasible.write_text("[fit]\ntargets_hz = [280.3e3, 228.3e3, 150e3]\n")
    code, _, err = _run(capsys, "fit", "--config", infeasible, "--out", tmp_path)
    assert code == 2
    assert json.loads(err.strip())["type"] == "FitFailed"
    assert _run(capsys, "validate")[0] == 0


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "nanolev", "load-site", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert (tmp_path / "load_site.csv").exists()
