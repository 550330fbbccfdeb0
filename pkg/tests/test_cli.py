import json
import math
from pathlib import Path

import numpy as np
import pytest

from darkpolariton.cli import main, run_store_retrieve, run_sweep
from darkpolariton.config import load_config, parse_config
from darkpolariton.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
[medium]
g_root_N = 1.0

[schedule]
kind = tanh_pair
amplitude = 100.0
rate = 0.1
t_off = 15.0
t_on = 125.0

[grid]
z_min = -60.0
z_max = 360.0
n_z = 421
t_min = 0.0
t_max = 200.0
n_t = 200

[scenario]
width = 10.0
record_every = 10
"""

FREE = """
[medium]
g_root_N = 0.0

[schedule]
kind = constant
omega0 = 1.0

[grid]
z_min = -40.0
z_max = 80.0
n_z = 241
t_min = 0.0
t_max = 40.0
n_t = 40

[scenario]
amplitude = 0.01
width = 5.0
record_every = 40
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults_describe_the_stop_restart_run():
    cfg = load_config()
    assert cfg.params.g_root_N == 1.0
    assert cfg.schedule.kind == "tanh_pair" and cfg.schedule.amplitude == 100.0
    assert (cfg.grid.z_min, cfg.grid.z_max, cfg.grid.n_z) == (-60.0, 360.0, 2101)
    assert (cfg.grid.t_max, cfg.grid.n_t) == (200.0, 2000)


def test_config_hash_tracks_effective_values():
    a = parse_config("[medium]\ng_root_N = 1.0\n")
    b = parse_config("# comment\n[medium]\ng_root_N=1.0\n")
    c = parse_config("[medium]\ng_root_N = 2.0\n")
    assert a.sha256 == b.sha256 != c.sha256


@pytest.mark.parametrize("text, fragment", [
    ("[medium]\ng_root_N = abc\n", "run.ini:2"),
    ("[medium]\ngamma_ab = -1\n", "decay rates"),
    ("[grid]\nn_z = 1\n", "n_z"),
    ("[bogus]\nx = 1\n", "unknown section"),
    ("[medium]\ncolour = red\n", "unknown key"),
    ("[schedule]\nkind = wiggle\n", "expected one of"),
    ("[medium\n", "section"),
])
def test_config_errors_name_the_offending_field(tmp_path, text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        load_config(write(tmp_path, text))


def test_malformed_config_exits_with_status_2(tmp_path, capsys):
    assert main(["validity", "--config", write(tmp_path, "[grid]\nn_t = zero\n")]) == 2
    assert "n_t" in capsys.readouterr().err
    assert main(["store", "--config", str(tmp_path / "missing.ini")]) == 2


def test_overflow_exits_with_status_4(tmp_path):
    text = FREE.replace("t_max = 40.0", "t_max = 120.0").replace("n_t = 40", "n_t = 120")
    assert main(["store", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 4


def test_fig2_output_is_deterministic_and_documented(tmp_path):
    cfg = write(tmp_path, SMALL)
    for out in ("a", "b"):
        assert main(["fig2", "--config", cfg, "--out", str(tmp_path / out)]) == 0
    names = ["components.csv", "manifest.json", "polariton.csv", "schedule.csv", "summary.csv"]
    assert sorted(p.name for p in (tmp_path / "a").iterdir()) == names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    sched = (tmp_path / "a" / "schedule.csv").read_bytes()
    assert b"\r" not in sched
    assert sched.splitlines()[0] == b"t [L0/c],cot_theta [1],theta [rad],v_g [c]"
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config_sha256"] == load_config(cfg).sha256
    assert set(manifest["files"]) == set(names) - {"manifest.json"}
    rows = np.loadtxt(tmp_path / "a" / "polariton.csv", delimiter=",", skiprows=1)
    assert rows.shape == (21 * 421, 3)


def test_fig2_components_during_the_stopped_phase(tmp_path):
    main(["fig2", "--config", write(tmp_path, SMALL), "--out", str(tmp_path / "o")])
    data = np.loadtxt(tmp_path / "o" / "components.csv", delimiter=",", skiprows=1)
    at = lambda t: data[data[:, 0] == t]
    assert np.max(np.abs(at(70.0)[:, 2])) == pytest.approx(3.34027e-3, rel=1e-3)
    assert np.max(at(70.0)[:, 4]) == pytest.approx(1.0, rel=1e-3)  # peak between samples


def test_propagate_with_full_integration(tmp_path):
    text = SMALL.replace("t_max = 200.0", "t_max = 40.0").replace("n_t = 200", "n_t = 400")
    assert main(["propagate", "--config", write(tmp_path, text), "--out", str(tmp_path / "o"),
                 "--full-bloch"]) == 0
    summary = dict(line.split(",") for line in (tmp_path / "o" / "summary.csv").read_text().splitlines()[1:])
    assert float(summary["bloch_max_deviation"]) < 1e-2
    assert (tmp_path / "o" / "bloch.csv").read_text().startswith("t [L0/c],z [L0],re_E")


def test_propagate_with_retarded_control(tmp_path):
    text = FREE.replace("g_root_N = 0.0", "g_root_N = 1.0").replace("kind = constant",
                                                                    "kind = constant\nretarded = yes")
    assert main(["propagate", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 0
    data = np.loadtxt(tmp_path / "o" / "field.csv", delimiter=",", skiprows=1)
    final = data[data[:, 0] == 40.0]
    assert final[np.argmax(final[:, 2]), 1] == pytest.approx(20.0, abs=0.5)


def test_store_without_medium_passes_the_pulse_at_c(tmp_path):
    report = run_store_retrieve(parse_config(FREE), tmp_path)
    assert report["fidelity"] == pytest.approx(1.0, abs=1e-12)
    assert report["energy_ratio"] == pytest.approx(1.0, abs=1e-12)
    assert report["measured_shift"] == pytest.approx(40.0, abs=1e-9)


def test_store_with_dephasing_matches_prediction(tmp_path):
    text = """
[medium]
g_root_N = 10.0
gamma_bc = 0.02

[schedule]
kind = tanh_pair
amplitude = 1.0
rate = 1.0
t_off = 5.0
t_on = 25.0

[grid]
z_min = -30.0
z_max = 50.0
n_z = 321
t_min = 0.0
t_max = 30.0
n_t = 300

[scenario]
amplitude = 0.001
width = 5.0
record_every = 300
"""
    report = run_store_retrieve(parse_config(text), tmp_path)
    assert report["energy_ratio"] == pytest.approx(report["predicted_energy_ratio"], rel=1e-3)
    assert report["predicted_energy_ratio"] < 0.6


def test_validity_report(tmp_path):
    assert main(["validity", "--config", str(CONFIGS / "validity.ini"), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "validity.csv").read_text().splitlines()
    assert rows[0] == "quantity,value,unit,flag"
    assert rows[2] == "adiabaticity_figure,500,1,good"
    res = np.loadtxt(tmp_path / "residuals.csv", delimiter=",", skiprows=1, usecols=1)
    assert np.all(res < 0.05)


def test_oracle_report(tmp_path):
    assert main(["oracle", "--config", str(CONFIGS / "oracle_quick.ini"), "--out", str(tmp_path)]) == 0
    res = np.loadtxt(tmp_path / "residuals.csv", delimiter=",", skiprows=1)
    assert res.shape == (6, 6)
    assert np.all(res[:, 4] < 1e-12) and np.allclose(res[:, 5], 1.0, atol=1e-12)
    transfer = (tmp_path / "transfer.csv").read_text().splitlines()[1:]
    fid = {tuple(r.split(",")[:3]): float(r.split(",")[4]) for r in transfer}
    assert fid[("2", "1", "slow")] > 0.999 > fid[("2", "1", "fast")]


SWEEP = FREE.replace("g_root_N = 0.0", "g_root_N = 1.0\ngamma_ab = 1.0").replace(
    "omega0 = 1.0", "omega0 = 3.0") + "\n[sweep]\nparameter = gamma_bc\nvalues = 0.0, 0.01, 0.02\n"


def test_sweep_rows_follow_the_grid_in_order(tmp_path):
    rows = run_sweep(parse_config(SWEEP), tmp_path, workers=2)
    assert [r[0] for r in rows] == [0.0, 0.01, 0.02]
    assert rows[0][3] > rows[1][3] > rows[2][3]
    assert run_sweep(parse_config(SWEEP), tmp_path / "serial", workers=1) == rows
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[0].startswith("gamma_bc,")


def test_sweep_over_ramp_time(tmp_path):
    text = "[oracle]\natoms = 2\nexcitations = 1\nsteps = 10\n[sweep]\nparameter = ramp_time\nvalues = 0.2, 200\n"
    rows = run_sweep(parse_config(text), tmp_path)
    assert rows[0][2] < rows[1][2] and rows[1][2] > 0.999


def test_empty_sweep_is_an_error(tmp_path):
    with pytest.raises(ConfigError):
        run_sweep(parse_config("[sweep]\nvalues =\n"), tmp_path)
    assert main(["sweep", "--out", str(tmp_path)]) == 2
