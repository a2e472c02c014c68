import json
import subprocess
import sys

import numpy as np
import pytest

from nonrad.cli import main
from nonrad.core import (ParticleSpec, TwoBodySystem, constant_trajectory,
                         system_to_dict, trajectory_from_velocity_profile)
from nonrad.variational import (BoundaryConfig, DiscretizedPath,
                                boundary_to_dict, path_to_dict)


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def chain_spec(v=0.15, depth=2):
    return {"chain": {"base_jump_times": [0.0],
                      "jump_velocities": [[v, 0, 0], [-v, 0, 0]],
                      "partner_rule": "both", "chain_depth": depth},
            "initial_positions": [[0, 0, 1.0], [0, 0, -1.0]]}


def static_system_dict():
    p1 = ParticleSpec(1.0, 1.0, constant_trajectory((1, 0, 0), (-50, 50)))
    p2 = ParticleSpec(-1.0, 1.0, constant_trajectory((-1, 0, 0), (-50, 50)))
    return system_to_dict(TwoBodySystem(p1, p2))


def test_build_orbit_roundtrip(tmp_path, capsys):
    spec = write(tmp_path / "spec.json", chain_spec())
    out = tmp_path / "system.json"
    assert main(["--out", str(out), "build-orbit", spec]) == 0
    data = json.loads(out.read_text())
    assert len(data["particles"]) == 2
    assert data["particles"][0]["charge"] == 1.0


def test_build_orbit_static(tmp_path):
    spec = write(tmp_path / "s.json",
                 {"chain": {"base_jump_times": [], "jump_velocities": [[0, 0, 0]],
                            "partner_rule": "both", "chain_depth": 1},
                  "initial_positions": [[1, 0, 0], [-1, 0, 0]]})
    out = tmp_path / "sys.json"
    assert main(["--out", str(out), "build-orbit", spec]) == 0
    data = json.loads(out.read_text())
    coeffs = data["particles"][0]["trajectory"]["segments"][0]["coeffs"]
    assert np.allclose(coeffs[0], [1, 0, 0])
    assert np.allclose(coeffs[1:], 0.0)


def test_build_orbit_superluminal_exit_2(tmp_path, capsys):
    bad = chain_spec(v=1.2)
    spec = write(tmp_path / "bad.json", bad)
    assert main(["build-orbit", spec]) == 2
    err = capsys.readouterr().err
    assert "Superluminal" in err
    assert "1.2" in err


def test_missing_file_exit_2(capsys):
    assert main(["flux", "/nonexistent/system.json"]) == 2
    assert "Usage" in capsys.readouterr().err


def test_flux_static_zero(tmp_path):
    system = write(tmp_path / "sys.json", static_system_dict())
    out = tmp_path / "flux.json"
    csv_out = tmp_path / "nodes.csv"
    assert main(["--out", str(out), "flux", system, "--t", "0.0",
                 "--n-theta", "8", "--n-phi", "16", "--csv", str(csv_out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["total_flux"] == 0.0
    assert rep["reliable"] is True
    lines = csv_out.read_text().strip().splitlines()
    assert lines[0].split(",")[:4] == ["t", "n_x", "n_y", "n_z"]
    assert len(lines) == 1 + 8 * 16


def test_check_gah_chain(tmp_path):
    spec = write(tmp_path / "spec.json", chain_spec())
    sys_path = tmp_path / "system.json"
    assert main(["--out", str(sys_path), "build-orbit", spec]) == 0
    out = tmp_path / "gah.json"
    assert main(["--out", str(out), "check-gah", str(sys_path),
                 "--t-samples", "20", "--n-samples", "10"]) == 0
    rep = json.loads(out.read_text())
    assert rep["median"] < 1e-8
    assert rep["excluded_fraction"] < 0.05


def test_ndde_neutral_orders(tmp_path):
    out = tmp_path / "ndde.json"
    csv_out = tmp_path / "ndde.csv"
    assert main(["--out", str(out), "ndde", "--kind", "neutral", "--a=-1",
                 "--b", "0", "--tau", "1", "--history=-1,1",
                 "--horizon", "3", "--csv", str(csv_out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["smoothness_orders"] == [0, 0, 0]
    assert np.allclose(np.abs(rep["derivative_jumps"]), 2.0)
    assert len(csv_out.read_text().strip().splitlines()) == 202


def test_action_static(tmp_path):
    partner = ParticleSpec(-1.0, 1.0, constant_trajectory((-1, 0, 0), (-30, 30)))
    bc = BoundaryConfig(0.0, 1.0, np.array([1.0, 0, 0]), np.array([1.0, 0, 0]),
                        partner)
    times = np.linspace(0, 1, 5)
    path = DiscretizedPath(times, np.tile([1.0, 0, 0], (5, 1)))
    bpath = write(tmp_path / "b.json", boundary_to_dict(bc))
    ppath = write(tmp_path / "p.json", path_to_dict(path))
    out = tmp_path / "action.json"
    assert main(["--out", str(out), "action", bpath, ppath]) == 0
    rep = json.loads(out.read_text())
    assert rep["value"] == pytest.approx(-1.5, abs=1e-10)


def test_extremize_free(tmp_path):
    bc = BoundaryConfig(0.0, 2.0, np.zeros(3), np.array([1.0, 0, 0]),
                        None, 1.0, 0.0)
    times = np.linspace(0, 2, 5)
    pos = np.linspace([0, 0, 0], [1, 0, 0], 5)
    pos[1] += [0, 0.05, 0]
    pos[3] += [0, -0.04, 0.02]
    bpath = write(tmp_path / "b.json", boundary_to_dict(bc))
    ipath = write(tmp_path / "i.json",
                  path_to_dict(DiscretizedPath(times, pos)))
    out = tmp_path / "x.json"
    assert main(["--out", str(out), "extremize", bpath, ipath]) == 0
    rep = json.loads(out.read_text())
    assert rep["converged"] is True
    final = np.asarray(rep["path"]["node_positions"])
    straight = np.linspace([0, 0, 0], [1, 0, 0], 5)
    assert np.max(np.abs(final - straight)) < 1e-6


def test_momentum_smooth_point(tmp_path):
    tr1 = trajectory_from_velocity_profile(
        0.0, (1, 0, 0), [0.0], [(0.1, 0, 0), (0.1, 0, 0)], (-20, 20))
    system = TwoBodySystem(
        ParticleSpec(1.0, 1.0, tr1),
        ParticleSpec(-1.0, 1.0, constant_trajectory((-1, 0, 0), (-40, 40))))
    spath = write(tmp_path / "sys.json", system_to_dict(system))
    out = tmp_path / "mc.json"
    assert main(["--out", str(out), "momentum", spath, "--t", "0.0",
                 "--jump"]) == 0
    rep = json.loads(out.read_text())
    assert np.allclose(rep["mismatch"], 0.0, atol=1e-12)
    # not a breakpoint: distinct module exit code
    assert main(["momentum", spath, "--t", "0.5", "--jump"]) == 24


def test_field_map(tmp_path):
    system = write(tmp_path / "sys.json", static_system_dict())
    out = tmp_path / "map.csv"
    assert main(["--out", str(out), "field-map", system, "--t", "0",
                 "--n-theta", "4", "--n-phi", "8"]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 32


def test_deterministic_outputs(tmp_path):
    spec = write(tmp_path / "spec.json", chain_spec())
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert main(["--out", str(out1), "--seed", "7", "build-orbit", spec]) == 0
    assert main(["--out", str(out2), "--seed", "7", "build-orbit", spec]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    g1 = tmp_path / "g1.json"
    g2 = tmp_path / "g2.json"
    s = write(tmp_path / "sys.json", static_system_dict())
    for g in (g1, g2):
        assert main(["--out", str(g), "--seed", "3", "check-gah", s,
                     "--t-samples", "15", "--n-samples", "10"]) == 0
    assert g1.read_bytes() == g2.read_bytes()


def test_threads_do_not_change_output(tmp_path):
    spec = write(tmp_path / "spec.json", chain_spec())
    sys_path = tmp_path / "system.json"
    assert main(["--out", str(sys_path), "build-orbit", spec]) == 0
    outs = []
    for threads in ("1", "4"):
        o = tmp_path / f"flux{threads}.json"
        assert main(["--threads", threads, "--out", str(o), "flux",
                     str(sys_path), "--t", "0.5", "--n-theta", "8",
                     "--n-phi", "16"]) == 0
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]


def test_config_file_overrides_defaults(tmp_path):
    system = write(tmp_path / "sys.json", static_system_dict())
    cfg = write(tmp_path / "cfg.json", {"quad_n_theta": 4, "quad_n_phi": 8})
    out = tmp_path / "flux.json"
    assert main(["--config", cfg, "--out", str(out), "flux", system]) == 0
    rep = json.loads(out.read_text())
    assert rep["samples"] == 4 * 8
    bad = write(tmp_path / "bad_cfg.json", {"no_such_field": 1})
    assert main(["--config", bad, "flux", system]) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nonrad.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
