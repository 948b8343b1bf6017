import numpy as np
import pytest

import tmhd


def small_config(**extra):
    text = "[grid]\nn = 8\n[integrator]\ndt = 0.01\nhorizon = 0.1\n"
    for key, value in extra.items():
        text += f"{key} = {value}\n"
    return tmhd.SimConfig.parse(text)


def test_defaults():
    cfg = tmhd.SimConfig()
    assert (cfg.n, cfg.cutoff) == (16, 5)
    assert cfg.taming_N == 100.0
    assert cfg.dt == 1e-3
    assert cfg.sigma_mass <= 1.0 / 36.0


def test_config_round_trip_and_errors():
    cfg = small_config()
    text = cfg.serialize()
    assert tmhd.SimConfig.parse(text).serialize() == text
    with pytest.raises(tmhd.ConfigError):
        tmhd.SimConfig.parse("[grid]\nn = 12\n")
    with pytest.raises(tmhd.TmhdError):
        tmhd.SimConfig.parse("[grid]\nbogus = 1\n")


def test_simulate_is_reproducible():
    cfg = small_config()
    a = tmhd.simulate(cfg)
    b = tmhd.simulate(cfg)
    assert a["exit_status"] == "completed"
    assert a["steps"] == 10
    d = a["diagnostics"]
    assert d.shape == (11, len(tmhd.COLUMNS))
    assert np.array_equal(d, b["diagnostics"])
    assert np.all(np.diff(d[:, 0]) > 0)
    assert np.all(d[:, tmhd.COLUMNS.index("div_residual")] < 1e-12)


def test_seed_changes_path():
    a = small_config()
    b = small_config()
    b.seed = 5
    assert not np.array_equal(tmhd.simulate(a)["diagnostics"], tmhd.simulate(b)["diagnostics"])


def test_verify_small():
    ok, checks = tmhd.verify(seed=1, samples=10)
    assert ok
    assert checks["hessian_ratio"][0] <= 9.0 + 1e-10


def test_cli_and_snapshot(tmp_path):
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text("[grid]\nn = 8\n[integrator]\ndt = 0.01\nhorizon = 0.05\n")
    out = tmp_path / "run"
    assert tmhd.run_command(["run", "--config", str(cfg_path), "--out", str(out), "--quiet"]) == 0
    snap = tmhd.read_snapshot(str(out / "snapshot_000001.stmh"))
    assert snap["n"] == 8
    assert snap["t"] == pytest.approx(0.05)
    assert (out / "metadata.json").exists()
    assert tmhd.run_command(["twin", "--delta", "0", "--out", str(tmp_path / "t")]) == 2
