import json

import pytest

from nullwave import cli
from nullwave.config import ConfigError, config_from_dict, parse_config
from nullwave.runner import (
    EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, chaplygin_scenario, run_scenario, sweep_workers,
)


def _write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def test_minimal_config_takes_defaults():
    cfg = config_from_dict({"scenario": "linear_radial", "t_final": 10})
    assert cfg.grid.cfl == 0.5 and cfg.grid.dr == 0.005 and cfg.grid.outer == "dod"
    assert cfg.nonlinearity.is_zero
    assert cfg.obstacle.b_const == 0.875
    assert cfg.diagnostics.order_cap == 2
    assert cfg.r_max >= cfg.data.center_r + cfg.data.width + cfg.t_final


def test_cfl_bound_message():
    with pytest.raises(ConfigError, match="grid.cfl exceeds 0.5"):
        config_from_dict({"scenario": "linear_radial", "grid": {"cfl": 1.5}})


def test_overlapping_bump_rejected():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"scenario": "chaplygin_radial", "data": {"center_r": 1.0, "width": 0.5}})
    assert "overlaps the obstacle" in str(info.value)
    assert info.value.path == "data"


@pytest.mark.parametrize("raw, path", [
    ({"scenario": "nope"}, "scenario"),
    ({"scenario": "linear_radial", "grid": {"dx": 1}}, "grid.dx"),
    ({"scenario": "linear_radial", "t_final": -1}, "t_final"),
    ({"scenario": "linear_radial", "diagnostics": {"order_cap": 3}}, "diagnostics.order_cap"),
    ({"scenario": "linear_3d", "nonlinearity": {"preset": "chaplygin"}}, "nonlinearity"),
    ({"scenario": "null_radial", "obstacle": {"kind": "star", "base": 0.875,
                                              "harmonics": [[2, 0, 0.01]]}}, "obstacle"),
    ({"scenario": "linear_radial", "obstacle": {"kind": "ball", "b": 1.5}}, "obstacle"),
    ({"scenario": "linear_radial", "grid": {"r_max": 5}}, "grid.r_max"),
    ({"scenario": "epsilon_sweep", "epsilons": [0.1]}, "epsilons"),
    ({"scenario": "linear_radial", "seed": 1.5}, "seed"),
])
def test_semantic_errors_name_the_field(raw, path):
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw)
    assert info.value.path == path


def test_malformed_json(tmp_path):
    with pytest.raises(ConfigError, match="malformed JSON"):
        parse_config(_write(tmp_path, "{oops"))


def test_config_json_round_trip():
    cfg = chaplygin_scenario(0.01, t_final=5.0)
    again = config_from_dict(cfg.to_json())
    assert again.to_json() == cfg.to_json()


def test_linear_run_writes_artifacts(tmp_path):
    cfg = config_from_dict({"scenario": "linear_radial", "t_final": 10, "grid": {"dr": 0.01},
                            "diagnostics": {"order_cap": 1, "snapshot_times": [5.0]}})
    summary = run_scenario(cfg, tmp_path / "out")
    assert summary.exit_status == EXIT_OK
    assert summary.energy_drift < 1e-3
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["files"]) >= {"config.json", "diagnostics.csv", "summary.json",
                                      "snapshot_t5.0000.csv"}
    header = (out / "diagnostics.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "t"
    assert {"E00", "kss_lhs", "kss_rhs", "localE_r5", "envelope_D", "blowup_flag", "E_1_0"} <= set(header)


def test_identical_config_gives_identical_csv(tmp_path):
    cfg = config_from_dict({"scenario": "chaplygin_radial", "t_final": 3, "grid": {"dr": 0.02},
                            "data": {"epsilon": 0.02}, "seed": 7})
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    for name in ("diagnostics.csv", "flow.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, {"scenario": "linear_radial", "t_final": 2, "grid": {"dr": 0.02}}, "good.json")
    assert cli.main(["run", str(good), "--out", str(tmp_path / "g")]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["exit_status"] == 0 and summary["manifest"]
    bad = _write(tmp_path, {"scenario": "linear_radial", "grid": {"cfl": 1.5}}, "bad.json")
    assert cli.main(["run", str(bad)]) == EXIT_CONFIG
    assert "grid.cfl exceeds 0.5" in capsys.readouterr().err
    broken = _write(tmp_path, "{", "broken.json")
    assert cli.main(["run", str(broken)]) == EXIT_CONFIG


def test_cli_nonnull_blowup(tmp_path, capsys):
    cfg = _write(tmp_path, {"scenario": "nonnull_radial", "t_final": 30, "grid": {"dr": 0.02},
                            "data": {"center_r": 3, "width": 0.5, "u0_amp": 3, "outgoing": True,
                                     "epsilon": 0.1},
                            "diagnostics": {"order_cap": 0}})
    code = cli.main(["run", str(cfg), "--out", str(tmp_path / "nn")])
    summary = json.loads(capsys.readouterr().out)
    assert code == EXIT_BLOWUP == summary["exit_status"]
    assert summary["blowup_time"] < 30 and summary["amplification"] > 10


def test_cli_structural_checks(tmp_path, capsys):
    spec = _write(tmp_path, {"preset": "chaplygin"}, "spec.json")
    ball = _write(tmp_path, {"kind": "ball", "b": 0.875}, "ball.json")
    assert cli.main(["check-null", str(spec)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["holds"] is True
    assert cli.main(["check-admissible", str(spec), str(ball)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["holds"] is True
    dt2 = _write(tmp_path, {"preset": "nonnull_dt2"}, "dt2.json")
    cli.main(["check-null", str(dt2)])
    out = json.loads(capsys.readouterr().out)
    assert out["holds"] is False and out["witness"]["omega"]


def test_cli_contrast_degenerate(capsys):
    assert cli.main(["contrast", "--epsilon", "0", "--t-final", "1", "--dr", "0.05"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["degenerate"] is True
    assert out["ratio"] is None


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("NULLWAVE_THREADS", "3")
    assert sweep_workers(5) == 3 and sweep_workers(2) == 2
    monkeypatch.delenv("NULLWAVE_THREADS")
    assert sweep_workers(5) == 1
