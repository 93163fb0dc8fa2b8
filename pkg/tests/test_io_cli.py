import json

import numpy as np
import pytest

from sqcir import IntegratorConfig, StateVector, integrate
from sqcir.analytics import mob_free_equilibrium
from sqcir.cli import main
from sqcir.errors import ConfigError
from sqcir.io import (
    PRESETS,
    build_report,
    config_from_dict,
    load_config,
    load_series,
    read_trajectory,
    write_report,
    write_trajectory,
)


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


# ------------------------------------------------------------------ config

def test_preset_with_integrator(tmp_path):
    cfg = load_config(_write(tmp_path, "c.json", {"preset": "table1", "integrator": {"t0": 0, "tf": 300, "h": 0.01}}))
    assert cfg.params == PRESETS["table1"]
    assert cfg.initial == StateVector(397, 1, 1, 1, 0)
    assert (cfg.integrator.tf, cfg.integrator.h) == (300, 0.01)


def test_override_applies_after_preset():
    cfg = config_from_dict({"preset": "table1", "params": {"epsilon": 0.26}})
    assert cfg.params == PRESETS["table1"].replace(epsilon=0.26)


def test_phi_zero_names_field(tmp_path):
    with pytest.raises(ConfigError, match="phi"):
        load_config(_write(tmp_path, "c.json", {"preset": "table1", "params": {"phi": 0}}))


@pytest.mark.parametrize("raw, needle", [
    ({"preset": "table1", "colour": 1}, "colour"),
    ({"preset": "table1", "params": {"kappa": 1}}, "params.kappa"),
    ({"preset": "table1", "mob": {"rate": 1}}, "mob.rate"),
    ({"preset": "table1", "initial": {"x": 1}}, "initial.x"),
    ({"preset": "nope"}, "nope"),
    ({"params": {"lambda": 1}}, "params.alpha"),
    ({"preset": "table1", "initial": {"s": -1}}, "initial.s"),
    ({"preset": "table1", "integrator": {"h": 0}}, "h"),
    ({"preset": "table1", "params": {"alpha": "x"}}, "params.alpha"),
])
def test_config_errors_name_the_field(raw, needle):
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        config_from_dict(raw)


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(ConfigError, match="line 3"):
        load_config(_write(tmp_path, "c.json", '{\n  "preset": "table1",\n  oops\n}'))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="missing.json"):
        load_config(tmp_path / "missing.json")


def test_network_config():
    cfg = config_from_dict({"preset": "table1", "network": {
        "k": 2, "t_matrix": [[0, 0.1], [0.2, 0]], "per_region": [{}, {"lambda": 2}]}})
    assert cfg.network.k == 2
    assert cfg.network.per_region[1].lam == 2
    assert cfg.network_initial.regions[1].s == 197
    with pytest.raises(ConfigError, match="t_matrix"):
        config_from_dict({"preset": "table1", "network": {"k": 2, "t_matrix": [[1, 0], [0, 0]]}})
    with pytest.raises(ConfigError, match="per_region"):
        config_from_dict({"preset": "table1", "network": {"k": 2, "t_matrix": [[0, 0], [0, 0]], "per_region": [{}]}})


def test_echo_reproduces_config():
    cfg = config_from_dict({"preset": "fig-peak", "params": {"nu": 0.07}, "mob": {"seed": 3},
                            "fit": {"free": ["epsilon", "delta"], "n_starts": 2}})
    assert config_from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


# ------------------------------------------------------------------ series

def test_series_example(tmp_path):
    s = load_series(_write(tmp_path, "s.csv", "t,cumulative\n0,0\n1,5\n2,9\n"))
    assert s.times.tolist() == [0, 1, 2] and s.cumulative.tolist() == [0, 5, 9]


@pytest.mark.parametrize("text, needle", [
    ("t,cumulative\n0,0\n1,5\n2,4\n", "row 4"),
    ("t,cumulative\n0,0\n1,x\n", "row 3"),
    ("t,cumulative\n0,0\n0,1\n", "row 3"),
    ("", "empty"),
    ("t,cumulative\n", "empty"),
    ("time,count\n0,0\n", "header"),
])
def test_series_errors(tmp_path, text, needle):
    with pytest.raises(ConfigError, match=needle):
        load_series(_write(tmp_path, "s.csv", text))


# ------------------------------------------------------------------ output

def test_trajectory_round_trip(tmp_path, table1):
    traj = integrate(StateVector(397, 1, 1, 1, 0), table1, IntegratorConfig(0, 5, 0.01))
    path = tmp_path / "t.csv"
    write_trajectory(traj, path)
    assert path.read_text().splitlines()[0] == "t,S,Q,C,I,R,epsilon"
    back = read_trajectory(path)
    np.testing.assert_allclose(back.states, traj.states, rtol=5e-10, atol=0)
    np.testing.assert_allclose(back.times, traj.times, rtol=5e-10)


def test_mfe_rows_identical(tmp_path, table1):
    traj = integrate(mob_free_equilibrium(table1), table1, IntegratorConfig(0, 10, 0.5))
    path = tmp_path / "t.csv"
    write_trajectory(traj, path)
    rows = {line.split(",", 1)[1] for line in path.read_text().splitlines()[1:]}
    assert len(rows) == 1


def test_report_contains_config(tmp_path):
    cfg = config_from_dict({"preset": "fig-sim"})
    path = tmp_path / "r.json"
    write_report(build_report("x", cfg, {"value": float("nan")}), path)
    rep = json.loads(path.read_text())
    assert rep["config"]["preset"] == "fig-sim"
    assert rep["config"]["params"]["lambda"] == 2.0
    assert rep["value"] is None and "version" in rep


# ------------------------------------------------------------------ cli

def test_analyze_reports_r0(tmp_path, capsys):
    cfg = _write(tmp_path, "table1.json", {"preset": "table1"})
    out = tmp_path / "a.json"
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["stability"]["r0_paper"] == pytest.approx(200.0, abs=1e-12)
    assert rep["equilibrium"]["mfe"]["s"] == pytest.approx(400.0)
    assert set(rep) >= {"equilibrium", "stability", "thresholds", "sensitivity", "config"}


def test_bad_config_exit_1(tmp_path, capsys):
    bad = _write(tmp_path, "bad.json", {"preset": "table1", "params": {"phi": -1}})
    assert main(["simulate", "--config", str(bad)]) == 1
    assert "phi" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["simulate", "--bogus"], [], ["fit"], ["sweep", "--param", "zeta"]])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_runtime_error_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, "c.json", {"preset": "fig-peak", "integrator": {"tf": 50, "h": 2.0}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "t.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_unwritable_output_exit_2(tmp_path, capsys):
    assert main(["analyze", "--out", str(tmp_path / "no" / "such" / "dir.json")]) == 2


def test_simulate_network_adds_region_column(tmp_path):
    cfg = _write(tmp_path, "n.json", {"preset": "table1", "integrator": {"tf": 2, "h": 0.01},
                                      "network": {"k": 3, "t_matrix": [[0, .1, 0], [0, 0, .1], [.1, 0, 0]]}})
    out = tmp_path / "n.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,region,S,Q,C,I,R,epsilon"
    assert len(lines) == 1 + 3 * 201
    back = read_trajectory(out)
    assert back.states.shape == (201, 3, 5)


def test_sweep_writes_table(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--from", "0.0001", "--to", "0.0003", "--steps", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,r0_paper,long_run_c,long_run_i,persisted,error"
    assert len(lines) == 4


def test_mc_twice_identical(tmp_path):
    cfg = _write(tmp_path, "figpeak.json", {"preset": "fig-peak", "integrator": {"tf": 40, "h": 0.01}})
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert main(["mc", "--config", str(cfg), "--runs", "4", "--seed", "7", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["seed"] == 7 and rep["config"]["mob"]["seed"] == 7
    assert (tmp_path / "a_runs.csv").read_text() == (tmp_path / "b_runs.csv").read_text()


def test_gen_data_then_fit(tmp_path):
    data = tmp_path / "d.csv"
    assert main(["gen-data", "--steps", "30", "--out", str(data)]) == 0
    series = load_series(data)
    assert series.times.tolist() == list(range(1, 31))
    cfg = _write(tmp_path, "c.json", {"preset": "table1", "fit": {"bounds": {"epsilon": [0.001, 0.2]}, "n_starts": 2}})
    outs = []
    for name in ("f1.json", "f2.json"):
        out = tmp_path / name
        assert main(["fit", "--config", str(cfg), "--data", str(data), "--seed", "4", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["result"]["theta"]["epsilon"] == pytest.approx(0.03, abs=1e-3)


def test_fit_unknown_free_parameter_exit_1(tmp_path):
    data = _write(tmp_path, "d.csv", "t,cumulative\n1,1\n2,2\n")
    assert main(["fit", "--data", str(data), "--free", "kappa"]) == 1


def test_report_echo_reruns_bit_exactly(tmp_path):
    out1 = tmp_path / "a.json"
    assert main(["mc", "--runs", "2", "--seed", "5", "--out", str(out1)]) == 0
    echo = _write(tmp_path, "echo.json", json.loads(out1.read_text())["config"])
    out2 = tmp_path / "b.json"
    assert main(["mc", "--config", str(echo), "--runs", "2", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
