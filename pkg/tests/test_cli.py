import json
import math

import numpy as np
import pytest

from aero_ftc import cli, config
from aero_ftc.sim import ConfigError, ScenarioConfig, run_scenario
from aero_ftc.tracefile import TRACE_COLUMNS, TraceFormatError, read_trace_csv, write_trace_csv

SHORT = {"sim": {"duration": 6.0}}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_empty_config_is_the_default_scenario():
    cfg = config.scenario_from_dict({})
    ref = ScenarioConfig()
    assert cfg.duration == ref.duration and cfg.T_s == ref.T_s
    assert cfg.pitch == ref.pitch and cfg.yaw == ref.yaw
    assert cfg.faults == () and cfg.estimator_enabled and cfg.use_estimated_state
    np.testing.assert_array_equal(cfg.plant.A, ref.plant.A)
    np.testing.assert_array_equal(cfg.weights.Q, ref.weights.Q)


def test_full_config_parses():
    doc = {
        "model": {"source": "params", "params": {"J_p": 0.03}, "u_max": 12, "u_min": -12},
        "lqr": {"Q_diag": [100, 50, 1, 1], "R_diag": [0.1, 0.1]},
        "estimator": {"feedback": "measured", "fault_q": 1e-5, "meas_sd": 2e-4},
        "accommodation": {"gamma_max": 0.9, "activation_threshold": 0.1},
        "reference": {"pitch": {"amplitude_deg": 5, "period": 30}, "yaw": {"phase": 0}},
        "faults": [{"time": 1, "gamma": [0.2, 0.1]}, {"time": 2, "preset": ["2-blade", "healthy"]}],
        "sim": {"duration": 10, "T_s": 0.005, "seed": 9, "x0_deg": [5, 0, 0, 0]},
    }
    cfg = config.scenario_from_dict(doc)
    assert cfg.plant.u_max == 12 and cfg.plant.A[2, 0] == pytest.approx(-0.00744 / 0.03)
    assert cfg.weights.R[0, 0] == 0.1 and not cfg.use_estimated_state
    assert cfg.accommodation.gamma_max == 0.9
    assert cfg.pitch.amplitude_deg == 5 and cfg.pitch.period == 30 and cfg.yaw.amplitude_deg == 45
    assert [e.gamma for e in cfg.faults] == [(0.2, 0.1), (0.25, 0.0)]
    assert cfg.seed == 9 and cfg.x0[0] == pytest.approx(math.radians(5))
    assert cfg.filter_noise.R_a[0, 0] == pytest.approx(4e-8)


@pytest.mark.parametrize("doc, key", [
    ({"sim": {"duraton": 5}}, "sim.duraton"),
    ({"bogus": {}}, "bogus"),
    ({"sim": {"T_s": "fast"}}, "sim.T_s"),
    ({"faults": [{"time": 1, "gamma": [0.2, 1.5]}]}, "faults[0].gamma"),
    ({"faults": [{"time": 1, "preset": ["3-blade", "healthy"]}]}, "faults[0].preset"),
    ({"lqr": {"R_diag": [0.0, 1.0]}}, "lqr"),
    ({"estimator": {"feedback": "psychic"}}, "estimator.feedback"),
    ({"reference": {"pitch": {"amplitude_deg": 80}}}, "reference.pitch.amplitude_deg"),
    ({"model": {"source": "params", "params": {"J_y": -1}}}, "model"),
])
def test_config_errors_name_the_key(doc, key):
    with pytest.raises(ConfigError) as exc:
        config.scenario_from_dict(doc)
    assert exc.value.key == key


def test_presets_parse():
    for name in config.PRESETS:
        config.scenario_from_dict(config.preset(name))
    fig7 = config.scenario_from_dict(config.preset("fig7"))
    assert fig7.faults[0].gamma == (0.7, 0.7) and fig7.accommodation.enabled


def test_csv_round_trip_is_exact(tmp_path):
    tr = run_scenario(ScenarioConfig(duration=2.0, faults=()))
    cols = tr.columns()
    path = write_trace_csv(tmp_path / "t.csv", cols)
    back = read_trace_csv(path)
    assert tuple(back) == TRACE_COLUMNS
    for name in TRACE_COLUMNS:
        np.testing.assert_array_equal(back[name], cols[name])


def test_read_rejects_foreign_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(TraceFormatError):
        read_trace_csv(p)


def test_run_config_happy_path(tmp_path, capsys):
    cfg = write_json(tmp_path / "healthy.json", SHORT)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "healthy_trace.csv").exists()
    assert (out / "healthy_metrics.csv").exists()
    header = (out / "healthy_trace.csv").read_text().splitlines()[0]
    assert header.split(",") == list(TRACE_COLUMNS)
    assert "pitch" in capsys.readouterr().out


def test_run_malformed_config(tmp_path, capsys):
    cfg = write_json(tmp_path / "bad.json", {"sim": {"durration": 3}})
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config" and err["key"] == "sim.durration"


def test_run_invalid_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert cli.main(["run", "--config", str(p)]) == 2
    assert json.loads(capsys.readouterr().err)["key"] == "config"


def test_run_divergence_exit_code(tmp_path, capsys):
    doc = {"model": {"A": (np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-0.319, 0, -0.1164, 0],
                                      [0, 0, 0, -0.1386]]) + 2 * np.eye(4)).tolist()},
           "estimator": {"enabled": False}, "faults": [{"time": 0, "gamma": [1, 1]}],
           "sim": {"duration": 10, "x0_deg": [5, 0, 0, 0]}}
    cfg = write_json(tmp_path / "boom.json", doc)
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "diverged"
    assert (tmp_path / "boom_trace.csv").exists()


def test_env_var_output_fallback(tmp_path, monkeypatch):
    cfg = write_json(tmp_path / "s.json", SHORT)
    monkeypatch.setenv("AERO_FTC_OUT", str(tmp_path / "env_out"))
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "env_out" / "s_trace.csv").exists()


def test_flags_override(tmp_path):
    cfg = write_json(tmp_path / "f.json", {"sim": {"duration": 3.0},
                                           "faults": [{"time": 0, "gamma": [0.5, 0.5]}]})
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path), "--no-estimator",
                     "--seed", "5"]) == 0
    cols = read_trace_csv(tmp_path / "f_trace.csv")
    np.testing.assert_array_equal(cols["gamma0_est"], 0)


def test_manifest_batch(tmp_path):
    write_json(tmp_path / "a.json", SHORT)
    write_json(tmp_path / "b.json", {"sim": {"duration": 4.0}})
    man = write_json(tmp_path / "m.json", {"scenarios": [{"name": "one", "config": "a.json"},
                                                          {"name": "two", "config": "b.json"}],
                                            "out_dir": str(tmp_path / "batch"), "seed": 3})
    assert cli.main(["run", "--manifest", str(man)]) == 0
    assert len(read_trace_csv(tmp_path / "batch" / "one_trace.csv")["t"]) == 3001
    assert len(read_trace_csv(tmp_path / "batch" / "two_trace.csv")["t"]) == 2001


def test_manifest_duplicate_names(tmp_path, capsys):
    write_json(tmp_path / "a.json", SHORT)
    man = write_json(tmp_path / "m.json", {"scenarios": [{"name": "x", "config": "a.json"},
                                                          {"name": "x", "config": "a.json"}]})
    assert cli.main(["run", "--manifest", str(man)]) == 2
    assert "duplicate" in capsys.readouterr().err


def test_preset_fig7_run(tmp_path):
    assert cli.main(["run", "--preset", "fig7", "--out", str(tmp_path)]) == 0
    cols = read_trace_csv(tmp_path / "fig7_trace.csv")
    assert cols["gamma0_true"][-1] == 0.7 and cols["gamma1_true"][-1] == 0.7
    assert cols["gamma0_true"][0] == 0.0


def test_compare_self_is_zero(tmp_path, capsys):
    cfg = write_json(tmp_path / "h.json", {"sim": {"duration": 45.0}})
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)])
    trace = tmp_path / "h_trace.csv"
    base, _, delta = cli.compare_summaries(read_trace_csv(trace), read_trace_csv(trace))
    assert all(v == 0 for ax in delta.values() for v in ax.values())
    assert cli.main(["compare", str(trace), str(trace), "--out", str(tmp_path / "cmp.csv")]) == 0
    assert "delta" in capsys.readouterr().out


def test_compare_detects_unaccommodated_degradation(tmp_path):
    cli.main(["run", "--config", str(write_json(tmp_path / "h.json", {"sim": {"duration": 50.0}})),
              "--out", str(tmp_path)])
    faulty = {"sim": {"duration": 50.0}, "faults": [{"time": 5, "gamma": [0.7, 0.7]}],
              "accommodation": {"enabled": False}}
    cli.main(["run", "--config", str(write_json(tmp_path / "f.json", faulty)), "--out", str(tmp_path)])
    _, _, delta = cli.compare_summaries(read_trace_csv(tmp_path / "h_trace.csv"),
                                        read_trace_csv(tmp_path / "f_trace.csv"), t_from=10)
    assert delta["pitch"]["sse"] > 0


def test_compare_mismatched_grids(tmp_path, capsys):
    a = write_trace_csv(tmp_path / "a.csv", run_scenario(ScenarioConfig(duration=2.0)).columns())
    b = write_trace_csv(tmp_path / "b.csv", run_scenario(ScenarioConfig(duration=3.0)).columns())
    assert cli.main(["compare", str(a), str(b)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "trace"


def test_release_command(capsys):
    assert cli.main(["release"]) == 0
    assert "0.561" in capsys.readouterr().out
