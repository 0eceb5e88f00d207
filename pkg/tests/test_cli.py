"""CLI exit codes and output files."""

import json

import pytest

from wospp.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


@pytest.fixture
def scenario_path(tmp_path):
    raw = {"n_agents": 8, "swarm_radius": 1.0, "refractory_time": 4,
           "cycle_max": 50, "seed": 3,
           "primitive": "synchronization", "horizon": 40}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(raw))
    return path


def test_run_writes_outputs(scenario_path, tmp_path):
    trace = tmp_path / "trace.csv"
    metrics = tmp_path / "metrics.csv"
    code = main(["run", "--scenario", str(scenario_path),
                 "--trace-out", str(trace), "--metrics-out", str(metrics)])
    assert code == EXIT_OK
    assert trace.exists() and metrics.exists()


def test_seed_and_steps_overrides(scenario_path, tmp_path):
    trace = tmp_path / "trace.csv"
    code = main(["run", "--scenario", str(scenario_path), "--seed", "7",
                 "--steps", "20", "--trace-out", str(trace)])
    assert code == EXIT_OK
    lines = trace.read_text().splitlines()
    assert json.loads(lines[0])["seed"] == 7
    last_timestep = int(lines[-1].split(",")[0])
    assert last_timestep == 20


def test_missing_scenario_is_config_error_with_no_outputs(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code = main(["run", "--scenario", str(tmp_path / "absent.json"),
                 "--trace-out", str(trace)])
    assert code == EXIT_CONFIG
    assert not trace.exists()
    assert "configuration error" in capsys.readouterr().err


def test_invalid_scenario_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_agents": 8}))
    assert main(["run", "--scenario", str(path)]) == EXIT_CONFIG


def test_unreachable_density_is_runtime_error(tmp_path, capsys):
    raw = {"n_agents": 30, "swarm_radius": 100.0, "refractory_time": 315,
           "primitive": "synchronization", "horizon": 10}
    path = tmp_path / "sparse.json"
    path.write_text(json.dumps(raw))
    assert main(["run", "--scenario", str(path)]) == EXIT_RUNTIME
    assert "runtime error" in capsys.readouterr().err


def test_sweep_writes_aggregated_metrics(scenario_path, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--scenario", str(scenario_path), "--seeds", "3",
                 "--metrics-out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    meta = json.loads(lines[0])
    assert meta["sweep"] == {"base_seed": 3, "n_seeds": 3}
    assert lines[1] == "timestep,name,mean,std,count"
    assert all(line.endswith(",3") for line in lines[2:])


def test_sweep_requires_metrics_destination(scenario_path):
    code = main(["sweep", "--scenario", str(scenario_path), "--seeds", "2"])
    assert code == EXIT_CONFIG


def test_sweep_rejects_nonpositive_seed_count(scenario_path, tmp_path):
    code = main(["sweep", "--scenario", str(scenario_path), "--seeds", "0",
                 "--metrics-out", str(tmp_path / "out.csv")])
    assert code == EXIT_CONFIG
