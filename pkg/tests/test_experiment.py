import json

import pytest

from esemsim import cli, report
from esemsim.errors import ConfigError, InfeasiblePlan
from esemsim.experiment import (
    CSV_FIELDS,
    ExperimentConfig,
    aggregate_rows,
    run_experiment,
    write_results,
)


def tiny_exp(**kwargs):
    defaults = dict(trials=1, seed=5, protocols=["full_ia"], algorithms=["esem"])
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(m=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(protocols=["nope"])


def test_single_trial_row_count():
    rows = run_experiment(tiny_exp())
    # one row per cell per (protocol, algorithm)
    assert len(rows) == 3
    assert set(rows[0]) == set(CSV_FIELDS)
    assert all(r["converged"] == 1 for r in rows)


def test_grid_point_selection_and_bounds():
    exp = tiny_exp(m=[1, 2])
    rows = run_experiment(exp, grid_point=1)
    assert {r["m"] for r in rows} == {2}
    with pytest.raises(ConfigError):
        run_experiment(exp, grid_point=7)


def test_all_infeasible_raises():
    exp = tiny_exp(m=[15], protocols=["full_ia"])
    with pytest.raises(InfeasiblePlan):
        run_experiment(exp)


def test_determinism(tmp_path):
    exp = tiny_exp(algorithms=["esem", "epa"])
    a = write_results(run_experiment(exp), exp, tmp_path / "a")
    b = write_results(run_experiment(exp), exp, tmp_path / "b")
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "b" / "results.csv").read_bytes()
    sidecar = json.loads((tmp_path / "a" / "run_config.json").read_text())
    assert sidecar["seed"] == 5 and sidecar["trials"] == 1


def test_aggregates_mean_over_cells():
    rows = run_experiment(tiny_exp())
    aggs = aggregate_rows(rows)
    assert len(aggs) == 1
    ese = [float(r["ese_bps_hz_j"]) for r in rows]
    assert float(aggs[0]["mean_ese"]) == pytest.approx(sum(ese) / len(ese))
    assert aggs[0]["n_trials"] == 3
    assert float(aggs[0]["convergence_rate"]) == 1.0


def test_emit_plot_data(tmp_path):
    exp = tiny_exp(p_max_b_dbm=[30.0, 40.0])
    aggs = aggregate_rows(run_experiment(exp))
    written = report.emit_plot_data(aggs, tmp_path)
    names = {p.name for p in written}
    assert "ese_vs_p_max_b_dbm.csv" in names
    assert "ese_vs_p_max_b_dbm.png" in names
    for p in written:
        assert p.exists() and p.stat().st_size > 0


def test_cli_success(tmp_path, capsys):
    rc = cli.main([
        "--protocol", "full", "--algorithm", "esem",
        "--trials", "1", "--seed", "3", "--out", str(tmp_path / "run"),
    ])
    assert rc == 0
    assert (tmp_path / "run" / "results.csv").exists()


def test_cli_config_file(tmp_path):
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps({
        "trials": 1, "seed": 2, "p_max_b_dbm": [30.0],
        "network": {"k_ues": 4},
    }))
    rc = cli.main([
        "--config", str(cfg_path), "--protocol", "full",
        "--algorithm", "esem", "--out", str(tmp_path / "run"),
    ])
    assert rc == 0


def test_cli_bad_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"unknown_key\": 1}")
    assert cli.main(["--config", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    assert cli.main(["--config", str(missing)]) == 2


def test_cli_infeasible_exit_3(tmp_path):
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps({"trials": 1, "m": [15]}))
    rc = cli.main([
        "--config", str(cfg_path), "--protocol", "full",
        "--algorithm", "esem", "--out", str(tmp_path / "run"),
    ])
    assert rc == 3
