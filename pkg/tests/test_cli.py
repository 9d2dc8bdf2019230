"""CLI subcommands, config overrides, output files, and exit codes."""

import json

import pytest

from pca_wald.cli import main

SPIKED5 = {"kind": "spiked", "params": {"spikes": [4.0], "sigma2": 1.0}, "seed": 1, "p": 5}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "model": SPIKED5, "mode": "ks_gaussian", "n": 150, "reps": 8, "base_seed": 3,
    }))
    return path


def test_simulate_writes_outputs_and_exits_zero(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(config_path), "--out-dir", str(out)])
    assert code == 0
    assert (out / "replications.csv").exists()
    assert (out / "summary.json").exists()
    printed = json.loads(capsys.readouterr().out)
    assert printed["mode"] == "ks_gaussian"
    assert printed["reps"] == 8


def test_overrides_take_effect(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(config_path), "--reps", "4",
                 "--seed", "99", "--out-dir", str(out)])
    assert code == 0
    payload = json.loads((out / "summary.json").read_text())
    assert payload["reps"] == 4
    assert payload["base_seed"] == 99


def test_mode_override(config_path, capsys):
    code = main(["simulate", "--config", str(config_path), "--mode", "coverage"])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["mode"] == "coverage"


def test_precondition_failure_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "model": SPIKED5, "mode": "ks_gaussian", "n": 3, "reps": 5,
        "fisher_kind": "plugin",
    }))
    code = main(["simulate", "--config", str(path)])
    assert code == 2
    assert "n >= p" in capsys.readouterr().err


def test_missing_config_exits_two(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "nope.json")])
    assert code == 2


def test_simulate_rejects_non_simulate_mode(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"model": SPIKED5, "mode": "bias_sweep",
                                "n_grid": [100, 200], "reps": 10}))
    assert main(["simulate", "--config", str(path)]) == 2


def test_bias_sweep_subcommand(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "model": {"kind": "spiked", "params": {"spikes": [0.5], "sigma2": 1.0},
                  "seed": 1, "p": 5},
        "mode": "bias_sweep", "reps": 100, "n_grid": [100, 200], "base_seed": 1,
    }))
    out = tmp_path / "out"
    code = main(["bias-sweep", "--config", str(path), "--out-dir", str(out)])
    assert code == 0
    assert (out / "bias_sweep.csv").exists()
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["bias_table"]) == 2


def test_perturb_check_subcommand(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "model": SPIKED5, "mode": "perturb_check", "reps": 9, "base_seed": 2,
    }))
    out = tmp_path / "out"
    code = main(["perturb-check", "--config", str(path), "--out-dir", str(out)])
    assert code == 0
    lines = (out / "perturb_check.csv").read_text().strip().splitlines()
    assert lines[0] == "ensemble,norm_e,ratio1,ratio2,ratio3,pass"
    payload = json.loads(capsys.readouterr().out)
    assert payload["extra"]["violations"] == 0


def test_opnorm_check_subcommand(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    # forced_mode overrides whatever the config says
    path.write_text(json.dumps({"model": SPIKED5, "mode": "ks_gaussian",
                                "n": 300, "reps": 20}))
    code = main(["opnorm-check", "--config", str(path)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["mode"] == "opnorm_check"
    assert 0.3 < payload["extra"]["ratio"] < 10


def test_assumptions_subcommand(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"model": SPIKED5, "mode": "coverage", "n": 5000}))
    code = main(["assumptions", "--config", str(path), "--gamma", "0.5"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["gap_defined"] is True
    assert payload["cond_gap_ok"] is True
    assert payload["lambda_min"] == 1.0


def test_toml_config(tmp_path, capsys):
    path = tmp_path / "cfg.toml"
    path.write_text(
        'mode = "ks_chisq"\nn = 120\nreps = 6\nbase_seed = 4\n'
        '[model]\nkind = "spiked"\nseed = 1\np = 5\n'
        '[model.params]\nspikes = [4.0]\nsigma2 = 1.0\n')
    code = main(["simulate", "--config", str(path)])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["mode"] == "ks_chisq"
