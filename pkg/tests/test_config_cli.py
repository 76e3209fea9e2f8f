import dataclasses
import json
from pathlib import Path

import pytest

from seedbank.cli import main, run_experiment
from seedbank.config import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    serialize_config,
)
from seedbank.measures import ModelParams, SwitchingMeasure

FULL_TEXT = """
# comment line
[run]
seed = 11
out = results

[model]
c = 0.8
K = 2.0
u_active = 1.0
u_dormant = 0.25

[to-dormant]
atom 0.5 0.4
beta 2.0 3.0 0.25

[to-active]
atom 0.9 0.1

[experiment]
kind = duality
times = 0.1 0.5
xs = 0.2
ys = 0.8

[numeric]
reps = 500
dt = 0.002
T = 1.5
"""


def test_empty_config_gives_documented_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.model.c == 1.0 and cfg.model.K == 1.0
    assert cfg.model.is_spontaneous()
    assert cfg.model.u_active == 0.0 and cfg.model.u1 == 0.0


def test_full_config_parses():
    cfg = parse_config(FULL_TEXT)
    assert cfg.seed == 11 and cfg.out == "results"
    assert cfg.model.c == 0.8 and cfg.model.K == 2.0
    assert cfg.model.lambda_ad == SwitchingMeasure(
        atoms=((0.5, 0.4),), beta_components=((2.0, 3.0, 0.25),)
    )
    assert cfg.model.lambda_da == SwitchingMeasure.atom(0.9, 0.1)
    assert cfg.experiment == "duality"
    assert cfg.times == (0.1, 0.5) and cfg.xs == (0.2,)
    assert cfg.reps == 500 and cfg.dt == 0.002 and cfg.horizon == 1.5


def test_round_trip():
    cfg = parse_config(FULL_TEXT)
    assert parse_config(serialize_config(cfg)) == cfg
    assert parse_config(serialize_config(ExperimentConfig())) == ExperimentConfig()


def test_range_error_names_key_and_line():
    text = "[model]\nc = 1.0\nK = -1\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert "K" in str(err.value)
    assert any(ln == 1 for ln, _ in err.value.errors)  # points at [model]


def test_unknown_keys_and_sections_with_lines():
    text = "[model]\nspeed = 3\n\n[warp]\nx = 1\n\n[numeric]\nreps = zero\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    msgs = {ln: msg for ln, msg in err.value.errors}
    assert 2 in msgs and "speed" in msgs[2]
    assert 4 in msgs and "warp" in msgs[4]
    assert 8 in msgs and "reps" in msgs[8]


def test_measure_line_errors():
    with pytest.raises(ConfigError) as err:
        parse_config("[to-dormant]\natom 0.5\n")
    assert err.value.errors[0][0] == 2
    with pytest.raises(ConfigError):
        parse_config("stray = 1\n")
    with pytest.raises(ConfigError) as err:
        parse_config("[to-dormant]\natom 1.5 0.4\n")  # atom outside (0, 1]
    assert "(0, 1]" in str(err.value)


def test_cli_duality_end_to_end(tmp_path):
    cfg_file = tmp_path / "exp.ini"
    cfg_file.write_text(
        "[experiment]\nkind = duality\ntimes = 0.2\nxs = 0.2\nys = 0.8\n"
        "[numeric]\nreps = 300\ndt = 0.002\nT = 0.2\n"
    )
    out = tmp_path / "o1"
    rc = main(["duality", "--config", str(cfg_file), "--seed", "5", "--out", str(out)])
    assert rc == 0
    lines = (out / "duality.csv").read_text().splitlines()
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == "n,m,x,y,t,lhs,rhs,diff,stderr"
    data = [ln for ln in lines if not ln.startswith("#")][1:]
    assert len(data) == 8  # the (n, m) grid at one (x, y, t)
    assert any("master-seed = 5" in ln for ln in lines)


def test_cli_byte_identical_reruns_and_workers(tmp_path):
    cfg = ExperimentConfig(
        experiment="duality", seed=3, out=str(tmp_path / "w"), reps=200,
        times=(0.1,), xs=(0.2, 0.8), ys=(0.8,), horizon=0.1, dt=1e-3,
    )
    run_experiment(cfg, workers=1)
    first = (tmp_path / "w" / "duality.csv").read_bytes()
    run_experiment(cfg, workers=1)
    again = (tmp_path / "w" / "duality.csv").read_bytes()
    run_experiment(cfg, workers=2)
    pooled = (tmp_path / "w" / "duality.csv").read_bytes()
    assert first == again == pooled


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nK = -2\n")
    rc = main(["duality", "--config", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "line" in err and "K" in err


def test_cli_unreachable_mrca_is_reported(tmp_path, capsys):
    cfg = ExperimentConfig(
        experiment="blockcount", out=str(tmp_path / "b"), n=2, m=1, reps=50,
        model=ModelParams(c=0.0, K=1.0),
    )
    rc = run_experiment(cfg, workers=1)
    assert rc == 2
    assert "unreachable" in capsys.readouterr().err


def test_cli_stats_and_scan_outputs(tmp_path):
    cfg = ExperimentConfig(
        experiment="stats", out=str(tmp_path / "s"), n=4, m=0, reps=120,
        model=ModelParams(c=1.0, K=1.0, u_active=1.0, u_dormant=0.5),
    )
    assert run_experiment(cfg, workers=1) == 0
    sfs_lines = [
        ln for ln in (tmp_path / "s" / "sfs.csv").read_text().splitlines()
        if not ln.startswith("#")
    ]
    assert sfs_lines[0] == "n,xi1,xi2,xi3"
    assert len(sfs_lines) == 121
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert "segregating_sites" in summary and "expected_segregating_sites_oracle" in summary

    cfg2 = ExperimentConfig(
        experiment="tmrca-scan", out=str(tmp_path / "t"), n_list=(16, 32), reps=100
    )
    assert run_experiment(cfg2, workers=1) == 0
    scan_lines = [
        ln for ln in (tmp_path / "t" / "scan.csv").read_text().splitlines()
        if not ln.startswith("#")
    ]
    assert scan_lines[0] == "n,mean,stderr,ratio"
    assert len(scan_lines) == 3


def test_cli_genealogy_and_trajectory_outputs(tmp_path):
    cfg = ExperimentConfig(experiment="coalescent", out=str(tmp_path / "g"), n=4, m=1, reps=60)
    assert run_experiment(cfg, workers=1) == 0
    assert (tmp_path / "g" / "genealogy.jsonl").exists()
    assert (tmp_path / "g" / "genealogy.newick").read_text().startswith("# marks")
    summary = json.loads((tmp_path / "g" / "summary.json").read_text())
    assert summary["reached_mrca"] == 60

    cfg2 = ExperimentConfig(
        experiment="diffusion", out=str(tmp_path / "d"), x0=0.4, y0=0.8,
        horizon=0.5, dt=1e-3, record_every=100,
        model=ModelParams(c=1.0, K=1.0, lambda_ad=SwitchingMeasure.atom(0.5, 1.0)),
    )
    assert run_experiment(cfg2, workers=1) == 0
    assert (tmp_path / "d" / "trajectory.csv").exists()
    jumps = [
        ln for ln in (tmp_path / "d" / "jumps.csv").read_text().splitlines()
        if not ln.startswith("#")
    ]
    assert jumps[0] == "t,type,z"

    cfg3 = ExperimentConfig(
        experiment="forward-wf", out=str(tmp_path / "f"), pop_size=60,
        generations=400, reps=150, x0=0.3, y0=0.7,
    )
    assert run_experiment(cfg3, workers=1) == 0
    fix = json.loads((tmp_path / "f" / "fixation.json").read_text())
    assert fix["fixed_all_type0"] + fix["fixed_all_type1"] + fix["unfixed"] == 150


def test_cli_acceptance_wrapper(tmp_path, monkeypatch, capsys):
    # exercise the subcommand plumbing with canned criterion results
    import seedbank.acceptance as acc
    from seedbank.acceptance import CriterionResult

    def fake_run(seed=0, workers=1, echo=None, only=None):
        results = [
            CriterionResult("01", "alpha", True, {"x": 1.0}),
            CriterionResult("02", "beta", False, {"y": 2.0}),
        ]
        if echo:
            for r in results:
                echo(f"{'PASS' if r.passed else 'FAIL'} {r.ident} {r.name}")
        return results

    monkeypatch.setattr(acc, "run_acceptance", fake_run)
    rc = main(["acceptance", "--seed", "9", "--out", str(tmp_path / "acc")])
    assert rc == 1  # one canned criterion failed
    report = json.loads((tmp_path / "acc" / "acceptance.json").read_text())
    assert report["all_passed"] is False
    assert report["criteria"]["01"]["passed"] is True
    out = capsys.readouterr().out
    assert "PASS 01 alpha" in out and "FAIL 02 beta" in out


def test_cli_duality_horizon_follows_time_grid(tmp_path):
    # default times reach t = 2 even when the numeric block sets a smaller T
    cfg = ExperimentConfig(
        experiment="duality", out=str(tmp_path / "h"), reps=150,
        horizon=1.0, dt=2e-3, xs=(0.2,), ys=(0.8,),
        model=ModelParams(c=1.0, K=2.0, lambda_ad=SwitchingMeasure.atom(0.5, 0.4)),
    )
    assert run_experiment(cfg, workers=1) == 0
    rows = [
        ln for ln in (tmp_path / "h" / "duality.csv").read_text().splitlines()
        if not ln.startswith("#")
    ][1:]
    assert len(rows) == 24  # 8 exponent pairs x 3 default times
