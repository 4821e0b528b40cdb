import json

import pytest

from neumann_hardy.lab import ExperimentConfig, Metric, Table, list_experiments, make_config, run_experiment
from neumann_hardy.lab.cli import main

EXPECTED = {
    "bmo-inclusion",
    "commutator-bound",
    "counterexample",
    "duality-pairing",
    "factorize-atom",
    "fs-synthesis",
    "kernel-identities",
    "norm-equivalence",
    "reflection-identities",
    "riesz-mass",
    "two-bump",
    "weak-factorize",
}
FAST = "riesz-mass"


def test_registry_is_sorted_and_complete():
    names = list_experiments()
    assert names == sorted(names) and set(names) == EXPECTED


def test_metric_and_table():
    assert Metric("m", "A1", 1e-9, 1e-6).passed
    assert not Metric("m", "A1", float("nan"), 1e-6).passed
    assert Metric("m", "A9", 2.0, 1.0, ">=").passed
    t = Table(["a", "b"])
    t.add(0.1, True)
    assert t.to_csv_text() == "a,b\n0.1,true\n"
    with pytest.raises(ValueError):
        t.add(1)


def test_config_merging(tmp_path):
    cfg = make_config(FAST, {"seed": 5, "params": {"Ms": [16, 32]}})
    assert cfg.seed == 5 and cfg.params["Ms"] == [16, 32]
    assert "dimensions" in cfg.params  # untouched defaults survive
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"experiment": FAST, "sede": 3}))
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_json(p)
    with pytest.raises(ValueError):
        make_config(FAST, {"experiment": "two-bump"})


def test_unknown_experiment_writes_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["run", "no-such-thing", "--out", str(out)]) == 2
    assert "unknown experiment" in capsys.readouterr().err
    assert not out.exists()
    with pytest.raises(KeyError):
        run_experiment(ExperimentConfig("no-such-thing", out=str(out)))
    assert not out.exists()


def test_cli_list(capsys):
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == list_experiments()


def test_cli_run_writes_reports_deterministically(tmp_path, capsys):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["run", FAST, "--out", str(out), "--seed", "3"]) == 0
    text = capsys.readouterr().out
    assert "PASS" in text and "FAIL" not in text
    rep = json.loads((outs[0] / "report.json").read_text())
    assert rep["config"]["seed"] == 3 and rep["passed"] is True
    assert all(m["criterion"] == "A9" for m in rep["metrics"])
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    assert "metrics.csv" in csvs
    for name in csvs:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": FAST, "params": {"Ms": [16, 32, 64]}}))
    out = tmp_path / "o"
    assert main(["run", FAST, "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["config"]["params"]["Ms"] == [16, 32, 64]
    cfg.write_text(json.dumps({"experiment": "two-bump"}))
    assert main(["run", FAST, "--config", str(cfg), "--out", str(out)]) == 2


def test_cli_defaults(capsys):
    assert main(["defaults", "two-bump"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["experiment"] == "two-bump"
