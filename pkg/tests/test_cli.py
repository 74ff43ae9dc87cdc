import csv
import json
import sys

import pytest

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from fdrml.cli import REPORT_COLUMNS, main
from fdrml.config import RunConfig
from fdrml.demo import fixture_text
from fdrml.errors import ConfigError


def _write_mini(root, extra=""):
    (root / "mini.net").write_text(fixture_text("mini.net"))
    (root / "mini.stim").write_text(fixture_text("mini.stim"))
    cfg = root / "run.toml"
    cfg.write_text(
        'seed = 4\n'
        '[paths]\nnetlist = "mini.net"\nstimulus = "mini.stim"\nout_dir = "out"\n'
        '[checker]\npayload = ["dout"]\nvalid = "dout_valid"\n'
        '[campaign]\ninjections_per_ff = 30\n' + extra)
    return cfg


@pytest.fixture
def demo(tmp_path):
    assert main(["gen-demo", "--out", str(tmp_path), "--width", "4", "--stages", "3", "--cycles", "60"]) == 0
    cfg = tmp_path / "demo.toml"
    text = cfg.read_text().replace("injections_per_ff = 170", "injections_per_ff = 10")
    text += '\n[models]\nnames = ["ols", "knn", "tree"]\n'
    text = text.replace("random_budget = 20", "random_budget = 3")
    cfg.write_text(text)
    return tmp_path, cfg


def test_gen_demo_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen-demo", "--out", str(a)]) == 0
    assert main(["gen-demo", "--out", str(b)]) == 0
    for f in ("demo.net", "demo.stim", "demo.toml"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    assert main(["gen-demo", "--out", str(tmp_path / "c"), "--seed", "2"]) == 0
    assert (tmp_path / "c" / "demo.net").read_bytes() != (a / "demo.net").read_bytes()


def test_golden_outputs(tmp_path):
    cfg = _write_mini(tmp_path)
    assert main(["golden", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    golden = (out / "golden.csv").read_text().splitlines()
    assert golden[0].split(",") == ["dout", "dout_valid", "chk"]
    assert len(golden) == 1 + 48
    activity = (out / "activity.csv").read_text().splitlines()
    assert len(activity) == 1 + 6
    first = (out / "golden.csv").read_bytes()
    assert main(["golden", "--config", str(cfg)]) == 0
    assert (out / "golden.csv").read_bytes() == first
    eff = tomllib.loads((out / "effective-config.toml").read_text())
    assert eff["campaign"]["seed"] == 4 and eff["cv"]["folds"] == 10


def test_campaign_subset_and_runs(tmp_path, capsys):
    cfg = _write_mini(tmp_path, 'ffs = ["in0", "pay", "par"]\n')
    cfg.write_text(cfg.read_text().replace("injections_per_ff = 30", "injections_per_ff = 170"))
    assert main(["campaign", "--config", str(cfg)]) == 0
    assert "510 runs" in capsys.readouterr().out
    rows = list(csv.DictReader(open(tmp_path / "out" / "fdr.csv")))
    assert [r["ff_name"] for r in rows] == ["in0", "pay", "par"]
    summary = json.loads((tmp_path / "out" / "campaign.json").read_text())
    assert summary["total_runs"] == 510


def test_seed_override_changes_values_not_schema(tmp_path):
    cfg = _write_mini(tmp_path)
    assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path / "s1")]) == 0
    assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path / "s2"), "--seed", "99"]) == 0
    h1 = (tmp_path / "s1" / "fdr.csv").read_text().splitlines()[0]
    h2 = (tmp_path / "s2" / "fdr.csv").read_text().splitlines()[0]
    assert h1 == h2
    eff = tomllib.loads((tmp_path / "s2" / "effective-config.toml").read_text())
    assert eff["campaign"]["seed"] == 99


def test_missing_stimulus_is_config_error(tmp_path, capsys):
    cfg = _write_mini(tmp_path)
    (tmp_path / "mini.stim").unlink()
    assert main(["golden", "--config", str(cfg)]) == 2
    assert "stimulus" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["golden", "--config", str(tmp_path / "nope.toml")]) == 2


def test_bad_config_values(tmp_path):
    cfg = _write_mini(tmp_path, '[models]\nnames = ["ols", "bogus"]\n')
    assert main(["golden", "--config", str(cfg)]) == 2
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"cv": {"folds": 1}}, tmp_path)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"seed": -1}, tmp_path)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"models": {"knn": {"space": {"k": {"weird": [1]}}}}}, tmp_path)


def test_netlist_error_has_file_and_line(tmp_path, capsys):
    cfg = _write_mini(tmp_path)
    text = fixture_text("mini.net").replace("cell x1 XOR2", "cell x1 XOR9")
    (tmp_path / "mini.net").write_text(text)
    assert main(["golden", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    line = next(i for i, l in enumerate(text.splitlines(), 1) if "XOR9" in l)
    assert f"mini.net:{line}:" in err


def test_train_predict_before_campaign_is_domain_error(demo):
    _, cfg = demo
    assert main(["train-predict", "--config", str(cfg)]) == 1


def test_full_flow_and_too_few_test(demo, capsys):
    root, cfg = demo
    for cmd in ("golden", "campaign", "features", "train-predict"):
        assert main([cmd, "--config", str(cfg)]) == 0
    out = root / "out"
    with open(out / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == REPORT_COLUMNS
    assert [r["model"] for r in rows] == ["ols", "knn", "tree"]
    for name in ("ols", "knn", "tree"):
        assert (out / "models" / f"{name}.json").exists()
        assert (out / "tuning" / f"{name}.jsonl").exists()
    pred = list(csv.reader(open(out / "predictions.csv")))
    assert pred[0] == ["ff_name", "fdr_output", "ols", "knn", "tree"]
    assert all(0 <= float(v) <= 1 for r in pred[1:] for v in r[2:])
    assert "Linear Least Squares" in capsys.readouterr().out

    assert main(["train-predict", "--config", str(cfg), "--target", "application"]) == 0
    assert main(["learning-curve", "--config", str(cfg)]) == 0
    assert (out / "learning_curve" / "knn.csv").exists()
    assert main(["train-predict", "--config", str(cfg), "--train-fraction", "0.999"]) == 1
    assert main(["train-predict", "--config", str(cfg), "--train-fraction", "1.5"]) == 2


def test_search_space_override(tmp_path):
    cfg = RunConfig.from_dict({"models": {"knn": {"space": {"k": {"int": [2, 4]}, "metric": {"choice": ["euclidean"]}}}}},
                              tmp_path)
    space = cfg.search_space("knn")
    assert space.params["k"].values() == [2, 3, 4]
    assert space.params["metric"].options == ("euclidean",)
