import json
from pathlib import Path

import pytest

from tfclead import __version__
from tfclead.cli import main
from tfclead.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def fleet(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("generate", "--n", 1500, "--seed", 7, "--out", d / "fleet.csv") == 0
    return d / "fleet.csv"


class TestGenerate:
    def test_rows_and_manifest(self, fleet):
        assert len(fleet.read_text().splitlines()) == 1501
        m = json.loads(fleet.with_suffix(".csv.manifest.json").read_text())
        assert m["version"] == __version__ and m["command"] == "generate"
        assert len(m["config_hash"]) == 64 and str(fleet) in m["outputs"]

    def test_byte_identical_rerun(self, fleet, tmp_path):
        run("generate", "--n", 1500, "--seed", 7, "--out", tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_bytes() == fleet.read_bytes()


class TestPipeline:
    def test_train_outputs(self, fleet, tmp_path):
        out = tmp_path / "m"
        assert run("train", "--classes", 3, "--features", "unlimited", "--derivative", "all",
                   "--data", fleet, "--out", out) == 0
        report = json.loads((out / "train_report.json").read_text())
        model = json.loads((out / "model.json").read_text())
        assert model["n_classes"] == 3
        assert report["total_trees"] == 3 * report["rounds_completed"]
        manifest = json.loads((out / "train.manifest.json").read_text())
        assert manifest["inputs"] == {str(fleet): manifest["inputs"][str(fleet)]}
        assert manifest["config"]["classes"] == 3

    def test_primary_outputs_deterministic(self, fleet, tmp_path):
        for name in ("a", "b"):
            run("prepare", "--data", fleet, "--classes", 4, "--out", tmp_path / name / "ds.json")
            run("train", "--dataset", tmp_path / name / "ds.json", "--out", tmp_path / name)
            run("evaluate", "--model", tmp_path / name / "model.json", "--data", fleet,
                "--out", tmp_path / name / "eval")
        for rel in ("ds.json", "model.json", "split.json", "eval/metrics.json", "eval/confusion.csv"):
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel

    def test_dataset_and_csv_paths_agree(self, fleet, tmp_path):
        run("prepare", "--data", fleet, "--classes", 3, "--out", tmp_path / "ds.json")
        run("train", "--dataset", tmp_path / "ds.json", "--out", tmp_path / "x")
        run("train", "--data", fleet, "--classes", 3, "--out", tmp_path / "y")
        assert (tmp_path / "x" / "model.json").read_bytes() == (tmp_path / "y" / "model.json").read_bytes()

    def test_compare_prints_both_systems(self, fleet, tmp_path, capsys):
        assert run("compare", "--data", fleet, "--features", "limited", "--out", tmp_path) == 0
        out = capsys.readouterr().out
        assert "rule-based accuracy" in out and "AI-based accuracy" in out and "delta" in out
        rep = json.loads((tmp_path / "comparison.json").read_text())
        assert {"delta_points", "delta_relative_pct"} <= set(rep)

    def test_report_series(self, fleet, tmp_path):
        assert run("report", "--data", fleet, "--class-range", "2-3", "--features", "limited",
                   "--out", tmp_path) == 0
        lines = (tmp_path / "accuracy_by_classes.csv").read_text().splitlines()
        assert lines[0].startswith("feature_set,classes") and len(lines) == 3

    def test_drift(self, tmp_path):
        assert run("drift", "--n", 800, "--magnitude", 0, "--out", tmp_path) == 0
        rep = json.loads((tmp_path / "drift.json").read_text())
        assert rep["magnitude"] == 0.0 and rep["n_classes"] == 3


class TestErrors:
    def test_missing_input(self, tmp_path, capsys):
        assert run("train", "--data", tmp_path / "none.csv", "--out", tmp_path) == 7
        assert "error[io]" in capsys.readouterr().err

    def test_bad_classes(self, fleet, tmp_path, capsys):
        assert run("train", "--data", fleet, "--classes", 11, "--out", tmp_path) == 3
        assert "error[config]" in capsys.readouterr().err

    def test_schema_error(self, tmp_path, capsys):
        (tmp_path / "bad.csv").write_text("id,lead\n1,2\n")
        assert run("prepare", "--data", tmp_path / "bad.csv", "--out", tmp_path / "d.json") == 4
        assert "error[schema]" in capsys.readouterr().err

    def test_strict_malformed(self, fleet, tmp_path, capsys):
        text = fleet.read_text().splitlines()
        text.append(text[1].replace(text[1].split(",")[0], "VX", 1).replace(",0,", ",2,", 1))
        (tmp_path / "f.csv").write_text("\n".join(text) + "\n")
        assert run("prepare", "--data", tmp_path / "f.csv", "--out", tmp_path / "d.json") == 0
        report = json.loads((tmp_path / "d.filter_report.json").read_text())
        assert len(report["malformed"]) == 1
        assert run("prepare", "--strict", "--data", tmp_path / "f.csv", "--out", tmp_path / "d.json") == 4
        assert "error[malformed]" in capsys.readouterr().err

    def test_corrupt_model(self, fleet, tmp_path, capsys):
        (tmp_path / "m.json").write_text("{not json")
        assert run("evaluate", "--model", tmp_path / "m.json", "--data", fleet, "--out", tmp_path) == 6
        assert "error[model-format]" in capsys.readouterr().err

    def test_usage(self, capsys):
        with pytest.raises(SystemExit) as e:
            run("train", "--bogus")
        assert e.value.code == 2 and "error[usage]" in capsys.readouterr().err

    def test_bad_worker_env(self, fleet, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("TFCLEAD_WORKERS", "many")
        assert run("train", "--data", fleet, "--out", tmp_path) == 3


class TestConfigFile:
    def test_committed_default_loads(self):
        cfg = load_config(ROOT / "configs" / "default.ini")
        assert cfg.classes == 2 and cfg.generator.n_vehicles == 10_000 and cfg.grid == "desk"

    def test_flags_win(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[generator]\nn_vehicles = 300\nseed = 5\n[pipeline]\nclasses = 4\n")
        run("generate", "--config", ini, "--seed", 6, "--out", tmp_path / "f.csv")
        m = json.loads((tmp_path / "f.csv.manifest.json").read_text())
        assert m["config"]["generator"]["seed"] == 6 and m["config"]["generator"]["n_vehicles"] == 300
        assert len((tmp_path / "f.csv").read_text().splitlines()) == 301

    @pytest.mark.parametrize("text", ["[colours]\na = 1\n", "[pipeline]\nclasses = many\n",
                                      "[hyperparams]\nlearning_rate = 2\n", "[generator]\nfoo = 1\n"])
    def test_bad_config(self, tmp_path, text, capsys):
        ini = tmp_path / "c.ini"
        ini.write_text(text)
        assert run("generate", "--config", ini, "--out", tmp_path / "f.csv") == 3
        assert "error[config]" in capsys.readouterr().err
