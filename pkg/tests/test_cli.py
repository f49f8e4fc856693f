import csv
import shutil
import subprocess
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from bandit_regressor.cli import main
from bandit_regressor.harness import read_predictions
from bandit_regressor.svgplot import Series, line_chart

SVG = "{http://www.w3.org/2000/svg}"

TINY = "epochs=2\nn_samples=64\nactor_hidden=8,8\ncritic_hidden=8,8\nper_capacity=256\neval_points=201\n"


@pytest.fixture
def tiny_cfg(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return p


@pytest.fixture
def trained(tmp_path, tiny_cfg):
    out = tmp_path / "run"
    assert main(["train", "--config", str(tiny_cfg), "--out", str(out)]) == 0
    return out


class TestExitCodes:
    def test_bad_stage_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--stage", "9"])
        assert exc.value.code == 2
        assert "invalid stage" in capsys.readouterr().err

    def test_stage_and_config_are_exclusive(self, tiny_cfg):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--stage", "1", "--config", str(tiny_cfg)])
        assert exc.value.code == 2

    def test_bad_config_value(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("epochs=abc\n")
        assert main(["train", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
        assert "epochs" in capsys.readouterr().err

    def test_negative_epochs_override(self, tmp_path):
        assert main(["train", "--stage", "1", "--epochs", "-1", "--out", str(tmp_path / "o")]) == 2

    def test_divergence_is_numeric_failure(self, tmp_path):
        p = tmp_path / "wild.cfg"
        p.write_text(TINY + "actor_lr=1e300\ncritic_lr=1e300\n")
        with np.errstate(all="ignore"):
            assert main(["train", "--config", str(p), "--out", str(tmp_path / "o")]) == 3

    def test_plot_missing_run(self, tmp_path):
        assert main(["plot", "--run", str(tmp_path / "missing")]) == 2

    def test_eval_missing_run(self, tmp_path):
        assert main(["eval", "--run", str(tmp_path / "missing")]) == 2


class TestTrain:
    def test_artifacts(self, trained):
        names = {p.name for p in trained.iterdir()}
        assert {"metrics.csv", "predictions.csv", "config.txt", "actor.npz"} <= names
        assert len(read_predictions(trained / "predictions.csv")) == 201
        assert len((trained / "metrics.csv").read_text().splitlines()) == 3

    def test_default_out_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BANDIT_REGRESSOR_OUT", str(tmp_path / "envroot"))
        assert main(["train", "--stage", "1", "--epochs", "0", "--seed", "4"]) == 0
        assert (tmp_path / "envroot" / "stage1_seed4" / "predictions.csv").exists()

    def test_byte_identical_reruns(self, tmp_path, tiny_cfg):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["train", "--config", str(tiny_cfg), "--seed", "7", "--out", str(out)]) == 0
        for name in ("metrics.csv", "predictions.csv", "config.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_config_snapshot_reloads(self, trained, tmp_path):
        again = tmp_path / "again"
        assert main(["train", "--config", str(trained / "config.txt"), "--out", str(again)]) == 0
        assert (again / "predictions.csv").read_bytes() == (trained / "predictions.csv").read_bytes()


class TestSweep:
    def test_summary(self, tmp_path, tiny_cfg, capsys):
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(tiny_cfg), "--seeds", "3", "--out", str(out)]) == 0
        with open(out / "summary.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["seed"] for r in rows] == ["0", "1", "2"]
        for r in rows:
            mse = read_predictions(out / f"seed_{r['seed']}" / "predictions.csv").mse
            assert float(r["final_eval_mse"]) == mse
        med = np.median([float(r["final_eval_mse"]) for r in rows])
        assert f"{med:.6f}" in capsys.readouterr().out

    def test_zero_seeds(self, tmp_path, tiny_cfg):
        assert main(["sweep", "--config", str(tiny_cfg), "--seeds", "0", "--out", str(tmp_path / "s")]) == 2


class TestEval:
    def test_reproduces_saved_predictions(self, trained, tmp_path):
        out = tmp_path / "re.csv"
        assert main(["eval", "--run", str(trained), "--points", "201", "--output", str(out)]) == 0
        assert out.read_bytes() == (trained / "predictions.csv").read_bytes()

    def test_custom_range(self, trained, tmp_path, capsys):
        out = tmp_path / "narrow.csv"
        assert main(["eval", "--run", str(trained), "--lo", "-1", "--hi", "1", "--points", "11", "--output", str(out)]) == 0
        t = read_predictions(out)
        assert len(t) == 11 and t.x[0] == -1.0 and t.x[-1] == 1.0

    def test_missing_actor(self, trained):
        (trained / "actor.npz").unlink()
        assert main(["eval", "--run", str(trained)]) == 2


class TestPlot:
    def test_svgs(self, trained):
        assert main(["plot", "--run", str(trained)]) == 0
        preds = read_predictions(trained / "predictions.csv")
        pred = ET.parse(trained / "prediction.svg").getroot()
        assert len(pred.findall(f".//{SVG}polyline")) == 2
        err = ET.parse(trained / "error.svg").getroot()
        assert float(err.get("data-y-max")) == float(preds.abs_err.max())
        losses = ET.parse(trained / "losses.svg").getroot()
        assert len(losses.findall(f".//{SVG}polyline")) == 2

    def test_missing_metrics(self, trained):
        (trained / "metrics.csv").unlink()
        assert main(["plot", "--run", str(trained)]) == 2

    def test_line_chart_is_valid_xml(self):
        x = np.linspace(0, 1, 5)
        root = ET.fromstring(line_chart([Series("a<b", x, x**2)], "t & u", "x", "y", shade=(0.2, 0.4)))
        assert root.find(f".//{SVG}polyline").get("data-label") == "a<b"
        assert root.find(f".//{SVG}rect[@class='train-range']") is not None


@pytest.mark.skipif(shutil.which("bandit-regressor") is None, reason="console script not installed")
def test_console_script_help():
    res = subprocess.run(["bandit-regressor", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("train", "sweep", "eval", "plot"):
        assert cmd in res.stdout
