import json

import numpy as np
import pytest

from logcoral.cli import main, parse_weights, read_config_file
from logcoral.data import generate, make_benchmark_spec, save_csv
from logcoral.exceptions import InvalidInput
from logcoral.stats import FeatureBatch


@pytest.fixture
def feature_files(tmp_path):
    rng = np.random.default_rng(0)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    save_csv(a, FeatureBatch(rng.standard_normal((60, 4))))
    save_csv(b, FeatureBatch(rng.standard_normal((60, 4)) * 2.0 + 1.0))
    return a, b


class TestParseWeights:
    def test_basic(self):
        w = parse_weights("cls=1,logcoral=1,mean=1")
        assert w.classification == 1.0
        assert w.logcoral > 0 and w.mean > 0 and w.coral == 0.0

    def test_unknown_key(self):
        with pytest.raises(InvalidInput):
            parse_weights("bogus=1")

    def test_bad_value(self):
        with pytest.raises(InvalidInput):
            parse_weights("cls=x")


class TestConfigFile:
    def test_key_values_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nseed=7\nlr=0.01\n\nsteps=15\n")
        vals = read_config_file(path)
        assert vals == {"seed": "7", "lr": "0.01", "steps": "15"}

    def test_flags_override_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("steps=5\nbatch=16\nsamples_per_class=20\n")
        rc = main(["train", "--config", str(cfg), "--steps", "3",
                   "--out", str(tmp_path / "run"), "--format", "json"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["steps"] == 3


class TestLossesCommand:
    def test_identical_files_zero(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        f = tmp_path / "x.csv"
        save_csv(f, FeatureBatch(rng.standard_normal((30, 3))))
        rc = main(["losses", str(f), str(f), "--json"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["coral"] == 0.0
        assert report["logcoral"] == 0.0
        assert report["mean"] == 0.0
        assert "cond_source" in report

    def test_translated_domains(self, tmp_path, capsys):
        spec = make_benchmark_spec(num_classes=3, dim=4, samples_per_class=600, seed=2,
                                   rotation_strength=0.0, scale_spread=1e-9,
                                   translation_size=2.0)
        pair = generate(spec)
        fa, fb = tmp_path / "s.csv", tmp_path / "t.csv"
        save_csv(fa, FeatureBatch(pair.source.data))
        save_csv(fb, FeatureBatch(pair.target.data))
        rc = main(["losses", str(fa), str(fb), "--json"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["mean"] > 0.1
        assert report["logcoral"] < report["mean"] / 10  # only sampling noise

    def test_missing_file_exit_2(self, tmp_path, capsys):
        rc = main(["losses", str(tmp_path / "absent.csv"), str(tmp_path / "absent.csv")])
        assert rc == 2
        assert "absent.csv" in capsys.readouterr().err


class TestGradcheckCommand:
    def test_default_passes(self, capsys):
        rc = main(["gradcheck", "--dims", "2,5", "--trials", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "pass" in out and "FAIL" not in out

    def test_corrupted_sign_fails_and_dumps(self, tmp_path, capsys):
        rc = main(["gradcheck", "--dims", "3", "--trials", "2",
                   "--corrupt-target-sign", "--out", str(tmp_path)])
        assert rc == 1
        assert (tmp_path / "gradcheck_failure.npz").exists()


class TestTrainCommand:
    def test_short_run_writes_outputs(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("samples_per_class=20\n")
        out = tmp_path / "run"
        rc = main(["train", "--config", str(cfg), "--steps", "8", "--batch", "16",
                   "--out", str(out), "--format", "json"])
        assert rc == 0
        assert (out / "metrics.jsonl").exists()
        assert (out / "checkpoint.npz").exists()
        lines = (out / "metrics.jsonl").read_text().strip().split("\n")
        assert len(lines) == 8
        record = json.loads(lines[0])
        for key in ("step", "loss_cls", "loss_coral", "loss_logcoral", "loss_mean"):
            assert key in record

    def test_deterministic_metric_logs(self, tmp_path):
        args = ["train", "--steps", "10", "--batch", "16", "--seed", "5"]
        cfg = tmp_path / "run.cfg"
        cfg.write_text("samples_per_class=20\n")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--config", str(cfg), "--out", str(out_a)]) == 0
        assert main(args + ["--config", str(cfg), "--out", str(out_b)]) == 0
        assert (out_a / "metrics.jsonl").read_bytes() == (out_b / "metrics.jsonl").read_bytes()

    def test_csv_input(self, tmp_path, capsys):
        spec = make_benchmark_spec(num_classes=3, dim=4, samples_per_class=30, seed=3)
        pair = generate(spec)
        fs, ft = tmp_path / "s.csv", tmp_path / "t.csv"
        save_csv(fs, pair.source)
        save_csv(ft, pair.target)
        rc = main(["train", "--steps", "5", "--batch", "16",
                   "--source-csv", str(fs), "--target-csv", str(ft),
                   "--out", str(tmp_path / "run")])
        assert rc == 0


class TestAblateCommand:
    def test_csv_format_parses(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("samples_per_class=20\nsteps=5\nbatch=16\n")
        rc = main(["ablate", "--config", str(cfg), "--seeds", "2", "--format", "csv"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "config,mean_acc,std_acc,n_seeds,n_failed"
        assert len(lines) == 7  # header + six configurations
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == 5
            float(cells[1]), float(cells[2])

    def test_json_format(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("samples_per_class=20\nsteps=5\nbatch=16\n")
        rc = main(["ablate", "--config", str(cfg), "--seeds", "1", "--format", "json",
                   "--out", str(tmp_path / "ab")])
        assert rc == 0
        table = json.loads(capsys.readouterr().out)
        assert set(table) == {"baseline", "coral", "logcoral", "mean",
                              "coral+mean", "logcoral+mean"}
        assert (tmp_path / "ab" / "ablation.json").exists()
