import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from conftest import make_small_config

from dsrcsense.cli import main
from dsrcsense.dataio import CfrRecord, write_records
from dsrcsense.pipeline import synthesize_dataset

runner = CliRunner()

SMALL_SETS = ["--size", "24", "--set", "episode_length=6",
              "--set", "calibration_every=2", "--set", "cv_folds=2",
              "--receivers", "1"]


def run(*args, **kwargs):
    return runner.invoke(main, list(args), **kwargs)


def write_dataset(path, counts):
    records = [
        CfrRecord(snapshot=i, receiver=0,
                  magnitudes=np.full(8, 1.0 + i), count=c)
        for i, c in enumerate(counts)
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_records(records, fh)
    return path


class TestSynthesizeCommand:
    def test_requires_seed(self):
        result = run("synthesize")
        assert result.exit_code != 0
        assert "--seed" in result.output + result.stderr

    def test_writes_dataset(self, tmp_path):
        out = tmp_path / "run"
        result = run("synthesize", "--seed", "11", "--out", str(out),
                     *SMALL_SETS)
        assert result.exit_code == 0, result.output + result.stderr
        assert "wrote 24 rows (24 snapshots)" in result.output
        assert "zero-count snapshots" in result.output
        assert (out / "dataset.csv").exists()

    def test_rejected_config_exits_1(self, tmp_path):
        # dataset_size below what the default fold count supports
        result = run("synthesize", "--seed", "1", "--size", "5",
                     "--out", str(tmp_path))
        assert result.exit_code == 1
        assert "error (config)" in result.stderr
        assert "dataset_size" in result.stderr

    def test_config_file_overrides_flags(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 5}))
        out = tmp_path / "run"
        result = run("synthesize", "--seed", "11", "--out", str(out),
                     "--config", str(cfg), *SMALL_SETS)
        assert result.exit_code == 0, result.output + result.stderr
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 5

    def test_unreadable_config_file_exits_1(self, tmp_path):
        bad = tmp_path / "cfg.json"
        bad.write_text("{not json")
        result = run("synthesize", "--seed", "1", "--config", str(bad))
        assert result.exit_code == 1
        assert "cannot read" in result.stderr

    def test_set_must_be_key_value(self):
        result = run("synthesize", "--seed", "1", "--set", "workers")
        assert result.exit_code != 0
        assert "needs key=value" in result.output + result.stderr

    def test_set_cannot_cross_scalars(self):
        result = run("synthesize", "--seed", "1",
                     "--set", "workers=2", "--set", "workers.x=3")
        assert result.exit_code != 0
        assert "crosses a scalar" in result.output + result.stderr


class TestIngestCommand:
    def test_summarizes_file(self, tmp_path):
        path = write_dataset(tmp_path / "d.csv", [0, 1, 2, 5, 9])
        result = run("ingest", str(path))
        assert result.exit_code == 0
        assert "5 snapshots, 8 features" in result.output
        assert "gamma=2.0" in result.output

    def test_partial_load_exits_2(self, tmp_path):
        path = write_dataset(tmp_path / "d.csv", [0, 1, 2, 5])
        lines = path.read_text().splitlines()
        lines[2] = lines[2].replace(",2.0", ",-2.0", 1)
        path.write_text("\n".join(lines) + "\n")
        result = run("ingest", str(path))
        assert result.exit_code == 2
        assert "rejected 1 rows" in result.stderr
        assert "line 3" in result.stderr

    def test_missing_file_exits_2(self, tmp_path):
        result = run("ingest", str(tmp_path / "missing.csv"))
        assert result.exit_code == 2
        assert "error (data)" in result.stderr

    def test_bad_gamma_exits_1(self, tmp_path):
        path = write_dataset(tmp_path / "d.csv", [0, 1])
        result = run("ingest", str(path), "--gamma", "bogus")
        assert result.exit_code == 1
        assert "gamma must be a number" in result.stderr


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    config = make_small_config(out)
    synthesize_dataset(config)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config.model_dump(mode="json")))
    return out, cfg_path


class TestEvaluateCommand:
    def test_evaluates_with_config_file(self, run_dir, tmp_path):
        out, cfg_path = run_dir
        result = run("evaluate", "--config", str(cfg_path),
                     "--dataset", str(out / "dataset.csv"),
                     "--out", str(tmp_path / "eval"))
        assert result.exit_code == 0, result.output + result.stderr
        assert "evaluated 24 snapshots" in result.output
        assert "intensity classification" in result.output
        assert "count regression" in result.output
        assert "KNN" in result.output
        assert (tmp_path / "eval" / "classification_table.csv").exists()

    def test_missing_dataset_exits_2(self, run_dir, tmp_path):
        _, cfg_path = run_dir
        result = run("evaluate", "--config", str(cfg_path),
                     "--dataset", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path))
        assert result.exit_code == 2
        assert "error (data)" in result.stderr

    def test_ablate_prints_variants(self, run_dir, tmp_path):
        out, cfg_path = run_dir
        result = run("ablate", "--config", str(cfg_path),
                     "--dataset", str(out / "dataset.csv"),
                     "--out", str(tmp_path / "ablate"))
        assert result.exit_code == 0, result.output + result.stderr
        for variant in ("all_stages", "no_hampel", "no_wavelet",
                        "no_background", "raw"):
            assert f"=== variant: {variant} ===" in result.output

    def test_report_renders(self, run_dir, tmp_path):
        out, cfg_path = run_dir
        eval_dir = tmp_path / "eval"
        run("evaluate", "--config", str(cfg_path),
            "--dataset", str(out / "dataset.csv"), "--out", str(eval_dir))
        result = run("report", str(eval_dir))
        assert result.exit_code == 0
        assert "Two-class intensity" in result.output
        assert "KNN" in result.output


def test_unreachable_server_exits_3(tmp_path):
    result = run("--server", "http://127.0.0.1:9", "ingest",
                 str(tmp_path / "d.csv"))
    assert result.exit_code == 3
    assert "error (internal)" in result.stderr
