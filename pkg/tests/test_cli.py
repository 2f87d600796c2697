import json
import subprocess
import sys

import numpy as np
import pytest

from mobidfl.cli import main
from mobidfl.data import save_idx


@pytest.fixture
def config_file(tmp_path, small_config):
    path = tmp_path / "exp.json"
    path.write_text(small_config.replace(monte_carlo_runs=2).to_json())
    return path


def test_run_is_byte_deterministic(tmp_path, config_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", str(config_file), "--out", str(a)]) == 0
    assert main(["run", "--config", str(config_file), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    assert main(["run", "--config", str(config_file), "--seed", "99", "--out", str(c)]) == 0
    assert c.read_bytes() != a.read_bytes()


def test_run_jsonl(tmp_path, config_file):
    out = tmp_path / "m.jsonl"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--format", "jsonl"]) == 0
    first = json.loads(out.read_text().splitlines()[0])
    assert first["round"] == 0 and "locations" in first


def test_sweep_and_aggregate(tmp_path, config_file, capsys):
    out = tmp_path / "sw.csv"
    code = main(["sweep", "--config", str(config_file), "--out", str(out), "--axis", "comm_radius", "--values", "1,3"])
    assert code == 0
    files = sorted(tmp_path.glob("sw_comm_radius-*.csv"))
    assert [f.name for f in files] == ["sw_comm_radius-1.csv", "sw_comm_radius-3.csv"]
    summary = tmp_path / "summary.csv"
    assert main(["aggregate", *map(str, files), "--out", str(summary)]) == 0
    lines = summary.read_text().splitlines()
    assert lines[0] == "source,round,runs,mean_accuracy,std_accuracy"
    assert len(lines) == 1 + 2 * 5


def test_sweep_reports_rejected_values(tmp_path, config_file, capsys):
    out = tmp_path / "sw.csv"
    code = main(["sweep", "--config", str(config_file), "--out", str(out), "--axis", "num_mobile", "--values", "1,40"])
    assert code == 0
    assert "rejected" in capsys.readouterr().err


def test_cluster_report(config_file, capsys):
    assert main(["cluster-report", "--config", str(config_file)]) == 0
    out = capsys.readouterr().out
    assert "centers" in out and "center 1:" in out


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"pattern": "static", "num_mobile": 3}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    bad.write_text("{")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.csv")]) == 2


def test_dataset_error_exit_code(tmp_path):
    cfg = tmp_path / "idx.json"
    cfg.write_text(json.dumps({"dataset": {"kind": "idx-files", "train_images": "a", "train_labels": "b",
                                           "test_images": "c", "test_labels": "d"}}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 3


def test_numerical_error_exit_code(tmp_path, small_config):
    cfg = tmp_path / "nan.json"
    cfg.write_text(small_config.replace(trainer=small_config.trainer.__class__(lr=1e300, momentum=0.0)).to_json())
    with np.errstate(all="ignore"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 4


def test_idx_dataset_end_to_end(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.repeat(np.arange(10), 12)
    images = (rng.random((120, 6, 6)) * 60).astype(np.uint8)
    images[np.arange(120), labels % 6, labels // 6] = 255
    save_idx(images, labels, tmp_path / "tr-img", tmp_path / "tr-lab")
    save_idx(images[:50], labels[:50], tmp_path / "te-img", tmp_path / "te-lab")
    cfg = tmp_path / "idx.json"
    cfg.write_text(json.dumps({
        "grid_size": 6, "num_clients": 4, "num_mobile": 1, "pattern": "random", "rounds": 4, "eval_every": 2,
        "dataset": {"kind": "idx-files", "train_images": "tr-img", "train_labels": "tr-lab",
                    "test_images": "te-img", "test_labels": "te-lab"},
    }))
    out = tmp_path / "m.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 3


def test_module_entry_point(tmp_path, config_file):
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "mobidfl", "run", "--config", str(config_file), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
