import json

import numpy as np
import pytest

from uktl.cli import build_parser, run
from uktl.model import TrainConfig

FAST_FIT = ["--orders", "3", "--pivots", "6", "--epochs", "4", "--batch-size", "8", "--seed", "1", "--quiet"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run(["gen", "--classes", "2", "--per-class", "10", "--dims", "4,5,6", "--rank", "2",
                "--seed", "3", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def checkpoint(dataset):
    path = dataset / "model.json"
    assert run(["fit", "--train", str(dataset / "train.json"), "--out", str(path)] + FAST_FIT) == 0
    return path


def test_gen_writes_manifests(dataset):
    doc = json.loads((dataset / "train.json").read_text())
    assert doc["dims"] == [4, 5, 6] and len(doc["entries"]) == 16


def test_fit_is_deterministic(dataset, checkpoint, tmp_path):
    again = tmp_path / "again.json"
    assert run(["fit", "--train", str(dataset / "train.json"), "--out", str(again)] + FAST_FIT) == 0
    assert again.read_bytes() == checkpoint.read_bytes()


def test_eval_prints_accuracy(dataset, checkpoint, capsys):
    assert run(["eval", "--checkpoint", str(checkpoint), "--manifest", str(dataset / "test.json")]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("accuracy=")
    assert 0.0 <= float(line.split("=")[1]) <= 1.0


def test_predict_csv(dataset, checkpoint, tmp_path):
    out = tmp_path / "pred.csv"
    assert run(["predict", "--checkpoint", str(checkpoint), "--manifest", str(dataset / "test.json"),
                "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,label,confidence" and len(lines) == 5
    idx, label, conf = lines[1].split(",")
    assert idx == "0" and label in ("0", "1") and 0.5 <= float(conf) <= 1.0


def test_gram_export(dataset, tmp_path):
    out = tmp_path / "K.csv"
    assert run(["gram", "--manifest", str(dataset / "test.json"), "--orders", "2", "--out", str(out)]) == 0
    K = np.loadtxt(out, delimiter=",")
    assert K.shape == (4, 4) and np.array_equal(K, K.T)


def test_gram_nystrom_features(dataset, tmp_path):
    out = tmp_path / "G.csv"
    assert run(["gram", "--manifest", str(dataset / "train.json"), "--orders", "2", "--nystrom", "5",
                "--out", str(out)]) == 0
    G = np.loadtxt(out, delimiter=",")
    assert G.shape == (16, 5)
    np.testing.assert_allclose(G.mean(axis=0), 0.0, atol=1e-12)


def test_bench_pivots(dataset, capsys):
    assert run(["bench-pivots", "--manifest", str(dataset / "train.json"), "--orders", "2",
                "--counts", "2,4,16"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "C,rel_error"
    errs = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(errs) == 3 and errs[-1] <= 1e-6


def test_gradcheck_passes(capsys):
    assert run(["gradcheck", "--seed", "0"]) == 0
    assert "max_rel_err<=1e-4" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    assert run(["fit", "--no-such-flag"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_subcommand(capsys):
    assert run([]) == 2


def test_missing_file_is_io_error(tmp_path, capsys):
    assert run(["eval", "--checkpoint", str(tmp_path / "nope.json"), "--manifest", str(tmp_path / "m.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_config_file_and_flag_precedence(dataset, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"orders": 3, "n_pivots": 6, "epochs": 2, "batch_size": 8, "lr": 0.05}))
    ckpt = tmp_path / "m.json"
    assert run(["fit", "--train", str(dataset / "train.json"), "--config", str(cfg), "--epochs", "1",
                "--out", str(ckpt), "--quiet"]) == 0
    saved = json.loads(ckpt.read_text())["config"]
    assert saved["epochs"] == 1 and saved["lr"] == 0.05 and saved["n_pivots"] == 6


def test_config_unknown_key(dataset, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"learning_rate": 0.1}))
    assert run(["fit", "--train", str(dataset / "train.json"), "--config", str(cfg),
                "--out", str(tmp_path / "m.json")]) == 2
    assert "unknown" in capsys.readouterr().err


def test_epoch_log_lines_on_stderr(dataset, tmp_path, capsys):
    args = [a for a in FAST_FIT if a != "--quiet"]
    assert run(["fit", "--train", str(dataset / "train.json"), "--out", str(tmp_path / "m.json")] + args) == 0
    err = capsys.readouterr().err
    assert err.count("epoch") == 4


def test_help_lists_every_option_with_default():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices["fit"]
    text = sub.format_help()
    for name, value in TrainConfig().to_dict().items():
        flag = "--" + {"n_pivots": "pivots"}.get(name, name).replace("_", "-")
        assert flag in text
    assert text.count("(default:") >= len(TrainConfig().to_dict())


def test_threads_flag_and_env(monkeypatch, capsys):
    assert run(["--threads", "1", "verify", "--only", "8"]) == 0
    monkeypatch.setenv("UKTL_THREADS", "1")
    assert run(["verify", "--only", "9"]) == 0
    assert run(["--threads", "0", "verify", "--only", "9"]) == 2


def test_verify_unknown_criterion(capsys):
    assert run(["verify", "--only", "12"]) == 2
