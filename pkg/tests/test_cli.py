import json

import pytest

from matchbox.audio_io import write_wav_file
from matchbox.cli import main
from matchbox.dataset import load_manifest

from conftest import noise_clip, tone_clip


@pytest.fixture
def speech_root(tmp_path):
    root = tmp_path / "speech"
    for li, label in enumerate(("no", "yes")):
        d = root / label
        d.mkdir(parents=True)
        for i in range(6):
            freq = 300.0 if label == "no" else 900.0
            write_wav_file(d / f"c{i}.wav",
                           tone_clip(freq, seed=100 * li + i, label=label))
    (root / "validation_list.txt").write_text("no/c0.wav\nyes/c0.wav\n")
    (root / "testing_list.txt").write_text("no/c1.wav\nyes/c1.wav\n")
    return root


@pytest.fixture
def noise_dir(tmp_path):
    d = tmp_path / "noise"
    d.mkdir()
    for i in range(3):
        clip = noise_clip(seed=50 + i, label=None, n=32000)
        write_wav_file(d / f"n{i}.wav", clip)
    return d


def test_count_params_within_band(capsys):
    assert main(["count-params", "--model", "3x2x64", "--classes", "35"]) == 0
    value = int(capsys.readouterr().out.strip())
    assert abs(value - 93000) / 93000 <= 0.10


def test_count_params_bad_model(capsys):
    assert main(["count-params", "--model", "banana"]) == 1
    assert "ERROR" in capsys.readouterr().err


def test_prepare_data(speech_root, tmp_path, capsys):
    out = tmp_path / "manifests"
    rc = main(["prepare-data", "--data-root", str(speech_root),
               "--dataset-version", "v2", "--out-dir", str(out)])
    assert rc == 0
    train = load_manifest(out / "train.jsonl")
    val = load_manifest(out / "validation.jsonl")
    test = load_manifest(out / "test.jsonl")
    assert len(val) == 2 and len(test) == 2
    assert len(train) == 8  # 4 per class after rebalance
    labels = json.loads((out / "labels.json").read_text())
    assert len(labels["names"]) == 35


def test_prepare_data_missing_lists(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    rc = main(["prepare-data", "--data-root", str(tmp_path / "empty"),
               "--out-dir", str(tmp_path / "out")])
    assert rc == 1
    assert "MissingListFile" in capsys.readouterr().err


def test_train_eval_sweep_pipeline(speech_root, noise_dir, tmp_path, capsys):
    manifests = tmp_path / "manifests"
    assert main(["prepare-data", "--data-root", str(speech_root),
                 "--out-dir", str(manifests)]) == 0

    run = tmp_path / "run"
    rc = main(["train", "--manifest-dir", str(manifests),
               "--out-dir", str(run), "--model", "1x1x8",
               "--epochs", "2", "--batch-size", "4", "--seed", "3",
               "--deterministic"])
    assert rc == 0
    assert (run / "final.ckpt").exists()
    assert (run / "best.ckpt").exists()
    assert (run / "metrics.jsonl").exists()
    assert (run / "resolved-config.json").exists()
    assert (run / "training-curves.png").exists()
    resolved = json.loads((run / "resolved-config.json").read_text())
    assert resolved["train"]["seed"] == 3
    assert resolved["model"]["b"] == 1

    capsys.readouterr()
    rc = main(["eval", "--ckpt", str(run / "final.ckpt"),
               "--manifest", str(manifests / "test.jsonl")])
    assert rc == 0
    assert "accuracy:" in capsys.readouterr().out

    sweep = tmp_path / "sweep"
    rc = main(["sweep-snr", "--ckpt", str(run / "final.ckpt"),
               "--manifest", str(manifests / "test.jsonl"),
               "--noise-dir", str(noise_dir), "--out-dir", str(sweep),
               "--points", "0,50", "--draws", "2"])
    assert rc == 0
    report = json.loads((sweep / "snr-sweep.json").read_text())
    (model_report,) = report.values()
    assert model_report["snr_points_db"] == [0.0, 50.0]
    assert (sweep / "snr-sweep.csv").exists()
    assert (sweep / "snr-sweep.png").exists()
    table = (sweep / "snr-sweep.txt").read_text()
    assert "Model" in table and "1x1x8" in table

    capsys.readouterr()
    rc = main(["inspect-ckpt", "--ckpt", str(run / "final.ckpt")])
    assert rc == 0
    dump = json.loads(capsys.readouterr().out)
    assert dump["model"]["b"] == 1
    assert "conv1.dw.weight" in dump["tensors"]


def test_eval_two_checkpoints_prints_ci(speech_root, tmp_path, capsys):
    manifests = tmp_path / "manifests"
    assert main(["prepare-data", "--data-root", str(speech_root),
                 "--out-dir", str(manifests)]) == 0
    runs = []
    for seed in ("1", "2"):
        run = tmp_path / f"run{seed}"
        assert main(["train", "--manifest-dir", str(manifests),
                     "--out-dir", str(run), "--model", "1x1x8",
                     "--epochs", "1", "--seed", seed]) == 0
        runs.append(run)
    capsys.readouterr()
    rc = main(["eval",
               "--ckpt", str(runs[0] / "final.ckpt"),
               "--ckpt", str(runs[1] / "final.ckpt"),
               "--manifest", str(manifests / "test.jsonl")])
    assert rc == 0
    assert "95% CI" in capsys.readouterr().out


def test_eval_empty_manifest_exits_1(tmp_path, capsys):
    manifest = tmp_path / "empty.jsonl"
    manifest.write_text("")
    ckpt = tmp_path / "missing.ckpt"
    rc = main(["eval", "--ckpt", str(ckpt), "--manifest", str(manifest)])
    assert rc == 1
    assert "EmptyEvalSet" in capsys.readouterr().err


def test_config_file_unknown_key(tmp_path, capsys, speech_root):
    manifests = tmp_path / "manifests"
    assert main(["prepare-data", "--data-root", str(speech_root),
                 "--out-dir", str(manifests)]) == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": {"frobnicate": 1}}))
    rc = main(["train", "--manifest-dir", str(manifests),
               "--out-dir", str(tmp_path / "o"), "--config", str(cfg),
               "--epochs", "1"])
    assert rc == 1
    assert "unknown key model.frobnicate" in capsys.readouterr().err
