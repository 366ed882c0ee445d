import numpy as np
import pytest

from matchbox.audio_io import AudioClip, write_wav_file
from matchbox.dataset import (
    EmptyClass,
    ManifestEntry,
    MissingListFile,
    PoolTooSmall,
    UnknownClassDirectory,
    build_expanded_manifest,
    class_histogram,
    label_set,
    load_manifest,
    rebalance,
    save_manifest,
    scan_speech_commands,
    segment_noise_corpus,
)


def write_tone(path, seconds=1.0, rate=16000, freq=440.0):
    t = np.arange(round(seconds * rate)) / rate
    write_wav_file(path, AudioClip(0.3 * np.sin(2 * np.pi * freq * t), rate))


@pytest.fixture
def speech_root(tmp_path):
    root = tmp_path / "speech"
    for label in ("yes", "no", "stop"):
        d = root / label
        d.mkdir(parents=True)
        for i in range(4):
            write_tone(d / f"clip{i}.wav")
    (root / "_background_noise_").mkdir()
    (root / "validation_list.txt").write_text("yes/clip0.wav\nno/clip1.wav\n")
    (root / "testing_list.txt").write_text("stop/clip2.wav\n")
    return root


def test_label_set_sizes():
    assert len(label_set("v1")) == 30
    assert len(label_set("v2")) == 35
    assert len(label_set("v1_expanded")) == 32
    assert len(label_set("v2_expanded")) == 37


def test_label_set_ordering_lexicographic():
    names = label_set("v2").names
    assert list(names) == sorted(names)
    expanded = label_set("v2_expanded").names
    assert "background_noise" in expanded and "background_voice" in expanded


def test_scan_assigns_splits(speech_root):
    m = scan_speech_commands(speech_root, "v2")
    val_paths = {e.path for e in m["validation"]}
    test_paths = {e.path for e in m["test"]}
    assert any(p.endswith("yes/clip0.wav") for p in val_paths)
    assert any(p.endswith("stop/clip2.wav") for p in test_paths)
    # listed file appears in exactly one split
    all_paths = [e.path for s in m.values() for e in s]
    assert len(all_paths) == len(set(all_paths)) == 12


def test_scan_remainder_goes_to_train(speech_root):
    m = scan_speech_commands(speech_root, "v2")
    train_paths = {e.path for e in m["train"]}
    assert any(p.endswith("yes/clip3.wav") for p in train_paths)
    assert len(m["train"]) == 9


def test_scan_missing_list_file(tmp_path):
    (tmp_path / "yes").mkdir()
    with pytest.raises(MissingListFile):
        scan_speech_commands(tmp_path, "v2")


def test_scan_unknown_class(speech_root):
    (speech_root / "not_a_word").mkdir()
    with pytest.raises(UnknownClassDirectory):
        scan_speech_commands(speech_root, "v2")


def entries(counts):
    out = []
    for label, n in counts.items():
        out.extend(ManifestEntry(f"{label}/{i}.wav", label, 1.0) for i in range(n))
    return out


def test_rebalance_counts():
    out = rebalance(entries({"a": 3, "b": 5}), seed=0)
    hist = class_histogram(out)
    assert hist == {"a": 5, "b": 5}
    # originals retained
    assert {e.path for e in out if e.label == "a"} == {f"a/{i}.wav" for i in range(3)}


def test_rebalance_identity_when_balanced():
    base = entries({"a": 4, "b": 4})
    out = rebalance(base, seed=7)
    assert sorted(e.path for e in out) == sorted(e.path for e in base)


def test_rebalance_deterministic():
    base = entries({"a": 2, "b": 9, "c": 5})
    a = rebalance(base, seed=3)
    b = rebalance(base, seed=3)
    assert a == b


def test_rebalance_empty():
    with pytest.raises(EmptyClass):
        rebalance([], seed=0)


def test_segment_noise_corpus(tmp_path):
    write_tone(tmp_path / "long.wav", seconds=10.5)
    write_tone(tmp_path / "short.wav", seconds=0.8)
    segments, report = segment_noise_corpus(tmp_path)
    assert len(segments) == 10
    assert report["segments"] == 10
    assert all(len(s.samples) == 16000 for s in segments)


def test_segment_skips_bad_files(tmp_path):
    write_tone(tmp_path / "good.wav", seconds=2.0)
    (tmp_path / "bad.wav").write_bytes(b"garbage")
    segments, report = segment_noise_corpus(tmp_path)
    assert len(segments) == 2
    assert report["files_skipped"] == 1


def test_expanded_manifest_histogram():
    base = entries({"yes": 5})
    noise = entries({"n": 10})
    speech = entries({"s": 10})
    out = build_expanded_manifest(base, noise, speech, 4, 3, seed=0)
    hist = class_histogram(out)
    assert hist["background_noise"] == 4
    assert hist["background_voice"] == 3
    assert hist["yes"] == 5


def test_expanded_manifest_zero_counts():
    base = entries({"yes": 5})
    out = build_expanded_manifest(base, [], [], 0, 0, seed=0)
    assert out == base


def test_expanded_manifest_pool_too_small():
    with pytest.raises(PoolTooSmall):
        build_expanded_manifest([], entries({"n": 2}), [], 5, 0, seed=0)


def test_manifest_jsonl_roundtrip(tmp_path):
    base = entries({"yes": 3, "no": 2})
    path = tmp_path / "m.jsonl"
    save_manifest(base, path)
    assert load_manifest(path) == base
