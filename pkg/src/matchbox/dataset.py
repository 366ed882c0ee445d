"""Speech Commands directory ingestion, class rebalancing, noise segmentation
and the expanded label set with background-noise / background-voice classes.

Manifests persist as JSON-lines with fields ``path``, ``label``,
``duration_s``. All randomized steps take explicit seeds and sort inputs by
path first, so outputs are reproducible.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, read_wav_file

log = logging.getLogger(__name__)

V1_CLASSES = sorted(
    [
        "yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go",
        "zero", "one", "two", "three", "four", "five", "six", "seven",
        "eight", "nine",
        "bed", "bird", "cat", "dog", "happy", "house", "marvin", "sheila",
        "tree", "wow",
    ]
)

V2_CLASSES = sorted(V1_CLASSES + ["backward", "forward", "follow", "learn", "visual"])

EXTRA_CLASSES = ["background_noise", "background_voice"]

BACKGROUND_DIR = "_background_noise_"


class MissingListFile(FileNotFoundError):
    """validation_list.txt or testing_list.txt not found under the root."""


class UnknownClassDirectory(ValueError):
    """Directory under the dataset root not in the label set."""


class EmptyClass(ValueError):
    """A class in the manifest has no entries to duplicate from."""


class PoolTooSmall(ValueError):
    """Requested more background samples than the pool holds."""


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    duration_s: float


@dataclass(frozen=True)
class LabelSet:
    names: tuple[str, ...]
    version: str

    def __post_init__(self):
        if list(self.names) != sorted(self.names):
            raise ValueError("label names must be lexicographically ordered")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __len__(self) -> int:
        return len(self.names)


def label_set(version: str) -> LabelSet:
    """Build the label set for v1/v2 or their expanded variants."""
    base = {"v1": V1_CLASSES, "v2": V2_CLASSES}
    if version in base:
        return LabelSet(tuple(base[version]), version)
    if version in ("v1_expanded", "v2_expanded"):
        names = sorted(base[version[:2]] + EXTRA_CLASSES)
        return LabelSet(tuple(names), version)
    raise ValueError(f"unknown label set version: {version}")


def scan_speech_commands(
    root, version: str = "v2"
) -> dict[str, list[ManifestEntry]]:
    """Scan a Speech Commands tree into {train, validation, test} manifests.

    Split membership follows the published validation_list.txt and
    testing_list.txt; everything else goes to train.
    """
    root = Path(root)
    labels = label_set(version)

    split_files = {}
    for split, fname in (("validation", "validation_list.txt"),
                         ("test", "testing_list.txt")):
        list_path = root / fname
        if not list_path.exists():
            raise MissingListFile(str(list_path))
        with open(list_path, encoding="utf-8") as f:
            split_files[split] = {line.strip() for line in f if line.strip()}

    manifests: dict[str, list[ManifestEntry]] = {
        "train": [], "validation": [], "test": []
    }
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        name = class_dir.name
        if name == BACKGROUND_DIR:
            continue
        if name not in labels.names:
            raise UnknownClassDirectory(name)
        for wav in sorted(class_dir.glob("*.wav")):
            rel = f"{name}/{wav.name}"
            if rel in split_files["validation"]:
                split = "validation"
            elif rel in split_files["test"]:
                split = "test"
            else:
                split = "train"
            clip = read_wav_file(wav)
            manifests[split].append(
                ManifestEntry(str(wav), name, clip.duration_seconds)
            )
    return manifests


def rebalance(manifest: list[ManifestEntry], seed: int) -> list[ManifestEntry]:
    """Duplicate random entries until every class matches the largest class.

    Originals are all retained; duplicates are drawn uniformly with the given
    seed after path-sorting, so equal seeds give identical output.
    """
    if not manifest:
        raise EmptyClass("manifest is empty")
    by_class: dict[str, list[ManifestEntry]] = {}
    for e in sorted(manifest, key=lambda e: (e.label, e.path)):
        by_class.setdefault(e.label, []).append(e)
    target = max(len(v) for v in by_class.values())
    rng = np.random.default_rng(seed)
    out: list[ManifestEntry] = []
    for name in sorted(by_class):
        entries = by_class[name]
        if not entries:
            raise EmptyClass(name)
        out.extend(entries)
        deficit = target - len(entries)
        if deficit:
            picks = rng.integers(0, len(entries), size=deficit)
            out.extend(entries[i] for i in picks)
    return out


def segment_noise_corpus(
    noise_root, segment_s: float = 1.0
) -> tuple[list[AudioClip], dict]:
    """Cut every WAV under noise_root into non-overlapping segments.

    A file of duration d yields floor(d / segment_s) segments; the trailing
    remainder is discarded. Undecodable files are skipped and counted in the
    returned report.
    """
    noise_root = Path(noise_root)
    segments: list[AudioClip] = []
    report = {"files_ok": 0, "files_skipped": 0, "segments": 0}
    for wav in sorted(noise_root.rglob("*.wav")):
        try:
            clip = read_wav_file(wav)
        except Exception as exc:  # skip-and-log per file
            log.warning("skipping %s: %s", wav, exc)
            report["files_skipped"] += 1
            continue
        report["files_ok"] += 1
        seg_len = round(segment_s * clip.sample_rate_hz)
        n_segments = len(clip.samples) // seg_len
        for i in range(n_segments):
            segments.append(
                AudioClip(
                    samples=clip.samples[i * seg_len : (i + 1) * seg_len],
                    sample_rate_hz=clip.sample_rate_hz,
                    source_id=f"{wav}#{i}",
                )
            )
        report["segments"] += n_segments
    return segments, report


def build_expanded_manifest(
    base_manifest: list[ManifestEntry],
    noise_entries: list[ManifestEntry],
    speech_entries: list[ManifestEntry],
    n_noise: int,
    n_speech: int,
    seed: int,
) -> list[ManifestEntry]:
    """Append background_noise / background_voice entries to a base manifest.

    Sampling is without replacement from path-sorted pools.
    """
    if n_noise > len(noise_entries):
        raise PoolTooSmall(f"noise pool has {len(noise_entries)} < {n_noise}")
    if n_speech > len(speech_entries):
        raise PoolTooSmall(f"speech pool has {len(speech_entries)} < {n_speech}")
    rng = np.random.default_rng(seed)
    out = list(base_manifest)
    for pool, n, name in (
        (noise_entries, n_noise, "background_noise"),
        (speech_entries, n_speech, "background_voice"),
    ):
        pool = sorted(pool, key=lambda e: e.path)
        picks = rng.choice(len(pool), size=n, replace=False)
        out.extend(
            ManifestEntry(pool[i].path, name, pool[i].duration_s) for i in picks
        )
    return out


def class_histogram(manifest: list[ManifestEntry]) -> Counter:
    return Counter(e.label for e in manifest)


def save_manifest(manifest: list[ManifestEntry], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for e in manifest:
            f.write(json.dumps(
                {"path": e.path, "label": e.label, "duration_s": e.duration_s}
            ) + "\n")


def load_manifest(path) -> list[ManifestEntry]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out.append(ManifestEntry(d["path"], d["label"], d["duration_s"]))
    return out
