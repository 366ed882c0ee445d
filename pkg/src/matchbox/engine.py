"""Training loop, evaluation, multi-trial confidence intervals, the SNR
robustness sweep and checkpoint handling glue.

All randomness flows from the run seed: batch order is drawn per epoch and
every sample's augmentation generator is a pure function of
(seed, epoch, sample index), so a fixed seed with sequential loading gives a
bit-reproducible trajectory.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from .audio_io import AudioClip, fit_to_duration, read_wav_file
from .augment import AugmentConfig, augment_features, augment_waveform, mix_at_snr, sample_rng
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .dataset import ManifestEntry
from .features import FeatureConfig, mfcc
from .model import ModelConfig, Network, build
from .optim import NovoGrad, OptimConfig, lr_at, softmax_cross_entropy


class EmptyEvalSet(ValueError):
    pass


class LabelSetMismatch(ValueError):
    pass


class TooFewTrials(ValueError):
    pass


class EmptyNoisePool(ValueError):
    pass


CLEAN_SNR = math.inf  # sentinel point: no noise is mixed at all


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    seed: int = 0
    trials: int = 5
    optimizer: OptimConfig = field(default_factory=OptimConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    deterministic: bool = True
    num_workers: int = 1

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class SnrSweepReport:
    snr_points_db: list[float]
    accuracy: list[float]
    noise_draws_per_sample: int = 10

    def to_dict(self) -> dict:
        return {
            "snr_points_db": self.snr_points_db,
            "accuracy": self.accuracy,
            "noise_draws_per_sample": self.noise_draws_per_sample,
        }


DEFAULT_SNR_POINTS = [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0]


def resolve_workers(requested: int) -> int:
    cap = os.environ.get("MATCHBOX_NUM_WORKERS")
    if cap is not None:
        return max(1, min(requested, int(cap)))
    return max(1, requested)


def load_clips(manifest: list[ManifestEntry], seconds: float = 1.0) -> list[AudioClip]:
    """Decode every manifest entry and normalize it to a fixed duration."""
    return [
        fit_to_duration(read_wav_file(e.path, label=e.label), seconds)
        for e in manifest
    ]


def featurize(clip: AudioClip, fcfg: FeatureConfig) -> np.ndarray:
    return mfcc(clip, fcfg).values.astype(np.float32)


def _featurize_train(clip, idx, epoch, cfg: TrainConfig, noise_pool):
    rng = sample_rng(cfg.seed, epoch, idx)
    wav = augment_waveform(clip, cfg.augment, rng, noise_pool)
    fm = mfcc(wav, cfg.features)
    fm = augment_features(fm, cfg.augment, rng)
    return fm.values.astype(np.float32)


def _label_indices(clips: list[AudioClip], labels: list[str]) -> np.ndarray:
    index = {name: i for i, name in enumerate(labels)}
    try:
        return np.array([index[c.label] for c in clips], dtype=np.int64)
    except KeyError as exc:
        raise LabelSetMismatch(f"label {exc} not in the model's label set") from exc


def train(
    cfg: TrainConfig,
    train_clips: list[AudioClip],
    val_clips: list[AudioClip],
    labels: list[str],
    out_dir=None,
    noise_pool: list[AudioClip] | None = None,
):
    """Run the full recipe and return (network, metrics).

    Per step: augment waveforms, extract MFCCs, augment features, forward in
    train mode, cross-entropy, backward, scheduled NovoGrad update. Writes
    metrics.jsonl plus final.ckpt / best.ckpt when out_dir is given.
    """
    if cfg.model.n_classes != len(labels):
        raise LabelSetMismatch(
            f"model has {cfg.model.n_classes} classes, label set has {len(labels)}"
        )
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    net = build(cfg.model, seed=cfg.seed)
    y_train = _label_indices(train_clips, labels)

    n = len(train_clips)
    steps_per_epoch = max(1, math.ceil(n / cfg.batch_size))
    ocfg = cfg.optimizer
    if cfg.epochs > 0:
        total = cfg.epochs * steps_per_epoch
        if ocfg.total_steps != total:
            ocfg = OptimConfig(**{**ocfg.__dict__, "total_steps": total})
    no_decay = {
        name for name in net.named_parameters()
        if name.endswith(".gamma") or name.endswith(".beta")
    }
    opt = NovoGrad(net.named_parameters(), ocfg, no_decay=no_decay)

    workers = 1 if cfg.deterministic else resolve_workers(cfg.num_workers)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None

    metrics: list[dict] = []
    best_acc, best_epoch = -1.0, -1
    step = 0
    try:
        for epoch in range(cfg.epochs):
            order_rng = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, epoch])
            )
            order = order_rng.permutation(n)
            epoch_loss = 0.0
            for b0 in range(0, n, cfg.batch_size):
                idxs = order[b0 : b0 + cfg.batch_size]
                if pool is not None:
                    feats = list(pool.map(
                        lambda i: _featurize_train(
                            train_clips[i], int(i), epoch, cfg, noise_pool),
                        idxs,
                    ))
                else:
                    feats = [
                        _featurize_train(train_clips[i], int(i), epoch, cfg,
                                         noise_pool)
                        for i in idxs
                    ]
                x = np.stack(feats)
                y = y_train[idxs]

                net.train()
                net.zero_grad()
                logits = net.forward(x)
                loss, _ = softmax_cross_entropy(logits, y)
                loss.backward()
                lr = lr_at(step, ocfg)
                opt.step(lr)
                epoch_loss += float(loss.data) * len(idxs)
                step += 1

            val_acc = evaluate(net, val_clips, labels, cfg.features) \
                if val_clips else float("nan")
            record = {
                "epoch": epoch,
                "step": step,
                "lr": lr_at(min(step, ocfg.total_steps), ocfg),
                "train_loss": epoch_loss / n,
                "val_acc": val_acc,
            }
            metrics.append(record)
            if out_dir is not None:
                with open(out_dir / "metrics.jsonl", "a", encoding="utf-8") as f:
                    f.write(json.dumps(record) + "\n")
                if not math.isnan(val_acc) and val_acc > best_acc:
                    best_acc, best_epoch = val_acc, epoch
                    save_checkpoint(net, out_dir / "best.ckpt",
                                    step=step, labels=labels)
    finally:
        if pool is not None:
            pool.shutdown()

    if out_dir is not None:
        save_checkpoint(net, out_dir / "final.ckpt", optimizer=opt,
                        step=step, labels=labels)
        if best_epoch < 0:
            save_checkpoint(net, out_dir / "best.ckpt", step=step, labels=labels)
    return net, metrics


def evaluate(
    net: Network,
    clips: list[AudioClip],
    labels: list[str],
    fcfg: FeatureConfig | None = None,
    batch_size: int = 128,
) -> float:
    """Percent of argmax-correct predictions, eval mode, no augmentation."""
    if not clips:
        raise EmptyEvalSet("no samples to evaluate")
    fcfg = fcfg or FeatureConfig()
    y = _label_indices(clips, labels)
    net.eval()
    correct = 0
    for b0 in range(0, len(clips), batch_size):
        batch = clips[b0 : b0 + batch_size]
        x = np.stack([featurize(c, fcfg) for c in batch])
        logits = net.forward(x).data
        correct += int(np.sum(np.argmax(logits, axis=1) == y[b0 : b0 + len(batch)]))
    return 100.0 * correct / len(clips)


def trials_ci(accuracies: list[float]) -> tuple[float, float]:
    """Mean and 95% confidence half-width, mean +/- t_{0.975,n-1} s / sqrt(n)."""
    if len(accuracies) < 2:
        raise TooFewTrials("need at least 2 trial accuracies")
    a = np.asarray(accuracies, dtype=np.float64)
    n = len(a)
    s = a.std(ddof=1)
    t = scipy.stats.t.ppf(0.975, n - 1)
    return float(a.mean()), float(t * s / np.sqrt(n))


def snr_sweep(
    net: Network,
    test_clips: list[AudioClip],
    noise_pool: list[AudioClip],
    labels: list[str],
    points_db: list[float] | None = None,
    seed: int = 0,
    draws_per_sample: int = 10,
    fcfg: FeatureConfig | None = None,
    batch_size: int = 128,
) -> SnrSweepReport:
    """Accuracy at each SNR point, each test sample mixed with
    ``draws_per_sample`` seed-chosen noise segments. The infinite-SNR
    sentinel skips mixing entirely and equals evaluate()."""
    points_db = list(points_db) if points_db is not None else list(DEFAULT_SNR_POINTS)
    if not test_clips:
        raise EmptyEvalSet("no samples to evaluate")
    if not noise_pool and any(math.isfinite(p) for p in points_db):
        raise EmptyNoisePool("noise pool is empty")
    fcfg = fcfg or FeatureConfig()
    y = _label_indices(test_clips, labels)
    net.eval()

    accuracies = []
    for pi, snr in enumerate(points_db):
        if not math.isfinite(snr):
            accuracies.append(evaluate(net, test_clips, labels, fcfg, batch_size))
            continue
        correct = 0
        total = 0
        mixed: list[np.ndarray] = []
        truth: list[int] = []
        for si, clip in enumerate(test_clips):
            rng = np.random.default_rng(np.random.SeedSequence([seed, pi, si]))
            for _ in range(draws_per_sample):
                noise = noise_pool[int(rng.integers(0, len(noise_pool)))]
                mixed.append(featurize(mix_at_snr(clip, noise, snr, rng), fcfg))
                truth.append(int(y[si]))
                if len(mixed) >= batch_size:
                    logits = net.forward(np.stack(mixed)).data
                    correct += int(np.sum(np.argmax(logits, axis=1) == truth))
                    total += len(mixed)
                    mixed, truth = [], []
        if mixed:
            logits = net.forward(np.stack(mixed)).data
            correct += int(np.sum(np.argmax(logits, axis=1) == truth))
            total += len(mixed)
        accuracies.append(100.0 * correct / total)
    return SnrSweepReport(points_db, accuracies, draws_per_sample)


def network_from_checkpoint(ckpt: Checkpoint) -> Network:
    return ckpt.build_network()


__all__ = [
    "TrainConfig", "SnrSweepReport", "DEFAULT_SNR_POINTS", "CLEAN_SNR",
    "EmptyEvalSet", "EmptyNoisePool", "LabelSetMismatch", "TooFewTrials",
    "train", "evaluate", "trials_ci", "snr_sweep", "load_clips", "featurize",
    "save_checkpoint", "load_checkpoint", "network_from_checkpoint",
]
