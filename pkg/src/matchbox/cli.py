"""Command-line entry point.

Subcommands: prepare-data, train, eval, sweep-snr, count-params,
inspect-ckpt. Every artifact-producing run writes a resolved-config.json
into its output directory capturing all defaults and overrides.

Exit codes: 0 success, 1 config/data failure (single-line machine-parsable
error on stderr), 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from . import engine
from .augment import AugmentConfig, SilentNoise, SilentSignal
from .audio_io import MalformedHeader, TruncatedData, UnsupportedEncoding, write_wav_file
from .checkpoint import BadMagic, CorruptTensor, VersionMismatch, load_checkpoint
from .dataset import (
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
from .features import ClipTooShort, FeatureConfig
from .model import InvalidConfig, ModelConfig, count_params, parse_model_name
from .optim import NonFiniteGradient, OptimConfig, StepOutOfRange

USER_ERRORS = (
    MalformedHeader, UnsupportedEncoding, TruncatedData,
    MissingListFile, UnknownClassDirectory, EmptyClass, PoolTooSmall,
    ClipTooShort, SilentSignal, SilentNoise,
    InvalidConfig, StepOutOfRange, NonFiniteGradient,
    BadMagic, VersionMismatch, CorruptTensor,
    engine.EmptyEvalSet, engine.EmptyNoisePool,
    engine.LabelSetMismatch, engine.TooFewTrials,
    FileNotFoundError, json.JSONDecodeError, ValueError,
)

CONFIG_SECTIONS = {
    "model": ModelConfig,
    "optimizer": OptimConfig,
    "augment": AugmentConfig,
    "features": FeatureConfig,
}
TRAIN_KEYS = {"epochs", "batch_size", "seed", "trials", "deterministic",
              "num_workers"}


def load_config_file(path) -> dict:
    """Load a JSON config, rejecting unknown sections and keys."""
    with open(path, encoding="utf-8") as f:
        cfg = json.load(f)
    known = set(CONFIG_SECTIONS) | {"train"}
    for key in cfg:
        if key not in known:
            raise ValueError(f"unknown config section: {key}")
    for section, cls in CONFIG_SECTIONS.items():
        if section in cfg:
            names = {f.name for f in dataclasses.fields(cls)}
            for key in cfg[section]:
                if key not in names:
                    raise ValueError(f"unknown key {section}.{key}")
    for key in cfg.get("train", {}):
        if key not in TRAIN_KEYS:
            raise ValueError(f"unknown key train.{key}")
    return cfg


def build_train_config(args, n_classes: int) -> engine.TrainConfig:
    file_cfg = load_config_file(args.config) if args.config else {}

    def section(name, cls, **overrides):
        params = dict(file_cfg.get(name, {}))
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    model_over = {}
    if args.model:
        m = parse_model_name(args.model)
        model_over = {"b": m.b, "r": m.r, "c": m.c}
    model = section("model", ModelConfig, n_classes=n_classes, **model_over)

    tr = dict(file_cfg.get("train", {}))
    for key in ("epochs", "batch_size", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            tr[key] = v
    if getattr(args, "deterministic", False):
        tr["deterministic"] = True
    return engine.TrainConfig(
        model=model,
        optimizer=section("optimizer", OptimConfig),
        augment=section("augment", AugmentConfig,
                        enable_background_mix=True if args.noise_dir else None),
        features=section("features", FeatureConfig),
        **tr,
    )


def write_resolved_config(cfg: engine.TrainConfig, out_dir, extra: dict) -> None:
    resolved = {
        "model": cfg.model.to_dict(),
        "optimizer": dataclasses.asdict(cfg.optimizer),
        "augment": dataclasses.asdict(cfg.augment),
        "features": dataclasses.asdict(cfg.features),
        "train": {
            "epochs": cfg.epochs, "batch_size": cfg.batch_size,
            "seed": cfg.seed, "trials": cfg.trials,
            "deterministic": cfg.deterministic,
            "num_workers": cfg.num_workers,
        },
        **extra,
    }
    with open(Path(out_dir) / "resolved-config.json", "w", encoding="utf-8") as f:
        json.dump(resolved, f, indent=2)


# ------------------------------------------------------------- subcommands


def cmd_count_params(args) -> int:
    cfg = parse_model_name(args.model, n_classes=args.classes)
    print(count_params(cfg))
    return 0


def cmd_prepare_data(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    version = args.dataset_version
    manifests = scan_speech_commands(args.data_root, version)

    noise_entries: list[ManifestEntry] = []
    if args.noise_dir:
        segments, report = segment_noise_corpus(args.noise_dir)
        seg_dir = out / "noise_segments"
        seg_dir.mkdir(exist_ok=True)
        for i, seg in enumerate(segments):
            path = seg_dir / f"segment_{i:06d}.wav"
            write_wav_file(path, seg)
            noise_entries.append(
                ManifestEntry(str(path), "background_noise", seg.duration_seconds)
            )
        with open(out / "noise-report.json", "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
        save_manifest(noise_entries, out / "noise.jsonl")

    labels = label_set(version)
    train_manifest = manifests["train"]
    if args.expanded:
        if not args.noise_dir or not args.speech_dir:
            raise ValueError("--expanded requires --noise-dir and --speech-dir")
        speech_segments, _ = segment_noise_corpus(args.speech_dir)
        speech_dir = out / "speech_segments"
        speech_dir.mkdir(exist_ok=True)
        speech_entries = []
        for i, seg in enumerate(speech_segments):
            path = speech_dir / f"segment_{i:06d}.wav"
            write_wav_file(path, seg)
            speech_entries.append(
                ManifestEntry(str(path), "background_voice", seg.duration_seconds)
            )
        train_manifest = build_expanded_manifest(
            train_manifest, noise_entries, speech_entries,
            args.n_noise, args.n_speech, args.seed,
        )
        labels = label_set(version + "_expanded")

    # rebalance after expansion so the new classes join the duplication pass
    train_manifest = rebalance(train_manifest, args.seed)
    save_manifest(train_manifest, out / "train.jsonl")
    save_manifest(manifests["validation"], out / "validation.jsonl")
    save_manifest(manifests["test"], out / "test.jsonl")
    with open(out / "labels.json", "w", encoding="utf-8") as f:
        json.dump({"names": list(labels.names), "version": labels.version}, f)
    print(json.dumps({
        "train": len(train_manifest),
        "validation": len(manifests["validation"]),
        "test": len(manifests["test"]),
        "classes": dict(sorted(class_histogram(train_manifest).items())),
    }))
    return 0


def _load_labels(manifest_dir) -> list[str]:
    with open(Path(manifest_dir) / "labels.json", encoding="utf-8") as f:
        return json.load(f)["names"]


def cmd_train(args) -> int:
    manifest_dir = Path(args.manifest_dir)
    labels = _load_labels(manifest_dir)
    cfg = build_train_config(args, n_classes=len(labels))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(cfg, out, {"manifest_dir": str(manifest_dir),
                                     "noise_dir": args.noise_dir})

    train_clips = engine.load_clips(load_manifest(manifest_dir / "train.jsonl"))
    val_clips = engine.load_clips(load_manifest(manifest_dir / "validation.jsonl"))
    noise_pool = None
    if args.noise_dir:
        noise_pool, _ = segment_noise_corpus(args.noise_dir)

    _, metrics = engine.train(cfg, train_clips, val_clips, labels,
                              out_dir=out, noise_pool=noise_pool)
    if metrics:
        from .plots import plot_training_curves
        plot_training_curves(metrics, out / "training-curves.png")
        print(json.dumps(metrics[-1]))
    return 0


def cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    if not manifest:
        raise engine.EmptyEvalSet(f"manifest {args.manifest} is empty")
    clips = engine.load_clips(manifest)
    accs = []
    for ckpt_path in args.ckpt:
        ckpt = load_checkpoint(ckpt_path)
        net = ckpt.build_network()
        labels = ckpt.labels or sorted({e.label for e in manifest})
        accs.append(engine.evaluate(net, clips, labels))
    if len(accs) >= 2:
        mean, half = engine.trials_ci(accs)
        print(f"accuracy: {mean:.2f} +/- {half:.3f} (95% CI, n={len(accs)})")
    else:
        print(f"accuracy: {accs[0]:.2f}")
    return 0


def cmd_sweep_snr(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(args.manifest)
    if not manifest:
        raise engine.EmptyEvalSet(f"manifest {args.manifest} is empty")
    clips = engine.load_clips(manifest)
    noise_pool, _ = segment_noise_corpus(args.noise_dir)
    points = [float(p) for p in args.points.split(",")] if args.points \
        else list(engine.DEFAULT_SNR_POINTS)

    reports = {}
    for ckpt_path in args.ckpt:
        ckpt = load_checkpoint(ckpt_path)
        net = ckpt.build_network()
        labels = ckpt.labels or sorted({e.label for e in manifest})
        name = ckpt.config.name
        reports[name] = engine.snr_sweep(
            net, clips, noise_pool, labels,
            points_db=points, seed=args.seed,
            draws_per_sample=args.draws,
        )

    with open(out / "snr-sweep.json", "w", encoding="utf-8") as f:
        json.dump({name: r.to_dict() for name, r in reports.items()}, f, indent=2)
    with open(out / "snr-sweep.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["model"] + [f"{p:g}" for p in points])
        for name, rep in reports.items():
            writer.writerow([name] + [f"{a:.2f}" for a in rep.accuracy])
    table = format_snr_table(reports, points)
    with open(out / "snr-sweep.txt", "w", encoding="utf-8") as f:
        f.write(table)
    from .plots import plot_snr_sweep
    plot_snr_sweep(reports, out / "snr-sweep.png")
    print(table)
    return 0


def format_snr_table(reports: dict, points: list[float]) -> str:
    """Plain-text table: one row per model, one column per SNR point in dB."""
    header = "Model    " + "".join(f"{p:>8g}" for p in points)
    lines = [header, "-" * len(header)]
    for name, rep in reports.items():
        lines.append(f"{name:<9}" + "".join(f"{a:>8.2f}" for a in rep.accuracy))
    return "\n".join(lines) + "\n"


def cmd_inspect_ckpt(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    print(json.dumps({
        "model": ckpt.config.to_dict(),
        "step": ckpt.step,
        "labels": ckpt.labels,
        "tensors": {name: list(t.shape) for name, t in ckpt.tensors.items()},
    }, indent=2))
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matchbox",
                                description="Keyword spotting toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    cp = sub.add_parser("count-params", help="print the trainable scalar count")
    cp.add_argument("--model", required=True, help="size as BxRxC, e.g. 3x2x64")
    cp.add_argument("--classes", type=int, default=35)
    cp.set_defaults(func=cmd_count_params)

    pd = sub.add_parser("prepare-data", help="scan dataset into manifests")
    pd.add_argument("--data-root", required=True)
    pd.add_argument("--dataset-version", choices=["v1", "v2"], default="v2")
    pd.add_argument("--out-dir", required=True)
    pd.add_argument("--noise-dir")
    pd.add_argument("--speech-dir")
    pd.add_argument("--expanded", action="store_true")
    pd.add_argument("--n-noise", type=int, default=3500)
    pd.add_argument("--n-speech", type=int, default=3500)
    pd.add_argument("--seed", type=int, default=0)
    pd.set_defaults(func=cmd_prepare_data)

    tr = sub.add_parser("train", help="run the training recipe")
    tr.add_argument("--manifest-dir", required=True)
    tr.add_argument("--out-dir", required=True)
    tr.add_argument("--config")
    tr.add_argument("--model", help="size as BxRxC")
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--batch-size", type=int, dest="batch_size")
    tr.add_argument("--seed", type=int)
    tr.add_argument("--noise-dir")
    tr.add_argument("--deterministic", action="store_true")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="accuracy of one or more checkpoints")
    ev.add_argument("--ckpt", action="append", required=True)
    ev.add_argument("--manifest", required=True)
    ev.set_defaults(func=cmd_eval)

    sw = sub.add_parser("sweep-snr", help="noise robustness sweep")
    sw.add_argument("--ckpt", action="append", required=True)
    sw.add_argument("--manifest", required=True)
    sw.add_argument("--noise-dir", required=True)
    sw.add_argument("--out-dir", required=True)
    sw.add_argument("--points", help="comma-separated SNR points in dB")
    sw.add_argument("--draws", type=int, default=10)
    sw.add_argument("--seed", type=int, default=0)
    sw.set_defaults(func=cmd_sweep_snr)

    ic = sub.add_parser("inspect-ckpt", help="dump config and tensor shapes")
    ic.add_argument("--ckpt", required=True)
    ic.set_defaults(func=cmd_inspect_ckpt)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal invariant violation
        print(f"INTERNAL {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
