"""Binary checkpoint format.

Layout, all integers little-endian u32:

    magic "MBXN" | version | config length | config JSON (UTF-8)
    then per-tensor records until EOF:
    name length | name (UTF-8) | rank | dims... | f32 payload

Parameters, BN running statistics and (optionally) optimizer state are all
stored as tensor records; the training step and label names live in the
config JSON. Round-trip load reproduces eval-mode outputs bit-exactly for
float32 networks.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, Network

MAGIC = b"MBXN"
FORMAT_VERSION = 1


class BadMagic(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


class CorruptTensor(ValueError):
    """Tensor record truncated or inconsistent with its declared shape."""


@dataclass
class Checkpoint:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    labels: list[str] | None = None
    step: int = 0

    def build_network(self, seed: int = 0) -> Network:
        net = Network(self.config, seed=seed, dtype=np.float32)
        for name, p in net.named_parameters().items():
            if name not in self.tensors:
                raise CorruptTensor(f"missing parameter {name}")
            if self.tensors[name].shape != p.data.shape:
                raise CorruptTensor(f"shape mismatch for {name}")
            p.data = self.tensors[name].astype(np.float32).copy()
        for name, b in net.named_buffers().items():
            if name not in self.tensors:
                raise CorruptTensor(f"missing buffer {name}")
            b[:] = self.tensors[name]
        return net

    def optimizer_tensors(self) -> dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if k.startswith("optim.")}


def _write_record(f, name: str, arr: np.ndarray) -> None:
    enc = name.encode("utf-8")
    f.write(struct.pack("<I", len(enc)))
    f.write(enc)
    arr = np.asarray(arr)
    f.write(struct.pack("<I", arr.ndim))
    for d in arr.shape:
        f.write(struct.pack("<I", d))
    f.write(arr.astype("<f4").tobytes())


def save_checkpoint(
    net: Network,
    path,
    optimizer=None,
    step: int = 0,
    labels: list[str] | None = None,
) -> None:
    config = {
        "model": net.cfg.to_dict(),
        "step": step,
        "labels": labels,
    }
    blob = json.dumps(config).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name, p in net.named_parameters().items():
            _write_record(f, name, p.data)
        for name, b in net.named_buffers().items():
            _write_record(f, name, b)
        if optimizer is not None:
            for name, arr in optimizer.state_tensors().items():
                _write_record(f, name, arr)


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CorruptTensor(f"truncated while reading {what}")
    return data


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise BadMagic(f"expected {MAGIC!r}, got {magic!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"format version {version} != {FORMAT_VERSION}")
        (cfg_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        config = json.loads(_read_exact(f, cfg_len, "config").decode("utf-8"))

        tensors: dict[str, np.ndarray] = {}
        while True:
            head = f.read(4)
            if not head:
                break
            if len(head) != 4:
                raise CorruptTensor("truncated record header")
            (name_len,) = struct.unpack("<I", head)
            name = _read_exact(f, name_len, "tensor name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(f, 4, f"{name} rank"))
            dims = struct.unpack(
                f"<{rank}I", _read_exact(f, 4 * rank, f"{name} dims")
            )
            count = int(np.prod(dims)) if rank else 1
            payload = _read_exact(f, 4 * count, f"{name} payload")
            tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()

    return Checkpoint(
        config=ModelConfig.from_dict(config["model"]),
        tensors=tensors,
        labels=config.get("labels"),
        step=config.get("step", 0),
    )
