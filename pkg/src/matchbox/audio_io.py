"""WAV decoding/encoding and duration normalization for 16 kHz mono speech.

Only RIFF/WAVE with 16-bit PCM mono payloads is accepted; anything else is
rejected rather than converted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np


class MalformedHeader(ValueError):
    """Not a RIFF/WAVE container, or required chunks are missing."""


class UnsupportedEncoding(ValueError):
    """WAV payload is not 16-bit PCM mono."""


class TruncatedData(ValueError):
    """Declared data-chunk length exceeds the available payload."""


@dataclass
class AudioClip:
    """Mono waveform with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int = 16000
    label: str | None = None
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be 1-D")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def decode_wav(data: bytes, label: str | None = None, source_id: str = "") -> AudioClip:
    """Parse a RIFF/WAVE byte string into an AudioClip.

    Amplitudes are int16 / 32768. Raises MalformedHeader, UnsupportedEncoding
    or TruncatedData on bad input.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedHeader("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(data):
                raise MalformedHeader("fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", data[body_start : body_start + 16])
        elif chunk_id == b"data":
            if body_start + chunk_size > len(data):
                raise TruncatedData(
                    f"data chunk declares {chunk_size} bytes, "
                    f"{len(data) - body_start} available"
                )
            payload = data[body_start : body_start + chunk_size]
        # chunks are word-aligned
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise MalformedHeader("missing fmt or data chunk")

    audio_format, n_channels, sample_rate, _, _, bits_per_sample = fmt
    if audio_format != 1 or bits_per_sample != 16:
        raise UnsupportedEncoding(
            f"expected 16-bit PCM, got format={audio_format} bits={bits_per_sample}"
        )
    if n_channels != 1:
        raise UnsupportedEncoding(f"expected mono, got {n_channels} channels")

    raw = np.frombuffer(payload[: len(payload) - (len(payload) % 2)], dtype="<i2")
    return AudioClip(
        samples=raw.astype(np.float64) / 32768.0,
        sample_rate_hz=sample_rate,
        label=label,
        source_id=source_id,
    )


def encode_wav(clip: AudioClip) -> bytes:
    """Serialize a clip as RIFF/WAVE, 16-bit PCM mono little-endian.

    Amplitude 1.0 clamps to 32767; round-trip error is at most one
    quantization step (1/32768).
    """
    scaled = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = scaled.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = b"fmt " + struct.pack(
        "<IHHIIHH",
        16,  # chunk size
        1,  # PCM
        1,  # mono
        clip.sample_rate_hz,
        clip.sample_rate_hz * 2,  # byte rate
        2,  # block align
        16,  # bits per sample
    )
    data = b"data" + struct.pack("<I", len(payload)) + payload
    return header + fmt + data


def read_wav_file(path, label: str | None = None) -> AudioClip:
    with open(path, "rb") as f:
        return decode_wav(f.read(), label=label, source_id=str(path))


def write_wav_file(path, clip: AudioClip) -> None:
    with open(path, "wb") as f:
        f.write(encode_wav(clip))


def fit_to_duration(clip: AudioClip, seconds: float) -> AudioClip:
    """Pad or crop to exactly round(seconds * rate) samples.

    Shorter clips are zero-padded symmetrically (odd deficit: extra zero on
    the right); longer clips are center-cropped. Idempotent.
    """
    if seconds <= 0:
        raise ValueError("seconds must be positive")
    target = round(seconds * clip.sample_rate_hz)
    n = len(clip.samples)
    if n == target:
        return clip
    if n < target:
        deficit = target - n
        left = deficit // 2
        samples = np.concatenate(
            [np.zeros(left), clip.samples, np.zeros(deficit - left)]
        )
    else:
        start = (n - target) // 2
        samples = clip.samples[start : start + target]
    return AudioClip(
        samples=samples,
        sample_rate_hz=clip.sample_rate_hz,
        label=clip.label,
        source_id=clip.source_id,
    )
