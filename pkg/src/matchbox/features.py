"""MFCC front end: 25 ms Hann windows with a 10 ms hop, a 64-band HTK mel
filterbank, log compression and an orthonormal DCT-II, padded symmetrically
on the frame axis to a fixed 64x128 map per 1-second clip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .audio_io import AudioClip


class ClipTooShort(ValueError):
    """Clip shorter than one analysis window."""


@dataclass
class FeatureConfig:
    window_s: float = 0.025
    hop_s: float = 0.010
    n_fft: int = 512
    n_mels: int = 64
    n_coeffs: int = 64
    f_min_hz: float = 0.0
    f_max_hz: float = 8000.0
    target_frames: int = 128
    log_floor: float = 2.0 ** -24
    pre_emphasis: float = 0.0  # off by default
    normalize: bool = False  # per-feature normalization, off by default

    def window_len(self, rate: int) -> int:
        return round(self.window_s * rate)

    def hop_len(self, rate: int) -> int:
        return round(self.hop_s * rate)


@dataclass
class FeatureMap:
    """n_coeffs x target_frames MFCC matrix; padded columns are zero."""

    values: np.ndarray
    valid_frames: int
    coeff_count: int = 64

    @property
    def pad_left(self) -> int:
        return (self.values.shape[1] - self.valid_frames) // 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def frame_count(n_samples: int, cfg: FeatureConfig, rate: int) -> int:
    """Number of full analysis windows: floor((n - win) / hop) + 1."""
    win = cfg.window_len(rate)
    hop = cfg.hop_len(rate)
    if n_samples < win:
        raise ClipTooShort(f"{n_samples} samples < window of {win}")
    return (n_samples - win) // hop + 1


def mel_filterbank(cfg: FeatureConfig, rate: int) -> np.ndarray:
    """Triangular mel filters as an [n_mels x n_bins] weight matrix."""
    n_bins = cfg.n_fft // 2 + 1
    mel_pts = np.linspace(
        hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max_hz), cfg.n_mels + 2
    )
    hz_pts = mel_to_hz(mel_pts)
    bin_freqs = np.arange(n_bins) * rate / cfg.n_fft
    fb = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, mid, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        rising = (bin_freqs - lo) / (mid - lo)
        falling = (hi - bin_freqs) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


def filter_center_freqs(cfg: FeatureConfig) -> np.ndarray:
    mel_pts = np.linspace(
        hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max_hz), cfg.n_mels + 2
    )
    return mel_to_hz(mel_pts[1:-1])


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; rows are basis vectors, inverse = transpose."""
    return scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=1)


def log_mel_spectrogram(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    rate = clip.sample_rate_hz
    win = cfg.window_len(rate)
    hop = cfg.hop_len(rate)
    n_frames = frame_count(len(clip.samples), cfg, rate)

    x = clip.samples
    if cfg.pre_emphasis:
        x = np.append(x[0], x[1:] - cfg.pre_emphasis * x[:-1])

    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * np.hanning(win)
    spectrum = np.abs(np.fft.rfft(frames, n=cfg.n_fft, axis=1)) ** 2
    fb = mel_filterbank(cfg, rate)
    return np.log(spectrum @ fb.T + cfg.log_floor)  # [n_frames x n_mels]


def mfcc(clip: AudioClip, cfg: FeatureConfig | None = None) -> FeatureMap:
    """Full front end: framing, power spectrum, mel filterbank, log, DCT,
    symmetric zero padding of the frame axis to target_frames."""
    cfg = cfg or FeatureConfig()
    log_mel = log_mel_spectrogram(clip, cfg)
    dct = dct_matrix(cfg.n_mels)[: cfg.n_coeffs]
    coeffs = log_mel @ dct.T  # [n_frames x n_coeffs]
    if cfg.normalize:
        coeffs = (coeffs - coeffs.mean(axis=0)) / (coeffs.std(axis=0) + 1e-8)

    n_frames = coeffs.shape[0]
    values = np.zeros((cfg.n_coeffs, cfg.target_frames))
    if n_frames >= cfg.target_frames:
        start = (n_frames - cfg.target_frames) // 2
        values[:] = coeffs[start : start + cfg.target_frames].T
        valid = cfg.target_frames
    else:
        left = (cfg.target_frames - n_frames) // 2
        values[:, left : left + n_frames] = coeffs.T
        valid = n_frames
    return FeatureMap(values=values, valid_frames=valid, coeff_count=cfg.n_coeffs)


def dump_feature_map(fm: FeatureMap, path) -> None:
    """Debug dump: 3 little-endian int32 header (rows, cols, valid_frames)
    followed by the flat f32 values."""
    header = np.array(
        [fm.values.shape[0], fm.values.shape[1], fm.valid_frames], dtype="<i4"
    )
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(fm.values.astype("<f4").tobytes())
