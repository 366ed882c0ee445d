"""Training-time perturbations: waveform time shift, white noise, SNR-scaled
background mixing, and the feature-domain time/frequency masks and cutout
rectangles.

Every transform is a pure function of its inputs and the supplied RNG, so a
replayed seed bit-reproduces the augmented stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .features import FeatureMap


class SilentSignal(ValueError):
    """Cannot define an SNR against a zero-RMS signal."""


class SilentNoise(ValueError):
    """Cannot scale a zero-RMS noise segment to a target SNR."""


@dataclass
class AugmentConfig:
    time_shift_ms_range: tuple[float, float] = (-5.0, 5.0)
    white_noise_db_range: tuple[float, float] = (-90.0, -46.0)
    spec_time_masks: int = 2
    spec_time_width_range: tuple[int, int] = (0, 25)
    spec_freq_masks: int = 2
    spec_freq_width_range: tuple[int, int] = (0, 15)
    cutout_rects: int = 5
    cutout_time_range: tuple[int, int] = (0, 25)
    cutout_freq_range: tuple[int, int] = (0, 15)
    bg_snr_db_range: tuple[float, float] = (0.0, 50.0)
    enable_time_shift: bool = True
    enable_white_noise: bool = True
    enable_spec_augment: bool = True
    enable_spec_cutout: bool = True
    enable_background_mix: bool = False

    def __post_init__(self):
        for lo, hi in (
            self.time_shift_ms_range, self.white_noise_db_range,
            self.spec_time_width_range, self.spec_freq_width_range,
            self.cutout_time_range, self.cutout_freq_range,
            self.bg_snr_db_range,
        ):
            if lo > hi:
                raise ValueError(f"range [{lo}, {hi}] has lower > upper")
        if min(self.spec_time_masks, self.spec_freq_masks, self.cutout_rects) < 0:
            raise ValueError("mask counts must be >= 0")


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def time_shift(clip: AudioClip, shift_ms: float) -> AudioClip:
    """Displace samples by round(shift_ms * rate / 1000); vacated positions
    are zero-filled and length is unchanged."""
    k = round(shift_ms * clip.sample_rate_hz / 1000.0)
    out = np.zeros_like(clip.samples)
    if k >= 0:
        if k < len(out):
            out[k:] = clip.samples[: len(out) - k]
    else:
        if -k < len(out):
            out[:k] = clip.samples[-k:]
    return AudioClip(out, clip.sample_rate_hz, clip.label, clip.source_id)


def add_white_noise(
    clip: AudioClip, level_db: float, rng: np.random.Generator
) -> AudioClip:
    """Add Gaussian noise with RMS = 10^(level_db/20) relative to full scale;
    result clamped to [-1, 1]."""
    sigma = 10.0 ** (level_db / 20.0)
    noisy = clip.samples + rng.normal(0.0, sigma, size=len(clip.samples))
    return AudioClip(
        np.clip(noisy, -1.0, 1.0), clip.sample_rate_hz, clip.label, clip.source_id
    )


def mix_at_snr(
    clip: AudioClip,
    noise: AudioClip,
    snr_db: float,
    rng: np.random.Generator,
) -> AudioClip:
    """Mix noise into the clip scaled to the requested SNR in dB.

    A noise segment shorter than the clip covers a random sub-segment; SNR is
    then defined on RMS over the covered region only. A longer noise segment
    is randomly cropped to the clip length.
    """
    if clip.sample_rate_hz != noise.sample_rate_hz:
        raise ValueError("sample rates differ")
    n = len(clip.samples)
    m = len(noise.samples)
    noise_samples = noise.samples
    if m > n:
        start = int(rng.integers(0, m - n + 1))
        noise_samples = noise_samples[start : start + n]
        m = n
    offset = int(rng.integers(0, n - m + 1)) if m < n else 0

    signal_region = clip.samples[offset : offset + m]
    sig_rms = rms(signal_region)
    noise_rms = rms(noise_samples)
    if sig_rms == 0.0:
        raise SilentSignal(clip.source_id or "<clip>")
    if noise_rms == 0.0:
        raise SilentNoise(noise.source_id or "<noise>")

    alpha = sig_rms / noise_rms * 10.0 ** (-snr_db / 20.0)
    mixed = clip.samples.copy()
    mixed[offset : offset + m] += alpha * noise_samples
    return AudioClip(
        np.clip(mixed, -1.0, 1.0), clip.sample_rate_hz, clip.label, clip.source_id
    )


def _masked(fm: FeatureMap) -> FeatureMap:
    return FeatureMap(fm.values.copy(), fm.valid_frames, fm.coeff_count)


def spec_augment(
    fm: FeatureMap, cfg: AugmentConfig, rng: np.random.Generator
) -> FeatureMap:
    """Zero out contiguous time columns and frequency rows.

    Widths are drawn uniformly on the inclusive configured ranges; start
    positions are uniform over placements that keep the mask inside the grid.
    """
    out = _masked(fm)
    n_freq, n_time = out.values.shape
    for _ in range(cfg.spec_time_masks):
        w = int(rng.integers(cfg.spec_time_width_range[0],
                             cfg.spec_time_width_range[1] + 1))
        t0 = int(rng.integers(0, n_time - w + 1))
        out.values[:, t0 : t0 + w] = 0.0
    for _ in range(cfg.spec_freq_masks):
        w = int(rng.integers(cfg.spec_freq_width_range[0],
                             cfg.spec_freq_width_range[1] + 1))
        f0 = int(rng.integers(0, n_freq - w + 1))
        out.values[f0 : f0 + w, :] = 0.0
    return out


def spec_cutout(
    fm: FeatureMap, cfg: AugmentConfig, rng: np.random.Generator
) -> FeatureMap:
    """Zero out axis-aligned rectangles with uniformly drawn extents."""
    out = _masked(fm)
    n_freq, n_time = out.values.shape
    for _ in range(cfg.cutout_rects):
        wt = int(rng.integers(cfg.cutout_time_range[0],
                              cfg.cutout_time_range[1] + 1))
        wf = int(rng.integers(cfg.cutout_freq_range[0],
                              cfg.cutout_freq_range[1] + 1))
        t0 = int(rng.integers(0, n_time - wt + 1))
        f0 = int(rng.integers(0, n_freq - wf + 1))
        out.values[f0 : f0 + wf, t0 : t0 + wt] = 0.0
    return out


def augment_waveform(
    clip: AudioClip,
    cfg: AugmentConfig,
    rng: np.random.Generator,
    noise_pool: list[AudioClip] | None = None,
) -> AudioClip:
    """Waveform-domain augmentation chain: time shift, white noise, optional
    background mix at a random SNR."""
    if cfg.enable_time_shift:
        shift = rng.uniform(*cfg.time_shift_ms_range)
        clip = time_shift(clip, shift)
    if cfg.enable_white_noise:
        level = rng.uniform(*cfg.white_noise_db_range)
        clip = add_white_noise(clip, level, rng)
    if cfg.enable_background_mix and noise_pool:
        noise = noise_pool[int(rng.integers(0, len(noise_pool)))]
        snr = rng.uniform(*cfg.bg_snr_db_range)
        try:
            clip = mix_at_snr(clip, noise, snr, rng)
        except (SilentSignal, SilentNoise):
            pass  # leave the clip unmixed
    return clip


def augment_features(
    fm: FeatureMap, cfg: AugmentConfig, rng: np.random.Generator
) -> FeatureMap:
    """Feature-domain augmentation chain: time/frequency masks then cutout."""
    if cfg.enable_spec_augment:
        fm = spec_augment(fm, cfg, rng)
    if cfg.enable_spec_cutout:
        fm = spec_cutout(fm, cfg, rng)
    return fm


def sample_rng(seed: int, epoch: int, sample_index: int) -> np.random.Generator:
    """Per-sample generator derived purely from (seed, epoch, sample index)."""
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, sample_index]))
