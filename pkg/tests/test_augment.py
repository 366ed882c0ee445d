import numpy as np
import pytest

from matchbox.audio_io import AudioClip
from matchbox.augment import (
    AugmentConfig,
    SilentNoise,
    SilentSignal,
    add_white_noise,
    augment_features,
    augment_waveform,
    mix_at_snr,
    rms,
    sample_rng,
    spec_augment,
    spec_cutout,
    time_shift,
)
from matchbox.features import FeatureMap

CFG = AugmentConfig()


def clip_of(samples, rate=16000):
    return AudioClip(np.asarray(samples, dtype=np.float64), rate)


def random_clip(seed, n=16000):
    return clip_of(np.random.default_rng(seed).uniform(-0.5, 0.5, n))


def random_fm(seed):
    vals = np.random.default_rng(seed).normal(size=(64, 128))
    vals[np.abs(vals) < 1e-3] = 1e-3  # no accidental zeros
    return FeatureMap(vals, valid_frames=98)


def test_time_shift_displacement():
    clip = random_clip(0)
    out = time_shift(clip, 5.0)
    assert np.all(out.samples[:80] == 0)
    assert np.array_equal(out.samples[80:], clip.samples[:-80])
    assert len(out.samples) == len(clip.samples)


def test_time_shift_zero_identity():
    clip = random_clip(1)
    assert np.array_equal(time_shift(clip, 0.0).samples, clip.samples)


def test_time_shift_compose():
    # -5 ms loses the first 80 samples, +5 ms restores alignment: the result
    # equals the original except the 80 zeroed samples at the left boundary
    clip = random_clip(2)
    out = time_shift(time_shift(clip, -5.0), 5.0)
    assert np.all(out.samples[:80] == 0)
    assert np.array_equal(out.samples[80:], clip.samples[80:])
    # the opposite order zeroes the right boundary instead
    out2 = time_shift(time_shift(clip, 5.0), -5.0)
    assert np.all(out2.samples[-80:] == 0)
    assert np.array_equal(out2.samples[:-80], clip.samples[:-80])


def test_white_noise_rms():
    clip = clip_of(np.zeros(160000))
    out = add_white_noise(clip, -46.0, np.random.default_rng(0))
    target = 10.0 ** (-46.0 / 20.0)
    assert abs(rms(out.samples) - target) / target < 0.05


def test_white_noise_deterministic():
    clip = random_clip(3)
    a = add_white_noise(clip, -60.0, np.random.default_rng(42))
    b = add_white_noise(clip, -60.0, np.random.default_rng(42))
    assert np.array_equal(a.samples, b.samples)


def test_mix_at_snr_zero_db():
    clip = random_clip(4)
    noise = random_clip(5)
    out = mix_at_snr(clip, noise, 0.0, np.random.default_rng(0))
    added = out.samples - clip.samples
    assert abs(rms(added) - rms(clip.samples)) / rms(clip.samples) < 1e-9


def test_mix_at_snr_20_db():
    clip = random_clip(6)
    noise = random_clip(7)
    out = mix_at_snr(clip, noise, 20.0, np.random.default_rng(0))
    added = out.samples - clip.samples
    assert abs(rms(added) - rms(clip.samples) / 10.0) < 1e-9


def test_mix_at_snr_measured_within_tenth_db():
    rng = np.random.default_rng(8)
    for i in range(100):
        clip = clip_of(rng.uniform(-0.05, 0.05, 16000))
        noise = clip_of(rng.uniform(-0.05, 0.05, 16000))
        snr = rng.uniform(-10.0, 50.0)
        out = mix_at_snr(clip, noise, snr, np.random.default_rng(i))
        added = out.samples - clip.samples
        measured = 20.0 * np.log10(rms(clip.samples) / rms(added))
        assert abs(measured - snr) < 0.1


def test_mix_short_noise_covers_subsegment():
    clip = random_clip(9)
    noise = random_clip(10, n=4000)
    out = mix_at_snr(clip, noise, 10.0, np.random.default_rng(1))
    changed = np.nonzero(out.samples != clip.samples)[0]
    assert 0 < len(changed) <= 4000
    assert changed[-1] - changed[0] < 4000


def test_mix_silent_errors():
    clip = random_clip(11)
    silent = clip_of(np.zeros(16000))
    with pytest.raises(SilentNoise):
        mix_at_snr(clip, silent, 0.0, np.random.default_rng(0))
    with pytest.raises(SilentSignal):
        mix_at_snr(silent, clip, 0.0, np.random.default_rng(0))


def test_spec_augment_identity_when_widths_zero():
    cfg = AugmentConfig(spec_time_width_range=(0, 0), spec_freq_width_range=(0, 0))
    fm = random_fm(0)
    out = spec_augment(fm, cfg, np.random.default_rng(0))
    assert np.array_equal(out.values, fm.values)


def test_spec_augment_zero_count_bound():
    fm = random_fm(1)
    out = spec_augment(fm, CFG, np.random.default_rng(2))
    zeroed = int(np.sum(out.values == 0))
    assert zeroed <= 2 * 25 * 64 + 2 * 15 * 128
    assert out.values.shape == fm.values.shape


def test_spec_augment_mean_width():
    widths = []
    for i in range(10000):
        rng = np.random.default_rng(i)
        w = int(rng.integers(CFG.spec_time_width_range[0],
                             CFG.spec_time_width_range[1] + 1))
        widths.append(w)
    # sanity on the draw itself matching Uniform{0..25}
    assert abs(np.mean(widths) - 12.5) / 12.5 < 0.03
    # and the op zeroes exactly w columns per time mask when masks don't overlap
    fm = random_fm(2)
    cfg = AugmentConfig(spec_time_masks=1, spec_freq_masks=0)
    zero_cols = []
    for i in range(10000):
        out = spec_augment(fm, cfg, np.random.default_rng(i))
        zero_cols.append(int(np.sum(np.all(out.values == 0, axis=0))))
    assert abs(np.mean(zero_cols) - 12.5) / 12.5 < 0.03


def test_spec_cutout_identity_when_extents_zero():
    cfg = AugmentConfig(cutout_time_range=(0, 0), cutout_freq_range=(0, 0))
    fm = random_fm(3)
    out = spec_cutout(fm, cfg, np.random.default_rng(0))
    assert np.array_equal(out.values, fm.values)


def test_spec_cutout_rect_inside_grid():
    fm = random_fm(4)
    for i in range(50):
        out = spec_cutout(fm, CFG, np.random.default_rng(i))
        assert out.values.shape == (64, 128)


def test_spec_cutout_deterministic():
    fm = random_fm(5)
    a = spec_cutout(fm, CFG, np.random.default_rng(9))
    b = spec_cutout(fm, CFG, np.random.default_rng(9))
    assert np.array_equal(a.values, b.values)


def test_disabled_flags_are_identity():
    cfg = AugmentConfig(
        enable_time_shift=False, enable_white_noise=False,
        enable_spec_augment=False, enable_spec_cutout=False,
    )
    clip = random_clip(12)
    out = augment_waveform(clip, cfg, np.random.default_rng(0))
    assert np.array_equal(out.samples, clip.samples)
    fm = random_fm(6)
    out_fm = augment_features(fm, cfg, np.random.default_rng(0))
    assert np.array_equal(out_fm.values, fm.values)


def test_sample_rng_reproducible():
    clip = random_clip(13)
    a = augment_waveform(clip, CFG, sample_rng(1, 2, 3))
    b = augment_waveform(clip, CFG, sample_rng(1, 2, 3))
    c = augment_waveform(clip, CFG, sample_rng(1, 2, 4))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        AugmentConfig(spec_time_width_range=(10, 5))
    with pytest.raises(ValueError):
        AugmentConfig(cutout_rects=-1)
