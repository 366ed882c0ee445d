import numpy as np
import pytest

from matchbox.audio_io import AudioClip


def tone_clip(freq, seed, label, amp=0.3, n=16000, rate=16000):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / rate
    samples = amp * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    samples += rng.normal(0, 0.01, n)
    return AudioClip(np.clip(samples, -1, 1), rate, label=label,
                     source_id=f"tone-{seed}")


def noise_clip(seed, label, amp=0.1, n=16000, rate=16000):
    rng = np.random.default_rng(seed)
    samples = rng.normal(0, amp, n)
    return AudioClip(np.clip(samples, -1, 1), rate, label=label,
                     source_id=f"noise-{seed}")


def two_class_corpus(per_class):
    """Constant-tone vs white-noise clips, labels 'tone' and 'noise'."""
    clips = []
    for i in range(per_class):
        clips.append(tone_clip(440.0, seed=i, label="noise_free_tone"))
        clips.append(noise_clip(seed=1000 + i, label="white_noise"))
    return clips, ["noise_free_tone", "white_noise"]


@pytest.fixture
def small_corpus():
    return two_class_corpus(8)
