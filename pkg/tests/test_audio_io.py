import numpy as np
import pytest

from matchbox.audio_io import (
    AudioClip,
    MalformedHeader,
    TruncatedData,
    UnsupportedEncoding,
    decode_wav,
    encode_wav,
    fit_to_duration,
)


def make_clip(samples, rate=16000):
    return AudioClip(np.asarray(samples, dtype=np.float64), rate)


def test_int16_scaling():
    clip = decode_wav(encode_wav(make_clip([32767 / 32768.0, 0.0])))
    assert clip.samples[0] == pytest.approx(32767 / 32768.0, abs=1e-12)
    assert clip.samples[1] == 0.0


def test_one_second_file_has_16000_samples():
    rng = np.random.default_rng(0)
    clip = make_clip(rng.uniform(-0.5, 0.5, 16000))
    out = decode_wav(encode_wav(clip))
    assert len(out.samples) == 16000
    assert out.sample_rate_hz == 16000


def test_roundtrip_within_one_quantization_step():
    rng = np.random.default_rng(1)
    clip = make_clip(rng.uniform(-1.0, 1.0, 5000))
    out = decode_wav(encode_wav(clip))
    assert np.max(np.abs(out.samples - clip.samples)) <= 1.0 / 32768.0


def test_zero_clip_encodes_zero_bytes():
    data = encode_wav(make_clip(np.zeros(16000)))
    # data chunk payload is the last 32000 bytes
    assert data[-32000:] == b"\x00" * 32000


def test_full_scale_clamps_to_32767():
    data = encode_wav(make_clip([1.0]))
    assert np.frombuffer(data[-2:], dtype="<i2")[0] == 32767


def test_malformed_header():
    with pytest.raises(MalformedHeader):
        decode_wav(b"not a wav file at all")


def test_unsupported_encoding_stereo():
    data = bytearray(encode_wav(make_clip([0.0] * 10)))
    data[22] = 2  # channel count field
    with pytest.raises(UnsupportedEncoding):
        decode_wav(bytes(data))


def test_unsupported_encoding_8bit():
    data = bytearray(encode_wav(make_clip([0.0] * 10)))
    data[34] = 8  # bits-per-sample field
    with pytest.raises(UnsupportedEncoding):
        decode_wav(bytes(data))


def test_truncated_data():
    data = encode_wav(make_clip([0.1] * 100))
    with pytest.raises(TruncatedData):
        decode_wav(data[:-10])


def test_fit_pads_symmetrically():
    clip = make_clip(np.ones(15800))
    out = fit_to_duration(clip, 1.0)
    assert len(out.samples) == 16000
    assert np.all(out.samples[:100] == 0)
    assert np.all(out.samples[-100:] == 0)
    assert np.all(out.samples[100:-100] == 1)


def test_fit_identity():
    clip = make_clip(np.arange(16000) / 16000.0)
    out = fit_to_duration(clip, 1.0)
    assert np.array_equal(out.samples, clip.samples)


def test_fit_center_crops():
    clip = make_clip(np.arange(17000, dtype=np.float64) / 17000.0)
    out = fit_to_duration(clip, 1.0)
    assert np.array_equal(out.samples, clip.samples[500:16500])


def test_fit_odd_deficit_extra_zero_on_right():
    out = fit_to_duration(make_clip(np.ones(15999)), 1.0)
    assert out.samples[0] == 1.0 and out.samples[-1] == 0.0


def test_fit_idempotent():
    rng = np.random.default_rng(2)
    clip = make_clip(rng.uniform(-1, 1, 15321))
    once = fit_to_duration(clip, 1.0)
    twice = fit_to_duration(once, 1.0)
    assert np.array_equal(once.samples, twice.samples)
