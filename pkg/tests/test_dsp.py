import numpy as np
import pytest

from amicable import dsp
from amicable import tensorgrad as tg
from amicable.dsp import ComplexSpectrogram, WaveBuffer, read_wav, write_wav
from amicable.tensorgrad import Tensor

from oracles import naive_dft


def test_zero_signal_gives_zero_spectrogram():
    spec = dsp.stft(np.zeros(4000), 512, 256)
    assert np.all(spec.values == 0)


def test_sinusoid_concentrates_in_its_bin_rect_window():
    sr, n, k = 8000, 8192, 40
    freq = k * sr / 512
    t = np.arange(n) / sr
    x = np.sin(2 * np.pi * freq * t)
    spec = dsp.stft(x, 512, 256, window="rect")
    # interior frames fully covered by the sinusoid
    for frame in spec.values[4:10]:
        energy = np.abs(frame) ** 2
        assert energy[k] / energy.sum() > 0.99


def test_stft_frame_matches_naive_dft():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(300)
    spec = dsp.stft(x, 64, 32, window="rect")
    # reconstruct the exact frame the stft consumed (head pad 32)
    padded = np.concatenate([np.zeros(32), x, np.zeros(spec.n_frames * 32 + 32 - 300)])
    frame = padded[3 * 32: 3 * 32 + 64]
    expected = naive_dft(frame)
    assert np.max(np.abs(spec.values[3] - expected)) < 1e-9


def test_cola_round_trip_white_noise():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 7000)
    spec = dsp.stft(x, 512, 256)
    back = dsp.istft(spec, 7000)
    assert np.max(np.abs(back - x)) < 1e-6


def test_round_trip_other_geometries():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, 2000)
    for window_size, hop in ((256, 64), (128, 64), (64, 32)):
        back = dsp.istft(dsp.stft(x, window_size, hop), 2000)
        assert np.max(np.abs(back - x)) < 1e-6


def test_istft_of_zero_spectrogram_is_zero():
    spec = ComplexSpectrogram(np.zeros((10, 257), dtype=complex), 512, 256)
    assert np.all(dsp.istft(spec, 2000) == 0)


def test_istft_linearity():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(3000)
    spec = dsp.stft(x, 512, 256)
    doubled = ComplexSpectrogram(2.0 * spec.values, 512, 256)
    lhs = dsp.istft(doubled, 3000)
    rhs = 2.0 * dsp.istft(spec, 3000)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_stft_linearity():
    rng = np.random.default_rng(4)
    a = rng.standard_normal(2000)
    b = rng.standard_normal(2000)
    lhs = dsp.stft(a + b, 512, 256).values
    rhs = dsp.stft(a, 512, 256).values + dsp.stft(b, 512, 256).values
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_parseval_per_frame():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(4000)
    window_size = 512
    spec = dsp.stft(x, window_size, 256)
    # windowed time-domain frames rebuilt the same way stft builds them
    n_frames = spec.n_frames
    padded = np.concatenate([np.zeros(256), x,
                             np.zeros((n_frames - 1) * 256 + 512 - 256 - 4000)])
    frames = np.lib.stride_tricks.sliding_window_view(padded, window_size)[::256]
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(window_size) / window_size)
    weights = np.full(spec.n_bins, 2.0)
    weights[0] = weights[-1] = 1.0
    for m in range(n_frames):
        time_energy = np.sum((frames[m] * hann) ** 2)
        spec_energy = np.sum(weights * np.abs(spec.values[m]) ** 2) / window_size
        if time_energy > 0:
            assert abs(time_energy - spec_energy) / time_energy < 1e-8


def test_spectrogram_bin_invariant():
    with pytest.raises(ValueError, match="bins"):
        ComplexSpectrogram(np.zeros((4, 100), dtype=complex), 512, 256)


def test_signal_shorter_than_window_rejected():
    with pytest.raises(ValueError, match="shorter"):
        dsp.stft(np.ones(100), 512, 256)


def test_bad_geometry_rejected():
    with pytest.raises(ValueError, match="power of two"):
        dsp.stft(np.ones(2000), 500, 250)
    with pytest.raises(ValueError, match="divide"):
        dsp.stft(np.ones(2000), 512, 100)


def test_istft_out_len_bounds():
    spec = dsp.stft(np.ones(1000), 512, 256)
    with pytest.raises(ValueError, match="out_len"):
        dsp.istft(spec, 10 ** 6)


# ---------------------------------------------------------------------------
# differentiable path


def test_tensor_path_matches_numpy_path():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(3000)
    spec = dsp.stft(x, 512, 256)
    re, im = dsp.stft_tensor(Tensor.const(x), 512, 256)
    assert np.max(np.abs(re.data - spec.values.real)) < 1e-10
    assert np.max(np.abs(im.data - spec.values.imag)) < 1e-10
    back = dsp.istft_tensor(re, im, 3000, 512, 256)
    assert np.max(np.abs(back.data - x)) < 1e-6


def test_tensor_path_gradient():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(200)
    weights = rng.standard_normal(200)

    def f(t):
        re, im = dsp.stft_tensor(t, 64, 32)
        out = dsp.istft_tensor(re, im, 200, 64, 32)
        return tg.ssum(tg.mul(out, Tensor.const(weights)))

    assert tg.grad_check(f, x, 1e-6) < 1e-4


# ---------------------------------------------------------------------------
# WAV I/O


def test_wav_float32_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    w = WaveBuffer(rng.uniform(-1, 1, 5000), 8000)
    path = tmp_path / "f32.wav"
    write_wav(path, w, bit_depth=32)
    back = read_wav(path)
    assert back.sample_rate == 8000
    assert np.max(np.abs(back.samples - w.samples)) < 1e-7


def test_wav_pcm16_full_scale_sine(tmp_path):
    t = np.arange(4000) / 8000
    w = WaveBuffer(np.sin(2 * np.pi * 440 * t), 8000)
    path = tmp_path / "p16.wav"
    write_wav(path, w, bit_depth=16)
    back = read_wav(path)
    assert np.max(np.abs(back.samples - w.samples)) <= 2 ** -15


def test_wav_stereo_rejected(tmp_path):
    import struct
    path = tmp_path / "stereo.wav"
    payload = struct.pack("<4h", 0, 0, 0, 0)
    fmt = struct.pack("<IHHIIHH", 16, 1, 2, 8000, 32000, 4, 16)
    body = b"WAVE" + b"fmt " + fmt + b"data" + struct.pack("<I", len(payload)) + payload
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(ValueError, match="mono required"):
        read_wav(path)


def test_wav_unsupported_format_rejected(tmp_path):
    import struct
    path = tmp_path / "alaw.wav"
    fmt = struct.pack("<IHHIIHH", 16, 6, 1, 8000, 8000, 1, 8)
    body = b"WAVE" + b"fmt " + fmt + b"data" + struct.pack("<I", 2) + b"\x00\x00"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(ValueError, match="unsupported format"):
        read_wav(path)


def test_wav_not_riff_rejected(tmp_path):
    path = tmp_path / "junk.wav"
    path.write_bytes(b"this is not a wav file at all")
    with pytest.raises(ValueError, match="RIFF"):
        read_wav(path)


def test_wav_bad_bit_depth_rejected(tmp_path):
    w = WaveBuffer(np.zeros(100) + 0.1, 8000)
    with pytest.raises(ValueError, match="bit depth"):
        write_wav(tmp_path / "x.wav", w, bit_depth=24)


def test_wavbuffer_validation():
    with pytest.raises(ValueError):
        WaveBuffer(np.array([]), 8000)
    with pytest.raises(ValueError):
        WaveBuffer(np.array([np.nan]), 8000)
    with pytest.raises(ValueError):
        WaveBuffer(np.zeros((2, 2)), 8000)
    with pytest.raises(ValueError):
        WaveBuffer(np.zeros(10), 0)
